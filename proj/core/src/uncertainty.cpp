#include "tripend/uncertainty.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>

#include "tripend/errors.hpp"

namespace tripend {

namespace {

void require_siso(const StateSpaceModel& s, const char* what) {
  s.check();
  if (s.inputs() != 1 || s.outputs() != 1)
    throw DimensionMismatch(std::string(what) + ": expected SISO");
}

Eigen::Matrix3d inverse_guarded(const Eigen::Matrix3d& M, const char* what) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (!(svd.singularValues()(2) > svd.singularValues()(0) * 1e-12))
    throw SingularMass(std::string(what) + ": mass matrix condition number exceeds 1e12");
  return svd.solve(Eigen::Matrix3d::Identity());
}

}  // namespace

int BlockStructure::z_dim() const {
  int n = 0;
  for (const auto& b : blocks) n += b.cols;
  return n;
}

int BlockStructure::w_dim() const {
  int n = 0;
  for (const auto& b : blocks) n += b.rows;
  return n;
}

ActuatorModel default_actuator() {
  ActuatorModel m;
  m.nominal = StateSpaceModel::first_order_lag(1.0, 0.05);
  m.weight = actuator_weight_from_profile(0.2, 2.0, 100.0);
  return m;
}

StateSpaceModel actuator_weight_from_profile(double radius_lf, double radius_hf,
                                             double omega_unity) {
  if (!(radius_lf > 0.0 && radius_lf < 1.0 && radius_hf > 1.0 && omega_unity > 0.0))
    throw ConfigError("actuator weight profile needs radius_lf < 1 < radius_hf, omega_unity > 0");
  const double beta = radius_hf / radius_lf;
  // |w(j omega_unity)| = 1 pins the corner:
  //   a^2 = omega^2 (lf^2 - 1/beta^2) / (1 - lf^2)
  const double num = radius_lf * radius_lf - 1.0 / (beta * beta);
  const double den = 1.0 - radius_lf * radius_lf;
  if (!(num > 0.0))
    throw ConfigError("actuator weight profile: unity crossing not reachable");
  const double a = omega_unity * std::sqrt(num / den);
  return StateSpaceModel::first_order_ratio(radius_lf, a, beta * a);
}

StateSpaceModel PerformanceWeights::wp_channel() const {
  // (s/Ms + omega_b)/(s + omega_b*eps): integral push below omega_b,
  // flattening to 1/Ms above it.
  StateSpaceModel s;
  s.A.resize(1, 1);
  s.B.resize(1, 1);
  s.C.resize(1, 1);
  s.D.resize(1, 1);
  s.A(0, 0) = -omega_b * eps;
  s.B(0, 0) = 1.0;
  s.C(0, 0) = omega_b * (Ms - eps) / Ms;
  s.D(0, 0) = 1.0 / Ms;
  return s;
}

PerformanceWeights default_performance_weights() { return {}; }

StateSpaceModel fit_actuator_weight(const StateSpaceModel& nominal,
                                    const std::vector<StateSpaceModel>& family,
                                    const std::vector<double>& grid) {
  require_siso(nominal, "fit_actuator_weight nominal");
  if (family.empty()) throw FitFailed("fit_actuator_weight: empty family");
  if (grid.size() < 2) throw FitFailed("fit_actuator_weight: need at least two grid points");
  for (const auto& g : family) require_siso(g, "fit_actuator_weight family member");

  const size_t ng = grid.size();
  std::vector<double> err(ng, 1e-4);  // floor keeps the weight biproper
  {
    const FrequencyResponse fn = freq_response(nominal, grid);
    std::vector<FrequencyResponse> fk;
    fk.reserve(family.size());
    for (const auto& g : family) fk.push_back(freq_response(g, grid));
    for (size_t j = 0; j < ng; ++j) {
      const std::complex<double> g0 = fn.values[j](0, 0);
      if (!(std::abs(g0) > 1e-14))
        throw FitFailed("fit_actuator_weight: nominal response vanishes on the grid");
      for (const auto& f : fk)
        err[j] = std::max(err[j], std::abs((f.values[j](0, 0) - g0) / g0));
    }
  }

  size_t jworst = 0;
  for (size_t j = 1; j < ng; ++j)
    if (err[j] > err[jworst]) jworst = j;

  const double cap = std::pow(10.0, 3.0 / 20.0);  // 3 dB of allowed slack at the peak
  const std::vector<double> corners = log_grid(grid.front() / 10.0, grid.back() * 10.0, 41);

  struct Candidate {
    double k = 0.0, a = 0.0, b = 0.0;
    double slack_at_worst = std::numeric_limits<double>::infinity();
    double overbound = std::numeric_limits<double>::infinity();  // sum log(w/e)
  };

  auto shape_at = [](double w, double a, double b) {
    return std::sqrt((1.0 + (w / a) * (w / a)) / (1.0 + (w / b) * (w / b)));
  };

  // Smallest pointwise overbound for each corner pair; feasible when the
  // binding point is not papered over by more than the cap.
  auto search = [&](const std::vector<double>& target, size_t jw) {
    Candidate best, best_any;
    for (double a : corners) {
      for (double b : corners) {
        double k = 0.0;
        for (size_t j = 0; j < ng; ++j)
          k = std::max(k, target[j] / shape_at(grid[j], a, b));
        double over = 0.0;
        for (size_t j = 0; j < ng; ++j)
          over += std::log(k * shape_at(grid[j], a, b) / target[j]);
        Candidate c{k, a, b, k * shape_at(grid[jw], a, b) / target[jw], over};
        if (c.overbound < best_any.overbound) best_any = c;
        if (c.slack_at_worst <= cap && c.overbound < best.overbound) best = c;
      }
    }
    return std::pair<Candidate, Candidate>{best, best_any};
  };

  auto [best, best_any] = search(err, jworst);
  if (best.k > 0.0)
    return StateSpaceModel::first_order_ratio(best.k, best.a, best.b);

  // Second order: overbound with the least-conservative first-order section,
  // then cover the residual with another section and re-check the cap.
  const Candidate s1 = best_any;
  std::vector<double> resid(ng);
  for (size_t j = 0; j < ng; ++j)
    resid[j] = err[j] / (s1.k * shape_at(grid[j], s1.a, s1.b));
  size_t jw2 = jworst;  // the cap still applies at the original worst point
  Candidate best2;
  for (double a : corners) {
    for (double b : corners) {
      double k = 0.0;
      for (size_t j = 0; j < ng; ++j)
        k = std::max(k, resid[j] / shape_at(grid[j], a, b));
      const double total_at_worst =
          s1.k * shape_at(grid[jw2], s1.a, s1.b) * k * shape_at(grid[jw2], a, b);
      const double slack = total_at_worst / err[jw2];
      if (slack > cap) continue;
      double over = 0.0;
      for (size_t j = 0; j < ng; ++j)
        over += std::log(s1.k * shape_at(grid[j], s1.a, s1.b) * k *
                         shape_at(grid[j], a, b) / err[j]);
      if (over < best2.overbound) best2 = Candidate{k, a, b, slack, over};
    }
  }
  if (!(best2.k > 0.0))
    throw FitFailed("fit_actuator_weight: no candidate within 3 dB of the worst-case error");
  return series(StateSpaceModel::first_order_ratio(s1.k, s1.a, s1.b),
                StateSpaceModel::first_order_ratio(best2.k, best2.a, best2.b));
}

namespace {

AugmentedPlant assemble(const PhysicalParameters& p, const UncertaintySpec& spec,
                        const ActuatorModel& act1, const ActuatorModel& act2,
                        const PerformanceWeights& pw) {
  p.validate();
  spec.validate();
  require_siso(act1.nominal, "actuator 1 nominal");
  require_siso(act2.nominal, "actuator 2 nominal");
  require_siso(act1.weight, "actuator 1 weight");
  require_siso(act2.weight, "actuator 2 weight");
  if (!(pw.Ms > 0.0 && pw.omega_b > 0.0 && pw.eps > 0.0 && pw.wu > 0.0 && pw.wn >= 0.0))
    throw ConfigError("performance weights must be positive (wn may be zero)");

  const CompositeParameters c = derive_composites(p);
  const Eigen::Matrix3d M0 = mass_matrix(p, c, Eigen::Vector3d::Zero());
  const Eigen::Matrix3d Minv = inverse_guarded(M0, "build_uncertain_plant");
  const Eigen::Matrix3d N0 = damping_matrix(p);
  const Eigen::Matrix<double, 3, 2> Kmap = torque_map(p);
  const Eigen::Matrix3d Tmap = disturbance_map();
  const Eigen::Matrix3d Cpot = output_gain(p);

  Eigen::Matrix3d Gg = Eigen::Matrix3d::Zero();
  Gg(0, 0) = c.M1 * p.g;
  Gg(1, 1) = c.M2 * p.g;
  Gg(2, 2) = c.M3 * p.g;

  const Eigen::Vector3d e1(1, 0, 0);
  const Eigen::Vector3d v12(1, -1, 0);
  const Eigen::Vector3d v23(0, 1, -1);

  // Perturbation input directions, one column per parametric block.  Inertia
  // blocks enter the mass matrix, friction blocks the damping matrix; the
  // matching z rows below read the acceleration resp. rate functionals, which
  // makes the family exact in delta.
  Eigen::Matrix<double, 3, 8> Aw;
  Aw.col(0) = spec.width[0] * p.I1 * e1;
  Aw.col(1) = spec.width[1] * p.I2 * Eigen::Vector3d(0, 1, 0);
  Aw.col(2) = spec.width[2] * p.I3 * Eigen::Vector3d(0, 0, 1);
  Aw.col(3) = spec.width[3] * p.C1 * e1;
  Aw.col(4) = spec.width[4] * p.C2 * v12;
  Aw.col(5) = spec.width[5] * p.C3 * v23;
  Aw.col(6) = spec.width[6] * p.Cm1 * p.K2 * v12;
  Aw.col(7) = spec.width[7] * p.Cm2 * p.K2 * v23;

  Eigen::Matrix<double, 5, 3> Dfr;  // rate functionals for the 5 friction rows
  Dfr.row(0) = e1.transpose();
  Dfr.row(1) = v12.transpose();
  Dfr.row(2) = v23.transpose();
  Dfr.row(3) = v12.transpose();
  Dfr.row(4) = v23.transpose();

  const int ng1 = act1.nominal.states();
  const int ng2 = act2.nominal.states();
  const int nm1 = act1.weight.states();
  const int nm2 = act2.weight.states();
  const int nwp = 8;  // parametric channels
  const int nwa = 2;  // actuator channels

  // State offsets
  const int oth = 0, oom = 3;
  const int og1 = 6, og2 = og1 + ng1;
  const int om1 = og2 + ng2, om2 = om1 + nm1;
  const int op = om2 + nm2;
  const int nx = op + 3;

  // Input offsets
  const int iwp = 0, iwa = nwp;
  const int ir = nwp + nwa, idist = ir + 3, inoise = idist + 3, iu = inoise + 3;
  const int m = iu + 2;

  // Output offsets
  const int ozp = 0, oza = nwp;
  const int oey = nwp + nwa, oeu = oey + 3, oym = oeu + 2;
  const int pdim = oym + 3;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, m);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(pdim, nx);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(pdim, m);

  const double Dg1 = act1.nominal.D(0, 0);
  const double Dg2 = act2.nominal.D(0, 0);

  // Kinematics
  A.block(oth, oom, 3, 3).setIdentity();

  // Accelerations.  tm = actuator outputs (+ actuator perturbation inputs).
  const Eigen::Matrix3d Fth = Minv * Gg;
  const Eigen::Matrix3d Fom = -(Minv * N0);
  const Eigen::Matrix<double, 3, 2> Fwa = Minv * Kmap;
  const Eigen::Matrix3d Fd = Minv * Tmap;
  A.block(oom, oth, 3, 3) = Fth;
  A.block(oom, oom, 3, 3) = Fom;
  if (ng1 > 0) A.block(oom, og1, 3, ng1) = Fwa.col(0) * act1.nominal.C;
  if (ng2 > 0) A.block(oom, og2, 3, ng2) = Fwa.col(1) * act2.nominal.C;
  B.block(oom, idist, 3, 3) = Fd;
  B.block(oom, iu + 0, 3, 1) = Fwa.col(0) * Dg1;
  B.block(oom, iu + 1, 3, 1) = Fwa.col(1) * Dg2;
  B.block(oom, iwp, 3, 8) = -(Minv * Aw);
  B.block(oom, iwa, 3, 2) = Fwa;

  // Actuator states
  if (ng1 > 0) {
    A.block(og1, og1, ng1, ng1) = act1.nominal.A;
    B.block(og1, iu + 0, ng1, 1) = act1.nominal.B;
  }
  if (ng2 > 0) {
    A.block(og2, og2, ng2, ng2) = act2.nominal.A;
    B.block(og2, iu + 1, ng2, 1) = act2.nominal.B;
  }

  // Radius-weight states, driven by the delivered torques
  if (nm1 > 0) {
    A.block(om1, om1, nm1, nm1) = act1.weight.A;
    if (ng1 > 0) A.block(om1, og1, nm1, ng1) = act1.weight.B * act1.nominal.C;
    B.block(om1, iu + 0, nm1, 1) = act1.weight.B * Dg1;
  }
  if (nm2 > 0) {
    A.block(om2, om2, nm2, nm2) = act2.weight.A;
    if (ng2 > 0) A.block(om2, og2, nm2, ng2) = act2.weight.B * act2.nominal.C;
    B.block(om2, iu + 1, nm2, 1) = act2.weight.B * Dg2;
  }

  // Error-weight states on v = r - y - wn*n
  const StateSpaceModel wp = pw.wp_channel();
  A.block(op, op, 3, 3) = wp.A(0, 0) * Eigen::Matrix3d::Identity();
  A.block(op, oth, 3, 3) = -wp.B(0, 0) * Cpot;
  B.block(op, ir, 3, 3) = wp.B(0, 0) * Eigen::Matrix3d::Identity();
  B.block(op, inoise, 3, 3) = -wp.B(0, 0) * pw.wn * Eigen::Matrix3d::Identity();

  // Inertia rows replicate the acceleration row block verbatim.
  C.block(ozp, 0, 3, nx) = A.block(oom, 0, 3, nx);
  D.block(ozp, 0, 3, m) = B.block(oom, 0, 3, m);
  // Friction rows read rates.
  C.block(ozp + 3, oom, 5, 3) = Dfr;
  // Actuator radius outputs.
  if (nm1 > 0) C.block(oza + 0, om1, 1, nm1) = act1.weight.C;
  if (ng1 > 0) C.block(oza + 0, og1, 1, ng1) = act1.weight.D(0, 0) * act1.nominal.C;
  D(oza + 0, iu + 0) = act1.weight.D(0, 0) * Dg1;
  if (nm2 > 0) C.block(oza + 1, om2, 1, nm2) = act2.weight.C;
  if (ng2 > 0) C.block(oza + 1, og2, 1, ng2) = act2.weight.D(0, 0) * act2.nominal.C;
  D(oza + 1, iu + 1) = act2.weight.D(0, 0) * Dg2;

  // ey = Cwp xp + Dwp v
  C.block(oey, op, 3, 3) = wp.C(0, 0) * Eigen::Matrix3d::Identity();
  C.block(oey, oth, 3, 3) = -wp.D(0, 0) * Cpot;
  D.block(oey, ir, 3, 3) = wp.D(0, 0) * Eigen::Matrix3d::Identity();
  D.block(oey, inoise, 3, 3) = -wp.D(0, 0) * pw.wn * Eigen::Matrix3d::Identity();
  // eu = wu u
  D.block(oeu, iu, 2, 2) = pw.wu * Eigen::Matrix2d::Identity();
  // ym = v
  C.block(oym, oth, 3, 3) = -Cpot;
  D.block(oym, ir, 3, 3).setIdentity();
  D.block(oym, inoise, 3, 3) = -pw.wn * Eigen::Matrix3d::Identity();

  AugmentedPlant out;
  out.sys.A = std::move(A);
  out.sys.B = std::move(B);
  out.sys.C = std::move(C);
  out.sys.D = std::move(D);

  auto& in_names = out.sys.input_names;
  auto& out_names = out.sys.output_names;
  for (const char* nm : UncertaintySpec::kNames) in_names.push_back(std::string("w_") + nm);
  in_names.push_back("w_act1");
  in_names.push_back("w_act2");
  for (const char* nm : {"r1", "r2", "r3", "d1", "d2", "d3", "n1", "n2", "n3", "u1", "u2"})
    in_names.push_back(nm);
  for (const char* nm : UncertaintySpec::kNames) out_names.push_back(std::string("z_") + nm);
  out_names.push_back("z_act1");
  out_names.push_back("z_act2");
  for (const char* nm : {"ey1", "ey2", "ey3", "eu1", "eu2", "ym1", "ym2", "ym3"})
    out_names.push_back(nm);
  out.sys.check();

  for (int i = 0; i < UncertaintySpec::kCount; ++i)
    out.structure.blocks.push_back({BlockKind::RealScalar, 1, 1, UncertaintySpec::kNames[i]});
  out.structure.blocks.push_back({BlockKind::ComplexScalar, 1, 1, "act1"});
  out.structure.blocks.push_back({BlockKind::ComplexScalar, 1, 1, "act2"});
  return out;
}

}  // namespace

AugmentedPlant build_uncertain_plant(const PhysicalParameters& p,
                                     const UncertaintySpec& spec,
                                     const ActuatorModel& act1,
                                     const ActuatorModel& act2,
                                     const PerformanceWeights& pw) {
  return assemble(p, spec, act1, act2, pw);
}

}  // namespace tripend
