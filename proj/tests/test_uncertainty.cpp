#include <doctest.h>

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "tripend/analysis.hpp"
#include "tripend/dynamics.hpp"
#include "tripend/errors.hpp"
#include "tripend/params.hpp"
#include "tripend/state_space.hpp"
#include "tripend/uncertainty.hpp"

using namespace tripend;
using Cx = std::complex<double>;

namespace {

double mag_at(const StateSpaceModel& g, double w) {
  return std::abs(eval_response(g, w)(0, 0));
}

// Weighted nominal interconnection [r d n u] -> [ey eu ym] assembled from
// scratch in the frequency domain, bypassing the LFT builder entirely.
Eigen::MatrixXcd nominal_channels(const PhysicalParameters& p,
                                  const ActuatorModel& act,
                                  const PerformanceWeights& pw, double w) {
  const LinearPlant lin = linearize(p, derive_composites(p));
  const int n = static_cast<int>(lin.A.rows());
  const Eigen::MatrixXcd R =
      (Cx(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - lin.A.cast<Cx>())
          .partialPivLu()
          .solve(Eigen::MatrixXcd::Identity(n, n));
  const Eigen::MatrixXcd Ru = lin.C.cast<Cx>() * R * lin.Bu.cast<Cx>();
  const Eigen::MatrixXcd Rd = lin.C.cast<Cx>() * R * lin.Bd.cast<Cx>();
  const Cx gm = eval_response(act.nominal, w)(0, 0);
  const Cx wp = eval_response(pw.wp_channel(), w)(0, 0);

  const Eigen::MatrixXcd I3c = Eigen::MatrixXcd::Identity(3, 3);
  Eigen::MatrixXcd O = Eigen::MatrixXcd::Zero(8, 11);
  // v = r - y - wn*n with y = Ru*gm*u + Rd*d
  O.block(0, 0, 3, 3) = wp * I3c;
  O.block(0, 3, 3, 3) = -wp * Rd;
  O.block(0, 6, 3, 3) = -wp * pw.wn * I3c;
  O.block(0, 9, 3, 2) = -wp * gm * Ru;
  O.block(3, 9, 2, 2) = pw.wu * Eigen::MatrixXcd::Identity(2, 2);
  O.block(5, 0, 3, 3) = I3c;
  O.block(5, 3, 3, 3) = -Rd;
  O.block(5, 6, 3, 3) = -pw.wn * I3c;
  O.block(5, 9, 3, 2) = -gm * Ru;
  return O;
}

}  // namespace

TEST_CASE("default belt-drive cover hits its three radius anchors") {
  const ActuatorModel act = default_actuator();
  CHECK(mag_at(act.nominal, 0.0) == doctest::Approx(1.0));
  CHECK(mag_at(act.nominal, 20.0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(mag_at(act.weight, 0.0) == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(mag_at(act.weight, 100.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mag_at(act.weight, 1e8) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(is_hurwitz(act.weight.A).hurwitz);
}

TEST_CASE("radius profile interpolates the requested anchors") {
  const auto w = actuator_weight_from_profile(0.3, 4.0, 50.0);
  CHECK(mag_at(w, 0.0) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(mag_at(w, 50.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mag_at(w, 1e8) == doctest::Approx(4.0).epsilon(1e-4));
  CHECK_THROWS_AS(actuator_weight_from_profile(1.2, 4.0, 50.0), ConfigError);
}

TEST_CASE("weight fit floors at 1e-4 when the family is the nominal") {
  const auto g = StateSpaceModel::first_order_lag(1.0, 0.05);
  const auto grid = log_grid(1e-2, 1e3, 60);
  const auto w = fit_actuator_weight(g, {g}, grid);
  for (double om : {1e-2, 1.0, 1e3})
    CHECK(mag_at(w, om) >= 1e-4 * (1.0 - 1e-9));
  // floor plus 3 dB slack bounds it from above
  CHECK(mag_at(w, 1.0) <= 1e-4 * std::pow(10.0, 3.0 / 20.0) * 1.001);
}

TEST_CASE("pure gain error needs a constant cover of its size") {
  const auto g = StateSpaceModel::first_order_lag(1.0, 0.05);
  StateSpaceModel g12 = g;
  g12.C *= 1.2;
  g12.D *= 1.2;
  const auto grid = log_grid(1e-2, 1e3, 60);
  const auto w = fit_actuator_weight(g, {g12}, grid);
  for (double om : grid) CHECK(mag_at(w, om) >= 0.2 * (1.0 - 1e-9));
}

TEST_CASE("fitted weight overbounds a gain and pole family everywhere") {
  const auto g = StateSpaceModel::first_order_lag(1.0, 0.05);
  std::vector<StateSpaceModel> family;
  for (double k : {0.9, 1.15})
    for (double tau : {0.035, 0.05, 0.07})
      family.push_back(StateSpaceModel::first_order_lag(k, tau));
  const auto grid = default_grid();
  const auto w = fit_actuator_weight(g, family, grid);
  CHECK(is_hurwitz(w.A).hurwitz);
  for (double om : grid) {
    const Cx g0 = eval_response(g, om)(0, 0);
    double worst = 0.0;
    for (const auto& f : family)
      worst = std::max(worst, std::abs((eval_response(f, om)(0, 0) - g0) / g0));
    CHECK(mag_at(w, om) >= worst * (1.0 - 1e-9));
  }
  CHECK_THROWS_AS(fit_actuator_weight(g, {}, grid), FitFailed);
}

TEST_CASE("tracking weight presses hard at dc and relaxes to half") {
  const PerformanceWeights pw = default_performance_weights();
  const auto wp = pw.wp_channel();
  CHECK(mag_at(wp, 0.0) == doctest::Approx(1.0 / pw.eps).epsilon(1e-9));
  CHECK(mag_at(wp, 1e8) == doctest::Approx(1.0 / pw.Ms).epsilon(1e-4));
  CHECK(is_hurwitz(wp.A).hurwitz);
  CHECK(pw.wu == doctest::Approx(1e-2));
  CHECK(pw.wn == doctest::Approx(1e-3));
}

TEST_CASE("augmented plant keeps its channel bookkeeping") {
  const PhysicalParameters p;
  const UncertaintySpec spec;
  const ActuatorModel act = default_actuator();
  const auto aug = build_uncertain_plant(p, spec, act, act,
                                         default_performance_weights());
  CHECK(aug.structure.blocks.size() == 10);
  CHECK(aug.n_w() == 10);
  CHECK(aug.n_z() == 10);
  CHECK(aug.sys.inputs() == 10 + 9 + 2);
  CHECK(aug.sys.outputs() == 10 + 5 + 3);
  int real_scalars = 0, complex_scalars = 0;
  for (const auto& b : aug.structure.blocks) {
    if (b.kind == BlockKind::RealScalar) ++real_scalars;
    if (b.kind == BlockKind::ComplexScalar) ++complex_scalars;
    CHECK(b.rows == 1);
    CHECK(b.cols == 1);
  }
  CHECK(real_scalars == 8);
  CHECK(complex_scalars == 2);
}

TEST_CASE("zero closure collapses to the weighted nominal wiring") {
  const PhysicalParameters p;
  const ActuatorModel act = default_actuator();
  const PerformanceWeights pw = default_performance_weights();
  UncertaintySpec wide;  // defaults, 20 % everywhere
  UncertaintySpec none;
  none.width.fill(0.0);

  const auto a1 = build_uncertain_plant(p, wide, act, act, pw);
  const auto a2 = build_uncertain_plant(p, none, act, act, pw);
  const auto cl1 = close_upper(a1.sys, Eigen::MatrixXd::Zero(10, 10), 10, 10);
  const auto cl2 = close_upper(a2.sys, Eigen::MatrixXd::Zero(10, 10), 10, 10);

  for (double w : {0.05, 0.7, 4.0, 60.0}) {
    const Eigen::MatrixXcd r1 = eval_response(cl1, w);
    const Eigen::MatrixXcd r2 = eval_response(cl2, w);
    // declared widths must not leak into the nominal closure
    CHECK((r1 - r2).norm() < 1e-10 * r1.norm());
    const Eigen::MatrixXcd want = nominal_channels(p, act, pw, w);
    CHECK((r1 - want).norm() < 1e-8 * want.norm());
  }
}

TEST_CASE("closing one inertia block at its corner rebuilds that plant") {
  const PhysicalParameters p;
  const UncertaintySpec spec;
  const ActuatorModel act = default_actuator();
  const PerformanceWeights pw = default_performance_weights();
  const auto aug = build_uncertain_plant(p, spec, act, act, pw);

  std::array<int, 8> sign{+1, -1, -1, -1, -1, -1, -1, -1};
  // vertex_parameters maps sign bits to +/-1 deltas; isolate I1 by building
  // the comparison plant with only that width nonzero
  UncertaintySpec only_i1;
  only_i1.width.fill(0.0);
  only_i1.width[0] = spec.width[0];
  const auto aug_i1 = build_uncertain_plant(p, only_i1, act, act, pw);
  const PhysicalParameters pv = vertex_parameters(p, only_i1, sign);
  const auto rebuilt = build_uncertain_plant(pv, only_i1, act, act, pw);

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(8, 8);
  delta(0, 0) = 1.0;
  const auto closed = close_upper(aug_i1.sys, delta, 8, 8);
  const auto direct = close_upper(rebuilt.sys, Eigen::MatrixXd::Zero(8, 8), 8, 8);

  for (size_t i = 0; i < 400; i += 16) {
    const double w = default_grid()[i];
    const Eigen::MatrixXcd r1 = eval_response(closed, w);
    const Eigen::MatrixXcd r2 = eval_response(direct, w);
    CHECK((r1 - r2).norm() <= 1e-6 * std::max(1.0, r2.norm()));
  }
}

TEST_CASE("corner closures match plants rebuilt from corner parameters") {
  const PhysicalParameters p;
  const UncertaintySpec spec;
  const ActuatorModel act = default_actuator();
  const PerformanceWeights pw = default_performance_weights();
  const auto aug = build_uncertain_plant(p, spec, act, act, pw);
  const auto grid = default_grid();

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    std::array<int, 8> sign{};
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 8; ++i) {
      sign[i] = (rng() & 1) ? +1 : -1;
      delta(i, i) = sign[i];
    }
    const auto closed = close_upper(aug.sys, delta, 8, 8);
    const auto rebuilt = build_uncertain_plant(vertex_parameters(p, spec, sign),
                                               spec, act, act, pw);
    const auto direct =
        close_upper(rebuilt.sys, Eigen::MatrixXd::Zero(8, 8), 8, 8);
    for (size_t i = 0; i < grid.size(); i += 40) {
      const Eigen::MatrixXcd r1 = eval_response(closed, grid[i]);
      const Eigen::MatrixXcd r2 = eval_response(direct, grid[i]);
      CHECK((r1 - r2).norm() <= 1e-6 * std::max(1.0, r2.norm()));
    }
  }
}

TEST_CASE("random draws inside the box stay inside the vertex hull") {
  const PhysicalParameters p;
  const UncertaintySpec spec;
  std::array<int, 8> plus;
  plus.fill(+1);
  std::array<int, 8> minus;
  minus.fill(-1);
  const PhysicalParameters hi = vertex_parameters(p, spec, plus);
  const PhysicalParameters lo = vertex_parameters(p, spec, minus);
  CHECK(hi.I1 == doctest::Approx(p.I1 * 1.2));
  CHECK(lo.Cm2 == doctest::Approx(p.Cm2 * 0.8));
  for (std::uint64_t seed : {1ull, 99ull, 31337ull}) {
    const PhysicalParameters s = sample_parameters(p, spec, seed);
    CHECK(s.I2 >= lo.I2);
    CHECK(s.I2 <= hi.I2);
    CHECK(s.C3 >= lo.C3);
    CHECK(s.C3 <= hi.C3);
  }
}
