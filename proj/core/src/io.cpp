#include "tripend/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tripend/errors.hpp"
#include "tripend/vertices.hpp"

namespace tripend::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ConfigError("write failed on '" + path + "'");
}

namespace {

json mat_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd mat_from_json(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw ConfigError(std::string("controller file: bad matrix field '") + what + "'");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ConfigError(std::string("controller file: inconsistent matrix '") + what + "'");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(i++).get<double>();
  return m;
}

void dump_to(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json metrics_json(const Metrics& m) {
  json j;
  j["nonfinite"] = m.nonfinite;
  json ch = json::array();
  for (const auto& c : m.ch) {
    ch.push_back({{"overshoot", c.overshoot},
                  {"settling_time", c.settling_time},
                  {"sse", c.sse}});
  }
  j["channels"] = std::move(ch);
  return j;
}

json scenario_json(const Scenario& sc) {
  return {{"name", sc.name},
          {"r", {sc.r(0), sc.r(1), sc.r(2)}},
          {"d", {sc.d(0), sc.d(1), sc.d(2)}},
          {"t_final", sc.t_final},
          {"dt", sc.dt}};
}

}  // namespace

void write_model_json(const std::string& path, const CompositeParameters& c,
                      const LinearPlant& lp, const Eigen::VectorXcd& eigenvalues) {
  json j;
  j["composites"] = {{"M1", c.M1}, {"M2", c.M2}, {"M3", c.M3},
                     {"J1", c.J1}, {"J2", c.J2}, {"J3", c.J3}};
  j["linearization"] = {{"A", mat_json(lp.A)},
                        {"Bu", mat_json(lp.Bu)},
                        {"Bd", mat_json(lp.Bd)},
                        {"C", mat_json(lp.C)}};
  json eigs = json::array();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    eigs.push_back({{"re", eigenvalues(i).real()}, {"im", eigenvalues(i).imag()}});
  j["eigenvalues"] = std::move(eigs);
  dump_to(path, j);
}

void write_controller_json(const std::string& path, const Controller& k,
                           double closed_loop_abscissa) {
  json j;
  j["method"] = k.method;
  j["gamma"] = k.gamma;
  if (std::isfinite(closed_loop_abscissa))
    j["closed_loop_stable"] = closed_loop_abscissa < 0.0;
  j["A"] = mat_json(k.sys.A);
  j["B"] = mat_json(k.sys.B);
  j["C"] = mat_json(k.sys.C);
  j["D"] = mat_json(k.sys.D);
  if (!k.sys.input_names.empty()) j["input_names"] = k.sys.input_names;
  if (!k.sys.output_names.empty()) j["output_names"] = k.sys.output_names;
  dump_to(path, j);
}

Controller read_controller_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open controller file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("controller file '" + path + "': " + e.what());
  }
  Controller k;
  try {
    k.method = j.value("method", std::string("unknown"));
    k.gamma = j.value("gamma", 0.0);
    k.sys.A = mat_from_json(j.at("A"), "A");
    k.sys.B = mat_from_json(j.at("B"), "B");
    k.sys.C = mat_from_json(j.at("C"), "C");
    k.sys.D = mat_from_json(j.at("D"), "D");
    if (j.contains("input_names"))
      k.sys.input_names = j.at("input_names").get<std::vector<std::string>>();
    if (j.contains("output_names"))
      k.sys.output_names = j.at("output_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError("controller file '" + path + "': " + e.what());
  }
  try {
    k.sys.check();
  } catch (const DimensionMismatch& e) {
    throw ConfigError("controller file '" + path + "': " + e.what());
  }
  return k;
}

void write_report_json(const std::string& path, const std::string& method,
                       double gamma, const SynthesisInfo& info, const DkInfo* dk) {
  json j;
  j["method"] = method;
  j["gamma"] = gamma;
  j["bracket"] = {{"feasible", info.bracket.feasible},
                  {"infeasible", info.bracket.infeasible}};
  j["closed_loop_abscissa"] = info.closed_loop_abscissa;
  j["regularized"] = info.regularized;
  if (dk != nullptr) {
    j["dk"] = {{"gamma_sequence", dk->gamma_sequence},
               {"mu_peaks", dk->mu_peaks},
               {"d_orders", dk->d_orders},
               {"selected", dk->selected},
               {"stopped", dk->stopped}};
  }
  dump_to(path, j);
}

void write_sim_csv(const std::string& path, const SimulationResult& r) {
  std::string out = "t,theta1,theta2,theta3,y1,y2,y3,tm1,tm2\n";
  const Eigen::Index n = r.theta.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    out += format_double(r.t[static_cast<size_t>(k)]);
    for (int i = 0; i < 3; ++i) out += "," + format_double(r.theta(i, k));
    for (int i = 0; i < 3; ++i) out += "," + format_double(r.volts(i, k));
    for (int i = 0; i < 2; ++i) out += "," + format_double(r.torque(i, k));
    out += "\n";
  }
  write_text(path, out);
}

void write_metrics_json(const std::string& path, const Metrics& m, const Scenario& sc) {
  json j;
  j["scenario"] = scenario_json(sc);
  j.update(metrics_json(m));
  dump_to(path, j);
}

void write_mu_csv(const std::string& path, const MuResult& mu) {
  // verdict comment first; readers skip lines starting with '#'
  std::string out = std::string("# robust: ") + (mu.robust ? "true" : "false") +
                    " (peak upper " + format_double(mu.peak_upper) + " at omega " +
                    format_double(mu.peak_omega) + ")\n";
  out += "omega,upper,lower\n";
  for (size_t k = 0; k < mu.grid.size(); ++k) {
    out += format_double(mu.grid[k]) + "," + format_double(mu.upper[k]) + "," +
           format_double(mu.lower[k]) + "\n";
  }
  write_text(path, out);
}

void write_sigma_csv(const std::string& path, const std::vector<double>& grid,
                     const std::vector<Eigen::VectorXd>& svals) {
  if (grid.size() != svals.size())
    throw DimensionMismatch("write_sigma_csv: grid/value count mismatch");
  std::string out = "omega";
  const Eigen::Index ns = svals.empty() ? 0 : svals.front().size();
  for (Eigen::Index i = 0; i < ns; ++i)
    out += ",sigma" + std::to_string(i + 1);
  out += "\n";
  for (size_t k = 0; k < grid.size(); ++k) {
    out += format_double(grid[k]);
    for (Eigen::Index i = 0; i < ns; ++i) out += "," + format_double(svals[k](i));
    out += "\n";
  }
  write_text(path, out);
}

void write_worstcase_json(const std::string& path, const WorstCaseResult& wc) {
  json j;
  j["score_definition"] = score_definition();
  j["evaluated"] = wc.evaluated;
  j["exhaustive"] = wc.exhaustive;
  auto outcome_json = [](const VertexOutcome& v) {
    json o;
    o["sign"] = v.sign;
    o["stable"] = v.stable;
    o["abscissa"] = v.abscissa;
    o["score"] = v.score;
    o["tracking"] = metrics_json(v.tracking);
    o["disturbance"] = metrics_json(v.disturbance);
    return o;
  };
  j["nominal"] = outcome_json(wc.nominal);
  json ranked = json::array();
  for (const auto& v : wc.ranked) ranked.push_back(outcome_json(v));
  j["ranked"] = std::move(ranked);
  dump_to(path, j);
}

}  // namespace tripend::io
