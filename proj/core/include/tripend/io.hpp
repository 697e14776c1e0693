#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

#include "tripend/dynamics.hpp"
#include "tripend/mu.hpp"
#include "tripend/params.hpp"
#include "tripend/sim.hpp"
#include "tripend/synthesis.hpp"
#include "tripend/vertices.hpp"

namespace tripend::io {

// %.17g: shortest text that scanf round-trips exactly for CSV; JSON doubles
// go through the serializer's shortest-round-trip encoding.
std::string format_double(double v);

void ensure_dir(const std::string& dir);
void write_text(const std::string& path, const std::string& content);

void write_model_json(const std::string& path, const CompositeParameters& c,
                      const LinearPlant& lp, const Eigen::VectorXcd& eigenvalues);

// closed_loop_abscissa, when finite, adds a closed_loop_stable flag; the
// reader ignores it.
void write_controller_json(const std::string& path, const Controller& k,
                           double closed_loop_abscissa =
                               std::numeric_limits<double>::quiet_NaN());
Controller read_controller_json(const std::string& path);  // ConfigError on bad shape

void write_report_json(const std::string& path, const std::string& method,
                       double gamma, const SynthesisInfo& info, const DkInfo* dk);

void write_sim_csv(const std::string& path, const SimulationResult& r);
void write_metrics_json(const std::string& path, const Metrics& m, const Scenario& sc);

void write_mu_csv(const std::string& path, const MuResult& mu);
void write_sigma_csv(const std::string& path, const std::vector<double>& grid,
                     const std::vector<Eigen::VectorXd>& svals);

void write_worstcase_json(const std::string& path, const WorstCaseResult& wc);

}  // namespace tripend::io
