#include "tripend/runner.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "tripend/analysis.hpp"
#include "tripend/dynamics.hpp"
#include "tripend/errors.hpp"
#include "tripend/io.hpp"
#include "tripend/mu.hpp"
#include "tripend/sim.hpp"
#include "tripend/synthesis.hpp"
#include "tripend/uncertainty.hpp"
#include "tripend/vertices.hpp"

namespace tripend {

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasible;
  } catch (const NotStable& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUnstable;
  } catch (const std::exception& e) {
    // NumericalFailure family, regularity/fit trouble, logic errors.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}

void write_echo(const RunConfig& cfg, const std::string& out_dir) {
  io::ensure_dir(out_dir);
  io::write_text(out_dir + "/config_echo.txt", cfg.echo());
}

AugmentedPlant plant_from_config(const RunConfig& cfg) {
  const ActuatorModel act = cfg.actuator();
  return build_uncertain_plant(cfg.params, cfg.unc, act, act, cfg.weights);
}

SynthesisOptions synth_options(const RunConfig& cfg) {
  SynthesisOptions so;
  so.gamma_tol = cfg.synth_gamma_tol;
  return so;
}

}  // namespace

int cmd_model(const RunConfig& cfg, const std::string& out_dir) {
  return guarded([&] {
    write_echo(cfg, out_dir);
    const CompositeParameters c = derive_composites(cfg.params);
    const LinearPlant lp = linearize(cfg.params, c);
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(lp.A).eigenvalues();
    io::write_model_json(out_dir + "/model.json", c, lp, eigs);
    return kExitOk;
  });
}

int cmd_synth(const RunConfig& cfg, const std::string& method,
              const std::string& out_dir) {
  return guarded([&] {
    if (method != "hinf" && method != "dk")
      throw ConfigError("unknown synthesis method '" + method + "'");
    write_echo(cfg, out_dir);
    const AugmentedPlant aug = plant_from_config(cfg);

    if (method == "hinf") {
      const HinfDesign des = hinf_synthesize(nominal_partition(aug), synth_options(cfg));
      io::write_controller_json(out_dir + "/controller.json", des.controller,
                                des.info.closed_loop_abscissa);
      io::write_report_json(out_dir + "/report.json", "hinf",
                            des.controller.gamma, des.info, nullptr);
    } else {
      DkOptions opts;
      opts.max_iters = cfg.synth_max_iters;
      opts.d_order = cfg.synth_d_order;
      opts.synth = synth_options(cfg);
      opts.grid = cfg.grid();
      const DkDesign des = dk_iterate(aug, opts);
      io::write_controller_json(out_dir + "/controller.json", des.controller,
                                des.info.closed_loop_abscissa);
      io::write_report_json(out_dir + "/report.json", "dk", des.controller.gamma,
                            des.info, &des.dk);
    }
    return kExitOk;
  });
}

int cmd_simulate(const RunConfig& cfg, const std::string& scenario,
                 const std::string& controller_path, const std::string& out_dir) {
  return guarded([&] {
    const Scenario sc = cfg.scenario(scenario);
    const Controller k = io::read_controller_json(controller_path);
    write_echo(cfg, out_dir);

    const CompositeParameters c = derive_composites(cfg.params);
    const SimulationResult res =
        cfg.sim_nonlinear
            ? simulate_nonlinear_cl(cfg.params, c, k, sc, cfg.actuator().nominal)
            : simulate_linear_cl(linearize(cfg.params, c), k, sc,
                                 cfg.actuator().nominal);

    io::write_sim_csv(out_dir + "/sim_" + scenario + ".csv", res);
    io::write_metrics_json(out_dir + "/metrics_" + scenario + ".json",
                           compute_metrics(res), sc);
    return res.nonfinite ? kExitNonFinite : kExitOk;
  });
}

int cmd_analyze(const RunConfig& cfg, const std::string& controller_path,
                const std::string& out_dir) {
  return guarded([&] {
    const Controller k = io::read_controller_json(controller_path);
    write_echo(cfg, out_dir);
    const AugmentedPlant aug = plant_from_config(cfg);
    const std::vector<double> grid = cfg.grid();

    const StateSpaceModel closed =
        lft_lower(aug.sys, k.sys, aug.n_meas, aug.n_ctrl);

    BlockStructure mu_struct = aug.structure;
    mu_struct.blocks.push_back(
        {BlockKind::ComplexFull, aug.n_exo, aug.n_perf, "perf"});
    const MuResult mu = mu_sweep(closed, mu_struct, grid);
    io::write_mu_csv(out_dir + "/mu.csv", mu);

    // Weighted nominal performance channels exo -> [ey eu].
    std::vector<int> perf_rows, exo_cols;
    for (int i = aug.n_z(); i < aug.n_z() + aug.n_perf; ++i) perf_rows.push_back(i);
    for (int i = aug.n_w(); i < aug.n_w() + aug.n_exo; ++i) exo_cols.push_back(i);
    const StateSpaceModel perf = subsystem(closed, perf_rows, exo_cols);
    const FrequencyResponse fr = freq_response(perf, grid);
    std::vector<Eigen::VectorXd> svals;
    svals.reserve(fr.values.size());
    for (const auto& m : fr.values)
      svals.push_back(Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues());
    io::write_sigma_csv(out_dir + "/sigma.csv", grid, svals);

    const WorstCaseResult wc = worst_case_vertices(
        aug, cfg.params, k, cfg.vertex_budget, cfg.scenario("tracking"),
        cfg.scenario("disturbance"), cfg.seed);
    io::write_worstcase_json(out_dir + "/worstcase.json", wc);
    return kExitOk;
  });
}

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  json j;
  if (in) {
    try {
      in >> j;
    } catch (const json::exception&) {
      j = json();
    }
  }
  return j;
}

}  // namespace

int cmd_reproduce(const RunConfig& cfg, const std::string& out_dir) {
  return guarded([&] {
    write_echo(cfg, out_dir);
    const std::string hdir = out_dir + "/hinf";
    const std::string ddir = out_dir + "/dk";

    json stages;
    int first_bad = kExitOk;
    auto run = [&](const char* name, int code) {
      stages[name] = code;
      if (first_bad == kExitOk && code != kExitOk) first_bad = code;
      return code;
    };

    run("model", cmd_model(cfg, out_dir));

    const int synth_hinf = run("synth_hinf", cmd_synth(cfg, "hinf", hdir));
    if (synth_hinf == kExitOk) {
      run("sim_tracking_hinf",
          cmd_simulate(cfg, "tracking", hdir + "/controller.json", hdir));
      run("sim_disturbance_hinf",
          cmd_simulate(cfg, "disturbance", hdir + "/controller.json", hdir));
      run("analyze_hinf", cmd_analyze(cfg, hdir + "/controller.json", hdir));
    }

    const int synth_dk = run("synth_dk", cmd_synth(cfg, "dk", ddir));
    if (synth_dk == kExitOk) {
      run("sim_tracking_dk",
          cmd_simulate(cfg, "tracking", ddir + "/controller.json", ddir));
      run("sim_disturbance_dk",
          cmd_simulate(cfg, "disturbance", ddir + "/controller.json", ddir));
    }

    // Roll the stage artifacts into one overview.  Paths inside are relative
    // so two runs with the same config are byte-identical.
    json summary;
    summary["stages"] = stages;

    if (synth_hinf == kExitOk) {
      json h;
      const json rep = read_json_file(hdir + "/report.json");
      if (rep.contains("gamma")) h["gamma"] = rep["gamma"];
      if (rep.contains("regularized")) h["regularized"] = rep["regularized"];
      for (const char* s : {"tracking", "disturbance"}) {
        const json m = read_json_file(hdir + "/metrics_" + s + ".json");
        if (m.contains("channels")) h[s] = m;
      }
      const json wc = read_json_file(hdir + "/worstcase.json");
      if (wc.contains("ranked")) {
        int unstable = 0;
        for (const auto& v : wc["ranked"])
          if (!v.value("stable", true)) ++unstable;
        double worst_score = 0.0;
        for (const auto& v : wc["ranked"]) {
          if (v.value("stable", false) && v.contains("score") &&
              v["score"].is_number())
            worst_score = std::max(worst_score, v["score"].get<double>());
        }
        h["worst_case"] = {{"evaluated", wc.value("evaluated", 0)},
                           {"exhaustive", wc.value("exhaustive", false)},
                           {"unstable_count", unstable},
                           {"worst_stable_score", worst_score}};
      }
      {
        // Robustness peak from the sweep artifact.
        const std::string mu_csv_path = hdir + "/mu.csv";
        std::ifstream mu_in(mu_csv_path);
        double peak = 0.0;
        bool have = false;
        std::string line;
        while (std::getline(mu_in, line)) {
          if (line.empty() || line[0] == '#' || line.rfind("omega", 0) == 0)
            continue;
          const auto c1 = line.find(',');
          const auto c2 = line.find(',', c1 + 1);
          if (c1 == std::string::npos || c2 == std::string::npos) continue;
          peak = std::max(peak, std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
          have = true;
        }
        if (have) {
          h["mu_peak"] = peak;
          h["robust"] = peak < 1.0;
        }
      }
      summary["hinf"] = h;
    }

    if (synth_dk == kExitOk) {
      json dj;
      const json rep = read_json_file(ddir + "/report.json");
      if (rep.contains("gamma")) dj["gamma"] = rep["gamma"];
      if (rep.contains("dk")) dj["iterations"] = rep["dk"];
      for (const char* s : {"tracking", "disturbance"}) {
        const json m = read_json_file(ddir + "/metrics_" + s + ".json");
        if (m.contains("channels")) dj[s] = m;
      }
      summary["dk"] = dj;
    }

    // Qualitative comparisons, recorded but never fatal: whether tracking
    // settles inside the window, which arm keeps the largest offset, whether
    // the disturbance response decays, and whether the dk loop is at least
    // as slow as the hinf one.
    {
      json checks;
      auto max_settle = [](const json& m) {
        double s = 0.0;
        for (const auto& ch : m["channels"])
          s = std::max(s, ch.value("settling_time", 0.0));
        return s;
      };
      if (summary.contains("hinf")) {
        const json& h = summary["hinf"];
        if (h.contains("tracking")) {
          const json& trk = h["tracking"];
          const double t_final = trk["scenario"].value("t_final", 0.0);
          checks["hinf_tracking_all_channels_settle"] =
              max_settle(trk) < t_final;
          int worst = 0;
          double sse = -1.0;
          for (int i = 0; i < 3; ++i) {
            const double v = trk["channels"][i].value("sse", 0.0);
            if (v > sse) {
              sse = v;
              worst = i + 1;
            }
          }
          checks["hinf_tracking_largest_sse_channel"] = worst;
        }
        if (h.contains("disturbance")) {
          bool decays = true;
          for (const auto& ch : h["disturbance"]["channels"]) {
            const double peak = ch.value("overshoot", 0.0);
            if (peak > 0.0 && ch.value("sse", 0.0) > 0.1 * peak) decays = false;
          }
          checks["hinf_disturbance_decays_to_10pct_peak"] = decays;
        }
      }
      if (summary.contains("hinf") && summary.contains("dk") &&
          summary["hinf"].contains("tracking") &&
          summary["dk"].contains("tracking")) {
        checks["dk_tracking_settling_ge_hinf"] =
            max_settle(summary["dk"]["tracking"]) >=
            max_settle(summary["hinf"]["tracking"]);
      }
      if (!checks.empty()) summary["soft_checks"] = checks;
    }

    io::write_text(out_dir + "/summary.json", summary.dump(2) + "\n");
    return first_bad;
  });
}

}  // namespace tripend
