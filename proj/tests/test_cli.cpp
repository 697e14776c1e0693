#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

std::string make_tmpdir() {
  char buf[] = "/tmp/tripend_cli_XXXXXX";
  if (mkdtemp(buf) == nullptr) throw std::runtime_error("mkdtemp failed");
  return buf;
}

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd =
      std::string(TRIPEND_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) throw std::runtime_error("system() failed");
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json load(const std::string& path) { return json::parse(slurp(path)); }

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Trimmed settings shared by the heavier cases; synthesis itself is exact,
// only sweep resolution and horizons are reduced
const std::string kTrim =
    " --set grid.n=40 --set vertex_budget=8"
    " --set tracking.t_final=3 --set tracking.dt=0.01"
    " --set disturbance.t_final=3 --set disturbance.dt=0.01";

// One shared nominal controller for the consumer commands
const std::string& hinf_dir() {
  static const std::string dir = [] {
    const std::string d = make_tmpdir();
    if (run_cli("synth --method hinf --out " + d + kTrim) != 0)
      throw std::runtime_error("fixture synth failed");
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("model writes the linearization bundle and is reproducible") {
  const std::string a = make_tmpdir();
  const std::string b = make_tmpdir();
  REQUIRE(run_cli("model --out " + a) == 0);
  REQUIRE(run_cli("model --out " + b) == 0);

  const json m = load(a + "/model.json");
  REQUIRE(m.at("eigenvalues").size() == 6);
  int positive = 0;
  for (const auto& e : m.at("eigenvalues"))
    if (e.at("re").get<double>() > 0.0) ++positive;
  CHECK(positive >= 1);
  CHECK(m.at("composites").at("M3").get<double>() == doctest::Approx(0.54635));
  CHECK(m.at("linearization").at("A").at("rows") == 6);

  CHECK(slurp(a + "/model.json") == slurp(b + "/model.json"));
  CHECK(slurp(a + "/config_echo.txt").find("params.m1 = 3.25") != std::string::npos);
}

TEST_CASE("config violations exit with the config code and name the key") {
  const std::string d = make_tmpdir();
  const std::string log = d + "/log.txt";
  CHECK(run_cli("model --out " + d + " --set params.m1=0", log) == 2);
  CHECK(slurp(log).find("m1") != std::string::npos);

  CHECK(run_cli("model --out " + d + " --set bogus.key=1", log) == 2);
  CHECK(slurp(log).find("bogus.key") != std::string::npos);

  CHECK(run_cli("synth --method hinf --out " + d + " --set synth.gamma_tol=0", log) == 2);
  CHECK(run_cli("synth --method newton --out " + d, log) == 2);
}

TEST_CASE("unknown scenario and missing controller are config errors") {
  const std::string d = make_tmpdir();
  CHECK(run_cli("simulate --scenario lunar --controller " + hinf_dir() +
                "/controller.json --out " + d) == 2);
  CHECK(run_cli("simulate --scenario tracking --controller " + d +
                "/does_not_exist.json --out " + d) == 2);
}

TEST_CASE("impossible tracking demands exit as infeasible") {
  const std::string d = make_tmpdir();
  // eps 1e-9 asks for a dc loop gain beyond the search cap
  CHECK(run_cli("synth --method hinf --out " + d +
                " --set weights.eps=1e-9" + kTrim) == 3);
}

TEST_CASE("analyze rejects a controller that leaves the loop unstable") {
  const std::string d = make_tmpdir();
  // a do-nothing controller: one stable state, zero gains everywhere
  json k;
  k["method"] = "hinf";
  k["gamma"] = 1.0;
  k["A"] = {{"rows", 1}, {"cols", 1}, {"data", {-1.0}}};
  k["B"] = {{"rows", 1}, {"cols", 3}, {"data", {0.0, 0.0, 0.0}}};
  k["C"] = {{"rows", 2}, {"cols", 1}, {"data", {0.0, 0.0}}};
  k["D"] = {{"rows", 2}, {"cols", 3}, {"data", {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}}};
  std::ofstream(d + "/zero.json") << k.dump(2) << "\n";
  CHECK(run_cli("analyze --controller " + d + "/zero.json --out " + d + kTrim) == 6);
}

TEST_CASE("diverging simulations are flagged and exit with the abort code") {
  const std::string d = make_tmpdir();
  const int rc = run_cli("simulate --scenario tracking --controller " +
                         hinf_dir() + "/controller.json --out " + d +
                         " --set sim.nonlinear=true");
  CHECK(rc == 5);
  // the finite prefix is retained and the metrics carry the flag
  const std::string csv = slurp(d + "/sim_tracking.csv");
  CHECK(csv.rfind("t,theta1,theta2,theta3,y1,y2,y3,tm1,tm2\n", 0) == 0);
  CHECK(line_count(csv) < 10002);
  CHECK(load(d + "/metrics_tracking.json").at("nonfinite").get<bool>());
}

TEST_CASE("simulation artifacts honor the pinned grid and header") {
  const std::string d = make_tmpdir();
  REQUIRE(run_cli("simulate --scenario tracking --controller " + hinf_dir() +
                  "/controller.json --out " + d +
                  " --set tracking.t_final=2 --set tracking.dt=0.01") == 0);
  const std::string csv = slurp(d + "/sim_tracking.csv");
  CHECK(csv.rfind("t,theta1,theta2,theta3,y1,y2,y3,tm1,tm2\n", 0) == 0);
  CHECK(line_count(csv) == 202);  // header + t_final/dt + 1 samples

  const json m = load(d + "/metrics_tracking.json");
  CHECK(m.at("channels").size() == 3);
  CHECK_FALSE(m.at("nonfinite").get<bool>());
  for (const auto& ch : m.at("channels")) {
    CHECK(ch.contains("overshoot"));
    CHECK(ch.contains("settling_time"));
    CHECK(ch.contains("sse"));
  }
}

TEST_CASE("synthesis artifacts are deterministic to the byte") {
  const std::string d = make_tmpdir();
  REQUIRE(run_cli("synth --method hinf --out " + d + kTrim) == 0);
  CHECK(slurp(d + "/controller.json") == slurp(hinf_dir() + "/controller.json"));
  CHECK(slurp(d + "/report.json") == slurp(hinf_dir() + "/report.json"));

  const json k = load(d + "/controller.json");
  CHECK(k.at("closed_loop_stable").get<bool>());
  CHECK(k.at("method") == "hinf");

  const json rep = load(d + "/report.json");
  const double gamma = rep.at("gamma").get<double>();
  CHECK(gamma > 900.0);
  CHECK(gamma < 1100.0);
  const double feas = rep.at("bracket").at("feasible").get<double>();
  const double infeas = rep.at("bracket").at("infeasible").get<double>();
  CHECK(infeas < feas);
  CHECK((feas - infeas) / feas <= 1e-3 * (1.0 + 1e-9));
  CHECK(rep.at("closed_loop_abscissa").get<double>() < 0.0);
}

TEST_CASE("analyze emits the robustness verdict and ranked corners") {
  const std::string d = make_tmpdir();
  REQUIRE(run_cli("analyze --controller " + hinf_dir() + "/controller.json --out " +
                  d + kTrim) == 0);

  const std::string mu = slurp(d + "/mu.csv");
  CHECK(mu.rfind("# robust: ", 0) == 0);
  CHECK(mu.find("omega,upper,lower\n") != std::string::npos);

  const std::string sigma = slurp(d + "/sigma.csv");
  REQUIRE(sigma.rfind("omega,sigma1", 0) == 0);
  // grid column ascending
  std::istringstream rows(sigma);
  std::string line;
  std::getline(rows, line);
  double prev = -1.0;
  while (std::getline(rows, line)) {
    const double w = std::stod(line.substr(0, line.find(',')));
    CHECK(w > prev);
    prev = w;
  }

  const json wc = load(d + "/worstcase.json");
  CHECK(wc.at("evaluated").get<int>() == 8);
  CHECK_FALSE(wc.at("exhaustive").get<bool>());
  REQUIRE(!wc.at("ranked").empty());
  CHECK(wc.at("nominal").at("stable").get<bool>());
  const auto& top = wc.at("ranked").front();
  // an unstable corner must outrank every stable one; otherwise the top
  // score cannot be beaten by the nominal loop
  if (top.at("stable").get<bool>()) {
    CHECK(top.at("score").get<double>() >=
          wc.at("nominal").at("score").get<double>());
  }
}

TEST_CASE("reproduce assembles the comparison summary deterministically") {
  const std::string a = make_tmpdir();
  const std::string b = make_tmpdir();
  const std::string trim = kTrim + " --set synth.max_iters=1";
  REQUIRE(run_cli("reproduce --out " + a + trim) == 0);
  REQUIRE(run_cli("reproduce --out " + b + trim) == 0);

  const json s = load(a + "/summary.json");
  REQUIRE(s.contains("hinf"));
  REQUIRE(s.contains("dk"));
  CHECK(s.at("hinf").contains("gamma"));
  CHECK(s.at("hinf").contains("mu_peak"));
  CHECK(s.at("hinf").contains("robust"));
  CHECK(s.at("dk").contains("gamma"));

  const json& checks = s.at("soft_checks");
  for (const char* key :
       {"hinf_tracking_all_channels_settle", "hinf_tracking_largest_sse_channel",
        "hinf_disturbance_decays_to_10pct_peak", "dk_tracking_settling_ge_hinf"}) {
    CHECK(checks.contains(key));
  }

  // byte-identical artifact trees, file by file
  for (const char* rel :
       {"/summary.json", "/model.json", "/hinf/controller.json",
        "/hinf/report.json", "/hinf/sim_tracking.csv", "/hinf/sim_disturbance.csv",
        "/hinf/metrics_tracking.json", "/hinf/mu.csv", "/hinf/sigma.csv",
        "/hinf/worstcase.json", "/dk/controller.json", "/dk/sim_tracking.csv"}) {
    CHECK(slurp(a + rel) == slurp(b + rel));
  }
}
