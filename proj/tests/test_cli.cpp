#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qspline/run.hpp"

using namespace qspline;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = QSPLINE_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qspline_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + QSPLINE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Captured {
  int code;
  std::string out, err;
};

Captured run_in_process(const RunConfig& c) {
  std::ostringstream out, err;
  const int code = run(c, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::ordered_json summary(const fs::path& dir) { return nlohmann::ordered_json::parse(slurp(dir / "summary.json")); }

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

const char* kQutrit = R"({
  "n": 2,
  "psi0": [[1, 0], [0, 0], [0, 0]],
  "targets": [
    {"time": 1.0, "state": [[0.6, 0], [0, 0.8], [0, 0]]},
    {"time": 2.0, "state": [[0, 0], [0.6, 0], [0, 0.8]]}
  ],
  "sigma": 0.3,
  "steps": 20
})";

}  // namespace

TEST_CASE("fig1 fixture: exit 0 and the five output files") {
  const fs::path dir = scratch("fig1");
  CHECK(cli("--config \"" + (kFixtures / "fig1.json").string() + "\" --out-dir \"" + dir.string() + "\"",
            dir / "log.txt") == 0);
  for (const char* f : {"trajectory.csv", "hamiltonian.csv", "cost_history.csv", "validation.json", "summary.json"})
    CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / "coherent_trajectory.csv"));
  CHECK(slurp(dir / "log.txt").find("converged cost") != std::string::npos);

  const auto s = summary(dir);
  CHECK(s["result"]["status"] == "converged");
  CHECK(s["result"]["grad_norm"].get<double>() < 1e-8);
  CHECK(s["result"]["terminal_m"].get<double>() < 1e-6);
  CHECK(s["files"].size() == 5);
  CHECK(line_count(dir / "trajectory.csv") == 302);
  CHECK(slurp(dir / "trajectory.csv").rfind("mu,t,psi0_re,psi0_im,psi1_re,psi1_im,bloch_x,bloch_y,bloch_z\n", 0) == 0);
  CHECK(slurp(dir / "hamiltonian.csv").find("omega,axis_x,axis_y,axis_z,degenerate") != std::string::npos);
  const auto v = nlohmann::json::parse(slurp(dir / "validation.json"));
  CHECK(v["lemma"].get<double>() < 1e-6);
  CHECK_FALSE(v.contains("refinement"));
}

TEST_CASE("identical runs are byte-identical") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    RunConfig c;
    c.config = kFixtures / "qutrit.json";
    c.out_dir = dir;
    c.coherent_k = 2;
    REQUIRE(run_in_process(c).code == kExitConverged);
  }
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 6);
}

TEST_CASE("coherent output") {
  const fs::path dir = scratch("coherent");
  RunConfig c;
  c.config = kFixtures / "qutrit.json";
  c.out_dir = dir;
  c.coherent_k = 3;
  REQUIRE(run_in_process(c).code == kExitConverged);
  const auto s = summary(dir);
  CHECK(s["coherent"]["k"] == 3);
  CHECK(s["coherent"]["dimension"] == 10);
  CHECK(s["coherent"]["lifted_propagation_deviation"].get<double>() < 1e-12);
  const std::string header = slurp(dir / "coherent_trajectory.csv").substr(0, 60);
  CHECK(header.rfind("mu,t,occ_3_0_0_re,occ_3_0_0_im,occ_2_1_0_re", 0) == 0);
}

TEST_CASE("a target time off the grid is reported by name") {
  const fs::path dir = scratch("misaligned");
  std::string text = kQutrit;
  text.replace(text.find("\"time\": 1.0"), 11, "\"time\": 1.05");
  spit(dir / "p.json", text);
  RunConfig c;
  c.config = dir / "p.json";
  c.out_dir = dir / "out";
  const auto r = run_in_process(c);
  CHECK(r.code == kExitError);
  CHECK(r.err.find("t=1.05") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "summary.json"));
}

TEST_CASE("an unnormalized psi0 is renormalized and flagged") {
  const fs::path dir = scratch("norm");
  std::string text = kQutrit;
  text.replace(text.find("[[1, 0], [0, 0], [0, 0]]"), 24, "[[2, 0], [0, 0], [0, 0]]");
  spit(dir / "p.json", text);
  RunConfig c;
  c.config = dir / "p.json";
  c.out_dir = dir;
  const auto r = run_in_process(c);
  CHECK(r.code == kExitConverged);
  CHECK(r.out.find("psi0 renormalized from norm 2") != std::string::npos);
  const auto s = summary(dir);
  CHECK(s["psi0_renormalized"] == true);
  CHECK(s["psi0_input_norm"].get<double>() == 2.0);
  CHECK(s["problem"]["psi0"][0][0].get<double>() == 1.0);
}

TEST_CASE("bad invocations exit with 1") {
  const fs::path dir = scratch("bad");
  CHECK(cli("--config \"" + (dir / "missing.json").string() + "\"", dir / "log1.txt") == 1);
  CHECK(cli("--out-dir x", dir / "log2.txt") == 1);
  CHECK(cli("--config \"" + (kFixtures / "qutrit.json").string() + "\" --sigma -1", dir / "log3.txt") == 1);

  RunConfig c;
  c.config = dir / "missing.json";
  const auto r = run_in_process(c);
  CHECK(r.code == kExitError);
  CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("iteration cap: exit 2 with partial histories") {
  const fs::path dir = scratch("cap");
  RunConfig c;
  c.config = kFixtures / "qutrit.json";
  c.out_dir = dir;
  c.max_iters = 1;
  const auto r = run_in_process(c);
  CHECK(r.code == kExitNotConverged);
  CHECK(line_count(dir / "cost_history.csv") == 3);
  const auto s = summary(dir);
  CHECK(s["result"]["status"] == "not_converged");
  CHECK(s["result"]["iterations"] == 1);
  CHECK(s["result"]["converged"] == false);
}

TEST_CASE("the resolved problem in summary.json reloads to the same run") {
  const fs::path dir = scratch("roundtrip");
  RunConfig c;
  c.config = kFixtures / "qutrit.json";
  c.out_dir = dir / "a";
  REQUIRE(run_in_process(c).code == kExitConverged);
  const auto s = summary(dir / "a");
  spit(dir / "resolved.json", s["problem"].dump(2));

  const ProblemFile reloaded = load_problem(dir / "resolved.json");
  CHECK(reloaded.h0.has_value());
  // H0 is written out explicitly; states are renormalized on load, which
  // may move the last digit.
  const auto again_text = nlohmann::ordered_json::parse(format_problem(reloaded, reloaded.spec()));
  CHECK(again_text["H0"] == s["problem"]["H0"]);
  CHECK(again_text["descent"] == s["problem"]["descent"]);
  for (std::size_t j = 0; j < reloaded.targets.size(); ++j) {
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < 2; ++c)
        CHECK(again_text["targets"][j]["state"][k][c].get<double>() ==
              doctest::Approx(s["problem"]["targets"][j]["state"][k][c].get<double>()).epsilon(1e-15));
  }

  c.config = dir / "resolved.json";
  c.out_dir = dir / "b";
  REQUIRE(run_in_process(c).code == kExitConverged);
  // Inputs went through double once, so agreement is to optimizer accuracy.
  const auto again = summary(dir / "b");
  CHECK(again["result"]["cost"].get<double>() == doctest::Approx(s["result"]["cost"].get<double>()).epsilon(1e-12));
  CHECK(again["result"]["iterations"].get<int>() == doctest::Approx(s["result"]["iterations"].get<int>()).epsilon(0.1));
}

TEST_CASE("problem file errors") {
  SUBCASE("syntax errors carry the line") {
    try {
      parse_problem("{\n  \"n\": 1,\n  \"psi0\": [[1, 0] [0, 0]]\n}");
      FAIL("expected ProblemFileError");
    } catch (const ProblemFileError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("schema violations name the field") {
    auto message = [](const std::string& text) {
      try {
        parse_problem(text);
      } catch (const ProblemFileError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    std::string t = kQutrit;
    CHECK(message(t.substr(0, t.size() - 1) + ", \"extra\": 1}").find("extra: unknown key") != std::string::npos);
    CHECK(message(t.substr(0, t.size() - 1) + ", \"descent\": {\"direction\": \"bfgs\"}}").find("descent.direction") !=
          std::string::npos);
    CHECK(message(R"({"n": 1, "psi0": [[1, 0]], "targets": [], "sigma": 1, "steps": 1})").find("psi0") !=
          std::string::npos);
    CHECK(message(R"({"n": 1, "psi0": [[0, 0], [0, 0]], "targets": [], "sigma": 1, "steps": 1})").find("psi0") !=
          std::string::npos);
  }
}
