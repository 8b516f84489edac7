#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sll/run.hpp"
#include "sll/sll.h"

using namespace sll;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({"surface": "sphere", "curvature": "cos_polar", "singularities": [], "N": 1})";

json small_sphere() {
  return json::parse(R"({
    "surface": {"type": "sphere", "nlat": 32, "nlon": 64},
    "curvature": {"family": "cos_polar"},
    "singularities": [],
    "N": 1,
    "search": {"multistarts": 2},
    "landscape": {"n1": 8, "n2": 16},
    "verify": {"delta_sweep": [0.02, 0.01]}
  })");
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal config is valid and fully normalized") {
  auto cfg = parse_config(std::string(kMinimal));
  CHECK(cfg.doc["surface"]["type"] == "sphere");
  CHECK(cfg.doc["surface"]["nlat"] == 128);
  CHECK(cfg.doc["curvature"]["field"]["family"] == "cos_polar");
  CHECK(cfg.doc["search"]["grad_tol"] == 1e-8);
  CHECK(cfg.warnings.empty());
  // echo round trip
  CHECK(parse_config(cfg.doc.dump()) == cfg);
  CHECK(config_hash(parse_config(cfg.doc.dump())) == config_hash(cfg));
}

TEST_CASE("semantic errors") {
  auto low = small_sphere();
  low["singularities"] = json::parse(R"([{"at": [0, 0.5], "alpha": -1.2}])");
  CHECK(code_of([&] { parse_config(low); }) == ErrorCode::SemanticError);
  CHECK_THROWS_WITH(parse_config(low), doctest::Contains("alpha > -1"));

  auto dup = small_sphere();
  dup["singularities"] = json::parse(R"([{"at": [0.3, 0.5], "alpha": 0.5}, {"at": [0.3, 0.5], "alpha": 0.7}])");
  CHECK(code_of([&] { parse_config(dup); }) == ErrorCode::SemanticError);

  auto n0 = small_sphere();
  n0["N"] = 0;
  CHECK(code_of([&] { parse_config(n0); }) == ErrorCode::SemanticError);

  auto expr = small_sphere();
  expr["curvature"] = json::parse(R"({"family": "expression", "expression": "z +* 2"})");
  CHECK(code_of([&] { parse_config(expr); }) == ErrorCode::SemanticError);
}

TEST_CASE("parse errors carry a location") {
  auto unk = small_sphere();
  unk["search"]["modee"] = "max";
  CHECK(code_of([&] { parse_config(unk); }) == ErrorCode::ParseError);
  CHECK_THROWS_WITH(parse_config(unk), doctest::Contains("/search/modee"));
  auto lenient = parse_config(unk, true);
  REQUIRE(lenient.warnings.size() == 1);
  CHECK(lenient.warnings[0].find("/search/modee") != std::string::npos);
  CHECK_FALSE(lenient.doc["search"].contains("modee"));

  auto type = small_sphere();
  type["N"] = "two";
  CHECK_THROWS_WITH(parse_config(type), doctest::Contains("/N"));
  auto nested = small_sphere();
  nested["curvature"] = json::parse(R"({"family": "product", "factors": [{"family": "constant", "valu": 1}]})");
  CHECK_THROWS_WITH(parse_config(nested), doctest::Contains("/curvature/factors/0/valu"));

  CHECK(code_of([] { parse_config(std::string("{\n  \"N\": 1,,\n}")); }) == ErrorCode::ParseError);
  CHECK_THROWS_WITH(parse_config(std::string("{\n  \"N\": 1,,\n}")), doctest::Contains("line 2"));
}

TEST_CASE("analyze reports the hypotheses") {
  auto cfg = parse_config(small_sphere());
  auto out = run_command("analyze", cfg, {.timings = false});
  CHECK(out.exit_code == 0);
  auto rep = json::parse(out.report);
  CHECK(rep["hypotheses"]["h1"] == true);
  CHECK(rep["hypotheses"]["h3"] == true);
  CHECK(rep["hypotheses"]["n_plus"] == 1);
  CHECK(rep["hypotheses"]["components"][0]["contractible"] == true);
  CHECK(rep["config_hash"] == config_hash(cfg));
  CHECK_FALSE(rep.contains("timings"));
  // the echoed config re-parses to the same RunConfig
  CHECK(parse_config(rep["config"]) == cfg);
}

TEST_CASE("landscape CSV contract") {
  auto cfg = parse_config(small_sphere());
  auto out = run_command("landscape", cfg, {.timings = false});
  REQUIRE(out.artifacts.size() == 1);
  CHECK(out.artifacts[0].name == "landscape.csv");
  std::istringstream in(out.artifacts[0].data);
  std::string line;
  std::getline(in, line);
  CHECK(line == "lon,colat,psi,phi,a");
  int rows = 0, nan_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    int commas = 0;
    for (char ch : line) commas += ch == ',';
    CHECK(commas == 4);
    if (line.find("nan") != std::string::npos) ++nan_rows;
  }
  CHECK(rows == 8 * 16);
  CHECK(nan_rows == 4 * 16);  // southern rows lie outside {K > 0}

  auto two = small_sphere();
  two["N"] = 2;
  CHECK(code_of([&] { run_command("landscape", parse_config(two)); }) == ErrorCode::SemanticError);
  two["landscape"]["fixed"] = json::parse("[[0.5, 0.4]]");
  CHECK(run_command("landscape", parse_config(two)).exit_code == 0);
}

TEST_CASE("search then verify") {
  auto cfg = parse_config(small_sphere());
  auto s = run_command("search", cfg, {.timings = false});
  CHECK(s.exit_code == 0);
  auto rs = json::parse(s.report);
  REQUIRE(!rs["critical_points"].empty());
  CHECK(rs["critical_points"][0]["classification"] == "max");
  auto v = run_command("verify", cfg, {.timings = false});
  auto rv = json::parse(v.report);
  CHECK(rv["verify"]["source"] == "search");
  REQUIRE(rv["verify"]["sweep"].size() == 2);
  for (auto& e : rv["verify"]["sweep"]) CHECK(e["total_mass"].get<double>() == doctest::Approx(8 * M_PI));

  auto none = small_sphere();
  none["search"]["max_iters"] = 1;
  none["search"]["grad_tol"] = 1e-15;
  none["search"]["multistarts"] = 0;
  none["curvature"]["axis"] = json::array({0.3, 0.77});  // peak off the sampling grid
  CHECK(run_command("search", parse_config(none)).exit_code == 2);
  CHECK(run_command("verify", parse_config(none)).exit_code == 2);

  CHECK(code_of([&] { run_command("explode", cfg); }) == ErrorCode::InvalidArgument);
  // overrides land in the echoed config
  auto o = json::parse(run_command("search", cfg, {.seed = 9, .tol = 1e-7, .timings = false}).report);
  CHECK(o["config"]["search"]["seed"] == 9);
  CHECK(o["config"]["search"]["grad_tol"] == 1e-7);
}

TEST_CASE("C interface") {
  sll_session* s = nullptr;
  CHECK(sll_session_create("{\"N\": 1", 0, &s) == SLL_PARSE_ERROR);
  CHECK(s == nullptr);
  CHECK(std::string(sll_last_error()).size() > 0);
  CHECK(std::string(sll_status_name(SLL_SEMANTIC_ERROR)) == "SemanticError");
  REQUIRE(sll_session_create(small_sphere().dump().c_str(), 0, &s) == SLL_OK);
  CHECK(std::string(sll_last_error()).empty());
  double psi = 0, phi = 0;
  const double north[2] = {0.0, 0.0};
  CHECK(sll_evaluate(s, north, 1, &psi, &phi) == SLL_OK);
  CHECK(psi == doctest::Approx((2 * std::log(2.0) - 1) / (4 * M_PI)).epsilon(1e-8));
  const double south[2] = {0.0, M_PI};
  CHECK(sll_evaluate(s, south, 1, &psi, &phi) == SLL_OUT_OF_DOMAIN);
  double g = 0;
  CHECK(sll_green(s, north, south, &g) == SLL_OK);
  CHECK(g == doctest::Approx(-std::log(2.0) / (2 * M_PI) + (2 * std::log(2.0) - 1) / (4 * M_PI)));
  CHECK(sll_green(s, north, north, &g) == SLL_COINCIDENT_POINTS);

  sll_result* r = nullptr;
  CHECK(sll_run(s, "search", "{\"bogus\": 1}", &r) == SLL_PARSE_ERROR);
  REQUIRE(sll_run(s, "search", "{\"timings\": false}", &r) == SLL_OK);
  CHECK(sll_result_exit_code(r) == 0);
  REQUIRE(sll_result_artifact_count(r) == 1);
  CHECK(std::string(sll_result_artifact_name(r, 0)) == "critical_points.csv");
  CHECK(sll_result_artifact_name(r, 5) == nullptr);
  auto rep = json::parse(sll_result_report(r));
  CHECK(rep["command"] == "search");
  sll_result_destroy(r);
  sll_session_destroy(s);
  CHECK(std::string(sll_version()) == SLL_VERSION_STRING);
}

TEST_CASE("command-line tool") {
  const fs::path dir = fs::temp_directory_path() / "sll_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << small_sphere().dump();
  std::ofstream(dir / "bad.json") << R"({"surface": "sphere", "curvature": "cos_polar", "N": 1, "extra": 1})";
  const std::string exe = SLL_CLI_PATH;
  auto run = [&](const std::string& args) {
    int rc = std::system((exe + " " + args + " 2>/dev/null").c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run("search --config " + (dir / "cfg.json").string() + " --out " + (dir / "o1").string() + " --no-timings") == 0);
  CHECK(fs::exists(dir / "o1" / "report.json"));
  CHECK(fs::exists(dir / "o1" / "critical_points.csv"));
  CHECK_FALSE(fs::exists(dir / "o1" / "report.json.tmp"));
  CHECK(run("search --config " + (dir / "bad.json").string() + " --out " + (dir / "o2").string()) == 1);
  CHECK(run("search --config " + (dir / "bad.json").string() + " --lenient --out " + (dir / "o2").string()) == 0);
  CHECK(slurp(dir / "o2" / "report.json").find("/extra") != std::string::npos);
  CHECK(run("frobnicate --config " + (dir / "cfg.json").string()) == 1);
  CHECK(run("search --config " + (dir / "missing.json").string()) == 1);
  CHECK(run("landscape --config " + (dir / "cfg.json").string() + " --out " + (dir / "o3").string()) == 0);
  CHECK(slurp(dir / "o3" / "landscape.csv").rfind("lon,colat,psi,phi,a\n", 0) == 0);
  fs::remove_all(dir);
}

}  // TEST_SUITE
