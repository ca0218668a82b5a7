#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "kerrlab/cli.hpp"

using namespace kerrlab::cli;
namespace fsys = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result kerrlab_run(std::vector<std::string> args) {
  args.insert(args.begin(), "kerrlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fsys::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct TempDir {
  fsys::path path;
  explicit TempDir(const std::string& name) : path(fsys::temp_directory_path() / name) {
    fsys::remove_all(path);
    fsys::create_directories(path);
  }
  ~TempDir() { fsys::remove_all(path); }
  std::string file(const std::string& name, const std::string& body) const {
    std::ofstream(path / name) << body;
    return (path / name).string();
  }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string error_field(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("cli config: defaults, round trip, strictness") {
  const auto c = parse_config(json{{"schema_version", 1}});
  CHECK(c.M == 1.0);
  CHECK(c.a == 0.0);
  CHECK(c.grid.n_r == 512);
  CHECK(!c.C_lower);

  json j = json::parse(R"({"schema_version": 1, "geometry": {"a": 0.07},
    "grid": {"n_r": 300, "rstar_min": -40},
    "initial_data": {"type": "mixed", "components": [
      {"type": "coulomb", "q": [0.5, -0.25]},
      {"type": "pulse", "field": "maxwell", "ell": 2, "center": 15}]},
    "T": 12.5, "verify": {"C_lower": 0.3},
    "scan": {"parameter": "a", "values": [0, 0.05]}})");
  const auto c2 = parse_config(j);
  CHECK(c2.a == 0.07);
  CHECK(c2.grid.rstar_min == -40.0);
  REQUIRE(c2.initial.components.size() == 2);
  CHECK(c2.initial.components[0].q_im == -0.25);
  CHECK(c2.C_lower == 0.3);
  CHECK(has_maxwell(c2.initial));
  // to_json is a fixed point of parse_config
  CHECK(dump(to_json(parse_config(to_json(c2)))) == dump(to_json(c2)));

  CHECK(error_field(json{{"geometry", {{"a", 0.0}}}}) == "/schema_version");
  CHECK(error_field(json{{"schema_version", 2}}) == "/schema_version");
  CHECK(error_field(json{{"schema_version", 1}, {"grid", {{"nr", 10}}}}) == "/grid/nr");
  CHECK(error_field(json{{"schema_version", 1}, {"T", "long"}}) == "/T");
  CHECK(error_field(json{{"schema_version", 1}, {"initial_data", {{"type", "plane"}}}}) == "/initial_data/type");
  CHECK(error_field(json{{"schema_version", 1}, {"grid", {{"cfl", 1.5}}}}) == "/grid/cfl");

  auto big = c;
  big.a = 0.3;
  try {
    validate(big);
    FAIL("large a accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "/geometry/a");
  }
  big.allow_large_a = true;
  CHECK_NOTHROW(validate(big));
}

TEST_CASE("cli config: syntax errors carry a position") {
  TempDir d("kerrlab_cli_syntax");
  const auto p = d.file("bad.json", "{\"schema_version\": 1,\n  \"T\": }\n");
  try {
    load_config(p);
    FAIL("parsed");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(d.sub("missing.json")), ConfigError);
}

TEST_CASE("cli formatting: 17 digits, non-finite as null") {
  CHECK(fmt(0.1) == "0.10000000000000001");
  CHECK(fmt(-2.0) == "-2");
  CHECK(fmt(std::nan("")) == "nan");
  CHECK(json::parse(dump(json{{"x", 1.0 / 3.0}})).at("x").get<double>() == 1.0 / 3.0);
  CHECK(dump(json{{"x", INFINITY}}, -1) == "{\"x\":null}");
}

TEST_CASE("cli grids: refinement nests, widening keeps h") {
  kerrlab::evolution::GridSpec g;
  g.rstar_min = -30.0;
  g.rstar_max = 70.0;
  g.n_r = 101;
  const auto r = refined(g, 2);
  CHECK(r.n_r == 401);
  const auto w = widened(g, 10.0);
  CHECK(w.rstar_min == -40.0);
  CHECK(w.rstar_max == 80.0);
  CHECK((w.rstar_max - w.rstar_min) / (w.n_r - 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cli exit codes") {
  TempDir d("kerrlab_cli_codes");
  CHECK(kerrlab_run({}).code == kUsage);
  CHECK(kerrlab_run({"no-such-command"}).code == kUsage);
  CHECK(kerrlab_run({"verify-hardy", "--n", "3"}).code == kUsage);
  CHECK(kerrlab_run({"verify-hardy", "--config", d.sub("missing.json")}).code == kConfig);
  const auto big = kerrlab_run({"verify-hardy", "--a", "0.5", "--out", d.sub("h")});
  CHECK(big.code == kConfig);
  CHECK(big.err.find("/geometry/a") != std::string::npos);
  const auto zero = d.file("zero.json", R"({"schema_version": 1, "grid": {"n_r": 64}, "initial_data": {"type": "zero"}, "T": 2})");
  const auto fi = d.file("fi.json", R"({"schema_version": 1, "grid": {"n_r": 64}, "initial_data": {"type": "pulse", "field": "fi"}, "T": 2})");
  CHECK(kerrlab_run({"evolve-maxwell", "--config", fi, "--out", d.sub("m")}).code == kConfig);
  CHECK(kerrlab_run({"charge-decompose", "--config", zero, "--snapshot", d.sub("none/x"), "--out", d.sub("c")}).code ==
        kIO);
  CHECK(kerrlab_run({"verify-hardy", "--weaken", "0.1", "--out", d.sub("w")}).code == kFail);
}

TEST_CASE("cli verify-hardy: report matches the closed form") {
  TempDir d("kerrlab_cli_hardy");
  const auto r = kerrlab_run({"verify-hardy", "--n", "1024", "--out", d.sub("h")});
  REQUIRE(r.code == kPass);
  CHECK(r.out.rfind("verify-hardy: PASS", 0) == 0);
  const auto rep = json::parse(slurp(d.path / "h" / "report.json"));
  const auto& h = rep.at("hypergeometric");
  CHECK(h.at("alpha").get<double>() == doctest::Approx(0.5 + 1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(h.at("b").get<double>() ==
        doctest::Approx(0.5 - std::sqrt(22.0) / 2.0 + 7.0 * std::sqrt(3.0) / 6.0).epsilon(1e-12));
  CHECK(h.at("conditions_hold").get<bool>());
}

TEST_CASE("cli evolve-fi: zero data, repeatable output") {
  TempDir d("kerrlab_cli_fi");
  const auto zero = d.file("zero.json", R"({"schema_version": 1, "grid": {"n_r": 64}, "initial_data": {"type": "zero"}, "T": 3})");
  REQUIRE(kerrlab_run({"evolve-fi", "--config", zero, "--out", d.sub("z")}).code == kPass);
  std::istringstream csv(slurp(d.path / "z" / "series.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("t,E_FI,", 0) == 0);
  int rows = 0;
  bool zeros = true;
  double t = -1.0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    t = std::stod(cell);
    while (std::getline(row, cell, ',')) zeros = zeros && std::stod(cell) == 0.0;
  }
  CHECK(rows >= 4);
  CHECK(t == 3.0);
  CHECK(zeros);

  const auto pulse = d.file("pulse.json", R"({"schema_version": 1, "geometry": {"a": 0.05},
    "grid": {"n_r": 96, "rstar_min": -20, "rstar_max": 40},
    "initial_data": {"type": "pulse", "field": "fi", "center": 10}, "T": 4})");
  REQUIRE(kerrlab_run({"evolve-fi", "--config", pulse, "--out", d.sub("p1")}).code == kPass);
  REQUIRE(kerrlab_run({"evolve-fi", "--config", pulse, "--out", d.sub("p2")}).code == kPass);
  CHECK(slurp(d.path / "p1" / "series.csv") == slurp(d.path / "p2" / "series.csv"));
  const auto r1 = json::parse(slurp(d.path / "p1" / "report.json"));
  CHECK(r1.at("results").at("E_FI_0").get<double>() > 0.0);
}

TEST_CASE("cli scan: parallel workers match serial") {
  TempDir d("kerrlab_cli_scan");
  const auto cfg = d.file("scan.json", R"({"schema_version": 1, "grid": {"n_r": 64, "rstar_min": -15, "rstar_max": 30},
    "initial_data": {"type": "pulse", "field": "fi", "center": 8}, "T": 2,
    "scan": {"parameter": "a", "values": [0, 0.03, 0.06]}})");
  const auto serial = kerrlab_run({"evolve-fi", "--config", cfg, "--out", d.sub("s"), "--jobs", "1"});
  const auto par = kerrlab_run({"evolve-fi", "--config", cfg, "--out", d.sub("p"), "--jobs", "3"});
  REQUIRE(serial.code == kPass);
  REQUIRE(par.code == kPass);
  CHECK(serial.out == par.out);
  for (int k = 0; k < 3; ++k) {
    const auto name = "a_" + std::to_string(k);
    CHECK(slurp(d.path / "s" / name / "series.csv") == slurp(d.path / "p" / name / "series.csv"));
  }
}

TEST_CASE("cli convergence: fourth-order scheme shows order above 2") {
  TempDir d("kerrlab_cli_conv");
  const auto r = kerrlab_run({"convergence", "--system", "fi", "--a", "0", "--out", d.sub("c")});
  CHECK(r.code == kPass);
  const auto rep = json::parse(slurp(d.path / "c" / "report.json"));
  CHECK(rep.at("order").get<double>() >= 2.0);
}

TEST_CASE("cli charge-decompose: Coulomb initial data") {
  TempDir d("kerrlab_cli_charge");
  const auto cfg = d.file("q.json", R"({"schema_version": 1, "geometry": {"a": 0.05}, "grid": {"n_theta_maxwell": 12},
    "initial_data": {"type": "coulomb", "q": [0.3, 0.1]}})");
  const auto r = kerrlab_run({"charge-decompose", "--config", cfg, "--out", d.sub("c")});
  REQUIRE(r.code == kPass);
  const auto rep = json::parse(slurp(d.path / "c" / "report.json"));
  const auto q = rep.at("results").at("q");
  CHECK(q.at(0).get<double>() == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(q.at(1).get<double>() == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(fsys::exists(d.path / "c" / "charge_free.json"));
}
