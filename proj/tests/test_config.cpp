#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "carl/cli.hpp"
#include "carl/config.hpp"

using namespace carl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("carl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << body;
  return p.string();
}

}  // namespace

TEST_CASE("minimal config resolves to the apparatus defaults") {
  const fs::path dir = scratch_dir("minimal");
  const AppConfig cfg = load_and_validate_config(write_config(dir, "{}"));
  CHECK(cfg.physical.wavelength_m == 795e-9);
  CHECK(cfg.physical.fsr_Hz == 3.5e9);
  CHECK_THAT(cfg.physical.kappa, Catch::Matchers::WithinRel(constants::two_pi * 22e3, 1e-12));
  const DerivedScales s = derive_scales(cfg.physical);
  CHECK(s.alpha_plus > 0.0);
  CHECK_FALSE(derived_scales_json(s).empty());
}

TEST_CASE("invariant violations are reported with the offending key") {
  const fs::path dir = scratch_dir("badtemp");
  const std::string path =
      write_config(dir, R"({"physical": {"temperature_K": -1.0}})");
  try {
    load_and_validate_config(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("temperature_K") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected with a nearest-key suggestion") {
  const fs::path dir = scratch_dir("typo");
  const std::string path =
      write_config(dir, R"({"physical": {"gama_fr_per_s": 5.5e5}})");
  try {
    load_and_validate_config(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("gama_fr_per_s") != std::string::npos);
    CHECK(msg.find("gamma_fr_per_s") != std::string::npos);
  }

  const std::string path2 = write_config(dir, R"({"runn": {}})");
  CHECK_THROWS_AS(load_and_validate_config(path2), ConfigError);
}

TEST_CASE("config echo round-trips through the parser") {
  AppConfig cfg;
  cfg.physical.temperature_K = 123e-6;
  cfg.run.seed = 999;
  cfg.fp.truncation_M = 32;
  cfg.scan.values = {1.0, 2.0};
  const nlohmann::json echo = config_to_json(cfg);
  const AppConfig back = parse_config_json(echo);
  CHECK(config_to_json(back) == echo);
}

TEST_CASE("a manifest is accepted wherever a config is") {
  const fs::path dir = scratch_dir("manifest_cfg");
  AppConfig cfg;
  cfg.run.seed = 4242;
  nlohmann::json m;
  m["artifact"] = {{"name", "carl"}, {"version", kVersion}};
  m["config"] = config_to_json(cfg);
  const fs::path p = dir / "manifest.json";
  std::ofstream(p) << m.dump(2);
  const AppConfig parsed = load_and_validate_config(p.string());
  CHECK(parsed.run.seed == 4242);
}

TEST_CASE("missing config file gives a config error") {
  CHECK_THROWS_AS(load_and_validate_config("/nonexistent/nope.json"), ConfigError);
}

TEST_CASE("execute maps errors to exit codes") {
  const fs::path dir = scratch_dir("exitcodes");

  SECTION("empty scan axis -> exit 2") {
    AppConfig cfg;
    cfg.scan.values = {};
    CliFlags flags;
    flags.out_dir = (dir / "scan").string();
    CHECK(execute("threshold-scan", cfg, flags) == 2);
  }
  SECTION("unknown subcommand -> exit 2") {
    AppConfig cfg;
    CliFlags flags;
    flags.out_dir = (dir / "x").string();
    CHECK(execute("frobnicate", cfg, flags) == 2);
  }
}
