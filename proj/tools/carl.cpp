// carl — viscous collective-atomic-recoil-lasing simulator.
//
// Subcommands: langevin-run, fp-run, kuramoto-run, pump-ramp, threshold-scan,
// molasses-off, analyze-spectrogram. See README.md for the config schema.

#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "carl/cli.hpp"
#include "carl/config.hpp"
#include "carl/manifest.hpp"
#include "carl/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"viscous CARL simulator"};
  app.set_version_flag("--version", std::string("carl ") + carl::kVersion);
  app.require_subcommand(0, 1);

  std::string config_path;
  carl::CliFlags flags;
  bool emit_derived = false;
  long long seed_arg = -1;

  app.add_option("--config", config_path, "JSON config (or a manifest to re-execute)");
  app.add_flag("--emit-derived", emit_derived,
               "print the derived scales JSON for the config and exit");

  const std::vector<std::string> names = {"langevin-run",   "fp-run",
                                          "kuramoto-run",   "pump-ramp",
                                          "threshold-scan", "molasses-off",
                                          "analyze-spectrogram"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config (or a manifest)");
    sub->add_option("--seed", seed_arg, "override the config seed");
    sub->add_option("--out-dir", flags.out_dir, "output directory (default .)");
    sub->add_option("--solver", flags.solver, "fp | langevin (where applicable)");
    sub->add_option("--threads", flags.threads, "worker cap (default: hardware)");
    sub->add_flag("--svg", flags.svg, "emit SVG quick-look plots");
    if (name == "analyze-spectrogram")
      sub->add_option("--input", flags.input, "trajectory CSV to analyze");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    carl::AppConfig cfg;
    if (!config_path.empty()) cfg = carl::load_and_validate_config(config_path);

    if (emit_derived) {
      const carl::DerivedScales scales = carl::derive_scales(cfg.physical);
      std::printf("%s\n", carl::derived_scales_json(scales).dump(2).c_str());
      return 0;
    }

    const auto subs = app.get_subcommands();
    if (subs.empty()) {
      std::fprintf(stderr, "no subcommand given (try --help)\n");
      return 2;
    }
    if (seed_arg >= 0) {
      flags.seed_set = true;
      flags.seed = static_cast<std::uint64_t>(seed_arg);
    }
    return carl::execute(subs[0]->get_name(), cfg, flags);
  } catch (const carl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
