#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "carl/errors.hpp"
#include "carl/units.hpp"
#include "carl/version.hpp"

// Run manifest: the single record that makes every output reproducible.
// It holds the fully resolved config, the seed, a derived-scales echo and a
// content hash per output file. No timestamps or host data: re-running a
// manifest must regenerate byte-identical files.

namespace carl {

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot hash missing file: " + path);
  char buf[1 << 16];
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::size_t total = 0;
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    h = fnv1a64(buf, static_cast<std::size_t>(got), h);
    total += static_cast<std::size_t>(got);
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  (void)total;
  return hex;
}

inline nlohmann::json derived_scales_json(const DerivedScales& s) {
  nlohmann::json j;
  j["k_per_m"] = s.k;
  j["epsilon_rad_per_s"] = s.epsilon;
  j["sigma_per_s"] = s.sigma;
  if (s.has_diffusion)
    j["diffusion_D_per_s"] = s.diffusion_D;
  else
    j["diffusion_D_per_s"] = nullptr;  // undefined at gamma_fr = 0
  j["u0_rad_per_s"] = s.u0;
  j["alpha_plus"] = s.alpha_plus;
  j["alpha_plus_sq"] = s.alpha_plus * s.alpha_plus;
  j["rho"] = s.rho;
  j["omega_rad_per_s"] = s.omega;
  j["watts_per_photon"] = s.watts_per_photon;
  return j;
}

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  nlohmann::json derived_scales;
  std::vector<std::string> outputs;  // basenames, in creation order
  std::vector<std::string> warnings;

  nlohmann::json to_json(const std::string& dir, bool with_hashes) const {
    nlohmann::json j;
    j["artifact"] = {{"name", "carl"}, {"version", kVersion}};
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["derived_scales"] = derived_scales;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& name : outputs) {
      nlohmann::json o;
      o["file"] = name;
      if (with_hashes) o["fnv1a64"] = hash_file(dir + "/" + name);
      outs.push_back(o);
    }
    j["outputs"] = outs;
    j["warnings"] = warnings;
    return j;
  }
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw ConfigError("cannot open for writing: " + path);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

// Written twice per run: first without hashes (before any data file exists),
// then finalized with the output inventory.
inline void write_manifest(const std::string& dir, const RunManifest& m, bool with_hashes) {
  write_text_file(dir + "/manifest.json", m.to_json(dir, with_hashes).dump(2) + "\n");
}

}  // namespace carl
