#pragma once

// Run configuration: one JSON document with optional sections
//   data, seed, out, train, fusion, ablation, model, attribute, visual,
//   synth, align
// Relative paths resolve against the directory of the config file. Unknown
// keys are errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "mcsff/alignment/pipeline.hpp"
#include "mcsff/kg/synth.hpp"
#include "mcsff/kg/validate.hpp"

namespace mcsff::cli {

inline constexpr const char* kConfigEnv = "MCSFF_CONFIG";

struct DataPaths {
  std::filesystem::path triples_s, triples_t;
  std::filesystem::path attrs_s, attrs_t;
  std::filesystem::path visuals_s, visuals_t;
  std::filesystem::path seeds;
  std::filesystem::path name_embeddings;  // empty = hashed trigram fallback

  bool empty() const { return triples_s.empty() && triples_t.empty() && seeds.empty(); }
};

struct RunConfig {
  DataPaths data;
  align::ExperimentConfig experiment;
  kg::SynthConfig synth = kg::easy_preset();
  std::filesystem::path out = "out";
  std::size_t align_k = 10;
};

void set_seed(RunConfig& config, std::uint64_t seed);

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// Full document with every field, paths written as given (relative paths
// stay relative).
nlohmann::json to_json(const RunConfig& config);

kg::SynthConfig synth_preset(const std::string& name);

struct LoadedData {
  align::ExperimentData data;
  kg::ValidationReport report;
};

// Loads the files named in config.data. Missing files are IoErrors; a seed
// that names an unknown entity ends up in the report rather than thrown.
LoadedData load_data(const RunConfig& config);

}  // namespace mcsff::cli
