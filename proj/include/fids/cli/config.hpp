#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fids/dataio.hpp"
#include "fids/federation/simulation.hpp"
#include "fids/smote.hpp"

namespace fids::cli {

/// Every knob the commands read. Populated from a `key = value` file, then
/// overridden by command-line flags of the same name.
struct RunConfig {
  std::filesystem::path dataset_path;
  std::string label_column = "Label";
  std::vector<std::string> classes = LabelMap::intrusion_classes().names();
  std::vector<std::string> features;  // empty: auto-select numeric columns
  std::uint64_t seed = 0;

  std::string smote_targets;  // "Infiltration:20036,Port Scan:20000"
  std::size_t k_neighbors = 5;
  double contamination = 0.05;
  std::size_t n_trees = 100;
  std::size_t subsample_size = 256;

  gbdt::GridSpec grid;
  double train_fraction = 0.8;
  double validation_fraction = 0.25;
  int max_rounds = 3;
  double epsilon = 0.0;

  std::filesystem::path output_dir = ".";
  std::string transport = "inproc";  // inproc | tcp
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::filesystem::path transcript_path;  // empty: no transcript

  /// Sets one field from its textual form; unknown keys are a ConfigError.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  static const std::vector<std::string>& keys();

  LabelMap label_map() const { return LabelMap(classes); }
  ColumnSchema schema() const;
  preprocess::SmoteConfig smote_config(const LabelMap& labels) const;
  federation::RoundConfig round_config() const;
  federation::TransportKind transport_kind() const;
};

/// Applies a `key = value` file (# starts a comment) on top of cfg.
void load_config_file(const std::filesystem::path& path, RunConfig& cfg);

}  // namespace fids::cli
