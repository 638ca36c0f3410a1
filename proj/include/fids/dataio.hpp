#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fids {

using ClassId = std::uint32_t;

struct ColumnSchema {
  // Empty means "every numeric non-label column" when loading.
  std::vector<std::string> feature_names;
  std::string label_column = "Label";

  void validate() const;
  bool operator==(const ColumnSchema&) const = default;
};

/// Dense class-name <-> id mapping; ids are exactly 0..K-1.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  /// Benign, Bot, Brute Force, DoS, Infiltration, Port Scan, Web Attack.
  static LabelMap intrusion_classes();

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(ClassId id) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// Trimmed, case-insensitive lookup.
  std::optional<ClassId> find(std::string_view name) const;

  bool operator==(const LabelMap&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Row-major feature matrix with one class label per row.
class Dataset {
 public:
  Dataset(ColumnSchema schema, LabelMap label_map);
  Dataset(ColumnSchema schema, LabelMap label_map, std::vector<double> features,
          std::vector<ClassId> labels);

  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t n_features() const noexcept { return schema_.feature_names.size(); }
  std::size_t n_classes() const noexcept { return label_map_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features(), n_features()};
  }
  double at(std::size_t i, std::size_t feature) const { return features_[i * n_features() + feature]; }
  ClassId label(std::size_t i) const { return labels_[i]; }

  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<ClassId>& labels() const noexcept { return labels_; }
  const ColumnSchema& schema() const noexcept { return schema_; }
  const LabelMap& label_map() const noexcept { return label_map_; }

  void append(std::span<const double> row, ClassId label);
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Row indices of each class, in row order.
  std::vector<std::vector<std::size_t>> rows_by_class() const;

  bool operator==(const Dataset&) const = default;

 private:
  ColumnSchema schema_;
  LabelMap label_map_;
  std::vector<double> features_;
  std::vector<ClassId> labels_;
};

/// Concatenates datasets sharing schema and label map.
Dataset concatenate(std::span<const Dataset> parts);

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t nonfinite_dropped = 0;    // NaN, +/-inf, empty cells
  std::size_t unparseable_dropped = 0;  // cells that are not numbers
  std::size_t duplicates_dropped = 0;

  /// `rows_read=`, `rows_nan_dropped=`, `rows_unparseable_dropped=`, `rows_dup_dropped=`.
  std::string to_key_values() const;
};

/// Reads a flow-record CSV, dropping non-finite, unparseable and exact duplicate rows.
///
/// The label column is located by trimmed, case-insensitive header match and
/// label values are resolved through @p label_map the same way. When
/// schema.feature_names is empty every non-label column whose cells are all
/// numeric is selected, in file order. Duplicate removal can be switched off
/// for files this library wrote itself (oversampling may legitimately repeat rows).
Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema,
                 const LabelMap& label_map, LoadReport* report = nullptr, bool drop_duplicates = true);

/// Writes a header row then one row per sample; values are written in the
/// shortest form that parses back to the same double.
void write_csv(const Dataset& data, const std::filesystem::path& path);

/// Stratified split into n_parts disjoint parts.
///
/// Each class's rows are shuffled, dealt out evenly, and its remainder rows go
/// to the currently smallest parts (lowest index first), so per-class counts
/// differ by at most one and part sizes stay balanced.
std::vector<Dataset> partition(const Dataset& data, std::size_t n_parts, std::uint64_t seed);

struct SplitPair {
  Dataset train;
  Dataset test;
  // Classes with a single row; they go to train in full.
  std::vector<ClassId> singleton_classes;
};

/// Stratified split. The train side gets round-half-up(train_fraction * N) rows,
/// apportioned across classes by largest remainder.
SplitPair train_test_split(const Dataset& data, double train_fraction, std::uint64_t seed);

std::vector<std::pair<std::string, std::size_t>> class_histogram(const Dataset& data);

}  // namespace fids
