#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fids/dataio.hpp"

namespace fids::metrics {

/// K x K counts; rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0);
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);

  std::size_t n_classes() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
  void add(ClassId truth, ClassId pred, std::uint64_t n = 1);

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t pred) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const ClassId> truth, std::span<const ClassId> pred, std::size_t n_classes);

double accuracy(const ConfusionMatrix& m);
/// Unweighted per-class mean of diag / column sum. Classes with an empty
/// column score 0 and are appended to `undefined` when given.
double macro_precision(const ConfusionMatrix& m, std::vector<ClassId>* undefined = nullptr);
/// Unweighted per-class mean of diag / row sum.
double macro_recall(const ConfusionMatrix& m, std::vector<ClassId>* undefined = nullptr);
/// (p_o - p_e) / (1 - p_e); 1 when both agreement terms are 1.
double cohen_kappa(const ConfusionMatrix& m);

struct Summary {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double kappa = 0.0;
};

Summary summarize(const ConfusionMatrix& m);

/// Percentage rounded half up to three decimals, e.g. 0.9659442 -> "96.594".
std::string format_percent(double fraction);
std::string to_key_values(const Summary& s);

/// Tab-separated matrix with a class-id header row; parse_matrix reads it back.
std::string format_matrix(const ConfusionMatrix& m);
ConfusionMatrix parse_matrix(std::string_view text);

}  // namespace fids::metrics
