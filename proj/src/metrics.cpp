#include "fids/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fids/error.hpp"

namespace fids::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : k_(n_classes), counts_(n_classes * n_classes, 0) {}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix m(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) throw DataError("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) m.counts_[t * m.k_ + p] = rows[t][p];
  }
  return m;
}

void ConfusionMatrix::add(ClassId truth, ClassId pred, std::uint64_t n) {
  if (truth >= k_ || pred >= k_) throw DataError("class id outside confusion matrix");
  counts_[truth * k_ + pred] += n;
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (std::size_t c = 0; c < k_; ++c) sum += at(c, c);
  return sum;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t sum = 0;
  for (std::size_t p = 0; p < k_; ++p) sum += at(truth, p);
  return sum;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t sum = 0;
  for (std::size_t t = 0; t < k_; ++t) sum += at(t, pred);
  return sum;
}

ConfusionMatrix confusion(std::span<const ClassId> truth, std::span<const ClassId> pred, std::size_t n_classes) {
  if (truth.size() != pred.size()) throw DataError("truth and prediction lengths differ");
  ConfusionMatrix m(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], pred[i]);
  return m;
}

namespace {

void require_nonempty(const ConfusionMatrix& m) {
  if (m.total() == 0) throw DataError("metrics need a non-empty confusion matrix");
}

template <typename Denominator>
double macro_mean(const ConfusionMatrix& m, Denominator denominator, std::vector<ClassId>* undefined) {
  require_nonempty(m);
  double sum = 0.0;
  for (std::size_t c = 0; c < m.n_classes(); ++c) {
    const auto d = denominator(c);
    if (d == 0) {
      if (undefined) undefined->push_back(static_cast<ClassId>(c));
      continue;
    }
    sum += static_cast<double>(m.at(c, c)) / static_cast<double>(d);
  }
  return sum / static_cast<double>(m.n_classes());
}

}  // namespace

double accuracy(const ConfusionMatrix& m) {
  require_nonempty(m);
  return static_cast<double>(m.trace()) / static_cast<double>(m.total());
}

double macro_precision(const ConfusionMatrix& m, std::vector<ClassId>* undefined) {
  return macro_mean(m, [&](std::size_t c) { return m.col_sum(c); }, undefined);
}

double macro_recall(const ConfusionMatrix& m, std::vector<ClassId>* undefined) {
  return macro_mean(m, [&](std::size_t c) { return m.row_sum(c); }, undefined);
}

double cohen_kappa(const ConfusionMatrix& m) {
  require_nonempty(m);
  const double total = static_cast<double>(m.total());
  const double observed = accuracy(m);
  double expected = 0.0;
  for (std::size_t c = 0; c < m.n_classes(); ++c) {
    expected += static_cast<double>(m.row_sum(c)) * static_cast<double>(m.col_sum(c));
  }
  expected /= total * total;
  if (expected >= 1.0) return observed >= 1.0 ? 1.0 : 0.0;
  return (observed - expected) / (1.0 - expected);
}

Summary summarize(const ConfusionMatrix& m) {
  return {accuracy(m), macro_precision(m), macro_recall(m), cohen_kappa(m)};
}

std::string format_percent(double fraction) {
  // Scale to thousandths of a percent and round half up.
  const double scaled = std::floor(fraction * 100000.0 + 0.5 + 1e-9);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", scaled / 1000.0);
  return buf;
}

std::string to_key_values(const Summary& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "accuracy=%.6f\naccuracy_percent=%s\nprecision=%.6f\nrecall=%.6f\nkappa=%.6f\n",
                s.accuracy, format_percent(s.accuracy).c_str(), s.precision, s.recall, s.kappa);
  return buf;
}

std::string format_matrix(const ConfusionMatrix& m) {
  std::ostringstream out;
  out << "truth\\pred";
  for (std::size_t p = 0; p < m.n_classes(); ++p) out << '\t' << p;
  out << '\n';
  for (std::size_t t = 0; t < m.n_classes(); ++t) {
    out << t;
    for (std::size_t p = 0; p < m.n_classes(); ++p) out << '\t' << m.at(t, p);
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix parse_matrix(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("matrix text is empty");
  std::vector<std::vector<std::uint64_t>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream cells(line);
    std::uint64_t truth_label;
    if (!(cells >> truth_label) || truth_label != rows.size()) throw DataError("matrix rows out of order");
    std::vector<std::uint64_t> row;
    std::uint64_t v;
    while (cells >> v) row.push_back(v);
    if (!cells.eof()) throw DataError("matrix cell is not a count");
    rows.push_back(std::move(row));
  }
  return ConfusionMatrix::from_rows(rows);
}

}  // namespace fids::metrics
