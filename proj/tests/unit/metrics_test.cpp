#include "fids/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

#include "fids/error.hpp"

#include "support/fixtures.hpp"

namespace fids::metrics {
namespace {

using fids::testing::edge1_matrix;
using fids::testing::edge2_matrix;
using fids::testing::server_matrix;

// Straight-line reimplementation used as an oracle.
struct Oracle {
  double accuracy, precision, recall, kappa;
};

Oracle oracle(const std::vector<std::vector<double>>& m) {
  const std::size_t k = m.size();
  double n = 0, diag = 0;
  std::vector<double> row(k, 0), col(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      n += m[i][j];
      row[i] += m[i][j];
      col[j] += m[i][j];
    }
    diag += m[i][i];
  }
  double p = 0, r = 0, pe = 0;
  for (std::size_t i = 0; i < k; ++i) {
    p += col[i] > 0 ? m[i][i] / col[i] : 0;
    r += row[i] > 0 ? m[i][i] / row[i] : 0;
    pe += row[i] * col[i] / (n * n);
  }
  return {diag / n, p / k, r / k, (diag / n - pe) / (1 - pe)};
}

std::vector<std::vector<double>> as_rows(const ConfusionMatrix& m) {
  std::vector<std::vector<double>> out(m.n_classes(), std::vector<double>(m.n_classes()));
  for (std::size_t i = 0; i < m.n_classes(); ++i)
    for (std::size_t j = 0; j < m.n_classes(); ++j) out[i][j] = static_cast<double>(m.at(i, j));
  return out;
}

TEST(Confusion, DiagonalForPerfectPredictions) {
  const std::vector<ClassId> t{0, 1, 2};
  const auto m = confusion(t, t, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m.at(i, j), i == j ? 1U : 0U);
  }
}

TEST(Confusion, OffDiagonalCount) {
  const std::vector<ClassId> t{0, 0};
  const std::vector<ClassId> p{1, 1};
  EXPECT_EQ(confusion(t, p, 2).at(0, 1), 2U);
}

TEST(Confusion, MatchesTallyOnRandomLabels) {
  std::mt19937 gen(7);
  std::uniform_int_distribution<ClassId> d(0, 6);
  std::vector<ClassId> t(2000), p(2000);
  for (auto& v : t) v = d(gen);
  for (auto& v : p) v = d(gen);
  const auto m = confusion(t, p, 7);
  for (ClassId i = 0; i < 7; ++i) {
    for (ClassId j = 0; j < 7; ++j) {
      std::uint64_t tally = 0;
      for (std::size_t r = 0; r < t.size(); ++r) tally += (t[r] == i && p[r] == j);
      EXPECT_EQ(m.at(i, j), tally);
    }
  }
}

TEST(Confusion, RejectsOutOfRangeLabels) {
  const std::vector<ClassId> t{0, 3};
  EXPECT_THROW(confusion(t, t, 3), DataError);
}

TEST(Metrics, Edge2MatrixReproducesPublishedFigures) {
  const auto m = edge2_matrix();
  EXPECT_EQ(m.total(), 4199U);
  EXPECT_EQ(m.trace(), 4056U);
  EXPECT_EQ(format_percent(accuracy(m)), "96.594");
  EXPECT_NEAR(macro_precision(m), 0.9689, 5e-4);
  EXPECT_NEAR(macro_recall(m), 0.9689, 5e-4);
  EXPECT_NEAR(cohen_kappa(m), 0.9600, 5e-4);
}

TEST(Metrics, Edge1MatrixReproducesPublishedFigures) {
  const auto m = edge1_matrix();
  EXPECT_EQ(m.total(), 17151U);
  EXPECT_EQ(m.trace(), 16508U);
  EXPECT_EQ(format_percent(accuracy(m)), "96.251");
  EXPECT_NEAR(macro_precision(m), 0.9654, 1e-3);
  EXPECT_NEAR(cohen_kappa(m), 0.956, 1e-3);
}

// The quoted server accuracy of 95.999% does not follow from its matrix; bind to the matrix.
TEST(Metrics, ServerMatrixUsesMatrixDerivedAccuracy) {
  const auto m = server_matrix();
  EXPECT_EQ(m.total(), 4209U);
  EXPECT_EQ(m.trace(), 4031U);
  EXPECT_EQ(format_percent(accuracy(m)), "95.771");
}

TEST(Metrics, AgreeWithOracleOnPublishedMatrices) {
  for (const auto& m : {edge1_matrix(), edge2_matrix(), server_matrix()}) {
    const auto o = oracle(as_rows(m));
    EXPECT_NEAR(accuracy(m), o.accuracy, 1e-12);
    EXPECT_NEAR(macro_precision(m), o.precision, 1e-12);
    EXPECT_NEAR(macro_recall(m), o.recall, 1e-12);
    EXPECT_NEAR(cohen_kappa(m), o.kappa, 1e-12);
  }
}

TEST(Metrics, IdentityMatrixScoresOne) {
  ConfusionMatrix m(4);
  for (ClassId c = 0; c < 4; ++c) m.add(c, c, 10);
  EXPECT_DOUBLE_EQ(accuracy(m), 1.0);
  EXPECT_DOUBLE_EQ(macro_precision(m), 1.0);
  EXPECT_DOUBLE_EQ(macro_recall(m), 1.0);
  EXPECT_DOUBLE_EQ(cohen_kappa(m), 1.0);
}

TEST(Metrics, UndefinedClassesAreReported) {
  ConfusionMatrix m(3);
  m.add(0, 0, 5);
  m.add(1, 0, 5);
  std::vector<ClassId> no_pred, no_truth;
  macro_precision(m, &no_pred);
  macro_recall(m, &no_truth);
  EXPECT_EQ(no_pred, (std::vector<ClassId>{1, 2}));
  EXPECT_EQ(no_truth, (std::vector<ClassId>{2}));
}

TEST(Metrics, EmptyMatrixIsAnError) {
  EXPECT_THROW(accuracy(ConfusionMatrix(3)), DataError);
}

TEST(Metrics, PrintedMatrixRoundTrips) {
  const auto m = edge1_matrix();
  const auto back = parse_matrix(format_matrix(m));
  EXPECT_EQ(back, m);
  EXPECT_EQ(summarize(back).kappa, summarize(m).kappa);
}

TEST(Metrics, FormatPercentRoundsHalfUp) {
  EXPECT_EQ(format_percent(0.5), "50.000");
  EXPECT_EQ(format_percent(1.0), "100.000");
  EXPECT_EQ(format_percent(0.0), "0.000");
}

}  // namespace
}  // namespace fids::metrics
