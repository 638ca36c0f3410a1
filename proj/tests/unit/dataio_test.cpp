#include "fids/dataio.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fids/error.hpp"
#include "support/fixtures.hpp"

namespace fids {
namespace {

using fids::testing::read_file;
using fids::testing::TempDir;
using fids::testing::write_file;

const ColumnSchema kTwoFeatures{{"a", "b"}, "Label"};

Dataset labelled(const std::vector<std::size_t>& counts) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < counts.size(); ++c) names.push_back("c" + std::to_string(c));
  Dataset d({{"x"}, "Label"}, LabelMap(names));
  double v = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) d.append(std::vector<double>{v++}, static_cast<ClassId>(c));
  }
  return d;
}

TEST(LoadCsv, DropsNonFiniteAndDuplicateRows) {
  TempDir dir;
  write_file(dir / "flows.csv",
             "a,b,Label\n"
             "1,2,Benign\n"
             "3,Infinity,DoS\n"
             "5,6,Bot\n"
             "7,8,Benign\n"
             "1,2,Benign\n"
             "9,10,Port Scan\n"
             "11,12,Web Attack\n"
             "Infinity,14,DoS\n"
             "15,16,Infiltration\n"
             "17,18,Brute Force\n");
  LoadReport report;
  const auto d = load_csv(dir / "flows.csv", kTwoFeatures, LabelMap::intrusion_classes(), &report);
  EXPECT_EQ(d.rows(), 7U);
  EXPECT_EQ(d.n_classes(), 7U);
  EXPECT_EQ(report.rows_read, 10U);
  EXPECT_EQ(report.nonfinite_dropped, 2U);
  EXPECT_EQ(report.duplicates_dropped, 1U);
  EXPECT_EQ(report.unparseable_dropped, 0U);
}

TEST(LoadCsv, SingleZeroRow) {
  TempDir dir;
  write_file(dir / "one.csv", "a,b,Label\n0,0,Benign\n");
  const auto d = load_csv(dir / "one.csv", kTwoFeatures, LabelMap::intrusion_classes());
  ASSERT_EQ(d.rows(), 1U);
  EXPECT_EQ(d.label(0), 0U);
}

TEST(LoadCsv, LabelAndHeaderMatchingIgnoresCaseAndSpace) {
  TempDir dir;
  write_file(dir / "f.csv", "\xEF\xBB\xBF a , B , label \n1,2, port scan \r\n\"3\",4,DOS\r\n");
  const auto d = load_csv(dir / "f.csv", kTwoFeatures, LabelMap::intrusion_classes());
  ASSERT_EQ(d.rows(), 2U);
  EXPECT_EQ(d.label(0), 5U);
  EXPECT_EQ(d.label(1), 3U);
  EXPECT_EQ(d.at(1, 0), 3.0);
}

TEST(LoadCsv, AutoSelectsNumericColumns) {
  TempDir dir;
  write_file(dir / "f.csv", "id,x,proto,y,Label\nr1,1,tcp,2,Bot\nr2,3,udp,4,DoS\n");
  const auto d = load_csv(dir / "f.csv", {{}, "Label"}, LabelMap::intrusion_classes());
  EXPECT_EQ(d.schema().feature_names, (std::vector<std::string>{"x", "y"}));
}

TEST(LoadCsv, UnknownLabelIsDataError) {
  TempDir dir;
  write_file(dir / "f.csv", "a,b,Label\n1,2,Heartbleed\n");
  EXPECT_THROW(load_csv(dir / "f.csv", kTwoFeatures, LabelMap::intrusion_classes()), DataError);
}

TEST(LoadCsv, MissingColumnIsDataError) {
  TempDir dir;
  write_file(dir / "f.csv", "a,Label\n1,Bot\n");
  EXPECT_THROW(load_csv(dir / "f.csv", kTwoFeatures, LabelMap::intrusion_classes()), DataError);
}

TEST(LoadCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_csv("/nonexistent/flows.csv", kTwoFeatures, LabelMap::intrusion_classes()), IoError);
}

TEST(LoadCsv, ClassCountsOfFullTable) {
  TempDir dir;
  const auto counts = synthetic::intrusion_class_counts();
  const auto labels = LabelMap::intrusion_classes();
  write_csv(synthetic::gaussian_blobs(labels, counts, 4, 5.0, 3), dir / "t1.csv");
  const auto d = load_csv(dir / "t1.csv", {{}, "Label"}, labels);
  EXPECT_EQ(d.rows(), 56607U);
  EXPECT_EQ(d.n_classes(), 7U);
  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"Benign", 22728}, {"Bot", 1966},        {"Brute Force", 2767}, {"DoS", 18984},
      {"Infiltration", 36}, {"Port Scan", 7946}, {"Web Attack", 2180}};
  EXPECT_EQ(class_histogram(d), expected);

  const auto parts = partition(d, 3, 11);
  for (const auto& p : parts) EXPECT_NEAR(static_cast<double>(p.rows()), 18869.0, 1.0);
}

TEST(WriteCsv, RoundTripsExactly) {
  TempDir dir;
  const auto d = fids::testing::blobs(20, 3, 5);
  write_csv(d, dir / "d.csv");
  EXPECT_EQ(load_csv(dir / "d.csv", {{}, "Label"}, d.label_map(), nullptr, false), d);
}

TEST(Partition, DivisibleClassesSplitEvenly) {
  const auto parts = partition(labelled({9, 6}), 3, 1);
  ASSERT_EQ(parts.size(), 3U);
  for (const auto& p : parts) {
    const auto h = class_histogram(p);
    EXPECT_EQ(h[0].second, 3U);
    EXPECT_EQ(h[1].second, 2U);
  }
}

TEST(Partition, DisjointCoverAndBalanced) {
  const auto d = labelled({10, 7, 5, 1});
  const auto parts = partition(d, 3, 42);
  std::multiset<double> seen;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.rows(); ++i) seen.insert(p.at(i, 0));
  }
  std::multiset<double> all;
  for (std::size_t i = 0; i < d.rows(); ++i) all.insert(d.at(i, 0));
  EXPECT_EQ(seen, all);
  for (ClassId c = 0; c < 4; ++c) {
    std::vector<std::size_t> per_part;
    for (const auto& p : parts) per_part.push_back(class_histogram(p)[c].second);
    EXPECT_LE(*std::max_element(per_part.begin(), per_part.end()) -
                  *std::min_element(per_part.begin(), per_part.end()),
              1U);
  }
}

TEST(Partition, Deterministic) {
  const auto d = labelled({13, 8});
  EXPECT_EQ(partition(d, 3, 9), partition(d, 3, 9));
  EXPECT_NE(partition(d, 3, 9), partition(d, 3, 10));
}

TEST(Partition, ZeroPartsIsConfigError) { EXPECT_THROW(partition(labelled({2}), 0, 1), ConfigError); }

TEST(TrainTestSplit, BalancedHundred) {
  const auto s = train_test_split(labelled({50, 50}), 0.8, 3);
  EXPECT_EQ(s.train.rows(), 80U);
  EXPECT_EQ(s.test.rows(), 20U);
  EXPECT_EQ(class_histogram(s.train)[0].second, 40U);
  EXPECT_EQ(class_histogram(s.test)[1].second, 10U);
}

TEST(TrainTestSplit, RoundsHalfUp) {
  const auto s = train_test_split(labelled({3}), 0.5, 3);
  EXPECT_EQ(s.train.rows(), 2U);
  EXPECT_EQ(s.test.rows(), 1U);
}

TEST(TrainTestSplit, SingletonClassGoesToTrain) {
  const auto s = train_test_split(labelled({20, 1}), 0.8, 3);
  EXPECT_EQ(s.singleton_classes, (std::vector<ClassId>{1}));
  EXPECT_EQ(class_histogram(s.train)[1].second, 1U);
  EXPECT_EQ(class_histogram(s.test)[1].second, 0U);
}

TEST(TrainTestSplit, TrainSizeWithinOneOfTarget) {
  for (std::size_t n : {7U, 33U, 101U, 999U}) {
    const auto d = labelled({n, n / 3 + 2, 5});
    const auto s = train_test_split(d, 0.8, n);
    const double target = std::floor(0.8 * static_cast<double>(d.rows()) + 0.5);
    EXPECT_NEAR(static_cast<double>(s.train.rows()), target, 1.0) << n;
    EXPECT_EQ(s.train.rows() + s.test.rows(), d.rows());
  }
}

TEST(ClassHistogram, EmptyDatasetCountsZero) {
  const Dataset d({{"x"}, "Label"}, LabelMap::intrusion_classes());
  for (const auto& [name, count] : class_histogram(d)) EXPECT_EQ(count, 0U) << name;
}

}  // namespace
}  // namespace fids
