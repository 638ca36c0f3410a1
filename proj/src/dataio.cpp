#include "fids/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fids/error.hpp"
#include "fids/rng.hpp"

namespace fids {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

// RFC 4180 style records: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) i = 3;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    const bool blank = record.size() == 1 && trim(record.front()).empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };

  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field in CSV");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

enum class CellKind { Finite, NonFinite, Unparseable };

CellKind parse_cell(std::string_view cell, double& out) {
  cell = trim(cell);
  if (cell.empty()) return CellKind::NonFinite;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    // from_chars reports ERANGE for values beyond double; treat them as infinite.
    if (ec == std::errc::result_out_of_range && ptr == cell.data() + cell.size()) {
      return CellKind::NonFinite;
    }
    return CellKind::Unparseable;
  }
  return std::isfinite(out) ? CellKind::Finite : CellKind::NonFinite;
}

std::string quote_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void ColumnSchema::validate() const {
  if (feature_names.empty()) throw ConfigError("schema has no feature columns");
  for (const auto& name : feature_names) {
    if (iequals(trim(name), trim(label_column))) {
      throw ConfigError("label column '" + label_column + "' is also listed as a feature");
    }
  }
}

LabelMap::LabelMap(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (iequals(trim(names_[i]), trim(names_[j]))) {
        throw ConfigError("duplicate class name '" + names_[i] + "'");
      }
    }
  }
}

LabelMap LabelMap::intrusion_classes() {
  return LabelMap({"Benign", "Bot", "Brute Force", "DoS", "Infiltration", "Port Scan", "Web Attack"});
}

const std::string& LabelMap::name(ClassId id) const {
  if (id >= names_.size()) throw DataError("class id " + std::to_string(id) + " out of range");
  return names_[id];
}

std::optional<ClassId> LabelMap::find(std::string_view name) const {
  name = trim(name);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (iequals(trim(names_[i]), name)) return static_cast<ClassId>(i);
  }
  return std::nullopt;
}

Dataset::Dataset(ColumnSchema schema, LabelMap label_map)
    : schema_(std::move(schema)), label_map_(std::move(label_map)) {
  schema_.validate();
}

Dataset::Dataset(ColumnSchema schema, LabelMap label_map, std::vector<double> features,
                 std::vector<ClassId> labels)
    : Dataset(std::move(schema), std::move(label_map)) {
  if (features.size() != labels.size() * n_features()) {
    throw DataError("feature matrix size does not match rows x features");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw DataError("dataset features must be finite");
  }
  for (ClassId c : labels) {
    if (c >= n_classes()) throw DataError("label " + std::to_string(c) + " outside label map");
  }
  features_ = std::move(features);
  labels_ = std::move(labels);
}

void Dataset::append(std::span<const double> row, ClassId label) {
  if (row.size() != n_features()) throw DataError("row width does not match schema");
  if (label >= n_classes()) throw DataError("label " + std::to_string(label) + " outside label map");
  for (double v : row) {
    if (!std::isfinite(v)) throw DataError("dataset features must be finite");
  }
  features_.insert(features_.end(), row.begin(), row.end());
  labels_.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(schema_, label_map_);
  out.features_.reserve(indices.size() * n_features());
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.features_.insert(out.features_.end(), r.begin(), r.end());
    out.labels_.push_back(labels_[i]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> Dataset::rows_by_class() const {
  std::vector<std::vector<std::size_t>> by_class(n_classes());
  for (std::size_t i = 0; i < rows(); ++i) by_class[labels_[i]].push_back(i);
  return by_class;
}

Dataset concatenate(std::span<const Dataset> parts) {
  if (parts.empty()) throw DataError("nothing to concatenate");
  Dataset out(parts.front().schema(), parts.front().label_map());
  for (const auto& part : parts) {
    if (part.schema() != out.schema() || part.label_map() != out.label_map()) {
      throw DataError("cannot concatenate datasets with different schemas");
    }
    for (std::size_t i = 0; i < part.rows(); ++i) out.append(part.row(i), part.label(i));
  }
  return out;
}

std::string LoadReport::to_key_values() const {
  std::ostringstream out;
  out << "rows_read=" << rows_read << '\n'
      << "rows_nan_dropped=" << nonfinite_dropped << '\n'
      << "rows_unparseable_dropped=" << unparseable_dropped << '\n'
      << "rows_dup_dropped=" << duplicates_dropped << '\n';
  return out.str();
}

Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema,
                 const LabelMap& label_map, LoadReport* report, bool drop_duplicates) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto records = parse_csv(text);
  if (records.empty()) throw DataError(path.string() + ": missing header row");

  const auto& header = records.front();
  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (iequals(trim(header[c]), trim(schema.label_column))) {
      label_col = c;
      break;
    }
  }
  if (!label_col) throw DataError(path.string() + ": label column '" + schema.label_column + "' not found");

  ColumnSchema resolved;
  resolved.label_column = schema.label_column;
  std::vector<std::size_t> feature_cols;
  if (schema.feature_names.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == *label_col) continue;
      bool any_value = false;
      bool numeric = true;
      for (std::size_t r = 1; r < records.size() && numeric; ++r) {
        if (c >= records[r].size()) continue;
        double v;
        const auto kind = parse_cell(records[r][c], v);
        if (kind == CellKind::Unparseable) numeric = false;
        if (!trim(records[r][c]).empty()) any_value = true;
      }
      if (numeric && any_value) {
        feature_cols.push_back(c);
        resolved.feature_names.emplace_back(trim(header[c]));
      }
    }
  } else {
    for (const auto& name : schema.feature_names) {
      const auto it = std::find_if(header.begin(), header.end(),
                                   [&](const std::string& h) { return iequals(trim(h), trim(name)); });
      if (it == header.end()) throw DataError(path.string() + ": feature column '" + name + "' not found");
      feature_cols.push_back(static_cast<std::size_t>(it - header.begin()));
      resolved.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw DataError(path.string() + ": no numeric feature columns");

  Dataset data(resolved, label_map);
  LoadReport local;
  std::unordered_set<std::string> seen;
  std::vector<double> row(feature_cols.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    ++local.rows_read;
    bool nonfinite = false;
    bool unparseable = false;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      if (feature_cols[f] >= rec.size()) {
        nonfinite = true;
        continue;
      }
      switch (parse_cell(rec[feature_cols[f]], row[f])) {
        case CellKind::Finite: break;
        case CellKind::NonFinite: nonfinite = true; break;
        case CellKind::Unparseable: unparseable = true; break;
      }
    }
    const std::string_view label_text = *label_col < rec.size() ? std::string_view(rec[*label_col]) : "";
    const auto label = label_map.find(label_text);
    if (!label) {
      throw DataError(path.string() + ": row " + std::to_string(r + 1) + " has unknown label '" +
                      std::string(trim(label_text)) + "'");
    }
    if (unparseable) {
      ++local.unparseable_dropped;
      continue;
    }
    if (nonfinite) {
      ++local.nonfinite_dropped;
      continue;
    }
    if (!drop_duplicates) {
      data.append(row, *label);
      continue;
    }
    std::string key(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(double));
    key.append(reinterpret_cast<const char*>(&*label), sizeof(ClassId));
    if (!seen.insert(std::move(key)).second) {
      ++local.duplicates_dropped;
      continue;
    }
    data.append(row, *label);
  }
  if (report) *report = local;
  if (data.empty()) throw DataError(path.string() + ": no usable rows");
  return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& name : data.schema().feature_names) out << quote_field(name) << ',';
  out << quote_field(data.schema().label_column) << '\n';
  char buf[64];
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (double v : data.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << quote_field(data.label_map().name(data.label(i))) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Dataset> partition(const Dataset& data, std::size_t n_parts, std::uint64_t seed) {
  if (n_parts < 2) throw ConfigError("partition needs at least 2 parts");
  if (data.rows() < n_parts) throw DataError("fewer rows than partitions");

  Rng rng(mix_seed(seed, 0x7061727469ULL));
  std::vector<std::vector<std::size_t>> assigned(n_parts);
  for (auto& rows : data.rows_by_class()) {
    rng.shuffle(std::span(rows));
    const std::size_t share = rows.size() / n_parts;
    std::size_t next = 0;
    for (auto& part : assigned) {
      part.insert(part.end(), rows.begin() + next, rows.begin() + next + share);
      next += share;
    }
    for (; next < rows.size(); ++next) {
      auto smallest = std::min_element(assigned.begin(), assigned.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
      smallest->push_back(rows[next]);
    }
  }

  std::vector<Dataset> parts;
  parts.reserve(n_parts);
  for (auto& rows : assigned) {
    std::sort(rows.begin(), rows.end());
    parts.push_back(data.subset(rows));
  }
  return parts;
}

SplitPair train_test_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  constexpr double kSlack = 1e-9;
  auto by_class = data.rows_by_class();
  const std::size_t k = by_class.size();

  std::vector<std::size_t> n_train(k, 0);
  std::vector<double> remainder(k, 0.0);
  std::vector<ClassId> singletons;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t n = by_class[c].size();
    if (n == 1) {
      n_train[c] = 1;
      singletons.push_back(static_cast<ClassId>(c));
    } else {
      const double exact = train_fraction * static_cast<double>(n);
      n_train[c] = static_cast<std::size_t>(std::floor(exact + kSlack));
      remainder[c] = exact - static_cast<double>(n_train[c]);
    }
    assigned += n_train[c];
  }

  // Largest remainder; ties go to the lower class id.
  const auto target = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(data.rows()) + 0.5 + kSlack));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t c : order) {
    if (assigned >= target) break;
    if (by_class[c].size() > 1 && remainder[c] > kSlack && n_train[c] < by_class[c].size()) {
      ++n_train[c];
      ++assigned;
    }
  }

  Rng rng(mix_seed(seed, 0x73706c6974ULL));
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t c = 0; c < k; ++c) {
    auto& rows = by_class[c];
    rng.shuffle(std::span(rows));
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + n_train[c]);
    test_rows.insert(test_rows.end(), rows.begin() + n_train[c], rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.subset(train_rows), data.subset(test_rows), std::move(singletons)};
}

std::vector<std::pair<std::string, std::size_t>> class_histogram(const Dataset& data) {
  std::vector<std::pair<std::string, std::size_t>> hist;
  hist.reserve(data.n_classes());
  for (const auto& name : data.label_map().names()) hist.emplace_back(name, 0);
  for (ClassId c : data.labels()) ++hist[c].second;
  return hist;
}

}  // namespace fids
