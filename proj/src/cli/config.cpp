#include "fids/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fids/error.hpp"

namespace fids::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError(key + " needs at least one value");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset_path", [](RunConfig& c, auto&, auto& v) { c.dataset_path = trim(v); }},
      {"label_column", [](RunConfig& c, auto&, auto& v) { c.label_column = trim(v); }},
      {"classes", [](RunConfig& c, auto&, auto& v) { c.classes = split_list(v); }},
      {"features", [](RunConfig& c, auto&, auto& v) { c.features = split_list(v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"smote_targets", [](RunConfig& c, auto&, auto& v) { c.smote_targets = trim(v); }},
      {"k_neighbors", [](RunConfig& c, auto& k, auto& v) { c.k_neighbors = parse_number<std::size_t>(k, v); }},
      {"contamination", [](RunConfig& c, auto& k, auto& v) { c.contamination = parse_number<double>(k, v); }},
      {"n_trees", [](RunConfig& c, auto& k, auto& v) { c.n_trees = parse_number<std::size_t>(k, v); }},
      {"subsample_size", [](RunConfig& c, auto& k, auto& v) { c.subsample_size = parse_number<std::size_t>(k, v); }},
      {"depths", [](RunConfig& c, auto& k, auto& v) { c.grid.depths = parse_list<int>(k, v); }},
      {"iterations", [](RunConfig& c, auto& k, auto& v) { c.grid.iterations = parse_list<int>(k, v); }},
      {"learning_rates", [](RunConfig& c, auto& k, auto& v) { c.grid.learning_rates = parse_list<double>(k, v); }},
      {"train_fraction", [](RunConfig& c, auto& k, auto& v) { c.train_fraction = parse_number<double>(k, v); }},
      {"validation_fraction",
       [](RunConfig& c, auto& k, auto& v) { c.validation_fraction = parse_number<double>(k, v); }},
      {"max_rounds", [](RunConfig& c, auto& k, auto& v) { c.max_rounds = parse_number<int>(k, v); }},
      {"epsilon", [](RunConfig& c, auto& k, auto& v) { c.epsilon = parse_number<double>(k, v); }},
      {"output_dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = trim(v); }},
      {"transport", [](RunConfig& c, auto&, auto& v) { c.transport = trim(v); }},
      {"host", [](RunConfig& c, auto&, auto& v) { c.host = trim(v); }},
      {"port", [](RunConfig& c, auto& k, auto& v) { c.port = parse_number<std::uint16_t>(k, v); }},
      {"transcript", [](RunConfig& c, auto&, auto& v) { c.transcript_path = trim(v); }},
  };
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(*this, key, value);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [key, setter] : setters()) out.push_back(key);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  if (classes.empty()) throw ConfigError("classes must not be empty");
  (void)label_map();
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
  if (!(contamination >= 0.0 && contamination < 1.0)) throw ConfigError("contamination must lie in [0, 1)");
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (subsample_size < 2) throw ConfigError("subsample_size must be at least 2");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (transport != "inproc" && transport != "tcp") throw ConfigError("transport must be inproc or tcp");
  round_config().validate();
}

ColumnSchema RunConfig::schema() const {
  ColumnSchema s;
  s.feature_names = features;
  s.label_column = label_column;
  return s;
}

preprocess::SmoteConfig RunConfig::smote_config(const LabelMap& labels) const {
  preprocess::SmoteConfig out;
  out.k_neighbors = k_neighbors;
  out.seed = seed;
  for (const auto& item : split_list(smote_targets)) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos) throw ConfigError("smote target '" + item + "' must be name:count");
    const std::string name = trim(item.substr(0, colon));
    const auto id = labels.find(name);
    if (!id) throw ConfigError("smote target names unknown class '" + name + "'");
    out.targets[*id] = parse_number<std::size_t>("smote_targets", item.substr(colon + 1));
  }
  return out;
}

federation::RoundConfig RunConfig::round_config() const {
  federation::RoundConfig rc;
  rc.max_rounds = max_rounds;
  rc.epsilon = epsilon;
  rc.grid = grid;
  rc.seed = seed;
  rc.train_fraction = train_fraction;
  rc.validation_fraction = validation_fraction;
  return rc;
}

federation::TransportKind RunConfig::transport_kind() const {
  return transport == "tcp" ? federation::TransportKind::Tcp : federation::TransportKind::InProcess;
}

void load_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace fids::cli
