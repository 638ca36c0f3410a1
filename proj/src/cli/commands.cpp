#include "fids/cli/commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iterator>
#include <ostream>

#include "fids/error.hpp"
#include "fids/federation/envelope.hpp"
#include "fids/isolation_forest.hpp"
#include "fids/rng.hpp"
#include "fids/smote.hpp"
#include "fids/synthetic.hpp"

namespace fids::cli {

namespace fs = std::filesystem;

namespace {

const char* const kPartFiles[] = {"part1.csv", "part2.csv", "part_server.csv"};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

federation::Bytes read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string histogram_text(const Dataset& data) {
  std::string out;
  for (const auto& [name, count] : class_histogram(data)) out += fmt::format("{}={}\n", name, count);
  return out;
}

std::vector<Dataset> load_parts(const RunConfig& cfg) {
  std::vector<Dataset> parts;
  for (const char* name : kPartFiles) {
    const auto path = cfg.output_dir / name;
    if (!fs::exists(path)) throw IoError("missing " + path.string() + "; run `fids prepare` first");
    parts.push_back(load_csv(path, cfg.schema(), cfg.label_map(), nullptr, false));
  }
  return parts;
}

struct LoadedModel {
  std::optional<gbdt::GbdtModel> single;
  std::optional<federation::EnsembleModel> ensemble;
};

LoadedModel load_model_file(const fs::path& path) {
  const auto bytes = read_bytes(path);
  LoadedModel out;
  const bool framed = bytes.size() >= 4 && std::equal(federation::kFrameMagic.begin(), federation::kFrameMagic.end(), bytes.begin());
  if (!framed) {
    out.single = federation::deserialize_model(bytes);
    return out;
  }
  const auto env = federation::decode_frame(bytes);
  if (env.type == federation::MessageType::GlobalModel) {
    out.ensemble = federation::deserialize_ensemble(env.payload);
  } else if (env.type == federation::MessageType::ModelUpdate) {
    out.single = federation::deserialize_model(env.payload);
  } else {
    throw DataError(path.string() + " holds a control frame, not a model");
  }
  return out;
}

std::string summary_table(const std::vector<federation::DeviceMetrics>& devices) {
  std::string out = fmt::format("{:<8} {:>10} {:>10} {:>10} {:>8}\n", "device", "accuracy%", "precision", "recall", "kappa");
  for (const auto& d : devices) {
    out += fmt::format("{:<8} {:>10} {:>10.4f} {:>10.4f} {:>8.4f}\n", d.device, metrics::format_percent(d.summary.accuracy),
                       d.summary.precision, d.summary.recall, d.summary.kappa);
  }
  return out;
}

}  // namespace

void cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.dataset_path.empty()) throw ConfigError("dataset_path is required");
  const auto labels = cfg.label_map();
  LoadReport load_report;
  const Dataset cleaned = load_csv(cfg.dataset_path, cfg.schema(), labels, &load_report);

  const auto smote_cfg = cfg.smote_config(labels);
  const Dataset balanced = smote_cfg.targets.empty() ? cleaned : preprocess::smote_resample(cleaned, smote_cfg);
  preprocess::OutlierReport outliers;
  const Dataset pruned = preprocess::remove_outliers(balanced, cfg.contamination, cfg.n_trees, cfg.subsample_size,
                                                     cfg.seed, &outliers);
  const auto parts = partition(pruned, 3, cfg.seed);

  ensure_dir(cfg.output_dir);
  for (std::size_t i = 0; i < parts.size(); ++i) write_csv(parts[i], cfg.output_dir / kPartFiles[i]);

  std::string report = "[load]\n" + load_report.to_key_values();
  report += "[before]\n" + histogram_text(cleaned);
  report += "[after_smote]\n" + histogram_text(balanced);
  report += "[outliers]\n" + outliers.to_key_values();
  report += "[after]\n" + histogram_text(pruned);
  report += "[partitions]\n";
  for (std::size_t i = 0; i < parts.size(); ++i) report += fmt::format("{}={}\n", kPartFiles[i], parts[i].rows());
  write_text(cfg.output_dir / "prepare_report.txt", report);

  fmt::print(out, "{}", report);
}

std::string format_rounds_csv(const std::vector<federation::RoundReport>& rounds) {
  std::string out = std::string(kRoundsHeader) + "\n";
  for (const auto& r : rounds) {
    for (const auto& d : r.devices) {
      out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", d.device, r.round, d.summary.accuracy,
                         d.summary.precision, d.summary.recall, d.summary.kappa, r.stop_reason);
    }
  }
  return out;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto parts = load_parts(cfg);
  federation::Transcript transcript;
  federation::SimulationOptions options;
  options.transport = cfg.transport_kind();
  options.host = cfg.host;
  options.port = cfg.port;
  options.transcript = &transcript;
  const auto result = federation::run_federated_simulation(parts, cfg.round_config(), options);

  write_text(cfg.output_dir / "rounds.csv", format_rounds_csv(result.rounds));
  const auto models_dir = cfg.output_dir / "final_models";
  ensure_dir(models_dir);
  for (std::size_t e = 0; e < result.edge_models.size(); ++e) {
    write_bytes(models_dir / fmt::format("edge{}.model", e + 1), federation::serialize_model(result.edge_models[e]));
  }
  write_bytes(models_dir / "server.model", federation::serialize_model(result.global.members.back()));
  const auto final_round = static_cast<std::uint32_t>(result.rounds.back().round);
  write_bytes(models_dir / "global.frame",
              federation::encode_frame({federation::MessageType::GlobalModel, federation::kServerDeviceId, final_round,
                                        federation::serialize_ensemble(result.global)}));
  if (!cfg.transcript_path.empty()) write_bytes(cfg.transcript_path, transcript.bytes());

  for (const auto& r : result.rounds) {
    fmt::print(out, "round {} ({})\n", r.round, r.stop_reason);
    for (std::size_t i = 0; i < r.devices.size(); ++i) {
      fmt::print(out, "  {} params: {}\n", r.devices[i].device, r.chosen_params[i].to_string());
    }
    fmt::print(out, "{}", summary_table(r.devices));
  }
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& model_path, const fs::path& test_csv, std::ostream& out) {
  const auto model = load_model_file(model_path);
  const Dataset test = load_csv(test_csv, cfg.schema(), cfg.label_map(), nullptr, false);
  const std::size_t d = model.single ? model.single->n_features : model.ensemble->n_features();
  const std::size_t k = model.single ? model.single->n_classes : model.ensemble->n_classes();
  if (test.n_features() != d || test.n_classes() != k) {
    throw DataError(fmt::format("shape mismatch: model expects {} features / {} classes, {} has {} / {}", d, k,
                                test_csv.string(), test.n_features(), test.n_classes()));
  }
  metrics::ConfusionMatrix m(k);
  for (std::size_t i = 0; i < test.rows(); ++i) {
    const ClassId pred = model.single ? gbdt::predict(*model.single, test.row(i))
                                      : federation::ensemble_predict(*model.ensemble, test.row(i));
    m.add(test.label(i), pred);
  }
  std::vector<ClassId> no_precision;
  std::vector<ClassId> no_recall;
  metrics::Summary s{metrics::accuracy(m), metrics::macro_precision(m, &no_precision),
                     metrics::macro_recall(m, &no_recall), metrics::cohen_kappa(m)};
  fmt::print(out, "{}", metrics::to_key_values(s));
  for (ClassId c : no_precision) fmt::print(out, "warning: class {} was never predicted\n", c);
  for (ClassId c : no_recall) fmt::print(out, "warning: class {} has no test rows\n", c);
  fmt::print(out, "matrix:\n{}", metrics::format_matrix(m));
}

void cmd_report(const fs::path& rounds_csv, const fs::path& svg_path, std::ostream& out) {
  const auto rows = parse_rounds_csv(read_text(rounds_csv));
  if (rows.empty()) throw DataError(rounds_csv.string() + " has no metric rows");
  int last_round = 0;
  for (const auto& r : rows) last_round = std::max(last_round, r.round);
  std::vector<RoundsRow> latest;
  for (const auto& r : rows) {
    if (r.round == last_round) latest.push_back(r);
  }
  write_text(svg_path, render_svg(latest));

  fmt::print(out, "round {}\n", last_round);
  fmt::print(out, "{:<8} {:>10} {:>10} {:>10} {:>8}\n", "device", "accuracy%", "precision", "recall", "kappa");
  for (const auto& r : latest) {
    fmt::print(out, "{:<8} {:>10} {:>10.4f} {:>10.4f} {:>8.4f}\n", r.device, metrics::format_percent(r.accuracy),
               r.precision, r.recall, r.kappa);
  }
}

void cmd_serve(const RunConfig& cfg, std::size_t n_edges, std::ostream& out) {
  cfg.validate();
  if (n_edges < 1) throw ConfigError("serve needs at least one edge");
  const auto path = cfg.output_dir / kPartFiles[2];
  const Dataset server_data = load_csv(path, cfg.schema(), cfg.label_map(), nullptr, false);
  const auto rc = cfg.round_config();
  const auto split = train_test_split(server_data, rc.train_fraction, mix_seed(rc.seed, 102));
  const auto search = gbdt::grid_search(split.train, rc.grid, rc.validation_fraction, mix_seed(rc.seed, 202));

  std::uint16_t bound = 0;
  auto listener = federation::tcp_listen(cfg.host, cfg.port, &bound);
  fmt::print(out, "listening on {}:{}\n", cfg.host, bound);
  out.flush();

  double previous = 0.0;
  for (int round = 1; round <= rc.max_rounds; ++round) {
    federation::ServerRound server(*listener, n_edges, static_cast<std::uint32_t>(round));
    auto updates = server.collect_updates();
    std::vector<gbdt::GbdtModel> models;
    std::vector<std::uint32_t> ids;
    for (auto& u : updates) {
      models.push_back(std::move(u.model));
      ids.push_back(u.device_id);
    }
    const auto global = federation::assemble_ensemble(models, ids, search.model);
    metrics::ConfusionMatrix m(split.test.n_classes());
    for (std::size_t i = 0; i < split.test.rows(); ++i) {
      m.add(split.test.label(i), federation::ensemble_predict(global, split.test.row(i)));
    }
    const double acc = metrics::accuracy(m);
    const bool stop = round == rc.max_rounds || (round > 1 && acc - previous < rc.epsilon);
    server.broadcast(global, stop);
    fmt::print(out, "round {}: {} edges, server accuracy {}%{}\n", round, ids.size(), metrics::format_percent(acc),
               stop ? " (stopping)" : "");
    out.flush();
    previous = acc;
    if (stop) break;
  }
}

void cmd_send_model(const RunConfig& cfg, std::uint32_t device_id, std::uint32_t round, const fs::path& model_path,
                    const fs::path& global_out, std::ostream& out) {
  const auto loaded = load_model_file(model_path);
  if (!loaded.single) throw DataError(model_path.string() + " is not a single model");
  auto conn = federation::tcp_connect(cfg.host, cfg.port);
  const auto exchange = federation::edge_exchange(*conn, device_id, round, *loaded.single);
  write_bytes(global_out, federation::encode_frame({federation::MessageType::GlobalModel, federation::kServerDeviceId,
                                                    round, federation::serialize_ensemble(exchange.global)}));
  fmt::print(out, "received global model with {} members; server says {}\n", exchange.global.members.size(),
             exchange.continue_training ? "continue" : "shutdown");
}

void cmd_make_fixture(const RunConfig& cfg, std::size_t rows_per_class, std::size_t n_features,
                      const fs::path& csv_path, std::ostream& out) {
  const auto labels = cfg.label_map();
  const std::vector<std::size_t> counts(labels.size(), rows_per_class);
  auto data = synthetic::gaussian_blobs(labels, counts, n_features, 5.0, cfg.seed);
  write_csv(data, csv_path);
  fmt::print(out, "wrote {} rows to {}\n", data.rows(), csv_path.string());
}

}  // namespace fids::cli
