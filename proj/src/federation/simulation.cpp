#include "fids/federation/simulation.hpp"

#include <exception>
#include <string_view>
#include <thread>
#include <unordered_set>

#include "fids/rng.hpp"

namespace fids::federation {

namespace {

metrics::ConfusionMatrix score_model(const gbdt::GbdtModel& model, const Dataset& test) {
  metrics::ConfusionMatrix m(test.n_classes());
  for (std::size_t i = 0; i < test.rows(); ++i) m.add(test.label(i), gbdt::predict(model, test.row(i)));
  return m;
}

metrics::ConfusionMatrix score_ensemble(const EnsembleModel& ensemble, const Dataset& test) {
  metrics::ConfusionMatrix m(test.n_classes());
  for (std::size_t i = 0; i < test.rows(); ++i) m.add(test.label(i), ensemble_predict(ensemble, test.row(i)));
  return m;
}

struct EdgeOutcome {
  gbdt::GridSearchResult search;
  metrics::ConfusionMatrix matrix;
  bool continue_training = false;
  std::exception_ptr error;
};

}  // namespace

void RoundConfig::validate() const {
  if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  grid.validate();
}

SimulationResult run_federated_simulation(const std::vector<Dataset>& partitions, const RoundConfig& cfg,
                                          const SimulationOptions& options) {
  cfg.validate();
  if (partitions.size() != 3) {
    throw ConfigError("simulation needs exactly 3 partitions (edge1, edge2, server), got " +
                      std::to_string(partitions.size()));
  }
  for (const auto& p : partitions) {
    if (p.empty()) throw DataError("simulation partition is empty");
    if (p.schema() != partitions.front().schema() || p.label_map() != partitions.front().label_map()) {
      throw DataError("simulation partitions disagree on schema");
    }
  }

  const std::size_t n_edges = partitions.size() - 1;
  std::vector<SplitPair> splits;
  for (std::size_t p = 0; p < partitions.size(); ++p) {
    splits.push_back(train_test_split(partitions[p], cfg.train_fraction, mix_seed(cfg.seed, 100 + p)));
  }
  const SplitPair& server_split = splits.back();

  auto transport = options.transport == TransportKind::Tcp ? make_tcp_transport(options.host, options.port)
                                                           : make_inproc_transport();
  auto listener = transport->listen();

  SimulationResult result;
  double previous_accuracy = 0.0;
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    const auto round_id = static_cast<std::uint32_t>(round);
    const auto server_search =
        gbdt::grid_search(server_split.train, cfg.grid, cfg.validation_fraction, mix_seed(cfg.seed, 200 + n_edges));
    std::vector<EdgeOutcome> edges(n_edges);
    std::vector<std::jthread> edge_threads;
    for (std::size_t e = 0; e < n_edges; ++e) {
      edge_threads.emplace_back([&, e] {
        auto& out = edges[e];
        try {
          const auto& split = splits[e];
          out.search = gbdt::grid_search(split.train, cfg.grid, cfg.validation_fraction, mix_seed(cfg.seed, 200 + e));
          out.matrix = score_model(out.search.model, split.test);
          auto conn = transport->connect();
          const auto exchange = edge_exchange(*conn, static_cast<std::uint32_t>(e + 1), round_id, out.search.model);
          out.continue_training = exchange.continue_training;
        } catch (...) {
          out.error = std::current_exception();
        }
      });
    }

    ServerRound server(*listener, n_edges, round_id, options.transcript);
    std::vector<ReceivedUpdate> updates;
    try {
      updates = server.collect_updates();
    } catch (...) {
      // Edge failures surface first; they are usually the cause.
      edge_threads.clear();
      for (auto& e : edges) {
        if (e.error) std::rethrow_exception(e.error);
      }
      throw;
    }
    std::vector<gbdt::GbdtModel> edge_models;
    std::vector<std::uint32_t> edge_ids;
    for (auto& u : updates) {
      edge_models.push_back(std::move(u.model));
      edge_ids.push_back(u.device_id);
    }
    auto global = assemble_ensemble(edge_models, edge_ids, server_search.model);
    const auto server_matrix = score_ensemble(global, server_split.test);
    const double server_accuracy = metrics::accuracy(server_matrix);

    std::string stop_reason = "continue";
    if (round > 1 && server_accuracy - previous_accuracy < cfg.epsilon) {
      stop_reason = "converged";
    } else if (round == cfg.max_rounds) {
      stop_reason = "max_rounds";
    }
    const bool stop = stop_reason != "continue";
    server.broadcast(global, stop);
    edge_threads.clear();
    for (auto& e : edges) {
      if (e.error) std::rethrow_exception(e.error);
      if (e.continue_training == stop) throw DataError("edge disagrees with the server about stopping");
    }

    RoundReport report;
    report.round = round;
    for (std::size_t e = 0; e < n_edges; ++e) {
      report.devices.push_back({"edge" + std::to_string(e + 1), metrics::summarize(edges[e].matrix), edges[e].matrix});
      report.chosen_params.push_back(edges[e].search.best);
    }
    report.devices.push_back({"server", metrics::summarize(server_matrix), server_matrix});
    report.chosen_params.push_back(server_search.best);
    report.stop_reason = stop_reason;
    result.rounds.push_back(std::move(report));

    result.edge_models = std::move(edge_models);
    result.global = std::move(global);
    previous_accuracy = server_accuracy;
    if (stop) break;
  }
  return result;
}

Bytes encode_row(std::span<const double> row) {
  ByteWriter out;
  for (double v : row) out.f64(v);
  return out.take();
}

bool transcript_leaks_rows(std::span<const std::uint8_t> transcript, const Dataset& data) {
  if (data.empty()) return false;
  const std::size_t width = data.n_features() * 8;
  if (transcript.size() < width) return false;
  std::string encoded;
  encoded.reserve(data.rows() * width);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto enc = encode_row(data.row(i));
    encoded.append(enc.begin(), enc.end());
  }
  std::unordered_set<std::string_view> rows;
  for (std::size_t i = 0; i < data.rows(); ++i) rows.insert(std::string_view(encoded).substr(i * width, width));
  const std::string_view text(reinterpret_cast<const char*>(transcript.data()), transcript.size());
  for (std::size_t at = 0; at + width <= text.size(); ++at) {
    if (rows.contains(text.substr(at, width))) return true;
  }
  return false;
}

}  // namespace fids::federation
