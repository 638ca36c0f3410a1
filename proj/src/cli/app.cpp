#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>

#include "fids/cli/commands.hpp"
#include "fids/error.hpp"

namespace fids::cli {

namespace {

std::string hyphenated(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated gradient-boosting intrusion detection", "fids"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (default: $FIDS_CONFIG)");
  std::map<std::string, std::string> overrides;
  for (const auto& key : RunConfig::keys()) {
    std::string names = "--" + key;
    if (hyphenated(key) != key) names += ",--" + hyphenated(key);
    app.add_option_function<std::string>(names, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                         "config key " + key);
  }

  auto* prepare = app.add_subcommand("prepare", "clean, oversample, prune and partition a CSV");
  auto* simulate = app.add_subcommand("simulate", "run the federated rounds over prepared parts");

  auto* evaluate = app.add_subcommand("evaluate", "score a model file on a labelled CSV");
  std::string model_path;
  std::string test_csv;
  evaluate->add_option("--model", model_path, "model or frame file")->required();
  evaluate->add_option("--test", test_csv, "labelled CSV")->required();

  auto* report = app.add_subcommand("report", "render rounds.csv as an SVG bar chart");
  std::string rounds_csv;
  std::string svg_path;
  report->add_option("--rounds", rounds_csv, "rounds.csv path")->required();
  report->add_option("--svg", svg_path, "output SVG path")->required();

  auto* serve = app.add_subcommand("serve", "TCP aggregation server");
  std::size_t n_edges = 2;
  serve->add_option("--edges", n_edges, "number of edges per round");

  auto* send = app.add_subcommand("send-model", "ship one edge model to a running server");
  std::uint32_t device_id = 1;
  std::uint32_t round = 1;
  std::string send_model_path;
  std::string global_out;
  send->add_option("--device", device_id)->required();
  send->add_option("--round", round);
  send->add_option("--model", send_model_path)->required();
  send->add_option("--global-out", global_out)->required();

  auto* fixture = app.add_subcommand("make-fixture", "write a synthetic labelled CSV");
  std::size_t rows_per_class = 200;
  std::size_t n_features = 8;
  std::string fixture_csv;
  fixture->add_option("--rows-per-class", rows_per_class);
  fixture->add_option("--features-count", n_features);
  fixture->add_option("--out", fixture_csv)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (config_path.empty()) {
      if (const char* env = std::getenv("FIDS_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) load_config_file(config_path, cfg);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    cfg.validate();

    if (*prepare) {
      cmd_prepare(cfg, out);
    } else if (*simulate) {
      cmd_simulate(cfg, out);
    } else if (*evaluate) {
      cmd_evaluate(cfg, model_path, test_csv, out);
    } else if (*report) {
      cmd_report(rounds_csv, svg_path, out);
    } else if (*serve) {
      cmd_serve(cfg, n_edges, out);
    } else if (*send) {
      cmd_send_model(cfg, device_id, round, send_model_path, global_out, out);
    } else if (*fixture) {
      cmd_make_fixture(cfg, rows_per_class, n_features, fixture_csv, out);
    }
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return static_cast<int>(ErrorKind::Data);
  }
  return 0;
}

}  // namespace fids::cli
