#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fids/cli/config.hpp"
#include "fids/federation/simulation.hpp"

namespace fids::cli {

// Commands throw fids::Error subclasses; run_app turns them into exit codes.

/// Clean, oversample, prune and partition the input CSV into output_dir:
/// part1.csv, part2.csv, part_server.csv and prepare_report.txt.
void cmd_prepare(const RunConfig& cfg, std::ostream& out);

/// Runs the federated rounds over the prepared parts; writes rounds.csv and
/// final_models/{edge1.model,edge2.model,server.model,global.frame}.
void cmd_simulate(const RunConfig& cfg, std::ostream& out);

/// Scores a model file (raw model bytes or a FIDS frame) on a labelled CSV.
void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& model_path,
                  const std::filesystem::path& test_csv, std::ostream& out);

/// Grouped bar chart (SVG) of the last round in rounds.csv plus a summary table.
void cmd_report(const std::filesystem::path& rounds_csv, const std::filesystem::path& svg_path, std::ostream& out);

/// Standalone aggregation server over TCP using output_dir/part_server.csv.
void cmd_serve(const RunConfig& cfg, std::size_t n_edges, std::ostream& out);

/// Standalone edge client: ships one model for one round and stores the
/// returned global model as a frame file.
void cmd_send_model(const RunConfig& cfg, std::uint32_t device_id, std::uint32_t round,
                    const std::filesystem::path& model_path, const std::filesystem::path& global_out,
                    std::ostream& out);

/// Writes a synthetic Gaussian-blob CSV shaped like the intrusion classes.
void cmd_make_fixture(const RunConfig& cfg, std::size_t rows_per_class, std::size_t n_features,
                      const std::filesystem::path& csv_path, std::ostream& out);

struct RoundsRow {
  std::string device;
  int round = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double kappa = 0.0;
  std::string stop_reason;
};

inline constexpr const char* kRoundsHeader = "device,round,accuracy,precision,recall,kappa,stop_reason";

std::string format_rounds_csv(const std::vector<federation::RoundReport>& rounds);
std::vector<RoundsRow> parse_rounds_csv(const std::string& text);
/// Deterministic 800x480 SVG: one bar group per device, one bar per metric.
std::string render_svg(const std::vector<RoundsRow>& rows);

/// Entry point shared by the fids binary and the tests; returns the exit code
/// (0 ok, 1 config, 2 data/model, 3 I/O).
int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fids::cli
