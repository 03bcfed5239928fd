#pragma once

#include "config.hpp"

namespace hetcov {

// Subcommand entry points. Each validates its inputs, writes its outputs and
// returns a short JSON summary. Errors carry the failing stage in the message.
json cmd_simulate(const RunConfig& cfg);
json cmd_precompute(const RunConfig& cfg);
json cmd_estimate(const RunConfig& cfg);
json cmd_analyze(const RunConfig& cfg);
json cmd_report(const RunConfig& cfg);
json cmd_plot_data(const RunConfig& cfg);

// Ground-truth sidecar path written next to a dataset.
std::filesystem::path default_truth_path(const std::filesystem::path& dataset_json);

// Appends format_version and config_hash columns to a CSV with a one-line header.
std::string stamp_csv(const std::string& csv, const std::string& config_hash);

struct AnalysisFile {
  AnalyzeResult result;
  int K = 0;
  double omega_max = 0.0;
  VecC mu;
  MatC eigvecs;  // the C - 1 directions used for coordinates
  std::string config_hash;
};
void save_analysis(const AnalyzeResult& r, const EstimateResult& est, const std::filesystem::path& path,
                   const std::string& config_hash);
AnalysisFile load_analysis(const std::filesystem::path& path);

}  // namespace hetcov
