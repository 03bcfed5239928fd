// Command-line front end. Talks to the library through the C interface only.
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetcov/hetcov.h"

namespace {

constexpr int kUsageExit = 64;

using ConfigPtr = std::unique_ptr<hetcov_config, decltype(&hetcov_config_free)>;

struct CliError {
  hetcov_status status;
  std::string message;
};

void check(hetcov_status st, const std::string& what) {
  if (st != HETCOV_OK) throw CliError{st, what + ": " + hetcov_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  hetcov_string_free(s);
  return out;
}

// Flag values routed into config keys. Strings are JSON-quoted so paths are never reinterpreted as numbers.
struct Override {
  std::string key;
  std::string json_value;
};

class Overrides {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto slot = std::make_shared<std::optional<T>>();
    app->add_option(flag, *slot, help);
    slots_.push_back([slot, key](std::vector<Override>& out) {
      if (*slot) out.push_back({key, nlohmann::json(**slot).dump()});
    });
  }

  void add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto slot = std::make_shared<bool>(false);
    app->add_flag(flag, *slot, help);
    slots_.push_back([slot, key](std::vector<Override>& out) {
      if (*slot) out.push_back({key, "true"});
    });
  }

  std::vector<Override> collect() const {
    std::vector<Override> out;
    for (const auto& s : slots_) s(out);
    return out;
  }

 private:
  std::vector<std::function<void(std::vector<Override>&)>> slots_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance estimation and heterogeneity analysis from tomographic projections"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(hetcov_version()));

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<int> threads;
  bool deterministic = false;
  std::optional<std::string> cache_dir;
  bool quiet = false;
  app.add_option("--config,-c", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override a config key: section.key=value (value parsed as JSON when possible)");
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("--deterministic", deterministic, "Bit-reproducible outputs; timings omitted");
  app.add_option("--cache-dir", cache_dir, "Kernel block cache (default: $HETCOV_CACHE_DIR)");
  app.add_flag("--quiet,-q", quiet, "Do not print the JSON summary");

  Overrides ov;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset and its ground-truth sidecar");
  ov.add<std::string>(sim, "--output,-o", "simulate.output", "Dataset JSON path");
  ov.add<std::string>(sim, "--truth", "simulate.truth", "Ground-truth sidecar path");
  ov.add<long long>(sim, "--n", "simulate.n", "Number of images");
  ov.add<int>(sim, "--N", "simulate.N", "Image side length in pixels");
  ov.add<int>(sim, "--N-res", "simulate.N_res", "Resolution parameter setting the bandlimit");
  ov.add<int>(sim, "--K", "simulate.K", "Radial truncation of the representation");
  ov.add<std::string>(sim, "--phantoms", "simulate.phantoms", "two_class | three_class | triangle");
  ov.add<std::string>(sim, "--heterogeneity", "simulate.heterogeneity", "discrete | triangle");
  ov.add<double>(sim, "--snr-het", "simulate.snr_het", "Heterogeneity SNR");
  ov.add<long long>(sim, "--seed", "simulate.seed", "Master seed");

  auto* pre = app.add_subcommand("precompute", "Assemble and cache every kernel block up to K");
  ov.add<int>(pre, "--K", "precompute.K", "Largest radial index");
  ov.add_flag(pre, "--stats", "precompute.stats", "Also record extreme eigenvalues of diagonal blocks");

  auto* est = app.add_subcommand("estimate", "Estimate the mean and covariance");
  ov.add<std::string>(est, "--dataset,-d", "estimate.dataset", "Dataset JSON path");
  ov.add<std::string>(est, "--output,-o", "estimate.output", "Estimate container path");
  ov.add<std::string>(est, "--solver", "estimate.solver", "limiting | empirical");
  ov.add<double>(est, "--cg-tol", "estimate.cg_tol", "Relative residual tolerance of the CG solves");
  ov.add<int>(est, "--max-iter", "estimate.max_iter", "CG iteration cap (0 = automatic)");
  ov.add<double>(est, "--rank-gap-delta", "estimate.rank_gap_delta", "Eigenvalue ratio margin for rank detection");
  ov.add<std::string>(est, "--noise", "estimate.noise", "corners | dataset");
  ov.add<int>(est, "--K", "estimate.K", "Radial truncation (-1 = the dataset's)");

  auto* ana = app.add_subcommand("analyze", "Coordinates, mixture fit and class volumes");
  ov.add<std::string>(ana, "--dataset,-d", "analyze.dataset", "Dataset JSON path");
  ov.add<std::string>(ana, "--estimate,-e", "analyze.estimate", "Estimate container path");
  ov.add<std::string>(ana, "--output,-o", "analyze.output", "Report JSON path");
  ov.add<std::string>(ana, "--coordinates", "analyze.coordinates", "Coordinate CSV path");
  ov.add<std::string>(ana, "--volumes-dir", "analyze.volumes_dir", "Directory for volume containers");
  ov.add<int>(ana, "--classes", "analyze.classes", "Override the number of classes (0 = rank + 1)");
  ov.add<std::string>(ana, "--truth", "analyze.truth", "Ground-truth sidecar for labelled coordinates");
  ov.add<long long>(ana, "--gmm-seed", "analyze.gmm_seed", "Mixture initialisation seed");
  ov.add<std::string>(ana, "--gmm-covariance", "analyze.gmm_covariance", "isotropic | full");

  auto* rep = app.add_subcommand("report", "Metric CSV tables");
  auto* plot = app.add_subcommand("plot-data", "Bundle metric and scatter tables for plotting");
  for (auto* sub : {rep, plot}) {
    ov.add<std::string>(sub, "--report,-r", "report.report", "Report JSON from analyze");
    ov.add<std::string>(sub, "--truth", "report.truth", "Ground-truth sidecar");
    ov.add<std::string>(sub, "--output-dir,-o", "report.output_dir", "Output directory");
    ov.add<int>(sub, "--fsc-shells", "report.fsc_shells", "Number of FSC shells");
    ov.add<int>(sub, "--histogram-bins", "report.histogram_bins", "Eigenvalue histogram bins");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    hetcov_config* raw = nullptr;
    if (config_path.empty())
      check(hetcov_config_create(&raw), "config");
    else
      check(hetcov_config_load(config_path.c_str(), &raw), "config");
    ConfigPtr cfg(raw, &hetcov_config_free);

    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0)
        throw CliError{HETCOV_ERR_CONFIG, "config: --set expects section.key=value, got '" + s + "'"};
      check(hetcov_config_set(cfg.get(), s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()), "config");
    }
    for (const auto& o : ov.collect()) check(hetcov_config_set(cfg.get(), o.key.c_str(), o.json_value.c_str()), "config");
    if (threads) check(hetcov_config_set(cfg.get(), "runtime.threads", std::to_string(*threads).c_str()), "config");
    if (deterministic) check(hetcov_config_set(cfg.get(), "runtime.deterministic", "true"), "config");
    if (cache_dir)
      check(hetcov_config_set(cfg.get(), "runtime.cache_dir", nlohmann::json(*cache_dir).dump().c_str()), "config");

    using Runner = hetcov_status (*)(const hetcov_config*, char**);
    const std::map<std::string, Runner> runners = {
        {"simulate", hetcov_run_simulate}, {"precompute", hetcov_run_precompute},
        {"estimate", hetcov_run_estimate}, {"analyze", hetcov_run_analyze},
        {"report", hetcov_run_report},     {"plot-data", hetcov_run_plot_data},
    };
    const std::string name = app.get_subcommands().front()->get_name();
    char* summary = nullptr;
    const hetcov_status st = runners.at(name)(cfg.get(), &summary);
    if (st != HETCOV_OK) throw CliError{st, name + ": " + hetcov_last_error()};
    const std::string text = take(summary);
    if (!quiet) std::cout << nlohmann::json::parse(text).dump(2) << '\n';
    return 0;
  } catch (const CliError& e) {
    std::cerr << "hetcov: error [" << hetcov_status_name(e.status) << "] " << e.message << '\n';
    return static_cast<int>(e.status);
  }
}
