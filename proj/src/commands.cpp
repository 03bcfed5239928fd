#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "evaluate.hpp"
#include "parallel.hpp"

namespace hetcov {

namespace fs = std::filesystem;

namespace {

// Runs one stage, prefixing errors with its label.
template <typename F>
auto stage(const std::string& label, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), label + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::io, label + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, label + ": " + e.what());
  } catch (const std::bad_alloc&) {
    throw Error(ErrorKind::internal, label + ": out of memory");
  }
}

void apply_runtime(const RunConfig& cfg) { set_thread_count(cfg.threads()); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

// Paths inside documents are stored relative to the document's directory.
std::string relative_to(const fs::path& target, const fs::path& doc) {
  const fs::path base = fs::absolute(doc).parent_path();
  return fs::relative(fs::absolute(target), base).generic_string();
}

fs::path resolve_from(const std::string& stored, const fs::path& doc) {
  const fs::path p(stored);
  return p.is_absolute() ? p : fs::absolute(doc).parent_path() / p;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void save_volume(const VecC& coeffs, const BasisSetup& setup, const fs::path& path, const json& meta, int grid,
                 const std::string& config_hash) {
  Container c("volume", config_hash);
  c.meta() = meta;
  c.meta()["K"] = setup.idx.K;
  c.meta()["omega_max"] = setup.basis.omega_max;
  c.put("coeffs", MatC(coeffs));
  if (grid > 0) {
    const RealGrid g = volume_to_real_grid(FourierVolume{setup.idx.K, setup.basis.omega_max, coeffs}, setup.basis,
                                           setup.idx, grid);
    c.meta()["grid"] = {{"N", grid}, {"order", "z_y_x"}, {"max_imag_residual", g.max_imag_residual}};
    c.put("real_grid", g.values);
  }
  c.save(path);
}

std::string fsc_csv(const FSCCurve& f) {
  std::ostringstream os;
  os << std::setprecision(12) << "shell_center,fsc,points,empty\n";
  for (std::size_t i = 0; i < f.values.size(); ++i)
    os << f.shell_centers[i] << ',' << f.values[i] << ',' << f.counts[i] << ',' << (f.empty_energy[i] ? 1 : 0)
       << '\n';
  return os.str();
}

// b times the unit phase that maximizes Re <a, b>.
VecC phase_aligned(const VecC& a, const VecC& b) {
  const cplx ip = b.dot(a);
  return std::abs(ip) > 0 ? VecC(b * (ip / std::abs(ip))) : b;
}

struct ReportInputs {
  fs::path report_path;
  json report;
  EstimateResult est;
  AnalysisFile analysis;
  std::optional<GroundTruth> truth;
  std::string config_hash;
};

ReportInputs load_report_inputs(const RunConfig& cfg) {
  ReportInputs in;
  const json& rs = cfg.section("report");
  in.report_path = rs.at("report").get<std::string>();
  in.report = stage("load report", [&] { return load_json_document(in.report_path, "report"); });
  in.est = stage("load estimate",
                 [&] { return load_estimate(resolve_from(in.report.at("estimate").get<std::string>(), in.report_path)); });
  in.analysis = stage("load analysis", [&] {
    return load_analysis(resolve_from(in.report.at("analysis").get<std::string>(), in.report_path));
  });
  std::optional<fs::path> truth_path;
  if (rs.at("truth").is_string())
    truth_path = rs.at("truth").get<std::string>();
  else if (in.report.contains("truth") && in.report.at("truth").is_string())
    truth_path = resolve_from(in.report.at("truth").get<std::string>(), in.report_path);
  if (truth_path) in.truth = stage("load ground truth", [&] { return load_ground_truth(*truth_path); });
  in.config_hash = fnv1a_hex(in.report.at("config_hash").get<std::string>() + cfg.hash({"report"}));
  return in;
}

// Writes the metric tables shared by report and plot-data; returns the file list.
json write_metric_tables(const ReportInputs& in, const RunConfig& cfg, const fs::path& dir) {
  const json& rs = cfg.section("report");
  const int shells = rs.at("fsc_shells").get<int>();
  const int bins = rs.at("histogram_bins").get<int>();
  require(shells >= 1 && bins >= 1, ErrorKind::config, "report.fsc_shells and report.histogram_bins must be positive");
  const auto& hash = in.config_hash;
  json files = json::array();
  auto emit = [&](const std::string& name, const std::string& csv) {
    write_text(dir / name, stamp_csv(csv, hash));
    files.push_back(name);
  };

  const VecR& ev = in.est.covariance.eigvals;
  {
    std::ostringstream os;
    os << std::setprecision(17) << "index,eigenvalue";
    if (in.truth) os << ",true_eigenvalue";
    os << '\n';
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      os << i << ',' << ev[i];
      if (in.truth) os << ',' << (i < in.truth->sigma0_eigvals.size() ? in.truth->sigma0_eigvals[i] : 0.0);
      os << '\n';
    }
    emit("eigenvalues.csv", os.str());
  }
  emit("eigen_histogram.csv", histogram_csv(eigen_histogram_export(ev, bins)));

  json metrics;
  metrics["C"] = in.report.at("C");
  metrics["rank_estimate"] = in.report.at("rank_estimate");
  if (!in.truth) return {{"files", files}, {"metrics", metrics}};

  const GroundTruth& gt = *in.truth;
  struct {
    RadialBasis basis;
    BasisIndexSet idx;
  } setup{stage("basis setup",
                [&] {
                  return build_radial_basis(in.est.K, in.est.omega_max, default_quad_order(in.est.K, in.est.omega_max));
                }),
          make_index_sets(in.est.K)};
  require(gt.mu0.size() == setup.idx.p_hat(), ErrorKind::format, "ground truth and estimate use different bases");
  const TruthMetrics tm = compare_with_truth(gt, in.est, &in.analysis.result);
  metrics["truth"] = tm.to_json();

  std::ostringstream corr;
  corr << std::setprecision(12) << "quantity,correlation\n";
  corr << "mean," << tm.mean_correlation << '\n';
  for (std::size_t i = 0; i < tm.eigvec_correlations.size(); ++i)
    corr << "eigenvector_" << i + 1 << ',' << tm.eigvec_correlations[i] << '\n';
  for (std::size_t c = 0; c < tm.volume_correlations.size(); ++c)
    corr << "volume_" << c << ',' << tm.volume_correlations[c] << '\n';
  emit("correlations.csv", corr.str());

  json cutoffs;
  const FSCCurve fm = fsc(in.est.mean.mu, gt.mu0, setup.basis, setup.idx, shells);
  emit("fsc_mean.csv", fsc_csv(fm));
  cutoffs["mean"] = fm.cutoff_freq;
  for (int i = 0; i < tm.true_rank && i < in.est.covariance.eigvecs.cols(); ++i) {
    const VecC v = in.est.covariance.eigvecs.col(i);
    const FSCCurve f = fsc(phase_aligned(gt.sigma0_eigvecs.col(i), v), gt.sigma0_eigvecs.col(i), setup.basis,
                           setup.idx, shells);
    emit("fsc_eigenvector_" + std::to_string(i + 1) + ".csv", fsc_csv(f));
    cutoffs["eigenvector_" + std::to_string(i + 1)] = f.cutoff_freq;
  }
  for (std::size_t c = 0; c < tm.class_match.size(); ++c) {
    const int t = tm.class_match[c];
    if (t < 0) continue;
    const VecC a = in.analysis.result.volumes[c] - in.est.mean.mu;
    const VecC b = gt.class_coeffs.col(t) - gt.mu0;
    if (a.norm() == 0 || b.norm() == 0) continue;
    const FSCCurve f = fsc(a, b, setup.basis, setup.idx, shells);
    emit("fsc_volume_" + std::to_string(c) + ".csv", fsc_csv(f));
    cutoffs["volume_" + std::to_string(c)] = f.cutoff_freq;
  }
  metrics["fsc_cutoffs"] = cutoffs;

  std::ostringstream mc;
  mc << std::setprecision(12) << "metric,value\n";
  mc << "C," << in.report.at("C").get<int>() << '\n';
  mc << "rank_estimate," << in.report.at("rank_estimate").get<int>() << '\n';
  mc << "true_rank," << tm.true_rank << '\n';
  mc << "mean_correlation," << tm.mean_correlation << '\n';
  mc << "mean_rel_error," << tm.mean_rel_error << '\n';
  mc << "covariance_rel_error," << tm.covariance_rel_error << '\n';
  for (std::size_t i = 0; i < tm.eigvec_correlations.size(); ++i)
    mc << "eigenvector_" << i + 1 << "_correlation," << tm.eigvec_correlations[i] << '\n';
  if (!tm.class_match.empty()) mc << "max_weight_error," << tm.max_weight_error << '\n';
  if (tm.hull_fraction) mc << "hull_fraction," << *tm.hull_fraction << '\n';
  emit("metrics.csv", mc.str());
  return {{"files", files}, {"metrics", metrics}};
}

}  // namespace

fs::path default_truth_path(const fs::path& dataset_json) {
  auto p = dataset_json;
  p.replace_extension(".truth.bin");
  return p;
}

std::string stamp_csv(const std::string& csv, const std::string& config_hash) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (header) {
      os << line << ",format_version,config_hash\n";
      header = false;
    } else {
      os << line << ',' << kFormatVersion << ',' << config_hash << '\n';
    }
  }
  return os.str();
}

void save_analysis(const AnalyzeResult& r, const EstimateResult& est, const fs::path& path,
                   const std::string& config_hash) {
  Container c("analysis", config_hash);
  auto& m = c.meta();
  m["C"] = r.C;
  m["rank_estimate"] = r.rank_estimate;
  m["classes_overridden"] = r.classes_overridden;
  m["K"] = est.K;
  m["omega_max"] = est.omega_max;
  m["mixture"] = {{"variance", r.mixture.variance},
                  {"loglik", r.mixture.loglik},
                  {"loglik_trace", r.mixture.loglik_trace},
                  {"iterations", r.mixture.iterations},
                  {"converged", r.mixture.converged},
                  {"reseeds", r.mixture.reseeds}};
  c.put("alphas", r.coords.alphas);
  c.put("residuals", MatR(r.coords.residuals));
  std::vector<std::int32_t> flags(r.coords.flagged.begin(), r.coords.flagged.end());
  c.put("flagged", flags);
  c.put("mixture_means", r.mixture.means);
  c.put("mixture_weights", MatR(r.mixture.weights));
  MatC vols(est.mean.mu.size(), static_cast<Eigen::Index>(r.volumes.size()));
  for (std::size_t i = 0; i < r.volumes.size(); ++i) vols.col(static_cast<Eigen::Index>(i)) = r.volumes[i];
  c.put("volumes", vols);
  c.put("mu", MatC(est.mean.mu));
  c.put("directions", MatC(est.covariance.eigvecs.leftCols(r.C - 1)));
  c.save(path);
}

AnalysisFile load_analysis(const fs::path& path) {
  const Container c = Container::load(path, "analysis");
  AnalysisFile a;
  auto& r = a.result;
  try {
    const auto& m = c.meta();
    r.C = m.at("C").get<int>();
    r.rank_estimate = m.at("rank_estimate").get<int>();
    r.classes_overridden = m.at("classes_overridden").get<bool>();
    a.K = m.at("K").get<int>();
    a.omega_max = m.at("omega_max").get<double>();
    const auto& mm = m.at("mixture");
    r.mixture.C = r.C;
    r.mixture.variance = mm.at("variance").get<double>();
    r.mixture.loglik = mm.at("loglik").get<double>();
    r.mixture.loglik_trace = mm.at("loglik_trace").get<std::vector<double>>();
    r.mixture.iterations = mm.at("iterations").get<int>();
    r.mixture.converged = mm.at("converged").get<bool>();
    r.mixture.reseeds = mm.at("reseeds").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "malformed analysis metadata in '" + path.string() + "': " + e.what());
  }
  r.coords.alphas = c.get_complex("alphas");
  r.coords.residuals = c.get_real("residuals").col(0);
  for (auto f : c.get_int("flagged")) r.coords.flagged.push_back(f != 0);
  r.mixture.means = c.get_real("mixture_means");
  r.mixture.weights = c.get_real("mixture_weights").col(0);
  const MatC vols = c.get_complex("volumes");
  for (Eigen::Index i = 0; i < vols.cols(); ++i) r.volumes.push_back(vols.col(i));
  a.mu = c.get_complex("mu").col(0);
  a.eigvecs = c.get_complex("directions");
  a.config_hash = c.config_hash();
  if (static_cast<int>(r.volumes.size()) != r.C || r.mixture.weights.size() != r.C)
    fail(ErrorKind::format, "analysis file '" + path.string() + "' is inconsistent");
  return a;
}

json cmd_simulate(const RunConfig& cfg) {
  apply_runtime(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const SimConfig sc = stage("simulate config", [&] { return cfg.sim_config(); });
  const json& s = cfg.section("simulate");
  const fs::path out = s.at("output").get<std::string>();
  const fs::path truth_path = s.at("truth").is_string() ? fs::path(s.at("truth").get<std::string>())
                                                        : default_truth_path(out);
  const std::string hash = cfg.hash({"simulate"});
  json warnings = json::array();
  for (const auto& c : sc.classes)
    for (const auto& w : c.phantom.validate()) warnings.push_back(w);
  const BasisSetup setup =
      stage("basis setup", [&] { return make_basis_setup(sc.K, sc.effective_omega_max(), sc.N); });
  Simulation sim = stage("generate", [&] { return generate_dataset(sc, setup.basis, setup.idx, hash); });
  sim.dataset.extra = {{"simulate", s}};
  stage("write dataset", [&] {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_dataset(sim.dataset, out);
    save_ground_truth(sim.truth, truth_path);
    return 0;
  });
  json summary = {{"command", "simulate"},
                  {"dataset", out.string()},
                  {"payload", payload_path(out).string()},
                  {"truth", truth_path.string()},
                  {"n", sim.dataset.size()},
                  {"sigma2", sim.truth.sigma2},
                  {"snr_het", sim.truth.snr_het},
                  {"snr", sim.truth.snr},
                  {"config_hash", hash},
                  {"warnings", warnings}};
  if (!cfg.deterministic()) summary["seconds"] = elapsed(t0);
  return summary;
}

json cmd_precompute(const RunConfig& cfg) {
  apply_runtime(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const json& s = cfg.section("precompute");
  const int K = s.at("K").get<int>();
  require(K >= 0, ErrorKind::config, "precompute.K must be non-negative");
  const auto dir = cfg.cache_dir();
  if (!dir) fail(ErrorKind::config, "precompute needs a cache directory (runtime.cache_dir or HETCOV_CACHE_DIR)");
  stage("create cache", [&] { return fs::create_directories(*dir); });
  const KernelBlockProvider provider(K, dir);
  std::vector<std::pair<int, int>> pairs;
  for (int k1 = 0; k1 <= K; ++k1)
    for (int k2 = k1; k2 <= K; ++k2) pairs.emplace_back(k1, k2);
  // largest blocks first so the tail of the schedule is short
  std::stable_sort(pairs.begin(), pairs.end(), [](auto a, auto b) { return a.first + a.second > b.first + b.second; });
  const bool stats = s.at("stats").get<bool>();
  std::vector<json> rows(pairs.size());
  stage("assemble blocks", [&] {
    parallel_chunks(pairs.size(), 1, [&](std::size_t i, std::size_t, std::size_t) {
      const auto [k1, k2] = pairs[i];
      const KernelBlock blk = provider.get(k1, k2);
      json row = {{"k1", k1},
                  {"k2", k2},
                  {"nnz", blk.nnz()},
                  {"fill_ratio", blk.fill_ratio()},
                  {"sparsity_bound", blk.sparsity_bound()},
                  {"within_bound", blk.within_sparsity_bound()}};
      if (stats && k1 == k2) {
        const BlockStats st = block_spectral_stats(blk);
        row["lambda_min"] = st.lambda_min;
        row["lambda_max"] = st.lambda_max;
        row["condition"] = st.lambda_max / st.lambda_min;
      }
      rows[i] = row;
    });
    return 0;
  });
  std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
    return std::make_pair(a["k1"].get<int>(), a["k2"].get<int>()) < std::make_pair(b["k1"].get<int>(), b["k2"].get<int>());
  });
  const std::string hash = fnv1a_hex("kernel_block:" + std::to_string(K) + ":" + kKernelConvention);
  const fs::path summary_path = *dir / ("precompute_K" + std::to_string(K) + ".json");
  json doc = {{"K", K}, {"convention", kKernelConvention}, {"blocks", rows}};
  if (!cfg.deterministic()) doc["seconds"] = elapsed(t0);
  stage("write summary", [&] {
    save_json_document(summary_path, doc, "precompute", hash);
    return 0;
  });
  return {{"command", "precompute"}, {"K", K}, {"blocks", rows.size()}, {"summary", summary_path.string()}};
}

json cmd_estimate(const RunConfig& cfg) {
  apply_runtime(cfg);
  const json& s = cfg.section("estimate");
  const EstimateSettings es = stage("estimate config", [&] { return cfg.estimate_settings(); });
  const fs::path ds_path = s.at("dataset").get<std::string>();
  const fs::path out = s.at("output").get<std::string>();
  const Dataset ds = stage("load dataset", [&] { return load_dataset(ds_path); });
  EstimateResult est = stage("estimate", [&] { return estimate(ds, es); });
  if (cfg.deterministic()) est.times = {};
  const std::string hash = fnv1a_hex(ds.config_hash + cfg.hash({"estimate"}));
  stage("write estimate", [&] {
    save_estimate(est, out, hash, ds.config_hash);
    return 0;
  });
  const auto& cov = est.covariance;
  json top = json::array();
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(10, cov.eigvals.size()); ++i) top.push_back(cov.eigvals[i]);
  return {{"command", "estimate"},
          {"output", out.string()},
          {"solver", to_string(est.solver)},
          {"K", est.K},
          {"sigma2", est.sigma2},
          {"rank_estimate", cov.rank_estimate},
          {"top_eigenvalues", top},
          {"mean_guard", est.mean.guard_triggered},
          {"covariance_guard", cov.guard_triggered},
          {"config_hash", hash}};
}

json cmd_analyze(const RunConfig& cfg) {
  apply_runtime(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const json& s = cfg.section("analyze");
  const AnalyzeSettings as = stage("analyze config", [&] { return cfg.analyze_settings(); });
  const fs::path ds_path = s.at("dataset").get<std::string>();
  const fs::path est_path = s.at("estimate").get<std::string>();
  const fs::path out = s.at("output").get<std::string>();
  const fs::path coords_path = s.at("coordinates").get<std::string>();
  const fs::path vol_dir = s.at("volumes_dir").get<std::string>();
  const int grid = s.at("volume_grid").get<int>();

  const Dataset ds = stage("load dataset", [&] { return load_dataset(ds_path); });
  const EstimateResult est = stage("load estimate", [&] { return load_estimate(est_path); });
  if (est.dataset_hash != ds.config_hash)
    fail(ErrorKind::format, "load estimate: '" + est_path.string() + "' was computed from a different dataset");
  std::optional<GroundTruth> truth;
  if (s.at("truth").is_string())
    truth = stage("load ground truth", [&] { return load_ground_truth(s.at("truth").get<std::string>()); });

  const int quad = cfg.section("estimate").at("quad_order").get<int>();
  const BasisSetup setup = stage("basis setup", [&] { return make_basis_setup(est.K, est.omega_max, ds.N, quad); });
  const ImageData data =
      stage("map images", [&] { return make_image_data(ds.images, ds.rotations, setup.map, setup.idx, est.sigma2); });
  const AnalyzeResult res = stage("analyze", [&] { return analyze(data, est, as); });
  const std::string hash = fnv1a_hex(est.config_hash + cfg.hash({"analyze"}));

  const fs::path analysis_path = fs::path(out).replace_extension(".analysis.bin");
  json volumes = json::array();
  stage("write outputs", [&] {
    fs::create_directories(vol_dir);
    save_analysis(res, est, analysis_path, hash);
    const fs::path mean_path = vol_dir / "mean.bin";
    save_volume(est.mean.mu, setup, mean_path, {{"role", "mean"}}, grid, hash);
    for (int c = 0; c < res.C; ++c) {
      const fs::path p = vol_dir / ("volume_" + std::to_string(c) + ".bin");
      const double w = res.mixture.weights[c];
      save_volume(res.volumes[static_cast<std::size_t>(c)], setup, p,
                  {{"role", "class"}, {"class", c}, {"probability", w}}, grid, hash);
      volumes.push_back({{"class", c}, {"probability", w}, {"file", relative_to(p, out)}});
    }
    const std::vector<int>* labels = truth ? &truth->labels : nullptr;
    write_text(coords_path, stamp_csv(coordinates_csv(res.coords, labels), hash));

    json doc;
    doc["C"] = res.C;
    doc["rank_estimate"] = res.rank_estimate;
    doc["classes_overridden"] = res.classes_overridden;
    doc["probabilities"] = std::vector<double>(res.mixture.weights.data(), res.mixture.weights.data() + res.C);
    doc["volumes"] = volumes;
    doc["mean_volume"] = relative_to(mean_path, out);
    const VecR& ev = est.covariance.eigvals;
    doc["eigenvalues"] = std::vector<double>(ev.data(), ev.data() + ev.size());
    doc["rank_diagnostics"] = {{"delta", cfg.section("estimate").at("rank_gap_delta")},
                               {"ratios", rank_gap_ratios(ev)},
                               {"rank", res.rank_estimate}};
    json means = json::array();
    const MatC cm = res.mixture.complex_means();
    for (Eigen::Index c = 0; c < cm.rows(); ++c) {
      json row = json::array();
      for (Eigen::Index j = 0; j < cm.cols(); ++j) row.push_back({cm(c, j).real(), cm(c, j).imag()});
      means.push_back(row);
    }
    doc["mixture"] = {{"means", means},
                      {"variance", res.mixture.variance},
                      {"loglik", res.mixture.loglik},
                      {"iterations", res.mixture.iterations},
                      {"converged", res.mixture.converged},
                      {"reseeds", res.mixture.reseeds}};
    doc["coordinates"] = {{"file", relative_to(coords_path, out)}, {"flagged", res.coords.n_flagged()}};
    doc["analysis"] = relative_to(analysis_path, out);
    doc["estimate"] = relative_to(est_path, out);
    doc["dataset"] = relative_to(ds_path, out);
    doc["truth"] = s.at("truth").is_string() ? json(relative_to(s.at("truth").get<std::string>(), out)) : json();
    doc["n"] = ds.size();
    doc["K"] = est.K;
    doc["omega_max"] = est.omega_max;
    doc["sigma2"] = est.sigma2;
    doc["solver"] = to_string(est.solver);
    doc["guards"] = {{"mean", est.mean.guard_triggered}, {"covariance", est.covariance.guard_triggered}};
    doc["covariance_diagnostics"] = est.covariance.diagnostics;
    if (!cfg.deterministic())
      doc["timings"] = {{"setup", est.times.setup},
                        {"mean", est.times.mean},
                        {"covariance", est.times.covariance},
                        {"analyze", elapsed(t0)}};
    save_json_document(out, doc, "report", hash);
    return 0;
  });
  return {{"command", "analyze"},
          {"report", out.string()},
          {"C", res.C},
          {"rank_estimate", res.rank_estimate},
          {"probabilities", std::vector<double>(res.mixture.weights.data(), res.mixture.weights.data() + res.C)},
          {"flagged_coordinates", res.coords.n_flagged()},
          {"config_hash", hash}};
}

json cmd_report(const RunConfig& cfg) {
  apply_runtime(cfg);
  const ReportInputs in = load_report_inputs(cfg);
  const fs::path dir = cfg.section("report").at("output_dir").get<std::string>();
  json tables = stage("metric tables", [&] { return write_metric_tables(in, cfg, dir); });
  stage("write metrics", [&] {
    save_json_document(dir / "metrics.json", tables["metrics"], "metrics", in.config_hash);
    return 0;
  });
  return {{"command", "report"}, {"output_dir", dir.string()}, {"files", tables["files"]}, {"metrics", tables["metrics"]}};
}

json cmd_plot_data(const RunConfig& cfg) {
  apply_runtime(cfg);
  const ReportInputs in = load_report_inputs(cfg);
  const fs::path dir = fs::path(cfg.section("report").at("output_dir").get<std::string>()) / "plot_data";
  const int bins = cfg.section("report").at("histogram_bins").get<int>();
  json tables = stage("metric tables", [&] { return write_metric_tables(in, cfg, dir); });
  json files = tables["files"];
  stage("plot tables", [&] {
    const auto& coords = in.analysis.result.coords;
    const std::vector<int>* labels = in.truth ? &in.truth->labels : nullptr;
    write_text(dir / "alpha_scatter.csv", stamp_csv(coordinates_csv(coords, labels), in.config_hash));
    files.push_back("alpha_scatter.csv");
    if (coords.alphas.cols() > 0) {
      const VecR re = coords.alphas.col(0).real();
      write_text(dir / "alpha_histogram.csv",
                 stamp_csv(histogram_csv(eigen_histogram_export(re, bins)), in.config_hash));
      files.push_back("alpha_histogram.csv");
    }
    // Reference curves for the spiked model at the aspect ratio of this run.
    const double gamma = std::min(1.0, static_cast<double>(in.est.mean.mu.size()) /
                                           static_cast<double>(std::max<std::size_t>(coords.alphas.rows(), 1)));
    const MPLaw law = mp_density(gamma, 1.0);
    std::ostringstream mp;
    mp << std::setprecision(12) << "x,density\n";
    for (int i = 0; i <= 200; ++i) {
      const double x = law.lower + (law.upper - law.lower) * i / 200.0;
      mp << x << ',' << law.density(x) << '\n';
    }
    write_text(dir / "mp_reference.csv", stamp_csv(mp.str(), in.config_hash));
    files.push_back("mp_reference.csv");
    std::ostringstream lc;
    lc << std::setprecision(12) << "tau2_over_sigma2,correlation,eigenvalue\n";
    for (int i = 1; i <= 200; ++i) {
      const double x = 4.0 * std::sqrt(gamma) * i / 200.0;
      const SpikePrediction sp = limiting_top_correlation(x, 1.0, gamma);
      lc << x << ',' << sp.correlation << ',' << sp.eigenvalue << '\n';
    }
    write_text(dir / "limiting_correlation.csv", stamp_csv(lc.str(), in.config_hash));
    files.push_back("limiting_correlation.csv");
    save_json_document(dir / "plot_data.json", {{"files", files}, {"gamma", gamma}, {"metrics", tables["metrics"]}},
                       "plot_data", in.config_hash);
    return 0;
  });
  return {{"command", "plot-data"}, {"output_dir", dir.string()}, {"files", files}};
}

}  // namespace hetcov
