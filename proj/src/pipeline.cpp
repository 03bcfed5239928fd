#include "pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "evaluate.hpp"
#include "parallel.hpp"

namespace hetcov {

namespace {

constexpr std::size_t kCoordChunk = 256;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double log_sum_exp(const VecR& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

int CoordinateSet::n_flagged() const { return static_cast<int>(std::count(flagged.begin(), flagged.end(), true)); }

CoordinateSet estimate_coordinates(const ImageData& data, const VecC& mu, const MatC& eigvecs) {
  const std::size_t n = data.size();
  const Eigen::Index d = eigvecs.cols();
  require(mu.size() == data.idx.p_hat() && eigvecs.rows() == data.idx.p_hat(), ErrorKind::invalid_argument,
          "mean or eigenvectors do not match the basis");
  CoordinateSet out;
  out.alphas = MatC::Zero(static_cast<Eigen::Index>(n), d);
  out.residuals = VecR::Zero(static_cast<Eigen::Index>(n));
  std::vector<char> flags(n, 0);
  ProjectionBuilder builder(data.idx);
  parallel_chunks(n, kCoordChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    ProjectionMatrix P;
    MatC D(data.idx.q_hat(), d);
    for (std::size_t s = b; s < e; ++s) {
      builder.build_into(data.rotations[s], P);
      const VecC target = data.coeffs.col(static_cast<Eigen::Index>(s)) - P.apply(mu);
      for (Eigen::Index j = 0; j < d; ++j) D.col(j) = P.apply(eigvecs.col(j));
      VecC alpha = VecC::Zero(d);
      if (d > 0) {
        Eigen::SelfAdjointEigenSolver<MatC> es(D.adjoint() * D);
        const VecR& lam = es.eigenvalues();
        const double cutoff = 1e-8 * std::max(lam.maxCoeff(), 0.0);
        const VecC rhs = es.eigenvectors().adjoint() * (D.adjoint() * target);
        VecC y = VecC::Zero(d);
        for (Eigen::Index j = 0; j < d; ++j) {
          if (lam[j] > cutoff && lam[j] > 0.0)
            y[j] = rhs[j] / lam[j];
          else
            flags[s] = 1;
        }
        alpha = es.eigenvectors() * y;
      }
      out.alphas.row(static_cast<Eigen::Index>(s)) = alpha.transpose();
      out.residuals[static_cast<Eigen::Index>(s)] = (target - D * alpha).norm();
    }
  });
  out.flagged.assign(flags.begin(), flags.end());
  return out;
}

MatR real_embedding(const MatC& alphas) {
  MatR X(alphas.rows(), 2 * alphas.cols());
  for (Eigen::Index j = 0; j < alphas.cols(); ++j) {
    X.col(2 * j) = alphas.col(j).real();
    X.col(2 * j + 1) = alphas.col(j).imag();
  }
  return X;
}

MatC complex_from_embedding(const MatR& points) {
  require(points.cols() % 2 == 0, ErrorKind::invalid_argument, "real embedding needs an even dimension");
  MatC out(points.rows(), points.cols() / 2);
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = cplx(points(i, 2 * j), points(i, 2 * j + 1));
  return out;
}

MatC MixtureModel::complex_means() const { return complex_from_embedding(means); }

namespace {

struct EmState {
  const MatR& X;
  const GmmOptions& opt;
  int C;
  MatR means;
  VecR weights;
  double variance = 0.0;
  std::vector<MatR> covs;
  double var_floor = 0.0;
  double total_var = 0.0;

  // Log of weight_c * N(x_s; mean_c, cov_c), n x C.
  MatR log_joint() const {
    const Eigen::Index n = X.rows(), D = X.cols();
    MatR L(n, C);
    for (int c = 0; c < C; ++c) {
      const double lw = weights[c] > 0 ? std::log(weights[c]) : -std::numeric_limits<double>::infinity();
      if (opt.covariance == CovarianceModel::isotropic) {
        const double norm = -0.5 * D * std::log(2.0 * kPi * variance);
        for (Eigen::Index s = 0; s < n; ++s)
          L(s, c) = lw + norm - 0.5 * (X.row(s) - means.row(c)).squaredNorm() / variance;
      } else {
        Eigen::LLT<MatR> llt(covs[c]);
        if (llt.info() != Eigen::Success) fail(ErrorKind::solver, "mixture covariance lost positive definiteness");
        const MatR& Lc = llt.matrixL();
        const double logdet = 2.0 * Lc.diagonal().array().log().sum();
        const double norm = -0.5 * (D * std::log(2.0 * kPi) + logdet);
        const MatR diff = (X.rowwise() - means.row(c)).transpose();
        const MatR z = llt.matrixL().solve(diff);
        for (Eigen::Index s = 0; s < n; ++s) L(s, c) = lw + norm - 0.5 * z.col(s).squaredNorm();
      }
    }
    return L;
  }

  // E-step; fills responsibilities and returns the total log-likelihood.
  double e_step(MatR& R) const {
    const MatR L = log_joint();
    R.resize(L.rows(), L.cols());
    double total = 0.0;
    for (Eigen::Index s = 0; s < L.rows(); ++s) {
      const double lse = log_sum_exp(L.row(s).transpose());
      total += lse;
      R.row(s) = (L.row(s).array() - lse).exp();
    }
    return total;
  }

  void m_step(const MatR& R) {
    const Eigen::Index n = X.rows(), D = X.cols();
    const VecR mass = R.colwise().sum().transpose();
    weights = mass / static_cast<double>(n);
    for (int c = 0; c < C; ++c)
      if (mass[c] > 0) means.row(c) = (R.col(c).transpose() * X) / mass[c];
    if (opt.covariance == CovarianceModel::isotropic) {
      double acc = 0.0;
      for (int c = 0; c < C; ++c)
        for (Eigen::Index s = 0; s < n; ++s) acc += R(s, c) * (X.row(s) - means.row(c)).squaredNorm();
      variance = std::max(acc / (static_cast<double>(n) * D), var_floor);
    } else {
      for (int c = 0; c < C; ++c) {
        const MatR diff = X.rowwise() - means.row(c);
        MatR S = diff.transpose() * R.col(c).asDiagonal() * diff / std::max(mass[c], 1e-300);
        S.diagonal().array() += opt.regularization * total_var + var_floor;
        covs[c] = S;
      }
    }
  }
};

// k-means++ centers drawn with probability proportional to squared distance.
MatR kmeans_pp(const MatR& X, int C, std::mt19937_64& gen) {
  const Eigen::Index n = X.rows();
  MatR centers(C, X.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = X.row(pick(gen));
  VecR d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < C; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(gen), acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index s = 0; s < n; ++s) {
        acc += d2[s];
        if (acc >= target && d2[s] > 0) {
          chosen = s;
          break;
        }
      }
    } else {
      chosen = pick(gen);
    }
    centers.row(c) = X.row(chosen);
    d2 = d2.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

MixtureModel fit_gmm(const MatR& points, int C, const GmmOptions& opt) {
  const Eigen::Index n = points.rows(), D = points.cols();
  require(C >= 1, ErrorKind::invalid_argument, "mixture needs at least one component");
  require(n >= C, ErrorKind::invalid_argument, "fewer points than mixture components");
  require(points.allFinite(), ErrorKind::invalid_argument, "coordinates contain non-finite values");
  require(opt.max_iter >= 1 && opt.tol >= 0, ErrorKind::config, "invalid mixture iteration settings");

  MixtureModel model;
  model.C = C;
  if (D == 0) {
    model.means = MatR::Zero(C, 0);
    model.weights = VecR::Constant(C, 1.0 / C);
    model.converged = true;
    return model;
  }

  EmState st{points, opt, C, {}, {}, 0.0, {}, 0.0, 0.0};
  const VecR centroid = points.colwise().mean().transpose();
  st.total_var = (points.rowwise() - centroid.transpose()).squaredNorm() / (static_cast<double>(n) * D);
  st.var_floor = std::max(1e-12 * st.total_var, 1e-300);

  std::mt19937_64 gen(opt.seed);
  st.means = kmeans_pp(points, C, gen);
  // Hard assignment to the nearest center starts EM.
  MatR R = MatR::Zero(n, C);
  for (Eigen::Index s = 0; s < n; ++s) {
    Eigen::Index best = 0;
    (st.means.rowwise() - points.row(s)).rowwise().squaredNorm().minCoeff(&best);
    R(s, best) = 1.0;
  }
  st.weights = VecR::Constant(C, 1.0 / C);
  st.covs.assign(C, MatR::Identity(D, D));
  {
    const VecR mass = R.colwise().sum().transpose();
    const MatR init_means = st.means;
    st.m_step(R);
    for (int c = 0; c < C; ++c)
      if (mass[c] == 0) st.means.row(c) = init_means.row(c);
    if (opt.covariance == CovarianceModel::full)
      for (int c = 0; c < C; ++c)
        if (mass[c] < 2) st.covs[c] = MatR::Identity(D, D) * std::max(st.total_var, st.var_floor);
    st.weights = (mass.array() + 1.0) / static_cast<double>(n + C);
  }

  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    double ll = st.e_step(R);
    VecR mass = R.colwise().sum().transpose();
    for (int c = 0; c < C; ++c) {
      if (mass[c] >= 1e-12) continue;
      if (model.reseeds > 0) fail(ErrorKind::solver, "mixture component " + std::to_string(c) + " emptied twice");
      ++model.reseeds;
      // farthest point from its nearest surviving mean
      VecR dist = VecR::Constant(n, std::numeric_limits<double>::infinity());
      for (int o = 0; o < C; ++o)
        if (o != c) dist = dist.cwiseMin((points.rowwise() - st.means.row(o)).rowwise().squaredNorm());
      Eigen::Index far = 0;
      dist.maxCoeff(&far);
      st.means.row(c) = points.row(far);
      st.weights[c] = 1.0 / static_cast<double>(n);
      st.weights /= st.weights.sum();
      ll = st.e_step(R);
      mass = R.colwise().sum().transpose();
      prev = -std::numeric_limits<double>::infinity();
      break;
    }
    model.loglik_trace.push_back(ll);
    model.iterations = it + 1;
    if (std::isfinite(prev) && std::abs(ll - prev) <= opt.tol * std::max(std::abs(ll), 1e-300)) {
      model.converged = true;
      break;
    }
    prev = ll;
    st.m_step(R);
  }
  if (!model.converged) {
    // the last M-step moved the parameters; score them
    MatR Rf;
    model.loglik_trace.push_back(st.e_step(Rf));
  }
  model.loglik = model.loglik_trace.back();
  model.means = st.means;
  model.weights = st.weights / st.weights.sum();
  model.variance = opt.covariance == CovarianceModel::isotropic ? st.variance : 0.0;
  if (opt.covariance == CovarianceModel::full) model.covariances = st.covs;
  return model;
}

std::vector<VecC> reconstruct_volumes(const VecC& mu, const MatC& eigvecs, const MatC& means) {
  require(eigvecs.cols() == means.cols() && eigvecs.rows() == mu.size(), ErrorKind::invalid_argument,
          "mixture means do not match the eigenvectors");
  std::vector<VecC> out;
  for (Eigen::Index c = 0; c < means.rows(); ++c) out.push_back(mu + eigvecs * means.row(c).transpose());
  return out;
}

NoiseSource parse_noise_source(const std::string& name) {
  if (name == "corners") return NoiseSource::corners;
  if (name == "dataset") return NoiseSource::dataset;
  fail(ErrorKind::config, "unknown noise source '" + name + "' (expected corners or dataset)");
}

std::string to_string(NoiseSource s) { return s == NoiseSource::corners ? "corners" : "dataset"; }

BasisSetup make_basis_setup(int K, double omega_max, int N, int quad_order) {
  require(K >= 0, ErrorKind::config, "K must be non-negative");
  BasisSetup b{build_radial_basis(K, omega_max, quad_order > 0 ? quad_order : default_quad_order(K, omega_max)),
               make_index_sets(K), {}};
  b.map = build_pixel_map(N, b.basis, b.idx);
  return b;
}

EstimateResult estimate(const Dataset& ds, const EstimateSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  require(ds.size() > 0, ErrorKind::invalid_argument, "dataset is empty");
  const int K = settings.K >= 0 ? settings.K : ds.K;
  const double sigma2 = settings.noise == NoiseSource::corners ? estimate_sigma2_from_corners(ds.images, ds.size(), ds.N)
                                                               : ds.sigma2;
  const BasisSetup setup = make_basis_setup(K, ds.omega_max, ds.N, settings.quad_order);
  const ImageData data = make_image_data(ds.images, ds.rotations, setup.map, setup.idx, sigma2);
  const double setup_time = seconds_since(t0);
  EstimateResult r = estimate(data, sigma2, ds.sigma2, settings.noise, ds.omega_max, settings);
  r.times.setup = setup_time;
  return r;
}

EstimateResult estimate(const ImageData& data, double sigma2, double sigma2_dataset, NoiseSource noise,
                        double omega_max, const EstimateSettings& settings) {
  EstimateResult r;
  r.K = data.idx.K;
  r.omega_max = omega_max;
  r.sigma2 = sigma2;
  r.sigma2_dataset = sigma2_dataset;
  r.noise = noise;
  r.solver = settings.solver;

  auto t = std::chrono::steady_clock::now();
  r.mean = solve_mean(accumulate_mean(data), settings.solver, &data, settings.mean_guard_factor);
  r.times.mean = seconds_since(t);

  t = std::chrono::steady_clock::now();
  const MatC B = accumulate_covariance_rhs(data, r.mean.mu);
  if (settings.solver == SolverMode::limiting) {
    KernelBlockProvider provider(r.K, settings.cache_dir);
    r.covariance = solve_covariance_limiting(B, provider, settings.covariance);
  } else {
    r.covariance = solve_covariance_empirical(B, data, settings.covariance);
  }
  r.times.covariance = seconds_since(t);
  return r;
}

void save_estimate(const EstimateResult& est, const std::filesystem::path& path, const std::string& config_hash,
                   const std::string& dataset_hash) {
  Container c("estimate", config_hash);
  auto& m = c.meta();
  m["K"] = est.K;
  m["omega_max"] = est.omega_max;
  m["sigma2"] = est.sigma2;
  m["sigma2_dataset"] = est.sigma2_dataset;
  m["noise_source"] = to_string(est.noise);
  m["solver"] = to_string(est.solver);
  m["dataset_hash"] = dataset_hash;
  m["mean"] = {{"n_used", est.mean.n_used},
               {"residual_norm", est.mean.residual_norm},
               {"guard_triggered", est.mean.guard_triggered},
               {"min_eig_A", est.mean.min_eig_A}};
  const auto& cov = est.covariance;
  json blocks = json::array();
  for (const auto& b : cov.blocks)
    blocks.push_back({{"k1", b.k1},
                      {"k2", b.k2},
                      {"iterations", b.iterations},
                      {"max_iterations", b.max_iterations},
                      {"rel_residual", b.rel_residual},
                      {"converged", b.converged}});
  m["covariance"] = {{"rank_estimate", cov.rank_estimate},
                     {"guard_triggered", cov.guard_triggered},
                     {"diagnostics", cov.diagnostics},
                     {"total_iterations", cov.total_iterations},
                     {"blocks", blocks}};
  m["times"] = {{"setup", est.times.setup}, {"mean", est.times.mean}, {"covariance", est.times.covariance}};
  c.put("mu", MatC(est.mean.mu));
  c.put("sigma", cov.sigma);
  c.put("eigvals", MatR(cov.eigvals));
  c.put("eigvecs", cov.eigvecs);
  c.save(path);
}

EstimateResult load_estimate(const std::filesystem::path& path) {
  const Container c = Container::load(path, "estimate");
  EstimateResult r;
  try {
    const auto& m = c.meta();
    r.K = m.at("K").get<int>();
    r.omega_max = m.at("omega_max").get<double>();
    r.sigma2 = m.at("sigma2").get<double>();
    r.sigma2_dataset = m.at("sigma2_dataset").get<double>();
    r.noise = parse_noise_source(m.at("noise_source").get<std::string>());
    r.solver = parse_solver_mode(m.at("solver").get<std::string>());
    const auto& mm = m.at("mean");
    r.mean.n_used = mm.at("n_used").get<int>();
    r.mean.residual_norm = mm.at("residual_norm").get<double>();
    r.mean.guard_triggered = mm.at("guard_triggered").get<bool>();
    r.mean.min_eig_A = mm.at("min_eig_A").get<double>();
    const auto& cm = m.at("covariance");
    r.covariance.rank_estimate = cm.at("rank_estimate").get<int>();
    r.covariance.guard_triggered = cm.at("guard_triggered").get<bool>();
    r.covariance.diagnostics = cm.at("diagnostics").get<std::string>();
    r.covariance.total_iterations = cm.at("total_iterations").get<int>();
    for (const auto& b : cm.at("blocks"))
      r.covariance.blocks.push_back({b.at("k1").get<int>(), b.at("k2").get<int>(), b.at("iterations").get<int>(),
                                     b.at("max_iterations").get<int>(), b.at("rel_residual").get<double>(),
                                     b.at("converged").get<bool>()});
    const auto& tm = m.at("times");
    r.times.setup = tm.at("setup").get<double>();
    r.times.mean = tm.at("mean").get<double>();
    r.times.covariance = tm.at("covariance").get<double>();
    r.dataset_hash = m.at("dataset_hash").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "malformed estimate metadata in '" + path.string() + "': " + e.what());
  }
  r.config_hash = c.config_hash();
  r.mean.mu = c.get_complex("mu").col(0);
  r.covariance.sigma = c.get_complex("sigma");
  r.covariance.eigvals = c.get_real("eigvals").col(0);
  r.covariance.eigvecs = c.get_complex("eigvecs");
  const int p = BasisIndexSet::volume_block_offset(r.K + 1);
  if (r.mean.mu.size() != p || r.covariance.sigma.rows() != p || r.covariance.sigma.cols() != p)
    fail(ErrorKind::format, "estimate arrays in '" + path.string() + "' do not match K = " + std::to_string(r.K));
  return r;
}

AnalyzeResult analyze(const ImageData& data, const EstimateResult& est, const AnalyzeSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  require(data.idx.K == est.K, ErrorKind::invalid_argument, "images and estimate use different K");
  require(settings.classes >= 0, ErrorKind::config, "class count must be non-negative");
  AnalyzeResult r;
  r.rank_estimate = est.covariance.rank_estimate;
  r.classes_overridden = settings.classes > 0;
  r.C = r.classes_overridden ? settings.classes : r.rank_estimate + 1;
  const int d = r.C - 1;
  require(d <= est.covariance.eigvecs.cols(), ErrorKind::invalid_argument,
          "class count exceeds the available eigenvectors");
  const MatC V = est.covariance.eigvecs.leftCols(d);
  r.coords = estimate_coordinates(data, est.mean.mu, V);
  r.mixture = fit_gmm(real_embedding(r.coords.alphas), r.C, settings.gmm);
  r.volumes = reconstruct_volumes(est.mean.mu, V, r.mixture.complex_means());
  r.seconds = seconds_since(t0);
  return r;
}

PipelineResult run_pipeline(const Dataset& ds, const EstimateSettings& es, const AnalyzeSettings& as) {
  const auto t0 = std::chrono::steady_clock::now();
  const int K = es.K >= 0 ? es.K : ds.K;
  const double sigma2 = es.noise == NoiseSource::corners ? estimate_sigma2_from_corners(ds.images, ds.size(), ds.N)
                                                         : ds.sigma2;
  const BasisSetup setup = make_basis_setup(K, ds.omega_max, ds.N, es.quad_order);
  const ImageData data = make_image_data(ds.images, ds.rotations, setup.map, setup.idx, sigma2);
  PipelineResult out;
  const double setup_time = seconds_since(t0);
  out.estimate = estimate(data, sigma2, ds.sigma2, es.noise, ds.omega_max, es);
  out.estimate.times.setup = setup_time;
  out.analysis = analyze(data, out.estimate, as);
  out.estimate.times.analyze = out.analysis.seconds;
  return out;
}

std::vector<double> rank_gap_ratios(const VecR& eigvals) {
  std::vector<double> out;
  const Eigen::Index top = std::min<Eigen::Index>(11, eigvals.size());
  for (Eigen::Index i = 0; i + 1 < top; ++i) {
    if (!(eigvals[i] > 0)) break;
    out.push_back(eigvals[i + 1] > 0 ? eigvals[i] / eigvals[i + 1] : std::numeric_limits<double>::infinity());
  }
  return out;
}

json TruthMetrics::to_json() const {
  json j;
  j["true_rank"] = true_rank;
  j["mean_correlation"] = mean_correlation;
  j["mean_rel_error"] = mean_rel_error;
  j["covariance_rel_error"] = covariance_rel_error;
  j["eigvec_correlations"] = eigvec_correlations;
  j["eigval_true"] = eigval_true;
  if (!class_match.empty()) {
    j["class_match"] = class_match;
    j["volume_correlations"] = volume_correlations;
    j["weight_errors"] = weight_errors;
    j["max_weight_error"] = max_weight_error;
  }
  if (hull_fraction) j["hull_fraction"] = *hull_fraction;
  return j;
}

TruthMetrics compare_with_truth(const GroundTruth& truth, const EstimateResult& est, const AnalyzeResult* analysis) {
  TruthMetrics m;
  require(truth.mu0.size() == est.mean.mu.size(), ErrorKind::invalid_argument,
          "ground truth and estimate use different bases");
  const VecR& ev = truth.sigma0_eigvals;
  const double top = ev.size() > 0 ? ev[0] : 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (top > 0 && ev[i] > 1e-8 * top) ++m.true_rank;
  m.mean_correlation = correlation(est.mean.mu, truth.mu0);
  m.mean_rel_error = (est.mean.mu - truth.mu0).norm() / truth.mu0.norm();
  const double s0 = truth.sigma0.norm();
  m.covariance_rel_error = (est.covariance.sigma - truth.sigma0).norm() / (s0 > 0 ? s0 : 1.0);
  const Eigen::Index nv = std::min<Eigen::Index>(m.true_rank, est.covariance.eigvecs.cols());
  for (Eigen::Index i = 0; i < nv; ++i) {
    m.eigvec_correlations.push_back(correlation(est.covariance.eigvecs.col(i), truth.sigma0_eigvecs.col(i)));
    m.eigval_true.push_back(ev[i]);
  }
  if (!analysis) return m;

  if (truth.mode == Heterogeneity::discrete) {
    std::vector<VecC> true_vols;
    for (Eigen::Index c = 0; c < truth.class_coeffs.cols(); ++c) true_vols.push_back(truth.class_coeffs.col(c));
    m.class_match = match_classes(analysis->volumes, true_vols, truth.mu0);
    for (std::size_t c = 0; c < analysis->volumes.size(); ++c) {
      const int t = m.class_match[c];
      const double w = analysis->mixture.weights[static_cast<Eigen::Index>(c)];
      double corr = 0.0;
      if (t >= 0) {
        const VecC a = analysis->volumes[c] - est.mean.mu, b = true_vols[t] - truth.mu0;
        if (a.norm() > 0 && b.norm() > 0) corr = a.dot(b).real() / (a.norm() * b.norm());
      }
      m.volume_correlations.push_back(corr);
      m.weight_errors.push_back(std::abs(w - (t >= 0 ? truth.mean_weights[t] : 0.0)));
    }
    // true classes without an estimate count as fully missed weight
    for (Eigen::Index t = 0; t < truth.class_coeffs.cols(); ++t)
      if (std::find(m.class_match.begin(), m.class_match.end(), static_cast<int>(t)) == m.class_match.end())
        m.weight_errors.push_back(truth.mean_weights[t]);
    m.max_weight_error = *std::max_element(m.weight_errors.begin(), m.weight_errors.end());
  } else if (analysis->coords.alphas.cols() == 2 && truth.class_coeffs.cols() == 3) {
    m.hull_fraction = triangle_hull_fraction(analysis->coords.alphas, truth.weights,
                                             triangle_vertices(truth.class_coeffs, truth.mean_weights));
  }
  return m;
}

std::string coordinates_csv(const CoordinateSet& coords, const std::vector<int>* labels) {
  std::ostringstream os;
  os << std::setprecision(17) << "image";
  for (Eigen::Index j = 0; j < coords.alphas.cols(); ++j) os << ",re_alpha" << j + 1 << ",im_alpha" << j + 1;
  os << ",residual,flagged";
  if (labels) os << ",true_label";
  os << '\n';
  for (Eigen::Index s = 0; s < coords.alphas.rows(); ++s) {
    os << s;
    for (Eigen::Index j = 0; j < coords.alphas.cols(); ++j)
      os << ',' << coords.alphas(s, j).real() << ',' << coords.alphas(s, j).imag();
    os << ',' << coords.residuals[s] << ',' << (coords.flagged[static_cast<std::size_t>(s)] ? 1 : 0);
    if (labels) os << ',' << (*labels)[static_cast<std::size_t>(s)];
    os << '\n';
  }
  return os.str();
}

}  // namespace hetcov
