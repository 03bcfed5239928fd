#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "estimator.hpp"
#include "simulate.hpp"

namespace hetcov {

// Per-image least-squares coordinates along the leading eigenvectors.
struct CoordinateSet {
  MatC alphas;  // n x (C - 1)
  VecR residuals;
  std::vector<bool> flagged;  // design rank-deficient at the 1e-8 cutoff
  int n_flagged() const;
};

CoordinateSet estimate_coordinates(const ImageData& data, const VecC& mu, const MatC& eigvecs);

// Real embedding (n x 2d): columns Re a_1, Im a_1, Re a_2, ...
MatR real_embedding(const MatC& alphas);
MatC complex_from_embedding(const MatR& points);

enum class CovarianceModel { isotropic, full };

struct GmmOptions {
  int max_iter = 200;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  CovarianceModel covariance = CovarianceModel::isotropic;
  double regularization = 1e-6;  // full model: added to the diagonal, relative to the data variance
};

struct MixtureModel {
  int C = 0;
  MatR means;                     // C x D
  VecR weights;                   // C
  double variance = 0.0;          // isotropic model: shared per-coordinate variance
  std::vector<MatR> covariances;  // full model: one D x D matrix per component
  double loglik = 0.0;            // total log-likelihood of the final parameters
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;

  MatC complex_means() const;
};

// EM for a Gaussian mixture on the rows of `points` (n x D), seeded by k-means++.
MixtureModel fit_gmm(const MatR& points, int C, const GmmOptions& opt = {});

// X^c = mu + V mean_c for each component.
std::vector<VecC> reconstruct_volumes(const VecC& mu, const MatC& eigvecs, const MatC& means);

enum class NoiseSource { corners, dataset };
NoiseSource parse_noise_source(const std::string& name);
std::string to_string(NoiseSource s);

struct EstimateSettings {
  SolverMode solver = SolverMode::limiting;
  CovarianceOptions covariance;
  double mean_guard_factor = 2.0;
  NoiseSource noise = NoiseSource::corners;
  int K = -1;  // -1: take from the dataset
  std::optional<std::filesystem::path> cache_dir;
  int quad_order = 0;  // 0: default for K and omega_max
};

struct StageTimes {
  double setup = 0.0, mean = 0.0, covariance = 0.0, analyze = 0.0;
};

struct EstimateResult {
  int K = 0;
  double omega_max = 0.0;
  double sigma2 = 0.0;
  double sigma2_dataset = 0.0;
  NoiseSource noise = NoiseSource::corners;
  SolverMode solver = SolverMode::limiting;
  MeanEstimate mean;
  CovarianceEstimate covariance;
  StageTimes times;
  // Set when loaded from a file.
  std::string config_hash, dataset_hash;
};

// Shared basis objects for one K and bandlimit.
struct BasisSetup {
  RadialBasis basis;
  BasisIndexSet idx;
  PixelMap map;
};
BasisSetup make_basis_setup(int K, double omega_max, int N, int quad_order = 0);

// Noise estimation, image mapping, mean and covariance solves.
EstimateResult estimate(const Dataset& ds, const EstimateSettings& settings);
// Same, reusing already mapped images.
EstimateResult estimate(const ImageData& data, double sigma2, double sigma2_dataset, NoiseSource noise,
                        double omega_max, const EstimateSettings& settings);

void save_estimate(const EstimateResult& est, const std::filesystem::path& path, const std::string& config_hash,
                   const std::string& dataset_hash);
EstimateResult load_estimate(const std::filesystem::path& path);

struct AnalyzeSettings {
  int classes = 0;  // 0: C = rank + 1
  GmmOptions gmm;
};

struct AnalyzeResult {
  int C = 1;
  int rank_estimate = 0;
  bool classes_overridden = false;
  CoordinateSet coords;
  MixtureModel mixture;
  std::vector<VecC> volumes;
  double seconds = 0.0;
};

// Coordinates, mixture fit and volume reconstruction.
AnalyzeResult analyze(const ImageData& data, const EstimateResult& est, const AnalyzeSettings& settings);

struct PipelineResult {
  EstimateResult estimate;
  AnalyzeResult analysis;
};

// Estimation followed by analysis on one dataset.
PipelineResult run_pipeline(const Dataset& ds, const EstimateSettings& es, const AnalyzeSettings& as);

// The ten leading ratios lambda_i / lambda_{i+1} examined by the rank rule.
std::vector<double> rank_gap_ratios(const VecR& eigvals);

// Comparison of an estimate (and optional analysis) with simulation truth.
struct TruthMetrics {
  int true_rank = 0;
  double mean_correlation = 0.0;
  double mean_rel_error = 0.0;
  double covariance_rel_error = 0.0;
  std::vector<double> eigvec_correlations;      // top true_rank eigenvectors
  std::vector<double> eigval_true;              // top true_rank eigenvalues of Sigma_0
  std::vector<int> class_match;                 // estimated class -> true class
  std::vector<double> volume_correlations;      // mean-subtracted, per estimated class
  std::vector<double> weight_errors;            // |p_est - p_true| per estimated class
  double max_weight_error = 0.0;
  std::optional<double> hull_fraction;          // triangle data with two coordinates
  json to_json() const;
};

TruthMetrics compare_with_truth(const GroundTruth& truth, const EstimateResult& est,
                                const AnalyzeResult* analysis = nullptr);

// Per-image coordinate table: s, Re/Im of each coordinate, residual, flag, and true label when known.
std::string coordinates_csv(const CoordinateSet& coords, const std::vector<int>* labels = nullptr);

}  // namespace hetcov
