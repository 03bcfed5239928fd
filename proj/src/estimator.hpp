#pragma once

#include <span>
#include <string>
#include <vector>

#include "kernel.hpp"
#include "projection.hpp"

namespace hetcov {

// Images in coefficient form, one column per image, with their rotations.
struct ImageData {
  BasisIndexSet idx;
  MatC coeffs;  // q_hat x n
  std::vector<Rotation> rotations;
  // Variance of the noise in each image coefficient: sigma^2 * c_q.
  double coeff_noise_var = 0.0;

  std::size_t size() const { return rotations.size(); }
};

// Maps raw N x N images (stored consecutively) through the pixel map.
ImageData make_image_data(std::span<const float> pixels, std::vector<Rotation> rotations, const PixelMap& map,
                          const BasisIndexSet& idx, double sigma2);

enum class SolverMode { limiting, empirical };
SolverMode parse_solver_mode(const std::string& name);
std::string to_string(SolverMode mode);

// b_n = (1/n) sum_s P_s^H I_s.
VecC accumulate_mean(const ImageData& data);

struct MeanEstimate {
  VecC mu;
  int n_used = 0;
  double residual_norm = 0.0;  // ||A_n mu - b_n|| for the operator actually used
  bool guard_triggered = false;
  double min_eig_A = 0.5;  // smallest eigenvalue of the operator inverted
};

// Limiting mode doubles b_n. Empirical mode inverts A_n = (1/n) sum P_s^H P_s,
// which is block diagonal in k, and returns a flagged zero when
// ||A_n^{-1}|| > guard_factor * ||A^{-1}|| = 2 guard_factor.
MeanEstimate solve_mean(const VecC& b, SolverMode mode, const ImageData* data = nullptr, double guard_factor = 2.0);

// Per-block eigenvalues of A_n, ascending within each block.
std::vector<VecR> empirical_A_spectrum(const ImageData& data);

// B_n = (1/n) sum_s P_s^H r_s r_s^H P_s - sigma^2 c_q I / 2 with r_s = I_s - P_s mu.
MatC accumulate_covariance_rhs(const ImageData& data, const VecC& mu);

struct BlockSolveReport {
  int k1 = 0, k2 = 0;
  int iterations = 0;
  int max_iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

struct CovarianceOptions {
  double cg_tol = 1e-8;
  int max_iter = 0;  // 0: per-block budget max(200, 10 sqrt(condition bound))
  bool jacobi = false;
  double guard_factor = 2.0;
  double rank_gap_delta = 0.5;
  int stagnation_window = 50;
  double stagnation_improvement = 1e-3;
  bool decompose = true;  // compute eigenpairs and rank
};

struct CovarianceEstimate {
  MatC sigma;
  VecR eigvals;  // descending
  MatC eigvecs;  // columns, phase fixed
  int rank_estimate = 0;
  std::vector<BlockSolveReport> blocks;
  bool guard_triggered = false;
  std::string diagnostics;
  int total_iterations = 0;
};

int default_block_iterations(int k1, int k2);

CovarianceEstimate solve_covariance_limiting(const MatC& B, const KernelBlockProvider& provider,
                                             const CovarianceOptions& opt = {});

// Solves several right-hand sides with one pass over the kernel blocks.
std::vector<CovarianceEstimate> solve_covariance_limiting_batch(const std::vector<MatC>& Bs,
                                                                const KernelBlockProvider& provider,
                                                                const CovarianceOptions& opt = {});

// Applies L_n(S) = (1/n) sum_s P_s^H P_s S P_s^H P_s; projection matrices are
// cached when they fit in the memory budget.
class EmpiricalOperator {
 public:
  explicit EmpiricalOperator(const ImageData& data, std::size_t cache_budget_bytes = std::size_t{1} << 30);
  MatC apply_L(const MatC& sigma) const;
  VecC apply_A(const VecC& v) const;
  int p_hat() const { return data_.idx.p_hat(); }
  std::size_t size() const { return data_.size(); }

 private:
  template <typename F>
  void for_each_projection(std::size_t begin, std::size_t end, F&& f) const;

  const ImageData& data_;
  ProjectionBuilder builder_;
  std::vector<ProjectionMatrix> cache_;
};

MatC apply_empirical_L(const MatC& sigma, const ImageData& data);

CovarianceEstimate solve_covariance_empirical(const MatC& B, const ImageData& data, const CovarianceOptions& opt = {});

// Descending eigenpairs of a Hermitian matrix with each eigenvector's
// largest-magnitude entry made real positive.
void eigendecompose(const MatC& sigma, VecR& eigvals, MatC& eigvecs);
void fix_eigenvector_phase(MatC& vecs);

// Number of leading eigenvalues separated from the bulk: the position of the
// largest ratio lambda_i / lambda_{i+1} among the top ten, kept only when that
// ratio exceeds 1 + delta.
int estimate_rank(const VecR& eigvals, double delta = 0.5);

// Objectives whose minimizers define the estimators, and their gradients.
// Gradients are returned as G with df = 2 Re <G, dX>, so the partial derivative
// with respect to Re X_i is 2 Re G_i and with respect to Im X_i is 2 Im G_i.
double mean_objective(const ImageData& data, const VecC& mu);
VecC mean_gradient(const ImageData& data, const VecC& mu);
double covariance_objective(const ImageData& data, const VecC& mu, const MatC& sigma);
MatC covariance_gradient(const ImageData& data, const VecC& mu, const MatC& sigma);

enum class Objective { mean, covariance };

// Max |analytic - central difference| over all real and imaginary directions.
double gradient_check(Objective which, const ImageData& data, const VecC& mu, const MatC& sigma, double step = 1e-5);

}  // namespace hetcov
