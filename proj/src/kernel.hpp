#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "basis.hpp"
#include "solvers.hpp"

namespace hetcov {

// Coefficient of degree l in the Legendre expansion of the zonal kernel
// 1/sqrt(1 - t^2); zero for odd l.
double funk_hecke_coeff(int l);

// 1 / (2 pi |xi1 x xi2|).
double triangular_kernel(const Eigen::Vector3d& xi1, const Eigen::Vector3d& xi2);

inline int angular_index(int l, int m) { return l * l + l + m; }

// Expansion coefficients C_{L,M}(conj(Y_li^mi) Y_lj^mj) for all li, lj <= K.
// Only M = mj - mi survives; L runs over |li-lj|..li+lj in steps of 2.
class SHProductTable {
 public:
  struct Entry {
    int M = 0;
    int L_min = 0;
    std::vector<double> values;  // index (L - L_min) / 2
    int L_max() const { return L_min + 2 * (static_cast<int>(values.size()) - 1); }
    double at(int L) const;
  };

  explicit SHProductTable(int K);
  int K() const { return K_; }
  const Entry& get(int li, int mi, int lj, int mj) const {
    return entries_[static_cast<std::size_t>(angular_index(li, mi)) * n_ + angular_index(lj, mj)];
  }
  double coeff(int li, int mi, int lj, int mj, int L, int M) const;

 private:
  int K_;
  std::size_t n_;
  std::vector<Entry> entries_;
};

inline SHProductTable sh_product_table(int K) { return SHProductTable(K); }

inline constexpr const char* kKernelConvention = "ylm_orthonormal_condon_shortley_v1";

// One block of the limiting projection covariance transform. The entries are
// real, so the block is stored as a real symmetric CSR matrix. Row (i1, i2)
// has flat index i1 * dim2 + i2.
struct KernelBlock {
  int k1 = 0, k2 = 0;
  int dim1 = 0, dim2 = 0;
  CsrMatrix matrix;

  std::int64_t nnz() const { return matrix.nnz(); }
  std::int64_t size() const { return static_cast<std::int64_t>(dim1) * dim2; }
  double fill_ratio() const { return static_cast<double>(nnz()) / (static_cast<double>(size()) * size()); }
  double sparsity_bound() const { return static_cast<double>(size()) * size() / (k1 + k2 + 1); }
  bool within_sparsity_bound() const { return nnz() <= sparsity_bound(); }
};

KernelBlock assemble_block(int k1, int k2, const SHProductTable& table);

struct BlockStats {
  double lambda_min = 0.0, lambda_max = 0.0;
  std::int64_t nnz = 0;
  double fill_ratio = 0.0;
  int lanczos_iterations = 0;
};

BlockStats block_spectral_stats(const KernelBlock& block, double tol = 1e-8, int max_iter = 5000);

// Bound on the condition number of block (k1, k2), from the fitted linear trend.
inline double condition_bound(int k1, int k2) { return 1.4818 + 0.8524 * std::min(k1, k2); }

// Lazily assembles blocks, optionally through an on-disk cache.
class KernelBlockProvider {
 public:
  KernelBlockProvider(int K, std::optional<std::filesystem::path> cache_dir = std::nullopt);
  int K() const { return K_; }
  KernelBlock get(int k1, int k2) const;
  std::filesystem::path cache_path(int k1, int k2) const;
  const std::optional<std::filesystem::path>& cache_dir() const { return cache_dir_; }
  const SHProductTable& table() const { return table_; }

 private:
  int K_;
  std::optional<std::filesystem::path> cache_dir_;
  SHProductTable table_;
};

void save_kernel_block(const KernelBlock& block, int K, const std::filesystem::path& path);
KernelBlock load_kernel_block(const std::filesystem::path& path, int K, int k1, int k2);

// Applies the limiting operator to a full p_hat x p_hat matrix (any, not only Hermitian).
MatC apply_limiting_L(const MatC& sigma, const KernelBlockProvider& provider);

}  // namespace hetcov
