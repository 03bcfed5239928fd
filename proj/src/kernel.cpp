#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "container.hpp"

namespace hetcov {

double funk_hecke_coeff(int l) {
  require(l >= 0, ErrorKind::invalid_argument, "degree must be non-negative");
  if (l % 2 == 1) return 0.0;
  const double log_ratio = std::lgamma(l + 1.0) - l * std::log(2.0) - 2.0 * std::lgamma(l / 2 + 1.0);
  return kPi * std::exp(2.0 * log_ratio);
}

double triangular_kernel(const Eigen::Vector3d& xi1, const Eigen::Vector3d& xi2) {
  const double area = xi1.cross(xi2).norm();
  if (!(area > 1e-300) || area <= 1e-14 * xi1.norm() * xi2.norm())
    fail(ErrorKind::domain, "triangular kernel is singular for linearly dependent frequencies");
  return 1.0 / (2.0 * kPi * area);
}

double SHProductTable::Entry::at(int L) const {
  if (values.empty() || L < L_min || L > L_max() || (L - L_min) % 2 != 0) return 0.0;
  return values[static_cast<std::size_t>((L - L_min) / 2)];
}

SHProductTable::SHProductTable(int K) : K_(K), n_(static_cast<std::size_t>(K + 1) * (K + 1)) {
  require(K >= 0, ErrorKind::invalid_argument, "K must be non-negative");
  const int Lmax = 2 * K;
  // The phi integral is done analytically; the cos(theta) integrand is a
  // polynomial of degree <= 4K, so 2K+2 Gauss-Legendre nodes are exact.
  const QuadratureRule gl = gauss_legendre(2 * K + 2, -1.0, 1.0);
  const std::size_t tsize = legendre_table_size(Lmax);
  std::vector<double> tables(tsize * gl.size());
  for (std::size_t q = 0; q < gl.size(); ++q) {
    const double x = gl.nodes[q];
    legendre_normalized(Lmax, x, std::sqrt(std::max(0.0, 1.0 - x * x)), tables.data() + q * tsize);
  }
  entries_.resize(n_ * n_);
  for (int li = 0; li <= K; ++li)
    for (int mi = -li; mi <= li; ++mi)
      for (int lj = 0; lj <= K; ++lj)
        for (int mj = -lj; mj <= lj; ++mj) {
          Entry& e = entries_[static_cast<std::size_t>(angular_index(li, mi)) * n_ + angular_index(lj, mj)];
          e.M = mj - mi;
          int lo = std::max(std::abs(li - lj), std::abs(e.M));
          if ((lo + li + lj) % 2 != 0) ++lo;
          const int hi = li + lj;
          e.L_min = lo;
          if (lo > hi) continue;
          e.values.assign(static_cast<std::size_t>((hi - lo) / 2 + 1), 0.0);
          for (int L = lo; L <= hi; L += 2) {
            double acc = 0.0;
            for (std::size_t q = 0; q < gl.size(); ++q) {
              const double* t = tables.data() + q * tsize;
              acc += gl.weights[q] * legendre_signed(t, li, mi) * legendre_signed(t, lj, mj) *
                     legendre_signed(t, L, e.M);
            }
            acc *= 2.0 * kPi;
            e.values[static_cast<std::size_t>((L - lo) / 2)] = std::abs(acc) < 1e-13 ? 0.0 : acc;
          }
        }
}

double SHProductTable::coeff(int li, int mi, int lj, int mj, int L, int M) const {
  const Entry& e = get(li, mi, lj, mj);
  if (M != e.M) return 0.0;
  return e.at(L);
}

KernelBlock assemble_block(int k1, int k2, const SHProductTable& table) {
  require(k1 >= 0 && k2 >= 0 && k1 <= table.K() && k2 <= table.K(), ErrorKind::invalid_argument,
          "kernel block index exceeds the product table degree");
  const auto A1 = angular_block(k1);
  const auto A2 = angular_block(k2);
  const int d1 = static_cast<int>(A1.size()), d2 = static_cast<int>(A2.size());
  const int nL = table.K() + 1;  // even degrees 0, 2, ..., 2K

  std::vector<double> sqrt_c(nL);
  for (int t = 0; t < nL; ++t) sqrt_c[t] = std::sqrt(funk_hecke_coeff(2 * t));

  // Per angular pair, the weighted coefficient vector over even degrees.
  struct PairVec {
    int lo = 1, hi = 0;
    const double* v = nullptr;
  };
  auto build_pairs = [&](const std::vector<std::pair<int, int>>& A, std::vector<double>& store) {
    const int d = static_cast<int>(A.size());
    std::vector<PairVec> pv(static_cast<std::size_t>(d) * d);
    store.assign(static_cast<std::size_t>(d) * d * nL, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const auto& e = table.get(A[i].first, A[i].second, A[j].first, A[j].second);
        double* dst = store.data() + (static_cast<std::size_t>(i) * d + j) * nL;
        PairVec& p = pv[static_cast<std::size_t>(i) * d + j];
        p.v = dst;
        if (e.values.empty()) continue;
        int lo = nL, hi = -1;
        for (int L = e.L_min; L <= e.L_max(); L += 2) {
          const double c = e.at(L);
          if (c == 0.0) continue;
          dst[L / 2] = sqrt_c[L / 2] * c;
          lo = std::min(lo, L / 2);
          hi = std::max(hi, L / 2);
        }
        p.lo = lo;
        p.hi = hi;
      }
    return pv;
  };
  std::vector<double> store1, store2;
  const auto P1 = build_pairs(A1, store1);
  const auto P2 = k1 == k2 ? P1 : build_pairs(A2, store2);

  std::vector<std::vector<int>> by_m2(2 * k2 + 1);
  for (int j = 0; j < d2; ++j) by_m2[A2[j].second + k2].push_back(j);

  KernelBlock blk;
  blk.k1 = k1;
  blk.k2 = k2;
  blk.dim1 = d1;
  blk.dim2 = d2;
  CsrMatrix& csr = blk.matrix;
  csr.rows = csr.cols = d1 * d2;
  csr.row_ptr.assign(static_cast<std::size_t>(csr.rows) + 1, 0);
  double max_abs = 0.0;
  for (int i1 = 0; i1 < d1; ++i1)
    for (int i2 = 0; i2 < d2; ++i2) {
      for (int j1 = 0; j1 < d1; ++j1) {
        const int target = A2[i2].second + (A1[j1].second - A1[i1].second);
        if (std::abs(target) > k2) continue;
        const PairVec& u = P1[static_cast<std::size_t>(i1) * d1 + j1];
        if (u.lo > u.hi) continue;
        for (int j2 : by_m2[target + k2]) {
          const PairVec& w = P2[static_cast<std::size_t>(i2) * d2 + j2];
          const int lo = std::max(u.lo, w.lo), hi = std::min(u.hi, w.hi);
          if (lo > hi) continue;
          double v = 0.0;
          for (int t = lo; t <= hi; ++t) v += u.v[t] * w.v[t];
          if (v == 0.0) continue;
          csr.col.push_back(j1 * d2 + j2);
          csr.val.push_back(v);
          max_abs = std::max(max_abs, std::abs(v));
        }
      }
      csr.row_ptr[static_cast<std::size_t>(i1) * d2 + i2 + 1] = static_cast<std::int64_t>(csr.val.size());
    }

  // Drop quadrature-level structural zeros.
  const double cut = 1e-13 * max_abs;
  std::size_t w = 0;
  std::int64_t start = 0;
  for (int r = 0; r < csr.rows; ++r) {
    const std::int64_t end = csr.row_ptr[r + 1];
    for (std::int64_t p = start; p < end; ++p)
      if (std::abs(csr.val[p]) > cut) {
        csr.val[w] = csr.val[p];
        csr.col[w] = csr.col[p];
        ++w;
      }
    start = end;
    csr.row_ptr[r + 1] = static_cast<std::int64_t>(w);
  }
  csr.val.resize(w);
  csr.col.resize(w);
  csr.val.shrink_to_fit();
  csr.col.shrink_to_fit();
  return blk;
}

BlockStats block_spectral_stats(const KernelBlock& block, double tol, int max_iter) {
  const int dim = block.matrix.rows;
  RealOperator op = [&](const VecR& in, VecR& out) {
    out.resize(dim);
    block.matrix.multiply(in.data(), out.data());
  };
  const LanczosReport rep = lanczos_extremes(op, dim, tol, max_iter, 0x5eedULL + 31 * block.k1 + block.k2);
  if (!rep.converged)
    fail(ErrorKind::solver, "Lanczos did not converge for kernel block (" + std::to_string(block.k1) + "," +
                                std::to_string(block.k2) + ") after " + std::to_string(rep.iterations) +
                                " iterations");
  return {rep.lambda_min, rep.lambda_max, block.nnz(), block.fill_ratio(), rep.iterations};
}

KernelBlockProvider::KernelBlockProvider(int K, std::optional<std::filesystem::path> cache_dir)
    : K_(K), cache_dir_(std::move(cache_dir)), table_(K) {}

std::filesystem::path KernelBlockProvider::cache_path(int k1, int k2) const {
  require(cache_dir_.has_value(), ErrorKind::invalid_argument, "no cache directory configured");
  return *cache_dir_ / ("lhat_K" + std::to_string(K_) + "_k" + std::to_string(k1) + "_" + std::to_string(k2) + "_" +
                        kKernelConvention + ".bin");
}

KernelBlock KernelBlockProvider::get(int k1, int k2) const {
  if (!cache_dir_) return assemble_block(k1, k2, table_);
  const auto path = cache_path(k1, k2);
  if (std::filesystem::exists(path)) return load_kernel_block(path, K_, k1, k2);
  KernelBlock blk = assemble_block(k1, k2, table_);
  save_kernel_block(blk, K_, path);
  return blk;
}

void save_kernel_block(const KernelBlock& block, int K, const std::filesystem::path& path) {
  Container c("kernel_block", fnv1a_hex("kernel_block:" + std::to_string(K) + ":" + kKernelConvention));
  c.meta()["K"] = K;
  c.meta()["k1"] = block.k1;
  c.meta()["k2"] = block.k2;
  c.meta()["dim1"] = block.dim1;
  c.meta()["dim2"] = block.dim2;
  c.meta()["convention"] = kKernelConvention;
  c.put("row_ptr", block.matrix.row_ptr);
  c.put("col", block.matrix.col);
  c.put("val", block.matrix.val);
  // write then rename, so concurrent readers never see a partial file
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  c.save(tmp);
  std::filesystem::rename(tmp, path);
}

KernelBlock load_kernel_block(const std::filesystem::path& path, int K, int k1, int k2) {
  const Container c = Container::load(path, "kernel_block");
  const json& m = c.meta();
  if (m.at("K").get<int>() != K || m.at("k1").get<int>() != k1 || m.at("k2").get<int>() != k2 ||
      m.at("convention").get<std::string>() != kKernelConvention)
    fail(ErrorKind::format, "kernel block cache '" + path.string() + "' does not match the requested block");
  KernelBlock blk;
  blk.k1 = k1;
  blk.k2 = k2;
  blk.dim1 = m.at("dim1").get<int>();
  blk.dim2 = m.at("dim2").get<int>();
  blk.matrix.rows = blk.matrix.cols = blk.dim1 * blk.dim2;
  blk.matrix.row_ptr = c.get_int("row_ptr");
  const auto cols = c.get_int("col");
  blk.matrix.col.assign(cols.begin(), cols.end());
  blk.matrix.val = c.get_vector("val");
  require(static_cast<int>(blk.matrix.row_ptr.size()) == blk.matrix.rows + 1 &&
              blk.matrix.row_ptr.back() == static_cast<std::int64_t>(blk.matrix.val.size()) &&
              blk.matrix.col.size() == blk.matrix.val.size(),
          ErrorKind::format, "kernel block cache '" + path.string() + "' is corrupt");
  return blk;
}

MatC apply_limiting_L(const MatC& sigma, const KernelBlockProvider& provider) {
  const int K = provider.K();
  const int p = BasisIndexSet::volume_block_offset(K + 1);
  require(sigma.rows() == p && sigma.cols() == p, ErrorKind::invalid_argument, "matrix size mismatch");
  MatC out = MatC::Zero(p, p);
  for (int k1 = 0; k1 <= K; ++k1)
    for (int k2 = k1; k2 <= K; ++k2) {
      const KernelBlock blk = provider.get(k1, k2);
      const int o1 = BasisIndexSet::volume_block_offset(k1), o2 = BasisIndexSet::volume_block_offset(k2);
      const int d1 = blk.dim1, d2 = blk.dim2;
      // row-major flattening (i1, i2) -> i1 * d2 + i2
      auto run = [&](const MatC& S12) {
        VecC x(d1 * d2), y(d1 * d2);
        for (int i = 0; i < d1; ++i)
          for (int j = 0; j < d2; ++j) x[i * d2 + j] = S12(i, j);
        blk.matrix.multiply(x.data(), y.data());
        MatC Y(d1, d2);
        for (int i = 0; i < d1; ++i)
          for (int j = 0; j < d2; ++j) Y(i, j) = y[i * d2 + j];
        return Y;
      };
      out.block(o1, o2, d1, d2) = run(sigma.block(o1, o2, d1, d2));
      if (k1 != k2) out.block(o2, o1, d2, d1) = run(sigma.block(o2, o1, d2, d1).transpose()).transpose();
    }
  return out;
}

}  // namespace hetcov
