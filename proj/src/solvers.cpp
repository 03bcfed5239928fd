#include "solvers.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

namespace hetcov {

void CsrMatrix::multiply(const cplx* x, cplx* y) const {
  for (int r = 0; r < rows; ++r) {
    cplx acc = 0.0;
    for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) acc += val[p] * x[col[p]];
    y[r] = acc;
  }
}

void CsrMatrix::multiply(const double* x, double* y) const {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) acc += val[p] * x[col[p]];
    y[r] = acc;
  }
}

VecR CsrMatrix::diagonal() const {
  VecR d = VecR::Zero(rows);
  for (int r = 0; r < rows; ++r)
    for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      if (col[p] == r) d[r] = val[p];
  return d;
}

MatR CsrMatrix::dense() const {
  MatR m = MatR::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) m(r, col[p]) = val[p];
  return m;
}

CGReport conjugate_gradient(const ComplexOperator& A, const VecC& b, VecC& x, const CGOptions& opt) {
  CGReport rep;
  const double bnorm = b.norm();
  if (x.size() != b.size()) x = VecC::Zero(b.size());
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    return rep;
  }
  auto precondition = [&](const VecC& r) -> VecC {
    if (!opt.jacobi) return r;
    return (r.array() / opt.jacobi->array().cast<cplx>()).matrix();
  };
  VecC Ax(b.size());
  A(x, Ax);
  VecC r = b - Ax;
  VecC z = precondition(r);
  VecC p = z;
  cplx rz = r.dot(z);
  VecC Ap(b.size());
  rep.rel_residual = r.norm() / bnorm;
  rep.min_rayleigh = std::numeric_limits<double>::infinity();
  std::vector<double> history{rep.rel_residual};
  if (opt.keep_trace) rep.trace.push_back(rep.rel_residual);
  while (rep.rel_residual > opt.tol && rep.iterations < opt.max_iter) {
    A(p, Ap);
    const double pAp = p.dot(Ap).real();
    const double pp = p.squaredNorm();
    rep.min_rayleigh = std::min(rep.min_rayleigh, pAp / pp);
    if (!(pAp > 0.0)) break;  // operator not positive on the Krylov space
    const cplx alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    ++rep.iterations;
    rep.rel_residual = r.norm() / bnorm;
    history.push_back(rep.rel_residual);
    if (opt.keep_trace) rep.trace.push_back(rep.rel_residual);
    if (rep.rel_residual <= opt.tol) break;
    if (opt.stagnation_improvement > 0.0 && rep.iterations >= opt.stagnation_window) {
      const double before = history[history.size() - 1 - opt.stagnation_window];
      if (rep.rel_residual > (1.0 - opt.stagnation_improvement) * before) {
        rep.stagnated = true;
        break;
      }
    }
    z = precondition(r);
    const cplx rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.converged = rep.rel_residual <= opt.tol;
  return rep;
}

namespace {

template <typename Vec>
Vec random_start(int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    if constexpr (std::is_same_v<typename Vec::Scalar, cplx>)
      v[i] = cplx(nd(gen), nd(gen));
    else
      v[i] = nd(gen);
  }
  return v.normalized();
}

template <typename Vec, typename Op>
LanczosReport lanczos_impl(const Op& A, int dim, double tol, int max_iter, std::uint64_t seed) {
  using Mat = Eigen::Matrix<typename Vec::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  LanczosReport rep;
  const int m_max = std::min(dim, max_iter);
  Mat Q(dim, std::min(m_max + 1, 64));
  std::vector<double> alpha, beta;
  Q.col(0) = random_start<Vec>(dim, seed);
  Vec w(dim);
  for (int j = 0; j < m_max; ++j) {
    A(Vec(Q.col(j)), w);
    const double a = std::real(Q.col(j).dot(w));
    alpha.push_back(a);
    // full reorthogonalization, twice for stability
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).adjoint() * w);
    const double b = w.norm();
    rep.iterations = j + 1;
    const int m = j + 1;
    const bool check = (m % 5 == 0) || m == m_max || b < 1e-14;
    if (check) {
      VecR diag = Eigen::Map<const VecR>(alpha.data(), m);
      VecR sub = VecR::Zero(std::max(m - 1, 0));
      for (int i = 0; i + 1 < m; ++i) sub[i] = beta[i];
      Eigen::SelfAdjointEigenSolver<MatR> es;
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const VecR& th = es.eigenvalues();
      const MatR& S = es.eigenvectors();
      rep.lambda_min = th[0];
      rep.lambda_max = th[m - 1];
      const double scale = std::max(std::abs(th[0]), std::abs(th[m - 1]));
      const double res_min = std::abs(b * S(m - 1, 0));
      const double res_max = std::abs(b * S(m - 1, m - 1));
      if (b < 1e-14 * std::max(scale, 1e-300) || m == dim || (res_min <= tol * scale && res_max <= tol * scale)) {
        rep.converged = true;
        return rep;
      }
    }
    beta.push_back(b);
    if (j + 1 >= Q.cols()) Q.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(m_max + 1, 2 * Q.cols()));
    Q.col(j + 1) = w / b;
  }
  return rep;
}

}  // namespace

LanczosReport lanczos_extremes(const RealOperator& A, int dim, double tol, int max_iter, std::uint64_t seed) {
  return lanczos_impl<VecR>(A, dim, tol, max_iter, seed);
}

LanczosReport lanczos_extremes(const ComplexOperator& A, int dim, double tol, int max_iter, std::uint64_t seed) {
  return lanczos_impl<VecC>(A, dim, tol, max_iter, seed);
}

}  // namespace hetcov
