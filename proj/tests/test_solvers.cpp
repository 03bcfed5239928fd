#include <random>

#include "solvers.hpp"
#include "test_support.hpp"

using namespace hetcov;

namespace {

CsrMatrix to_csr(const MatR& D) {
  CsrMatrix A;
  A.rows = static_cast<int>(D.rows());
  A.cols = static_cast<int>(D.cols());
  A.row_ptr.push_back(0);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j)
      if (D(i, j) != 0.0) {
        A.col.push_back(j);
        A.val.push_back(D(i, j));
      }
    A.row_ptr.push_back(static_cast<std::int64_t>(A.val.size()));
  }
  return A;
}

MatC random_hpd(int n, double cond, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatC X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<MatC> qr(X);
  const MatC Q = qr.householderQ();
  VecR d(n);
  for (int i = 0; i < n; ++i) d[i] = std::pow(cond, static_cast<double>(i) / (n - 1));
  return Q * d.cast<cplx>().asDiagonal() * Q.adjoint();
}

}  // namespace

TEST_CASE("CSR products agree with dense products") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  MatR D = MatR::Zero(17, 13);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 13; ++j)
      if ((i * 7 + j * 3) % 5 == 0) D(i, j) = u(rng);
  const CsrMatrix A = to_csr(D);
  CHECK(A.nnz() == (D.array() != 0.0).count());
  CHECK((A.dense() - D).norm() == 0.0);
  VecR x = VecR::Random(13), y(17);
  A.multiply(x.data(), y.data());
  CHECK((y - D * x).norm() < 1e-13);
  VecC xc = VecC::Random(13), yc(17);
  A.multiply(xc.data(), yc.data());
  CHECK((yc - D.cast<cplx>() * xc).norm() < 1e-13);
  MatR S = MatR::Random(6, 6);
  CHECK((to_csr(S).diagonal() - S.diagonal()).norm() == 0.0);
}

TEST_CASE("conjugate gradients reaches the requested residual") {
  const MatC A = random_hpd(40, 50.0, 2);
  const VecC b = VecC::Random(40);
  VecC x = VecC::Zero(40);
  CGOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 200;
  opt.keep_trace = true;
  const auto rep = conjugate_gradient([&](const VecC& in, VecC& out) { out = A * in; }, b, x, opt);
  CHECK(rep.converged);
  CHECK(rep.rel_residual <= 1e-10);
  CHECK((A * x - b).norm() / b.norm() < 1e-9);
  // Classical CG bound on the residual for condition number 50.
  const double rho = (std::sqrt(50.0) - 1) / (std::sqrt(50.0) + 1);
  CHECK(rep.iterations <= std::ceil(std::log(2 * std::sqrt(50.0) / 1e-10) / -std::log(rho)));
  CHECK(!rep.trace.empty());
  CHECK(rep.min_rayleigh >= 1.0 - 1e-8);

  // Jacobi preconditioning leaves the solution unchanged.
  const VecR diag = A.diagonal().real();
  opt.jacobi = &diag;
  VecC y = VecC::Zero(40);
  conjugate_gradient([&](const VecC& in, VecC& out) { out = A * in; }, b, y, opt);
  CHECK((x - y).norm() / x.norm() < 1e-8);
}

TEST_CASE("conjugate gradients returns immediately for a zero right-hand side") {
  const MatC A = random_hpd(5, 3.0, 3);
  VecC x = VecC::Zero(5);
  const auto rep = conjugate_gradient([&](const VecC& in, VecC& out) { out = A * in; }, VecC::Zero(5), x, {});
  CHECK(rep.converged);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("iteration cap is reported as non-convergence") {
  const MatC A = random_hpd(60, 1e6, 4);
  VecC x = VecC::Zero(60);
  CGOptions opt;
  opt.tol = 1e-14;
  opt.max_iter = 3;
  const auto rep = conjugate_gradient([&](const VecC& in, VecC& out) { out = A * in; }, VecC::Random(60), x, opt);
  CHECK(!rep.converged);
  CHECK(rep.iterations == 3);
}

TEST_CASE("Lanczos extremes match dense eigenvalues") {
  const MatC A = random_hpd(50, 20.0, 5);
  const auto rc = lanczos_extremes([&](const VecC& in, VecC& out) { out = A * in; }, 50, 1e-10, 200, 1);
  CHECK(rc.converged);
  CHECK(rc.lambda_min == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rc.lambda_max == doctest::Approx(20.0).epsilon(1e-8));

  MatR S = MatR::Random(30, 30);
  S = (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatR> es(S);
  const auto rr = lanczos_extremes([&](const VecR& in, VecR& out) { out = S * in; }, 30, 1e-10, 200, 2);
  CHECK(rr.lambda_min == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-8));
  CHECK(rr.lambda_max == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-8));
}
