#include <random>

#include "pipeline.hpp"
#include "test_support.hpp"

using namespace hetcov;

namespace {

MatC random_hermitian(int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatC S(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) S(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (S + S.adjoint());
}

// Random coefficient images at uniform rotations.
ImageData random_images(int K, std::size_t n, std::uint64_t seed, double noise_var = 0.3) {
  ImageData d;
  d.idx = make_index_sets(K);
  d.rotations = sample_uniform_rotations(n, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> g;
  d.coeffs.resize(d.idx.q_hat(), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < d.coeffs.cols(); ++j)
    for (Eigen::Index i = 0; i < d.coeffs.rows(); ++i) d.coeffs(i, j) = cplx(g(rng), g(rng));
  d.coeff_noise_var = noise_var;
  return d;
}

}  // namespace

TEST_CASE("rank rule: isolated spikes, flat spectra and invariances") {
  VecR flat = VecR::Ones(12);
  CHECK(estimate_rank(flat) == 0);

  VecR one(6);
  one << 10, 0.9, 0.85, 0.8, 0.7, 0.65;
  CHECK(estimate_rank(one) == 1);

  VecR two(8);
  two << 30, 25, 2, 1.9, 1.8, 1.7, 1.6, 1.5;
  CHECK(estimate_rank(two) == 2);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int t = 0; t < 200; ++t) {
    VecR ev(15);
    for (int i = 0; i < 15; ++i) ev[i] = u(rng) * std::pow(0.7, i);
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    const int r = estimate_rank(ev, 0.5);
    CHECK(r >= 0);
    CHECK(r <= 10);
    // Scale invariance.
    CHECK(estimate_rank(ev * 37.5, 0.5) == r);
    // A larger margin can only reject the same gap.
    const int r2 = estimate_rank(ev, 2.0);
    CHECK((r2 == r || r2 == 0));
    // The accepted gap is the largest ratio among the top ten.
    const auto ratios = rank_gap_ratios(ev);
    if (r > 0) {
      CHECK(ratios[r - 1] > 1.5);
      for (double q : ratios) CHECK(q <= ratios[r - 1]);
    }
  }
}

TEST_CASE("empirical A_n concentrates at one half") {
  const auto data = random_images(4, 20000, 11);
  double worst = 0.0;
  for (const auto& block : empirical_A_spectrum(data))
    for (Eigen::Index i = 0; i < block.size(); ++i) worst = std::max(worst, std::abs(block[i] - 0.5));
  CHECK(worst < 0.05);
  // The matrix-free operator agrees with the spectrum summary.
  const EmpiricalOperator op(data);
  const VecC v = VecC::Random(data.idx.p_hat());
  CHECK((op.apply_A(v) - 0.5 * v).norm() / v.norm() < 0.05);
}

TEST_CASE("mean solves") {
  const auto data = random_images(3, 400, 12);
  const VecC b = accumulate_mean(data);
  const auto lim = solve_mean(b, SolverMode::limiting);
  CHECK((lim.mu - 2.0 * b).norm() < 1e-14);
  const auto emp = solve_mean(b, SolverMode::empirical, &data);
  CHECK(!emp.guard_triggered);
  const EmpiricalOperator op(data);
  CHECK((op.apply_A(emp.mu) - b).norm() < 1e-10 * b.norm());
  // The empirical solution is a stationary point of the mean objective.
  CHECK(mean_gradient(data, emp.mu).norm() < 1e-9);

  ImageData degenerate = data;
  degenerate.rotations.assign(data.size(), data.rotations[0]);
  const auto g = solve_mean(accumulate_mean(degenerate), SolverMode::empirical, &degenerate);
  CHECK(g.guard_triggered);
  CHECK(g.mu.norm() == 0.0);
  CHECK_THROWS_KIND(solve_mean(b, SolverMode::empirical, nullptr), ErrorKind::invalid_argument);
}

TEST_CASE("analytic gradients match central differences") {
  const auto data = random_images(2, 15, 13);
  const int p = data.idx.p_hat();
  const VecC mu = VecC::Random(p);
  const MatC S = random_hermitian(p, 14);
  CHECK(gradient_check(Objective::mean, data, mu, S) < 1e-6);
  CHECK(gradient_check(Objective::covariance, data, mu, S) < 1e-6);
}

TEST_CASE("limiting covariance solve inverts the limiting operator") {
  const int K = 4;
  const KernelBlockProvider prov(K);
  const MatC S = random_hermitian(make_index_sets(K).p_hat(), 15);
  const MatC B = apply_limiting_L(S, prov);
  CovarianceOptions opt;
  opt.cg_tol = 1e-10;
  const auto est = solve_covariance_limiting(B, prov, opt);
  CHECK((est.sigma - S).norm() / S.norm() < 1e-8);
  CHECK(!est.guard_triggered);
  for (const auto& blk : est.blocks) {
    CHECK(blk.converged);
    CHECK(blk.iterations <= 10.0 * std::sqrt(condition_bound(blk.k1, blk.k2)) + 1);
  }
  // Descending, phase-fixed eigenpairs that reproduce the matrix.
  for (Eigen::Index i = 1; i < est.eigvals.size(); ++i) CHECK(est.eigvals[i - 1] >= est.eigvals[i]);
  const MatC R = est.eigvecs * est.eigvals.cast<cplx>().asDiagonal() * est.eigvecs.adjoint();
  CHECK((R - est.sigma).norm() / est.sigma.norm() < 1e-10);
  for (Eigen::Index c = 0; c < est.eigvecs.cols(); ++c) {
    Eigen::Index at = 0;
    est.eigvecs.col(c).cwiseAbs().maxCoeff(&at);
    CHECK(std::abs(est.eigvecs(at, c).imag()) < 1e-12);
    CHECK(est.eigvecs(at, c).real() > 0.0);
  }

  const auto batch = solve_covariance_limiting_batch({B, 2.0 * B}, prov, opt);
  REQUIRE(batch.size() == 2);
  CHECK((batch[0].sigma - est.sigma).norm() < 1e-10 * S.norm());
  CHECK((batch[1].sigma - 2.0 * est.sigma).norm() < 1e-9 * S.norm());
}

TEST_CASE("empirical operator: self-adjoint and close to the limit for many views") {
  const int K = 3;
  const auto data = random_images(K, 6000, 16);
  const int p = data.idx.p_hat();
  const MatC S1 = random_hermitian(p, 17), S2 = random_hermitian(p, 18);
  const EmpiricalOperator op(data);
  const MatC L1 = op.apply_L(S1), L2 = op.apply_L(S2);
  CHECK(std::abs((L1.adjoint() * S2).trace() - (S1.adjoint() * L2).trace()) < 1e-10 * L1.norm() * S2.norm());
  CHECK((apply_empirical_L(S1, data) - L1).norm() < 1e-10 * L1.norm());
  const MatC lim = apply_limiting_L(S1, KernelBlockProvider(K));
  CHECK((L1 - lim).norm() / lim.norm() < 0.1);
}

TEST_CASE("empirical covariance solve is a stationary point of the objective") {
  const auto data = random_images(2, 300, 19);
  const VecC mu = solve_mean(accumulate_mean(data), SolverMode::empirical, &data).mu;
  const MatC B = accumulate_covariance_rhs(data, mu);
  CHECK((B - B.adjoint()).norm() < 1e-12 * B.norm());
  CovarianceOptions opt;
  opt.cg_tol = 1e-12;
  opt.max_iter = 2000;
  const auto est = solve_covariance_empirical(B, data, opt);
  CHECK(!est.guard_triggered);
  // The right-hand side replaces the noise term A_n by I/2, so the gradient
  // at the solution is exactly sigma^2 (A_n - I/2).
  const EmpiricalOperator op(data);
  const int p = data.idx.p_hat();
  MatC offset(p, p);
  for (int j = 0; j < p; ++j) offset.col(j) = op.apply_A(VecC::Unit(p, j));
  offset.diagonal().array() -= 0.5;
  offset *= data.coeff_noise_var;
  const MatC G = covariance_gradient(data, mu, est.sigma);
  CHECK((G - offset).norm() < 1e-8 * B.norm());
  CHECK(offset.norm() > 1e-3 * B.norm());
}

TEST_CASE("solver names") {
  CHECK(parse_solver_mode("limiting") == SolverMode::limiting);
  CHECK(parse_solver_mode("empirical") == SolverMode::empirical);
  CHECK(to_string(SolverMode::empirical) == "empirical");
  CHECK_THROWS_KIND(parse_solver_mode("exact"), ErrorKind::config);
}
