#include <random>

#include "kernel.hpp"
#include "oracles.hpp"
#include "projection.hpp"
#include "test_support.hpp"

using namespace hetcov;

TEST_CASE("kernel coefficients match the closed form and vanish for odd degree") {
  for (int l = 0; l <= 40; ++l) {
    if (l % 2 == 1) {
      CHECK(funk_hecke_coeff(l) == 0.0);
    } else {
      CHECK(funk_hecke_coeff(l) == doctest::Approx(oracle::funk_hecke_direct(l)).epsilon(1e-12));
    }
  }
  CHECK(funk_hecke_coeff(0) == doctest::Approx(kPi));
  CHECK_THROWS_KIND(funk_hecke_coeff(-2), ErrorKind::invalid_argument);
}

TEST_CASE("kernel coefficients agree with the defining integral") {
  // c(l) = 2 int_0^{pi/2} P_l(sin t) dt after t -> sin t.
  const auto rule = gauss_legendre(200, 0.0, kPi / 2);
  for (int l = 0; l <= 30; l += 2) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::legendre(l, std::sin(rule.nodes[i]));
    CHECK(funk_hecke_coeff(l) == doctest::Approx(2.0 * s).epsilon(1e-12));
  }
}

TEST_CASE("spherical harmonic product coefficients follow the selection rules") {
  const SHProductTable T(4);
  const auto sq = sphere_quadrature(14, 30);
  for (int li = 0; li <= 4; ++li)
    for (int mi = -li; mi <= li; ++mi)
      for (int lj = 0; lj <= 4; ++lj)
        for (int mj = -lj; mj <= lj; ++mj) {
          const auto& e = T.get(li, mi, lj, mj);
          if (!e.values.empty()) CHECK(e.M == mj - mi);
          for (int L : {std::abs(li - lj), li + lj}) {
            if (std::abs(mj - mi) > L) continue;
            cplx s = 0.0;
            for (std::size_t q = 0; q < sq.size(); ++q) {
              const double th = std::acos(sq.cos_theta[q]);
              s += sq.weight[q] * std::conj(sph_harm(li, mi, th, sq.phi[q])) * sph_harm(lj, mj, th, sq.phi[q]) *
                   std::conj(sph_harm(L, mj - mi, th, sq.phi[q]));
            }
            CHECK(std::abs(T.coeff(li, mi, lj, mj, L, mj - mi) - s) < 1e-12);
          }
          CHECK(T.coeff(li, mi, lj, mj, li + lj + 2, mj - mi) == 0.0);
        }
}

TEST_CASE("assembled blocks match direct quadrature of the double sphere integral") {
  for (auto [k1, k2] : std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {1, 2}, {2, 2}}) {
    const SHProductTable T(std::max(k1, k2));
    const MatC ref = oracle::kernel_block_quadrature(k1, k2);
    const MatR got = assemble_block(k1, k2, T).matrix.dense();
    CHECK((got.cast<cplx>() - ref).cwiseAbs().maxCoeff() < 1e-10 * ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("blocks are symmetric, bounded below by 1/(2 pi) and within the sparsity bound") {
  const int K = 6;
  const SHProductTable T(K);
  for (int k1 = 0; k1 <= K; ++k1)
    for (int k2 = k1; k2 <= K; ++k2) {
      const auto B = assemble_block(k1, k2, T);
      CHECK(B.dim1 == BasisIndexSet::volume_block_size(k1));
      CHECK(B.dim2 == BasisIndexSet::volume_block_size(k2));
      CHECK(B.within_sparsity_bound());
      if (B.size() > 600) continue;
      const MatR D = B.matrix.dense();
      CHECK((D - D.transpose()).cwiseAbs().maxCoeff() < 1e-13);
      Eigen::SelfAdjointEigenSolver<MatR> es(D);
      CHECK(es.eigenvalues().minCoeff() >= 1.0 / (2 * kPi) - 1e-9);
    }
}

TEST_CASE("Lanczos block statistics agree with dense eigenvalues") {
  const SHProductTable T(4);
  const auto B = assemble_block(3, 4, T);
  const auto st = block_spectral_stats(B);
  Eigen::SelfAdjointEigenSolver<MatR> es(B.matrix.dense());
  CHECK(st.lambda_min == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-7));
  CHECK(st.lambda_max == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-7));
  CHECK(st.nnz == B.nnz());
}

TEST_CASE("limiting operator commutes with volume rotations") {
  const int K = 3;
  const auto idx = make_index_sets(K);
  const KernelBlockProvider prov(K);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const int p = idx.p_hat();
  MatC S(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) S(i, j) = cplx(g(rng), g(rng));
  for (const auto& rot : sample_uniform_rotations(3, 21)) {
    const MatC U = volume_rotation_operator(rot, idx);
    const MatC lhs = apply_limiting_L(U * S * U.adjoint(), prov);
    const MatC rhs = U * apply_limiting_L(S, prov) * U.adjoint();
    CHECK((lhs - rhs).norm() / rhs.norm() < 1e-10);
  }
}

TEST_CASE("triangular kernel") {
  CHECK(triangular_kernel({1, 0, 0}, {0, 2, 0}) == doctest::Approx(1.0 / (4 * kPi)));
  CHECK_THROWS_KIND(triangular_kernel({1, 0, 0}, {-3, 0, 0}), ErrorKind::domain);
}

TEST_CASE("kernel block cache round trip and validation") {
  const auto dir = test_support::scratch_dir("kernel_cache");
  const KernelBlockProvider cached(4, dir);
  const auto a = cached.get(2, 4);
  REQUIRE(std::filesystem::exists(cached.cache_path(2, 4)));
  const auto b = cached.get(2, 4);
  CHECK(b.matrix.val == a.matrix.val);
  CHECK(b.matrix.col == a.matrix.col);
  CHECK(b.matrix.row_ptr == a.matrix.row_ptr);
  const auto c = load_kernel_block(cached.cache_path(2, 4), 4, 2, 4);
  CHECK(c.nnz() == a.nnz());
  CHECK_THROWS_KIND(load_kernel_block(cached.cache_path(2, 4), 4, 1, 4), ErrorKind::format);
  CHECK_THROWS_KIND(load_kernel_block(dir / "missing.bin", 4, 2, 4), ErrorKind::io);
  // A different K is a different cache key.
  CHECK(KernelBlockProvider(5, dir).cache_path(2, 4) != cached.cache_path(2, 4));
}
