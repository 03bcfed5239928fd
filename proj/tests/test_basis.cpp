#include <set>

#include "basis.hpp"
#include "test_support.hpp"

using namespace hetcov;

TEST_CASE("index set sizes and block layout") {
  for (int K : {0, 1, 4, 15}) {
    const auto idx = make_index_sets(K);
    CHECK(idx.p_hat() == (K + 1) * (K + 2) * (K + 3) / 6);
    CHECK(idx.q_hat() == (K + 1) * (K + 2) / 2);
    for (int k = 0; k <= K; ++k) {
      const int off = BasisIndexSet::volume_block_offset(k);
      const auto ang = angular_block(k);
      REQUIRE(static_cast<int>(ang.size()) == BasisIndexSet::volume_block_size(k));
      for (int i = 0; i < BasisIndexSet::volume_block_size(k); ++i) {
        const auto v = idx.v_indices[off + i];
        CHECK(v.k == k);
        CHECK(v.l == ang[i].first);
        CHECK(v.m == ang[i].second);
        CHECK((v.l - k) % 2 == 0);
        CHECK(std::abs(v.m) <= v.l);
      }
      const int ioff = BasisIndexSet::image_block_offset(k);
      std::set<int> ms;
      for (int i = 0; i < BasisIndexSet::image_block_size(k); ++i) {
        const auto im = idx.i_indices[ioff + i];
        CHECK(im.k == k);
        CHECK((im.m - k) % 2 == 0);
        ms.insert(im.m);
      }
      CHECK(static_cast<int>(ms.size()) == k + 1);
    }
  }
}

TEST_CASE("radial functions are orthonormal within each parity") {
  const int K = 10;
  const double omega = 12 * kPi / 2;
  const auto b = build_radial_basis(K, omega, default_quad_order(K, omega));
  double worst = 0.0;
  for (int i = 0; i <= K; ++i)
    for (int j = i; j <= K; j += 2) {
      double s = 0.0;
      for (int q = 0; q < b.quad_order; ++q) s += b.samples(i, q) * b.samples(j, q) * b.quad_weights[q] * b.quad_nodes[q];
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("radial evaluation reproduces the stored samples and the parity at the origin") {
  const int K = 7;
  const double omega = 9 * kPi / 2;
  const auto b = build_radial_basis(K, omega, default_quad_order(K, omega));
  std::vector<double> all(K + 1);
  for (int q : {0, 5, b.quad_order - 1}) {
    b.eval_all(b.quad_nodes[q], all.data());
    for (int k = 0; k <= K; ++k) {
      CHECK(b.eval(k, b.quad_nodes[q]) == doctest::Approx(b.samples(k, q)).epsilon(1e-10).scale(1.0));
      CHECK(all[k] == doctest::Approx(b.samples(k, q)).epsilon(1e-10).scale(1.0));
    }
  }
  // Odd functions vanish at r = 0.
  b.eval_all(0.0, all.data());
  for (int k = 1; k <= K; k += 2) CHECK(std::abs(all[k]) < 1e-12);
}

TEST_CASE("radial basis rejects bad parameters") {
  CHECK_THROWS_KIND(build_radial_basis(-1, 1.0, 10), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(build_radial_basis(3, 0.0, 40), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(build_radial_basis(3, 5.0, min_quad_order(3) - 1), ErrorKind::invalid_argument);
}

TEST_CASE("concentration fractions are valid fractions and mostly concentrated") {
  const int K = 6;
  const double omega = 8 * kPi / 2;
  const auto b = build_radial_basis(K, omega, default_quad_order(K, omega));
  const auto rep = concentration_report(b);
  REQUIRE(!rep.empty());
  double mean = 0.0;
  for (const auto& e : rep) {
    CHECK(e.fraction >= 0.0);
    CHECK(e.fraction <= 1.0 + 1e-12);
    CHECK((e.k - e.l) % 2 == 0);
    mean += e.fraction;
  }
  CHECK(mean / rep.size() > 0.8);
}

TEST_CASE("sphere quadrature integrates spherical harmonic products") {
  const auto sq = sphere_quadrature(12, 24);
  double worst = 0.0;
  for (int l1 = 0; l1 <= 5; ++l1)
    for (int m1 = -l1; m1 <= l1; ++m1)
      for (int l2 = 0; l2 <= 5; ++l2)
        for (int m2 = -l2; m2 <= l2; ++m2) {
          cplx s = 0.0;
          for (std::size_t i = 0; i < sq.size(); ++i) {
            const double th = std::acos(sq.cos_theta[i]);
            s += sq.weight[i] * std::conj(sph_harm(l1, m1, th, sq.phi[i])) * sph_harm(l2, m2, th, sq.phi[i]);
          }
          worst = std::max(worst, std::abs(s - (l1 == l2 && m1 == m2 ? 1.0 : 0.0)));
        }
  CHECK(worst < 1e-12);
}

TEST_CASE("radial basis persists bit-exactly") {
  const auto dir = test_support::scratch_dir("basis_io");
  const auto b = build_radial_basis(5, 7.0, default_quad_order(5, 7.0));
  save_radial_basis(b, dir / "basis.bin", "abc");
  const auto c = load_radial_basis(dir / "basis.bin");
  CHECK(c.K == b.K);
  CHECK(c.omega_max == b.omega_max);
  CHECK(c.quad_nodes == b.quad_nodes);
  CHECK((c.samples - b.samples).norm() == 0.0);
  CHECK(c.eval(3, 0.37) == b.eval(3, 0.37));
}
