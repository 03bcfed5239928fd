#include <cmath>
#include <random>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/spherical_harmonic.hpp>

#include "special.hpp"
#include "test_support.hpp"

using namespace hetcov;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
  for (int order : {1, 4, 11, 40}) {
    const auto rule = gauss_legendre(order, -0.5, 2.0);
    for (int deg = 0; deg <= 2 * order - 1; ++deg) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], deg);
      const double exact = (std::pow(2.0, deg + 1) - std::pow(-0.5, deg + 1)) / (deg + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}

TEST_CASE("spherical harmonics agree with an independent implementation") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> th(0.0, kPi), ph(-kPi, kPi);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const double a = th(rng), b = ph(rng);
    for (int l = 0; l <= 20; ++l)
      for (int m = -l; m <= l; ++m) {
        const cplx ref = boost::math::spherical_harmonic(l, m, a, b);
        worst = std::max(worst, std::abs(sph_harm(l, m, a, b) - ref));
        const cplx dir = sph_harm_dir(l, m, 3.0 * std::sin(a) * std::cos(b), 3.0 * std::sin(a) * std::sin(b),
                                      3.0 * std::cos(a));
        worst = std::max(worst, std::abs(dir - ref));
      }
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("normalized Legendre table matches the signed accessor convention") {
  const int lmax = 8;
  std::vector<double> table(legendre_table_size(lmax));
  const double x = 0.3, s = std::sqrt(1 - x * x);
  legendre_normalized(lmax, x, s, table.data());
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m)
      CHECK(legendre_signed(table.data(), l, m) == doctest::Approx(sph_harm(l, m, std::acos(x), 0.0).real()));
}

TEST_CASE("Bessel functions and zeros agree with Boost") {
  for (int order = 0; order <= 12; ++order) {
    for (double x : {0.0, 0.1, 1.7, 9.3, 31.0, 80.5}) {
      CHECK(bessel_j(order, x) == doctest::Approx(boost::math::cyl_bessel_j(order, x)).epsilon(1e-10).scale(1.0));
      CHECK(sph_bessel_j(order, x) == doctest::Approx(boost::math::sph_bessel(order, x)).epsilon(1e-10).scale(1.0));
    }
    for (int m = 1; m <= 6; ++m)
      CHECK(bessel_j_zero(order, m) == doctest::Approx(boost::math::cyl_bessel_j_zero(double(order), m)).epsilon(1e-12));
  }
}

TEST_CASE("batched Bessel evaluation matches single evaluations") {
  std::vector<double> J(16), j(16);
  for (double x : {0.0, 0.5, 7.25, 44.0}) {
    bessel_j_all(15, x, J.data());
    sph_bessel_j_all(15, x, j.data());
    for (int n = 0; n <= 15; ++n) {
      CHECK(J[n] == doctest::Approx(bessel_j(n, x)).epsilon(1e-10).scale(1.0));
      CHECK(j[n] == doctest::Approx(sph_bessel_j(n, x)).epsilon(1e-10).scale(1.0));
    }
  }
}
