#include "special.hpp"

#include <cmath>
#include <utility>

#include <boost/math/special_functions/bessel.hpp>

namespace hetcov {

namespace {

// Returns (P_n(x), P_n'(x)).
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int order, double a, double b) {
  require(order >= 1, ErrorKind::invalid_argument, "quadrature order must be positive");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

void legendre_normalized(int lmax, double x, double s, double* out) {
  // Sectoral seeds P_m^m, then the standard two-term upward recurrence in l.
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    out[legendre_index(m, m)] = pmm;
    if (m == lmax) break;
    double prev2 = pmm;
    double prev1 = x * std::sqrt(2.0 * m + 3.0) * pmm;
    out[legendre_index(m + 1, m)] = prev1;
    for (int l = m + 2; l <= lmax; ++l) {
      const double ll = l, mm = m;
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      const double cur = a * (x * prev1 - b * prev2);
      out[legendre_index(l, m)] = cur;
      prev2 = prev1;
      prev1 = cur;
    }
  }
}

cplx sph_harm(int l, int m, double theta, double phi) {
  require(l >= 0 && std::abs(m) <= l, ErrorKind::domain,
          "spherical harmonic requires |m| <= l (l=" + std::to_string(l) + ", m=" + std::to_string(m) + ")");
  std::vector<double> table(legendre_table_size(l));
  legendre_normalized(l, std::cos(theta), std::abs(std::sin(theta)), table.data());
  return legendre_signed(table.data(), l, m) * std::polar(1.0, m * phi);
}

cplx sph_harm_dir(int l, int m, double x, double y, double z) {
  const double rho = std::hypot(x, y);
  const double theta = std::atan2(rho, z);
  const double phi = std::atan2(y, x);
  return sph_harm(l, m, theta, phi);
}

double bessel_j_zero(int order, int m) {
  require(order >= 0 && m >= 1, ErrorKind::invalid_argument, "bessel zero index out of range");
  try {
    return boost::math::cyl_bessel_j_zero(static_cast<double>(order), m);
  } catch (const std::exception& e) {
    fail(ErrorKind::construction, "Bessel zero search failed for J_" + std::to_string(order) + " zero #" +
                                      std::to_string(m) + ": " + e.what());
  }
}

double bessel_j(int order, double x) {
  if (x < 0) return neg1pow(order) * std::cyl_bessel_j(static_cast<double>(order), -x);
  return std::cyl_bessel_j(static_cast<double>(order), x);
}

double sph_bessel_j(int order, double x) {
  if (x < 0) return neg1pow(order) * std::sph_bessel(static_cast<unsigned>(order), -x);
  return std::sph_bessel(static_cast<unsigned>(order), x);
}

void bessel_j_all(int nmax, double x, double* out) {
  for (int n = 0; n <= nmax; ++n) out[n] = bessel_j(n, x);
}

void sph_bessel_j_all(int lmax, double x, double* out) {
  for (int l = 0; l <= lmax; ++l) out[l] = sph_bessel_j(l, x);
}

}  // namespace hetcov
