#pragma once

// Reference computations that share no code with the library's fast paths.

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/spherical_harmonic.hpp>

#include "basis.hpp"
#include "special.hpp"

namespace oracle {

using hetcov::cplx;
using hetcov::kPi;
using hetcov::MatC;

// c(l) = pi (binom(l, l/2) / 2^l)^2 for even l, evaluated from exact integers.
inline double funk_hecke_direct(int l) {
  if (l % 2 == 1) return 0.0;
  const double ratio = boost::math::binomial_coefficient<double>(l, l / 2) / std::ldexp(1.0, l);
  return kPi * ratio * ratio;
}

inline cplx ylm(int l, int m, const Eigen::Vector3d& v) {
  const double th = std::acos(std::clamp(v.z(), -1.0, 1.0));
  const double ph = std::atan2(v.y(), v.x());
  return boost::math::spherical_harmonic(l, m, th, ph);
}

// Entries of the (k1, k2) block by direct quadrature of the double sphere
// integral of a_j1(a) conj(a_i1(a)) conj(a_j2(b)) a_i2(b) / (2 pi |a x b|).
// For each b, a is written in polar coordinates about b so the kernel's
// 1/sin singularity cancels the area element; both remaining integrands are
// trigonometric polynomials.
inline MatC kernel_block_quadrature(int k1, int k2) {
  const auto A1 = hetcov::angular_block(k1);
  const auto A2 = hetcov::angular_block(k2);
  const int d1 = static_cast<int>(A1.size()), d2 = static_cast<int>(A2.size());
  const int n_cos = k1 + k2 + 4, n_phi = 2 * (k1 + k2) + 4;
  const int n_th = 4 * k1 + 20, n_ps = 4 * k1 + 8;
  const auto gb = hetcov::gauss_legendre(n_cos, -1.0, 1.0);
  const auto ga = hetcov::gauss_legendre(n_th, 0.0, kPi);
  MatC L = MatC::Zero(static_cast<Eigen::Index>(d1) * d2, static_cast<Eigen::Index>(d1) * d2);
  std::vector<cplx> ya(d1), yb(d2);
  for (int a = 0; a < n_cos; ++a)
    for (int p = 0; p < n_phi; ++p) {
      const double ct = gb.nodes[a], st = std::sqrt(1.0 - ct * ct), ph = 2.0 * kPi * p / n_phi;
      const double wb = gb.weights[a] * 2.0 * kPi / n_phi;
      const Eigen::Vector3d beta(st * std::cos(ph), st * std::sin(ph), ct);
      const Eigen::Vector3d u = beta.unitOrthogonal(), v = beta.cross(u);
      for (int i = 0; i < d2; ++i) yb[i] = ylm(A2[i].first, A2[i].second, beta);
      MatC inner = MatC::Zero(d1, d1);
      for (int t = 0; t < n_th; ++t)
        for (int s = 0; s < n_ps; ++s) {
          const double th = ga.nodes[t], ps = 2.0 * kPi * s / n_ps;
          const double w = ga.weights[t] / n_ps;  // (2 pi / n_ps) / (2 pi)
          const Eigen::Vector3d al = std::cos(th) * beta + std::sin(th) * (std::cos(ps) * u + std::sin(ps) * v);
          for (int i = 0; i < d1; ++i) ya[i] = ylm(A1[i].first, A1[i].second, al);
          for (int i = 0; i < d1; ++i)
            for (int j = 0; j < d1; ++j) inner(i, j) += w * std::conj(ya[i]) * ya[j];
        }
      for (int i1 = 0; i1 < d1; ++i1)
        for (int j1 = 0; j1 < d1; ++j1)
          for (int i2 = 0; i2 < d2; ++i2)
            for (int j2 = 0; j2 < d2; ++j2)
              L(i1 * d2 + i2, j1 * d2 + j2) += wb * inner(i1, j1) * yb[i2] * std::conj(yb[j2]);
    }
  return L;
}

}  // namespace oracle
