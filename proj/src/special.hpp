#pragma once

#include <vector>

#include "common.hpp"

namespace hetcov {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre rule with `order` nodes on [a, b].
QuadratureRule gauss_legendre(int order, double a, double b);

inline std::size_t legendre_index(int l, int m) {
  return static_cast<std::size_t>(l) * (l + 1) / 2 + static_cast<std::size_t>(m);
}
inline std::size_t legendre_table_size(int lmax) {
  return static_cast<std::size_t>(lmax + 1) * (lmax + 2) / 2;
}

// Fills out[legendre_index(l,m)] for 0 <= m <= l <= lmax with the normalized
// associated Legendre values such that Y_l^m(theta, phi) = out * exp(i m phi)
// (orthonormal, Condon-Shortley phase). x = cos(theta), s = sin(theta) >= 0.
void legendre_normalized(int lmax, double x, double s, double* out);

// Normalized value for any |m| <= l, using P_l^{-m} = (-1)^m P_l^m.
inline double legendre_signed(const double* table, int l, int m) {
  return m >= 0 ? table[legendre_index(l, m)] : neg1pow(m) * table[legendre_index(l, -m)];
}

// Orthonormal complex spherical harmonic with Condon-Shortley phase.
cplx sph_harm(int l, int m, double theta, double phi);

// Spherical harmonic evaluated at a (not necessarily normalized) direction vector.
cplx sph_harm_dir(int l, int m, double x, double y, double z);

// m-th positive zero of J_order.
double bessel_j_zero(int order, int m);

double bessel_j(int order, double x);
double sph_bessel_j(int order, double x);

// J_0..J_nmax at x.
void bessel_j_all(int nmax, double x, double* out);
// j_0..j_lmax at x.
void sph_bessel_j_all(int lmax, double x, double* out);

}  // namespace hetcov
