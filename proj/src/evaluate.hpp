#pragma once

#include <optional>
#include <string>
#include <vector>

#include "basis.hpp"

namespace hetcov {

struct FSCCurve {
  std::vector<double> shell_centers;
  std::vector<double> values;
  std::vector<int> counts;           // grid points per shell
  std::vector<bool> empty_energy;    // shell where either volume has zero energy
  double cutoff_freq = 0.0;          // first shell center below 0.5; omega_max if none
};

// Shell correlation of two volumes sampled on a (2 n_shells + 1)^3 Cartesian
// grid spanning the ball of radius omega_max.
FSCCurve fsc(const VecC& a, const VecC& b, const RadialBasis& basis, const BasisIndexSet& idx, int n_shells);

// |<a, b>| / (||a|| ||b||): the real correlation after the best global phase.
double correlation(const VecC& a, const VecC& b);

struct MPLaw {
  double gamma = 0.0, sigma2 = 0.0;
  double lower = 0.0, upper = 0.0;
  double density(double x) const;
  // Mass in [a, b] by Gauss-Legendre on the substitution x = center + half-width sin(t).
  double mass(double a, double b) const;
};

MPLaw mp_density(double gamma, double sigma2);
double spike_threshold(double gamma, double sigma2);

struct SpikePrediction {
  double correlation = 0.0;  // limiting top-eigenvector correlation, 0 below threshold
  double eigenvalue = 0.0;   // limiting top sample eigenvalue
};
SpikePrediction limiting_top_correlation(double tau1sq, double sigma2, double gamma);

struct HistogramRow {
  double lo, hi, center, mass;
  double mp_mass;  // NaN without overlay
};

std::vector<HistogramRow> eigen_histogram_export(const VecR& eigvals, int bins,
                                                 const std::optional<MPLaw>& overlay = std::nullopt);
// One-line header plus rows.
std::string histogram_csv(const std::vector<HistogramRow>& rows);

// Total-variation distance between histogram masses and MP masses over the same bins.
double tv_distance_to_mp(const std::vector<HistogramRow>& rows);

// Eigenvalues (descending) of the sample covariance of n draws of
// x = sum_k sqrt(tau2_k) g_k e_k + sigma z in R^p.
VecR sample_covariance_spectrum(int p, int n, double sigma2, const std::vector<double>& spikes, std::uint64_t seed);

// Least-squares affine alignment of estimated coordinates (n x d complex,
// real-embedded) onto the true planar positions given by mixing weights
// (3 x n) and triangle vertices (2 x 3); returns the fraction of aligned points
// inside the triangle inflated by `inflate` about its centroid.
double triangle_hull_fraction(const MatC& alphas, const MatR& weights, const MatR& vertices, double inflate = 0.05);

// Isometric planar embedding (2 x 3) of three volumes relative to their weighted mean.
MatR triangle_vertices(const MatC& class_coeffs, const VecR& mean_weights);

// Best one-to-one matching of estimated to true volumes by correlation of the
// mean-subtracted coefficient vectors; returns for each estimate the matched truth index or -1.
std::vector<int> match_classes(const std::vector<VecC>& estimated, const std::vector<VecC>& truth, const VecC& mu);

}  // namespace hetcov
