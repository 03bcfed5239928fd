#pragma once

#include <limits>
#include <string>
#include <vector>

#include "basis.hpp"
#include "dataset.hpp"
#include "projection.hpp"

namespace hetcov {

struct Blob {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double amplitude = 1.0;
  double sigma = 0.1;
};

// Sum of isotropic Gaussians a exp(-|x - c|^2 / (2 s^2)).
struct Phantom {
  std::vector<Blob> blobs;

  // Throws on non-positive widths; returns warnings for blobs reaching past radius 1.2.
  std::vector<std::string> validate() const;
  cplx fourier(const Eigen::Vector3d& xi) const;
  double density(const Eigen::Vector3d& x) const;
};

// Closed-form X-ray transform sampled at the pixel centers of an N x N grid.
std::vector<double> project_phantom_analytic(const Phantom& ph, const Rotation& rot, int N);

// Weighted inner products of the phantom's Fourier transform with the volume basis.
VecC phantom_to_coeffs(const Phantom& ph, const RadialBasis& basis, const BasisIndexSet& idx);

enum class Heterogeneity { discrete, triangle };

struct ClassSpec {
  Phantom phantom;
  double probability = 1.0;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct SimConfig {
  std::size_t n = 10000;
  int N = 65;
  int N_res = 17;
  int K = 15;
  double omega_max = 0.0;  // 0: N_res pi / 2
  Heterogeneity mode = Heterogeneity::discrete;
  std::vector<ClassSpec> classes;  // triangle mode: exactly three vertices, probabilities ignored
  double snr_het = kNoiseless;
  std::uint64_t seed = 1;

  double effective_omega_max() const { return omega_max > 0.0 ? omega_max : default_omega_max(N_res); }
  void validate() const;
};

// Oracle-only simulation truth, all in volume-coefficient space.
struct GroundTruth {
  Heterogeneity mode = Heterogeneity::discrete;
  MatC class_coeffs;  // p_hat x C
  VecR mean_weights;  // E[beta]
  MatR weight_cov;    // Cov[beta]
  VecC mu0;
  MatC sigma0;
  VecR sigma0_eigvals;  // descending
  MatC sigma0_eigvecs;
  std::vector<int> labels;    // class (discrete) or edge (triangle) per image
  std::vector<double> edge_t; // position along the edge (triangle)
  MatR weights;               // C x n mixing weights beta_s
  double sigma2 = 0.0;
  double signal_het_power = 0.0;
  double signal_power = 0.0;
  double snr_het = 0.0;  // realized
  double snr = 0.0;      // conventional, realized
  std::string config_hash;
};

struct Simulation {
  Dataset dataset;
  GroundTruth truth;
};

Simulation generate_dataset(const SimConfig& cfg, const RadialBasis& basis, const BasisIndexSet& idx,
                            const std::string& config_hash = {});

// Per-purpose random stream for an item, independent of evaluation order.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t item);

// Noise variance giving the target SNR_het: sigma^2 = P_het N^2 / (N_res^2 snr).
double noise_variance_for(double signal_het_power, double snr_het, int N, int N_res);

struct NoiseResult {
  double sigma2 = 0.0;
  double signal_het_power = 0.0;
};

// Adds i.i.d. Gaussian noise at the target SNR_het. `mean_images` holds the
// clean projections of the true mean volume, aligned with `images`.
NoiseResult add_noise(std::vector<float>& images, const std::vector<float>& mean_images, std::size_t n, int N,
                      int N_res, double snr_het, std::uint64_t seed);

// Average squared in-disc pixel value (1/(n q)) sum ||.||^2.
double in_disc_power(const std::vector<float>& images, std::size_t n, int N);

// Sample variance of all pixels outside the unit disc.
double estimate_sigma2_from_corners(const std::vector<float>& images, std::size_t n, int N);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

// Desk-scale phantom sets for the experiments.
std::vector<ClassSpec> two_class_phantoms();
std::vector<ClassSpec> three_class_phantoms();
// Vertices for the triangle-perimeter experiment.
std::vector<ClassSpec> triangle_phantoms();

}  // namespace hetcov
