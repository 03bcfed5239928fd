#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "common.hpp"
#include "special.hpp"

namespace hetcov {

struct VolumeIndex {
  int k, l, m;
  bool operator==(const VolumeIndex&) const = default;
};

struct ImageIndex {
  int k, m;
  bool operator==(const ImageIndex&) const = default;
};

// Index lists of the 3D and 2D Fourier bases. Entries of one radial index k
// are contiguous, so blocks can be addressed by offset and size.
struct BasisIndexSet {
  int K = 0;
  std::vector<VolumeIndex> v_indices;
  std::vector<ImageIndex> i_indices;

  int p_hat() const { return static_cast<int>(v_indices.size()); }
  int q_hat() const { return static_cast<int>(i_indices.size()); }

  static int volume_block_size(int k) { return (k + 1) * (k + 2) / 2; }
  static int image_block_size(int k) { return k + 1; }
  static int volume_block_offset(int k) { return k * (k + 1) * (k + 2) / 6; }
  static int image_block_offset(int k) { return k * (k + 1) / 2; }
};

BasisIndexSet make_index_sets(int K);

// Angular functions Y_l^m used by radial block k (l = k mod 2, ..., k), in block order.
std::vector<std::pair<int, int>> angular_block(int k);

struct FourierVolume {
  int K = 0;
  double omega_max = 0.0;
  VecC coeffs;
};

struct FourierImage {
  int K = 0;
  VecC coeffs;
};

class RadialBasis {
 public:
  int K = 0;
  double omega_max = 0.0;
  int quad_order = 0;
  std::vector<double> quad_nodes;
  std::vector<double> quad_weights;
  MatR samples;  // (K+1) x quad_order, f_k at the quadrature nodes

  // f_k is a combination of Bessel seeds J_j(scale_j r), j >= k with j = k (mod 2).
  std::vector<double> seed_scale;
  MatR mixing;  // (K+1) x (K+1), upper triangular within each parity

  double eval(int k, double r) const;
  // All f_0..f_K at r.
  void eval_all(double r, double* out) const;
};

// Smallest admissible quadrature order for a given K.
inline int min_quad_order(int K) { return 4 * (K + 2); }
// Default order: the minimum, raised so oscillatory Hankel integrands are resolved.
int default_quad_order(int K, double omega_max);

RadialBasis build_radial_basis(int K, double omega_max, int quad_order);

inline double default_omega_max(int N_res) { return N_res * kPi / 2.0; }

// Spherical Hankel transform (S_l f_k)(rho) = int f_k(r) j_l(r rho) r^2 dr.
// Returns a (K+1) x rho.size() matrix for one l.
MatR sph_hankel_transform(const RadialBasis& basis, int l, const std::vector<double>& rho);
// Order-m Hankel transform int f_k(r) J_m(r rho) r dr, (K+1) x rho.size().
MatR hankel_transform(const RadialBasis& basis, int m, const std::vector<double>& rho);

struct ConcentrationEntry {
  int k, l;
  double fraction;
};

// Fraction of the energy of S_l f_k (weight r_x^2) lying in r_x <= 1, over the
// real-domain interval [0, extent] split into `intervals` Simpson panels.
std::vector<ConcentrationEntry> concentration_report(const RadialBasis& basis, double extent = 4.0,
                                                     int intervals = 512);

// Sphere quadrature: Gauss-Legendre in cos(theta) times uniform phi.
struct SphereQuadrature {
  std::vector<double> cos_theta, sin_theta, phi, weight;  // flattened points
  std::size_t size() const { return weight.size(); }
};
SphereQuadrature sphere_quadrature(int n_theta, int n_phi);

struct RealGrid {
  int N = 0;
  std::vector<double> values;  // [z][y][x], C order
  double max_imag_residual = 0.0;
  double at(int ix, int iy, int iz) const { return values[(static_cast<std::size_t>(iz) * N + iy) * N + ix]; }
};

// Voxel centers at (2i+1)/N - 1 on each axis of [-1,1]^3.
inline double grid_center(int i, int N) { return (2.0 * i + 1.0) / N - 1.0; }

RealGrid volume_to_real_grid(const FourierVolume& vol, const RadialBasis& basis, const BasisIndexSet& idx,
                             int N_out);

// Fourier-domain evaluation of a volume at a point xi.
cplx eval_fourier_volume(const VecC& coeffs, const RadialBasis& basis, const BasisIndexSet& idx, double x,
                         double y, double z);

// Binary persistence of the radial basis.
void save_radial_basis(const RadialBasis& basis, const std::filesystem::path& path, const std::string& config_hash);
RadialBasis load_radial_basis(const std::filesystem::path& path);

}  // namespace hetcov
