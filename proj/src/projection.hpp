#pragma once

#include <span>
#include <vector>

#include "basis.hpp"
#include "rotation.hpp"

namespace hetcov {

// Block-diagonal map from volume coefficients to image coefficients for one
// viewing rotation. Block k is (k+1) x (k+1)(k+2)/2.
struct ProjectionMatrix {
  int K = 0;
  std::vector<MatC> blocks;

  VecC apply(const VecC& vol) const;
  VecC backproject(const VecC& img) const;
  // Dense q_hat x p_hat form, for tests and small K.
  MatC dense() const;
};

// Builds projection matrices for many rotations with shared precomputation.
class ProjectionBuilder {
 public:
  explicit ProjectionBuilder(const BasisIndexSet& idx);
  int K() const { return K_; }
  ProjectionMatrix build(const Rotation& rot) const;
  void build_into(const Rotation& rot, ProjectionMatrix& out) const;

 private:
  int K_;
  WignerCalculator wigner_;
  // sqrt(2 pi) Y_l^{m'}(pi/2, 0) for m' = -l, -l+2, ..., l
  std::vector<VecR> equator_;
};

ProjectionMatrix projection_matrix(const Rotation& rot, const BasisIndexSet& idx);
FourierImage apply_projection(const ProjectionMatrix& P, const FourierVolume& vol);
FourierVolume apply_backprojection(const ProjectionMatrix& P, const FourierImage& img, double omega_max);

// Block-diagonal rotation operator on volume coefficients:
// (U v)_{k,l,m'} = sum_m D^l_{m'm}(R) v_{k,l,m}.
MatC volume_rotation_operator(const Rotation& rot, const BasisIndexSet& idx);

struct PixelMap {
  int N = 0;
  int q = 0;
  std::vector<int> pixel_index;  // flat index iy*N + ix of each in-disc pixel
  std::vector<double> x, y;      // pixel centers
  MatC Q2;                       // q x q_hat
  MatC Q1;                       // q_hat x q
  MatR Q1_re, Q1_im;             // split parts of Q1 for real-image products
  double c_q = 0.0;
};

// Pixel (ix, iy) of an N x N grid lies in the unit disc when its center does;
// tested in exact integer arithmetic.
inline bool pixel_in_disc(int ix, int iy, int N) {
  const long a = 2L * ix + 1 - N, b = 2L * iy + 1 - N;
  return a * a + b * b <= static_cast<long>(N) * N;
}

inline constexpr const char* kPixelConvention = "center_2i+1_over_N_minus_1;disc_norm_le_1;row_major_y_x";

PixelMap build_pixel_map(int N, const RadialBasis& basis, const BasisIndexSet& idx);

// Coefficients of one N x N real image (row-major, y then x).
VecC image_to_coeffs(const PixelMap& map, std::span<const float> pixels);
VecC image_to_coeffs(const PixelMap& map, std::span<const double> pixels);
// Coefficients of n images stored consecutively; returns q_hat x n.
MatC images_to_coeffs(const PixelMap& map, std::span<const float> pixels, std::size_t n);
// Least-squares coefficients of complex in-disc values (length q).
VecC disc_values_to_coeffs(const PixelMap& map, const VecC& values);

}  // namespace hetcov
