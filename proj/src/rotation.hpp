#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace hetcov {

class Rotation {
 public:
  Rotation() : q_{1.0, 0.0, 0.0, 0.0}, R_(Eigen::Matrix3d::Identity()) {}
  // Quaternion (w, x, y, z); normalized on construction.
  static Rotation from_quaternion(double w, double x, double y, double z);
  static Rotation from_matrix(const Eigen::Matrix3d& R);

  const std::array<double, 4>& quaternion() const { return q_; }
  const Eigen::Matrix3d& matrix() const { return R_; }
  // Viewing direction: the third row of R.
  Eigen::Vector3d viewing_direction() const { return R_.row(2).transpose(); }

 private:
  std::array<double, 4> q_;
  Eigen::Matrix3d R_;
};

// Haar-distributed rotations from normalized Gaussian quaternions.
std::vector<Rotation> sample_uniform_rotations(std::size_t n, std::uint64_t seed);

Eigen::Matrix3d rot_z(double angle);
Eigen::Matrix3d rot_y(double angle);

struct EulerZYZ {
  double alpha, beta, gamma;
};
// R = Rz(alpha) Ry(beta) Rz(gamma). At gimbal lock gamma is folded into alpha.
EulerZYZ euler_zyz(const Eigen::Matrix3d& R);

// Wigner D matrices for l = 0..lmax, with Y_l^m(R^-1 x) = sum_m' D_{m'm}(R) Y_l^m'(x).
// Rows and columns are indexed by m + l.
class WignerCalculator {
 public:
  explicit WignerCalculator(int lmax);
  int lmax() const { return lmax_; }
  MatC D(int l, const Rotation& rot) const;
  // Rows m' = -l, -l+2, ..., l only (the rows that survive restriction to the equator).
  MatC D_parity_rows(int l, const EulerZYZ& e) const;

 private:
  int lmax_;
  // J_y = V diag(lambda) V^H per l, with lambda snapped to the exact integers.
  std::vector<MatC> eigvecs_;
  std::vector<VecR> eigvals_;
};

MatC wigner_D(int l, const Rotation& rot);

}  // namespace hetcov
