#include "rotation.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace hetcov {

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  require(n > 0.0 && std::isfinite(n), ErrorKind::invalid_argument, "quaternion must be nonzero and finite");
  w /= n, x /= n, y /= n, z /= n;
  Rotation r;
  r.q_ = {w, x, y, z};
  r.R_ << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),      //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Rotation Rotation::from_matrix(const Eigen::Matrix3d& R) {
  require((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-8 && R.determinant() > 0,
          ErrorKind::invalid_argument, "matrix is not a rotation");
  const Eigen::Quaterniond q(R);
  return from_quaternion(q.w(), q.x(), q.y(), q.z());
}

std::vector<Rotation> sample_uniform_rotations(std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::invalid_argument, "need at least one rotation");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Rotation> out;
  out.reserve(n);
  while (out.size() < n) {
    const double w = normal(gen), x = normal(gen), y = normal(gen), z = normal(gen);
    if (w * w + x * x + y * y + z * z < 1e-20) continue;
    out.push_back(Rotation::from_quaternion(w, x, y, z));
  }
  return out;
}

Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

EulerZYZ euler_zyz(const Eigen::Matrix3d& R) {
  const double sb = std::hypot(R(0, 2), R(1, 2));
  EulerZYZ e{};
  e.beta = std::atan2(sb, R(2, 2));
  if (sb > 1e-12) {
    e.alpha = std::atan2(R(1, 2), R(0, 2));
    e.gamma = std::atan2(R(2, 1), -R(2, 0));
  } else if (R(2, 2) > 0) {
    e.beta = 0.0;
    e.gamma = 0.0;
    e.alpha = std::atan2(R(1, 0), R(0, 0));
  } else {
    e.beta = kPi;
    e.gamma = 0.0;
    e.alpha = std::atan2(-R(1, 0), -R(0, 0));
  }
  return e;
}

WignerCalculator::WignerCalculator(int lmax) : lmax_(lmax) {
  require(lmax >= 0, ErrorKind::invalid_argument, "lmax must be non-negative");
  eigvecs_.resize(lmax + 1);
  eigvals_.resize(lmax + 1);
  for (int l = 0; l <= lmax; ++l) {
    const int d = 2 * l + 1;
    MatC Jy = MatC::Zero(d, d);
    for (int m = -l; m < l; ++m) {
      const double c = std::sqrt(static_cast<double>(l * (l + 1) - m * (m + 1)));
      Jy(m + 1 + l, m + l) = cplx(0.0, -0.5 * c);
      Jy(m + l, m + 1 + l) = cplx(0.0, 0.5 * c);
    }
    Eigen::SelfAdjointEigenSolver<MatC> es(Jy);
    eigvecs_[l] = es.eigenvectors();
    eigvals_[l] = es.eigenvalues().array().round().matrix();
  }
}

MatC WignerCalculator::D(int l, const Rotation& rot) const {
  require(l >= 0 && l <= lmax_, ErrorKind::invalid_argument, "Wigner degree out of range");
  const EulerZYZ e = euler_zyz(rot.matrix());
  const int d = 2 * l + 1;
  const MatC& V = eigvecs_[l];
  VecC phase(d);
  for (int j = 0; j < d; ++j) phase[j] = std::polar(1.0, -e.beta * eigvals_[l][j]);
  const MatR small_d = (V * phase.asDiagonal() * V.adjoint()).real();
  MatC out(d, d);
  for (int mp = -l; mp <= l; ++mp)
    for (int m = -l; m <= l; ++m)
      out(mp + l, m + l) = std::polar(1.0, -mp * e.alpha) * small_d(mp + l, m + l) * std::polar(1.0, -m * e.gamma);
  return out;
}

MatC WignerCalculator::D_parity_rows(int l, const EulerZYZ& e) const {
  const int d = 2 * l + 1;
  const MatC& V = eigvecs_[l];
  MatC Vrows(l + 1, d);
  for (int j = 0; j <= l; ++j) Vrows.row(j) = V.row(2 * j);
  VecC phase(d);
  for (int j = 0; j < d; ++j) phase[j] = std::polar(1.0, -e.beta * eigvals_[l][j]);
  const MatR small_d = (Vrows * phase.asDiagonal() * V.adjoint()).real();
  MatC out(l + 1, d);
  for (int j = 0; j <= l; ++j) {
    const int mp = -l + 2 * j;
    const cplx left = std::polar(1.0, -mp * e.alpha);
    for (int m = -l; m <= l; ++m) out(j, m + l) = left * small_d(j, m + l) * std::polar(1.0, -m * e.gamma);
  }
  return out;
}

MatC wigner_D(int l, const Rotation& rot) { return WignerCalculator(l).D(l, rot); }

}  // namespace hetcov
