#include <random>

#include "projection.hpp"
#include "test_support.hpp"

using namespace hetcov;

namespace {

VecC random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  VecC v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  return v;
}

}  // namespace

TEST_CASE("Wigner D matrices rotate spherical harmonics and are unitary") {
  const auto rots = sample_uniform_rotations(6, 3);
  WignerCalculator W(7);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  double worst = 0.0, unit = 0.0;
  for (const auto& r : rots)
    for (int l = 0; l <= 7; ++l) {
      const MatC D = W.D(l, r);
      unit = std::max(unit, (D.adjoint() * D - MatC::Identity(2 * l + 1, 2 * l + 1)).norm());
      CHECK((D - wigner_D(l, r)).norm() < 1e-12);
      for (int t = 0; t < 5; ++t) {
        const Eigen::Vector3d x = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
        const Eigen::Vector3d y = r.matrix().transpose() * x;
        for (int m = -l; m <= l; ++m) {
          cplx rhs = 0.0;
          for (int mp = -l; mp <= l; ++mp) rhs += D(mp + l, m + l) * sph_harm_dir(l, mp, x[0], x[1], x[2]);
          worst = std::max(worst, std::abs(sph_harm_dir(l, m, y[0], y[1], y[2]) - rhs));
        }
      }
    }
  CHECK(worst < 1e-10);
  CHECK(unit < 1e-10);
}

TEST_CASE("Euler angles reconstruct the rotation, including gimbal lock") {
  for (const Eigen::Matrix3d& R : {Eigen::Matrix3d(rot_z(0.3) * rot_y(1.1) * rot_z(-2.0)),
                                   Eigen::Matrix3d(rot_z(0.3) * rot_y(kPi) * rot_z(0.5)),
                                   Eigen::Matrix3d(rot_z(1.2) * rot_y(0.0) * rot_z(0.4))}) {
    const auto e = euler_zyz(R);
    CHECK((rot_z(e.alpha) * rot_y(e.beta) * rot_z(e.gamma) - R).norm() < 1e-12);
  }
}

TEST_CASE("quaternion and matrix forms agree") {
  for (const auto& r : sample_uniform_rotations(10, 17)) {
    const auto& q = r.quaternion();
    CHECK(std::abs(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3] - 1.0) < 1e-14);
    const auto back = Rotation::from_matrix(r.matrix());
    CHECK((back.matrix() - r.matrix()).norm() < 1e-12);
    CHECK(std::abs(r.matrix().determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("projected coefficients sample the volume on the central slice") {
  const int K = 8;
  const double omega = 10 * kPi / 2;
  const auto idx = make_index_sets(K);
  const auto b = build_radial_basis(K, omega, default_quad_order(K, omega));
  const VecC v = random_vec(idx.p_hat(), 1);
  for (const auto& rot : sample_uniform_rotations(3, 5)) {
    const auto P = projection_matrix(rot, idx);
    const VecC img = P.apply(v);
    double err = 0.0, scale = 0.0;
    std::vector<double> f(K + 1);
    for (int t = 0; t < 40; ++t) {
      const double r = omega * (0.05 + 0.9 * t / 40.0), ph = 0.41 * t;
      const Eigen::Vector3d u(r * std::cos(ph), r * std::sin(ph), 0.0);
      const Eigen::Vector3d xi = rot.matrix().transpose() * u;
      const cplx vol = eval_fourier_volume(v, b, idx, xi[0], xi[1], xi[2]);
      b.eval_all(r, f.data());
      cplx slice = 0.0;
      for (int i = 0; i < idx.q_hat(); ++i)
        slice += img[i] * f[idx.i_indices[i].k] / std::sqrt(2 * kPi) * std::polar(1.0, idx.i_indices[i].m * ph);
      err = std::max(err, std::abs(vol - slice));
      scale = std::max(scale, std::abs(vol));
    }
    CHECK(err / scale < 1e-10);
  }
}

TEST_CASE("projection is equivariant under volume rotation") {
  const int K = 5;
  const auto idx = make_index_sets(K);
  const VecC v = random_vec(idx.p_hat(), 2);
  const auto rots = sample_uniform_rotations(4, 8);
  for (int i = 0; i + 1 < 4; ++i) {
    const Rotation& Rs = rots[i];
    const Rotation& R = rots[i + 1];
    const MatC U = volume_rotation_operator(R, idx);
    const VecC lhs = projection_matrix(Rs, idx).apply(U * v);
    const VecC rhs = projection_matrix(Rotation::from_matrix(Rs.matrix() * R.matrix()), idx).apply(v);
    CHECK((lhs - rhs).norm() / rhs.norm() < 1e-10);
  }
}

TEST_CASE("backprojection is the adjoint of projection") {
  const int K = 6;
  const auto idx = make_index_sets(K);
  const auto P = projection_matrix(sample_uniform_rotations(1, 4)[0], idx);
  const VecC v = random_vec(idx.p_hat(), 3);
  const VecC w = random_vec(idx.q_hat(), 4);
  CHECK(std::abs(w.dot(P.apply(v)) - P.backproject(w).dot(v)) < 1e-10 * v.norm() * w.norm());
  CHECK((P.dense() * v - P.apply(v)).norm() < 1e-12 * v.norm());
  ProjectionBuilder builder(idx);
  ProjectionMatrix Q;
  builder.build_into(sample_uniform_rotations(1, 4)[0], Q);
  CHECK((Q.dense() - P.dense()).norm() < 1e-13);
}

TEST_CASE("pixel map: disc membership and coefficient round trip") {
  for (int N : {2, 5, 16, 33}) {
    for (int iy = 0; iy < N; ++iy)
      for (int ix = 0; ix < N; ++ix) {
        CHECK(pixel_in_disc(ix, iy, N) == pixel_in_disc(N - 1 - ix, iy, N));
        CHECK(pixel_in_disc(ix, iy, N) == pixel_in_disc(iy, ix, N));
      }
  }
  const int K = 6, N = 33;
  const double omega = 8 * kPi / 2;
  const auto idx = make_index_sets(K);
  const auto b = build_radial_basis(K, omega, default_quad_order(K, omega));
  const auto map = build_pixel_map(N, b, idx);
  CHECK(map.q == static_cast<int>(map.pixel_index.size()));
  CHECK(map.c_q > 0.0);
  CHECK((map.Q1 * map.Q2 - MatC::Identity(idx.q_hat(), idx.q_hat())).norm() < 1e-8);
  // In-disc values synthesized from coefficients map back to the same coefficients.
  const VecC c = random_vec(idx.q_hat(), 5);
  const VecC disc = map.Q2 * c;
  const VecC back = disc_values_to_coeffs(map, disc);
  CHECK((back - c).norm() / c.norm() < 1e-8);
}
