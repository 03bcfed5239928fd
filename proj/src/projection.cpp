#include "projection.hpp"

#include <cmath>
#include <map>

namespace hetcov {

VecC ProjectionMatrix::apply(const VecC& vol) const {
  const int p = BasisIndexSet::volume_block_offset(K + 1);
  require(vol.size() == p, ErrorKind::invalid_argument, "projection: volume length mismatch");
  VecC out(BasisIndexSet::image_block_offset(K + 1));
  for (int k = 0; k <= K; ++k)
    out.segment(BasisIndexSet::image_block_offset(k), k + 1).noalias() =
        blocks[k] * vol.segment(BasisIndexSet::volume_block_offset(k), BasisIndexSet::volume_block_size(k));
  return out;
}

VecC ProjectionMatrix::backproject(const VecC& img) const {
  const int q = BasisIndexSet::image_block_offset(K + 1);
  require(img.size() == q, ErrorKind::invalid_argument, "backprojection: image length mismatch");
  VecC out(BasisIndexSet::volume_block_offset(K + 1));
  for (int k = 0; k <= K; ++k)
    out.segment(BasisIndexSet::volume_block_offset(k), BasisIndexSet::volume_block_size(k)).noalias() =
        blocks[k].adjoint() * img.segment(BasisIndexSet::image_block_offset(k), k + 1);
  return out;
}

MatC ProjectionMatrix::dense() const {
  MatC out = MatC::Zero(BasisIndexSet::image_block_offset(K + 1), BasisIndexSet::volume_block_offset(K + 1));
  for (int k = 0; k <= K; ++k)
    out.block(BasisIndexSet::image_block_offset(k), BasisIndexSet::volume_block_offset(k), k + 1,
              BasisIndexSet::volume_block_size(k)) = blocks[k];
  return out;
}

ProjectionBuilder::ProjectionBuilder(const BasisIndexSet& idx) : K_(idx.K), wigner_(idx.K), equator_(idx.K + 1) {
  std::vector<double> leg(legendre_table_size(K_));
  legendre_normalized(K_, 0.0, 1.0, leg.data());
  for (int l = 0; l <= K_; ++l) {
    equator_[l].resize(l + 1);
    for (int j = 0; j <= l; ++j)
      equator_[l][j] = std::sqrt(2.0 * kPi) * legendre_signed(leg.data(), l, -l + 2 * j);
  }
}

void ProjectionBuilder::build_into(const Rotation& rot, ProjectionMatrix& out) const {
  const EulerZYZ e = euler_zyz(rot.matrix());
  std::vector<MatC> rows(K_ + 1);
  for (int l = 0; l <= K_; ++l) rows[l] = equator_[l].asDiagonal() * wigner_.D_parity_rows(l, e);
  out.K = K_;
  out.blocks.resize(K_ + 1);
  for (int k = 0; k <= K_; ++k) {
    MatC& B = out.blocks[k];
    B.setZero(k + 1, BasisIndexSet::volume_block_size(k));
    int col = 0;
    for (int l = k % 2; l <= k; l += 2) {
      // rows m' = -k + 2i with |m'| <= l start at i = (k - l)/2
      B.block((k - l) / 2, col, l + 1, 2 * l + 1) = rows[l];
      col += 2 * l + 1;
    }
  }
}

ProjectionMatrix ProjectionBuilder::build(const Rotation& rot) const {
  ProjectionMatrix P;
  build_into(rot, P);
  return P;
}

ProjectionMatrix projection_matrix(const Rotation& rot, const BasisIndexSet& idx) {
  return ProjectionBuilder(idx).build(rot);
}

FourierImage apply_projection(const ProjectionMatrix& P, const FourierVolume& vol) {
  require(vol.K == P.K, ErrorKind::invalid_argument, "projection: index sets differ");
  return {P.K, P.apply(vol.coeffs)};
}

FourierVolume apply_backprojection(const ProjectionMatrix& P, const FourierImage& img, double omega_max) {
  require(img.K == P.K, ErrorKind::invalid_argument, "backprojection: index sets differ");
  return {P.K, omega_max, P.backproject(img.coeffs)};
}

MatC volume_rotation_operator(const Rotation& rot, const BasisIndexSet& idx) {
  WignerCalculator W(idx.K);
  std::vector<MatC> D(idx.K + 1);
  for (int l = 0; l <= idx.K; ++l) D[l] = W.D(l, rot);
  MatC U = MatC::Zero(idx.p_hat(), idx.p_hat());
  int start = 0;
  for (int k = 0; k <= idx.K; ++k)
    for (int l = k % 2; l <= k; l += 2) {
      U.block(start, start, 2 * l + 1, 2 * l + 1) = D[l];
      start += 2 * l + 1;
    }
  return U;
}

PixelMap build_pixel_map(int N, const RadialBasis& basis, const BasisIndexSet& idx) {
  require(N >= 2, ErrorKind::invalid_argument, "image size must be at least 2");
  require(basis.K == idx.K, ErrorKind::invalid_argument, "basis and index set disagree on K");
  const int K = idx.K;
  PixelMap map;
  map.N = N;
  std::map<long, int> radius_slot;
  std::vector<double> radii;
  std::vector<int> slot_of_pixel;
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix) {
      if (!pixel_in_disc(ix, iy, N)) continue;
      const long a = 2L * ix + 1 - N, b = 2L * iy + 1 - N;
      const long key = a * a + b * b;
      map.pixel_index.push_back(iy * N + ix);
      map.x.push_back(grid_center(ix, N));
      map.y.push_back(grid_center(iy, N));
      auto [it, fresh] = radius_slot.emplace(key, static_cast<int>(radii.size()));
      if (fresh) radii.push_back(std::sqrt(static_cast<double>(key)) / N);
      slot_of_pixel.push_back(it->second);
    }
  map.q = static_cast<int>(map.pixel_index.size());
  require(idx.q_hat() <= map.q, ErrorKind::invalid_argument,
          "image basis has more functions than in-disc pixels; use a larger N or a smaller K");
  map.c_q = 4.0 * kPi * kPi * kPi / map.q;

  std::vector<MatR> H(K + 1);
  for (int m = 0; m <= K; ++m) H[m] = hankel_transform(basis, m, radii);

  map.Q2.resize(map.q, idx.q_hat());
  const double norm = 1.0 / (2.0 * kPi * std::sqrt(2.0 * kPi));
  for (int p = 0; p < map.q; ++p) {
    const double phi = std::atan2(map.y[p], map.x[p]);
    for (int c = 0; c < idx.q_hat(); ++c) {
      const auto [k, m] = idx.i_indices[c];
      const double h = neg1pow(m < 0 ? m : 0) * H[std::abs(m)](k, slot_of_pixel[p]);
      map.Q2(p, c) = norm * ipow(m) * h * std::polar(1.0, m * phi);
    }
  }

  const MatC gram = map.Q2.adjoint() * map.Q2;
  Eigen::LLT<MatC> llt(gram);
  const VecR diag = llt.matrixLLT().diagonal().real();
  if (llt.info() != Eigen::Success || diag.minCoeff() <= 1e-7 * diag.maxCoeff())
    fail(ErrorKind::construction,
         "pixel Gram matrix is numerically singular; use a larger image size N or a smaller K");
  map.Q1 = llt.solve(map.Q2.adjoint());
  map.Q1_re = map.Q1.real();
  map.Q1_im = map.Q1.imag();
  return map;
}

namespace {

template <typename T>
VecC single_image_to_coeffs(const PixelMap& map, std::span<const T> pixels) {
  require(pixels.size() == static_cast<std::size_t>(map.N) * map.N, ErrorKind::invalid_argument,
          "image size does not match pixel map");
  VecR v(map.q);
  for (int p = 0; p < map.q; ++p) v[p] = static_cast<double>(pixels[map.pixel_index[p]]);
  VecC out(map.Q1.rows());
  out.real() = map.Q1_re * v;
  out.imag() = map.Q1_im * v;
  return out;
}

}  // namespace

VecC image_to_coeffs(const PixelMap& map, std::span<const float> pixels) { return single_image_to_coeffs(map, pixels); }
VecC image_to_coeffs(const PixelMap& map, std::span<const double> pixels) {
  return single_image_to_coeffs(map, pixels);
}

MatC images_to_coeffs(const PixelMap& map, std::span<const float> pixels, std::size_t n) {
  const std::size_t NN = static_cast<std::size_t>(map.N) * map.N;
  require(pixels.size() == NN * n, ErrorKind::invalid_argument, "image stack size does not match pixel map");
  MatC out(map.Q1.rows(), static_cast<Eigen::Index>(n));
  constexpr std::size_t chunk = 512;
  for (std::size_t s0 = 0; s0 < n; s0 += chunk) {
    const std::size_t cnt = std::min(chunk, n - s0);
    MatR X(map.q, static_cast<Eigen::Index>(cnt));
    for (std::size_t s = 0; s < cnt; ++s) {
      const float* img = pixels.data() + (s0 + s) * NN;
      for (int p = 0; p < map.q; ++p) X(p, static_cast<Eigen::Index>(s)) = img[map.pixel_index[p]];
    }
    out.middleCols(static_cast<Eigen::Index>(s0), static_cast<Eigen::Index>(cnt)).real() = map.Q1_re * X;
    out.middleCols(static_cast<Eigen::Index>(s0), static_cast<Eigen::Index>(cnt)).imag() = map.Q1_im * X;
  }
  return out;
}

VecC disc_values_to_coeffs(const PixelMap& map, const VecC& values) {
  require(values.size() == map.q, ErrorKind::invalid_argument, "disc value count does not match pixel map");
  return map.Q1 * values;
}

}  // namespace hetcov
