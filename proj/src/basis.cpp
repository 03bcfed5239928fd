#include "basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "container.hpp"

namespace hetcov {

BasisIndexSet make_index_sets(int K) {
  require(K >= 0, ErrorKind::invalid_argument, "K must be non-negative");
  BasisIndexSet idx;
  idx.K = K;
  for (int k = 0; k <= K; ++k) {
    for (int l = k % 2; l <= k; l += 2)
      for (int m = -l; m <= l; ++m) idx.v_indices.push_back({k, l, m});
    for (int m = -k; m <= k; m += 2) idx.i_indices.push_back({k, m});
  }
  return idx;
}

std::vector<std::pair<int, int>> angular_block(int k) {
  std::vector<std::pair<int, int>> out;
  for (int l = k % 2; l <= k; l += 2)
    for (int m = -l; m <= l; ++m) out.emplace_back(l, m);
  return out;
}

double RadialBasis::eval(int k, double r) const {
  if (r < 0.0 || r > omega_max) return 0.0;
  double v = 0.0;
  for (int j = k; j <= K; j += 2) v += mixing(k, j) * bessel_j(j, seed_scale[j] * r);
  return v;
}

void RadialBasis::eval_all(double r, double* out) const {
  if (r < 0.0 || r > omega_max) {
    for (int k = 0; k <= K; ++k) out[k] = 0.0;
    return;
  }
  std::vector<double> seeds(K + 1);
  for (int j = 0; j <= K; ++j) seeds[j] = bessel_j(j, seed_scale[j] * r);
  for (int k = 0; k <= K; ++k) {
    double v = 0.0;
    for (int j = k; j <= K; j += 2) v += mixing(k, j) * seeds[j];
    out[k] = v;
  }
}

int default_quad_order(int K, double omega_max) {
  return std::max(min_quad_order(K), 64 + 4 * static_cast<int>(std::ceil(omega_max)));
}

RadialBasis build_radial_basis(int K, double omega_max, int quad_order) {
  require(K >= 0, ErrorKind::invalid_argument, "K must be non-negative");
  require(omega_max > 0.0, ErrorKind::invalid_argument, "omega_max must be positive");
  require(quad_order >= min_quad_order(K), ErrorKind::invalid_argument,
          "quad_order must be at least 4(K+2) = " + std::to_string(min_quad_order(K)));

  RadialBasis b;
  b.K = K;
  b.omega_max = omega_max;
  b.quad_order = quad_order;
  const QuadratureRule rule = gauss_legendre(quad_order, 0.0, omega_max);
  b.quad_nodes = rule.nodes;
  b.quad_weights = rule.weights;

  // Seed k gets the zero index that makes oscillation count fall as k rises
  // within its parity family; every seed vanishes at omega_max.
  b.seed_scale.resize(K + 1);
  MatR seeds(K + 1, quad_order);
  for (int k = 0; k <= K; ++k) {
    const int top = (K % 2 == k % 2) ? K : K - 1;
    const int zero_index = (top - k) / 2 + 1;
    b.seed_scale[k] = bessel_j_zero(k, zero_index) / omega_max;
    for (int q = 0; q < quad_order; ++q) seeds(k, q) = bessel_j(k, b.seed_scale[k] * rule.nodes[q]);
  }

  VecR rw(quad_order);
  for (int q = 0; q < quad_order; ++q) rw[q] = rule.weights[q] * rule.nodes[q];
  auto inner = [&](const VecR& a, const VecR& c) { return (a.array() * c.array() * rw.array()).sum(); };

  b.samples = MatR::Zero(K + 1, quad_order);
  b.mixing = MatR::Zero(K + 1, K + 1);
  for (int parity = 0; parity < 2; ++parity) {
    std::vector<int> done;
    const int top = (K % 2 == parity) ? K : K - 1;
    for (int k = top; k >= 0; k -= 2) {
      VecR v = seeds.row(k).transpose();
      VecR t = VecR::Zero(K + 1);
      t[k] = 1.0;
      const double seed_norm = std::sqrt(inner(v, v));
      for (int pass = 0; pass < 2; ++pass) {
        VecR proj = VecR::Zero(quad_order);
        VecR tproj = VecR::Zero(K + 1);
        for (int j : done) {
          const VecR fj = b.samples.row(j).transpose();
          const double c = inner(v, fj);
          proj += c * fj;
          tproj += c * b.mixing.row(j).transpose();
        }
        v -= proj;
        t -= tproj;
      }
      const double norm = std::sqrt(inner(v, v));
      if (!(norm > 1e-10 * seed_norm))
        fail(ErrorKind::construction, "radial Gram-Schmidt lost rank at k=" + std::to_string(k));
      b.samples.row(k) = (v / norm).transpose();
      b.mixing.row(k) = (t / norm).transpose();
      done.push_back(k);
    }
  }
  return b;
}

MatR sph_hankel_transform(const RadialBasis& basis, int l, const std::vector<double>& rho) {
  const int Q = basis.quad_order;
  MatR J(Q, static_cast<Eigen::Index>(rho.size()));
  for (int q = 0; q < Q; ++q) {
    const double r = basis.quad_nodes[q];
    const double w = basis.quad_weights[q] * r * r;
    for (std::size_t i = 0; i < rho.size(); ++i)
      J(q, static_cast<Eigen::Index>(i)) = w * sph_bessel_j(l, r * rho[i]);
  }
  return basis.samples * J;
}

MatR hankel_transform(const RadialBasis& basis, int m, const std::vector<double>& rho) {
  const int Q = basis.quad_order;
  MatR J(Q, static_cast<Eigen::Index>(rho.size()));
  for (int q = 0; q < Q; ++q) {
    const double r = basis.quad_nodes[q];
    const double w = basis.quad_weights[q] * r;
    for (std::size_t i = 0; i < rho.size(); ++i)
      J(q, static_cast<Eigen::Index>(i)) = w * bessel_j(m, r * rho[i]);
  }
  return basis.samples * J;
}

std::vector<ConcentrationEntry> concentration_report(const RadialBasis& basis, double extent, int intervals) {
  require(extent > 1.0 && intervals % 2 == 0, ErrorKind::invalid_argument, "bad concentration grid");
  const double h = extent / intervals;
  const double inner_steps = 1.0 / h;
  const int i1 = static_cast<int>(std::lround(inner_steps));
  require(std::abs(inner_steps - i1) < 1e-9 && i1 % 2 == 0, ErrorKind::invalid_argument,
          "concentration grid must place r=1 on an even Simpson node");

  std::vector<double> rho(intervals + 1);
  for (int i = 0; i <= intervals; ++i) rho[i] = i * h;
  auto simpson = [&](const VecR& f, int upto) {
    double s = f[0] + f[upto];
    for (int i = 1; i < upto; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    return s * h / 3.0;
  };

  std::vector<ConcentrationEntry> out;
  for (int l = 0; l <= basis.K; ++l) {
    const MatR S = sph_hankel_transform(basis, l, rho);
    for (int k = l; k <= basis.K; k += 2) {
      VecR e(intervals + 1);
      for (int i = 0; i <= intervals; ++i) e[i] = S(k, i) * S(k, i) * rho[i] * rho[i];
      const double total = simpson(e, intervals);
      const double part = simpson(e, i1);
      out.push_back({k, l, total > 0.0 ? part / total : 0.0});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.k != b.k ? a.k < b.k : a.l < b.l; });
  return out;
}

SphereQuadrature sphere_quadrature(int n_theta, int n_phi) {
  const QuadratureRule gl = gauss_legendre(n_theta, -1.0, 1.0);
  SphereQuadrature sq;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      sq.cos_theta.push_back(gl.nodes[i]);
      sq.sin_theta.push_back(std::sqrt(std::max(0.0, 1.0 - gl.nodes[i] * gl.nodes[i])));
      sq.phi.push_back(2.0 * kPi * j / n_phi);
      sq.weight.push_back(gl.weights[i] * 2.0 * kPi / n_phi);
    }
  return sq;
}

RealGrid volume_to_real_grid(const FourierVolume& vol, const RadialBasis& basis, const BasisIndexSet& idx,
                             int N_out) {
  require(N_out >= 2, ErrorKind::invalid_argument, "N_out must be at least 2");
  require(vol.coeffs.size() == idx.p_hat(), ErrorKind::invalid_argument, "volume length does not match index set");
  const int K = idx.K;

  // Voxel radii repeat heavily; key them by the exact integer sum of squares.
  std::map<long, int> radius_slot;
  std::vector<double> radii;
  auto offset = [N_out](int i) { return 2 * i + 1 - N_out; };
  for (int iz = 0; iz < N_out; ++iz)
    for (int iy = 0; iy < N_out; ++iy)
      for (int ix = 0; ix < N_out; ++ix) {
        const long key = static_cast<long>(offset(ix)) * offset(ix) + static_cast<long>(offset(iy)) * offset(iy) +
                         static_cast<long>(offset(iz)) * offset(iz);
        if (radius_slot.emplace(key, static_cast<int>(radii.size())).second)
          radii.push_back(std::sqrt(static_cast<double>(key)) / N_out);
      }

  std::vector<MatR> S(K + 1);
  for (int l = 0; l <= K; ++l) S[l] = sph_hankel_transform(basis, l, radii);

  RealGrid grid;
  grid.N = N_out;
  grid.values.assign(static_cast<std::size_t>(N_out) * N_out * N_out, 0.0);
  std::vector<double> leg(legendre_table_size(K));
  std::vector<cplx> eimphi(2 * K + 1);
  double max_imag = 0.0;
  const double scale = 1.0 / (2.0 * kPi * kPi);
  for (int iz = 0; iz < N_out; ++iz)
    for (int iy = 0; iy < N_out; ++iy)
      for (int ix = 0; ix < N_out; ++ix) {
        const long key = static_cast<long>(offset(ix)) * offset(ix) + static_cast<long>(offset(iy)) * offset(iy) +
                         static_cast<long>(offset(iz)) * offset(iz);
        const int slot = radius_slot.at(key);
        const double x = grid_center(ix, N_out), y = grid_center(iy, N_out), z = grid_center(iz, N_out);
        const double rxy = std::hypot(x, y);
        const double r = std::hypot(rxy, z);
        const double ct = r > 0 ? z / r : 1.0, st = r > 0 ? rxy / r : 0.0;
        const double phi = std::atan2(y, x);
        legendre_normalized(K, ct, st, leg.data());
        for (int m = -K; m <= K; ++m) eimphi[m + K] = std::polar(1.0, m * phi);
        cplx acc = 0.0;
        for (int p = 0; p < idx.p_hat(); ++p) {
          const auto& v = idx.v_indices[p];
          if (vol.coeffs[p] == cplx(0.0)) continue;
          acc += vol.coeffs[p] * ipow(v.l) * S[v.l](v.k, slot) * legendre_signed(leg.data(), v.l, v.m) *
                 eimphi[v.m + K];
        }
        acc *= scale;
        grid.values[(static_cast<std::size_t>(iz) * N_out + iy) * N_out + ix] = acc.real();
        max_imag = std::max(max_imag, std::abs(acc.imag()));
      }
  grid.max_imag_residual = max_imag;
  return grid;
}

cplx eval_fourier_volume(const VecC& coeffs, const RadialBasis& basis, const BasisIndexSet& idx, double x, double y,
                         double z) {
  const int K = idx.K;
  const double rxy = std::hypot(x, y);
  const double r = std::hypot(rxy, z);
  std::vector<double> f(K + 1), leg(legendre_table_size(K));
  basis.eval_all(r, f.data());
  legendre_normalized(K, r > 0 ? z / r : 1.0, r > 0 ? rxy / r : 0.0, leg.data());
  const double phi = std::atan2(y, x);
  cplx acc = 0.0;
  for (int p = 0; p < idx.p_hat(); ++p) {
    const auto& v = idx.v_indices[p];
    acc += coeffs[p] * f[v.k] * legendre_signed(leg.data(), v.l, v.m) * std::polar(1.0, v.m * phi);
  }
  return acc;
}

void save_radial_basis(const RadialBasis& basis, const std::filesystem::path& path, const std::string& config_hash) {
  Container c("radial_basis", config_hash);
  c.meta()["K"] = basis.K;
  c.meta()["omega_max"] = basis.omega_max;
  c.meta()["quad_order"] = basis.quad_order;
  c.put("quad_nodes", basis.quad_nodes);
  c.put("quad_weights", basis.quad_weights);
  c.put("samples", basis.samples);
  c.put("seed_scale", basis.seed_scale);
  c.put("mixing", basis.mixing);
  c.save(path);
}

RadialBasis load_radial_basis(const std::filesystem::path& path) {
  const Container c = Container::load(path, "radial_basis");
  RadialBasis b;
  b.K = c.meta().at("K").get<int>();
  b.omega_max = c.meta().at("omega_max").get<double>();
  b.quad_order = c.meta().at("quad_order").get<int>();
  b.quad_nodes = c.get_vector("quad_nodes");
  b.quad_weights = c.get_vector("quad_weights");
  b.samples = c.get_real("samples");
  b.seed_scale = c.get_vector("seed_scale");
  b.mixing = c.get_real("mixing");
  require(static_cast<int>(b.quad_nodes.size()) == b.quad_order && b.samples.rows() == b.K + 1 &&
              b.samples.cols() == b.quad_order && b.mixing.rows() == b.K + 1,
          ErrorKind::format, "radial basis file '" + path.string() + "' has inconsistent shapes");
  return b;
}

}  // namespace hetcov
