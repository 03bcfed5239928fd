#include "simulate.hpp"

#include <cmath>
#include <random>

#include "estimator.hpp"
#include "parallel.hpp"

namespace hetcov {

namespace {

constexpr std::uint64_t kStreamRotations = 1, kStreamClasses = 2, kStreamNoise = 3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const char* mode_name(Heterogeneity h) { return h == Heterogeneity::discrete ? "discrete" : "triangle"; }

Heterogeneity parse_mode(const std::string& s) {
  if (s == "discrete") return Heterogeneity::discrete;
  if (s == "triangle") return Heterogeneity::triangle;
  fail(ErrorKind::format, "unknown heterogeneity mode '" + s + "'");
}

// Applies i.i.d. N(0, sigma2) noise to every pixel; returns the realized noise variance.
double apply_noise(std::vector<float>& images, std::size_t n, int N, double sigma2, std::uint64_t seed) {
  if (sigma2 == 0.0) return 0.0;
  const std::size_t NN = static_cast<std::size_t>(N) * N;
  const double sd = std::sqrt(sigma2);
  double total = 0.0;
  ordered_reduce(
      n, 256, total,
      [&](std::size_t b, std::size_t e) {
        double ss = 0.0;
        for (std::size_t s = b; s < e; ++s) {
          std::mt19937_64 gen(substream_seed(seed, kStreamNoise, s));
          std::normal_distribution<double> nd(0.0, sd);
          float* img = images.data() + s * NN;
          for (std::size_t i = 0; i < NN; ++i) {
            const double z = nd(gen);
            img[i] = static_cast<float>(img[i] + z);
            ss += z * z;
          }
        }
        return ss;
      },
      [](double& t, double p) { t += p; });
  return total / (static_cast<double>(n) * NN);
}

}  // namespace

std::vector<std::string> Phantom::validate() const {
  std::vector<std::string> warnings;
  require(!blobs.empty(), ErrorKind::config, "phantom has no blobs");
  for (const Blob& b : blobs) {
    require(b.sigma > 0.0 && std::isfinite(b.sigma), ErrorKind::config, "blob width must be positive");
    require(std::isfinite(b.amplitude) && b.center.allFinite(), ErrorKind::config, "blob parameters must be finite");
    if (b.center.norm() + 3.0 * b.sigma > 1.2)
      warnings.push_back("blob at distance " + std::to_string(b.center.norm()) + " with width " +
                         std::to_string(b.sigma) + " extends beyond radius 1.2");
  }
  return warnings;
}

cplx Phantom::fourier(const Eigen::Vector3d& xi) const {
  cplx acc = 0.0;
  for (const Blob& b : blobs)
    acc += b.amplitude * std::pow(2.0 * kPi, 1.5) * std::pow(b.sigma, 3) *
           std::exp(-0.5 * b.sigma * b.sigma * xi.squaredNorm()) * std::polar(1.0, -xi.dot(b.center));
  return acc;
}

double Phantom::density(const Eigen::Vector3d& x) const {
  double acc = 0.0;
  for (const Blob& b : blobs) acc += b.amplitude * std::exp(-(x - b.center).squaredNorm() / (2.0 * b.sigma * b.sigma));
  return acc;
}

std::vector<double> project_phantom_analytic(const Phantom& ph, const Rotation& rot, int N) {
  require(N >= 1, ErrorKind::invalid_argument, "image size must be positive");
  std::vector<double> img(static_cast<std::size_t>(N) * N, 0.0);
  for (const Blob& b : ph.blobs) {
    // Image coordinates are the first two components of R x.
    const Eigen::Vector3d c = rot.matrix() * b.center;
    const double peak = b.amplitude * b.sigma * std::sqrt(2.0 * kPi);
    const double inv = 1.0 / (2.0 * b.sigma * b.sigma);
    std::vector<double> gx(N), gy(N);
    for (int i = 0; i < N; ++i) {
      const double t = grid_center(i, N);
      gx[i] = std::exp(-(t - c.x()) * (t - c.x()) * inv);
      gy[i] = std::exp(-(t - c.y()) * (t - c.y()) * inv);
    }
    for (int iy = 0; iy < N; ++iy)
      for (int ix = 0; ix < N; ++ix) img[static_cast<std::size_t>(iy) * N + ix] += peak * gy[iy] * gx[ix];
  }
  return img;
}

VecC phantom_to_coeffs(const Phantom& ph, const RadialBasis& basis, const BasisIndexSet& idx) {
  require(basis.K == idx.K, ErrorKind::invalid_argument, "basis and index set disagree on K");
  const int K = idx.K;
  const std::size_t Q = basis.quad_nodes.size();
  VecC out = VecC::Zero(idx.p_hat());
  std::vector<double> jl(K + 1);
  for (const Blob& b : ph.blobs) {
    const double dist = b.center.norm();
    const double scale = b.amplitude * std::pow(2.0 * kPi, 1.5) * std::pow(b.sigma, 3) * 4.0 * kPi;
    // radial[l](k) = int f_k(r) exp(-s^2 r^2/2) j_l(r |c|) r dr
    MatR radial = MatR::Zero(K + 1, K + 1);
    for (std::size_t q = 0; q < Q; ++q) {
      const double r = basis.quad_nodes[q];
      sph_bessel_j_all(K, r * dist, jl.data());
      const double g = basis.quad_weights[q] * std::exp(-0.5 * b.sigma * b.sigma * r * r) * r;
      for (int l = 0; l <= K; ++l) radial.col(l) += g * jl[l] * basis.samples.col(static_cast<Eigen::Index>(q));
    }
    const Eigen::Vector3d dir = dist > 0.0 ? Eigen::Vector3d(b.center / dist) : Eigen::Vector3d::UnitZ();
    for (int i = 0; i < idx.p_hat(); ++i) {
      const auto [k, l, m] = idx.v_indices[i];
      // plane wave: exp(-i xi.c) = 4 pi sum (-i)^l j_l(r|c|) Y_l^m(xi) conj(Y_l^m(c))
      out[i] += scale * ipow(-l) * std::conj(sph_harm_dir(l, m, dir.x(), dir.y(), dir.z())) * radial(k, l);
    }
  }
  return out;
}

void SimConfig::validate() const {
  require(n >= 1, ErrorKind::config, "n must be at least 1");
  require(N >= 2, ErrorKind::config, "N must be at least 2");
  require(N_res >= 1 && N_res <= N, ErrorKind::config, "N_res must lie in [1, N]");
  require(K >= 0, ErrorKind::config, "K must be non-negative");
  require(!classes.empty(), ErrorKind::config, "at least one class is required");
  require(snr_het > 0.0, ErrorKind::config, "snr_het must be positive (inf for noiseless)");
  if (mode == Heterogeneity::triangle) {
    require(classes.size() == 3, ErrorKind::config, "triangle mode needs exactly three vertex phantoms");
  } else {
    double total = 0.0;
    for (const auto& c : classes) {
      require(c.probability >= 0.0, ErrorKind::config, "class probabilities must be non-negative");
      total += c.probability;
    }
    require(std::abs(total - 1.0) < 1e-9, ErrorKind::config, "class probabilities must sum to 1");
  }
  for (const auto& c : classes) c.phantom.validate();
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t item) {
  return splitmix64(splitmix64(splitmix64(master) ^ purpose) ^ item);
}

double noise_variance_for(double signal_het_power, double snr_het, int N, int N_res) {
  if (std::isinf(snr_het)) return 0.0;
  require(signal_het_power > 0.0, ErrorKind::domain,
          "heterogeneity signal power is zero, so no finite SNR_het target can be met");
  return signal_het_power * N * N / (static_cast<double>(N_res) * N_res * snr_het);
}

double in_disc_power(const std::vector<float>& images, std::size_t n, int N) {
  const std::size_t NN = static_cast<std::size_t>(N) * N;
  require(images.size() == n * NN, ErrorKind::invalid_argument, "image stack has the wrong size");
  double total = 0.0;
  std::size_t q = 0;
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix) q += pixel_in_disc(ix, iy, N);
  for (std::size_t s = 0; s < n; ++s)
    for (int iy = 0; iy < N; ++iy)
      for (int ix = 0; ix < N; ++ix)
        if (pixel_in_disc(ix, iy, N)) {
          const double v = images[s * NN + static_cast<std::size_t>(iy) * N + ix];
          total += v * v;
        }
  return total / (static_cast<double>(n) * q);
}

NoiseResult add_noise(std::vector<float>& images, const std::vector<float>& mean_images, std::size_t n, int N,
                      int N_res, double snr_het, std::uint64_t seed) {
  require(mean_images.size() == images.size(), ErrorKind::invalid_argument, "mean images do not match the stack");
  std::vector<float> diff(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) diff[i] = images[i] - mean_images[i];
  NoiseResult r;
  r.signal_het_power = in_disc_power(diff, n, N);
  r.sigma2 = noise_variance_for(r.signal_het_power, snr_het, N, N_res);
  apply_noise(images, n, N, r.sigma2, seed);
  return r;
}

double estimate_sigma2_from_corners(const std::vector<float>& images, std::size_t n, int N) {
  const std::size_t NN = static_cast<std::size_t>(N) * N;
  require(images.size() == n * NN && n >= 1, ErrorKind::invalid_argument, "image stack has the wrong size");
  std::vector<std::size_t> corner;
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix)
      if (!pixel_in_disc(ix, iy, N)) corner.push_back(static_cast<std::size_t>(iy) * N + ix);
  require(!corner.empty(), ErrorKind::invalid_argument, "image has no pixels outside the unit disc");
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t p : corner) {
      const double v = images[s * NN + p];
      sum += v;
      sum2 += v * v;
    }
  const double cnt = static_cast<double>(n * corner.size());
  if (cnt < 2) return 0.0;
  const double mean = sum / cnt;
  return std::max(0.0, (sum2 - cnt * mean * mean) / (cnt - 1.0));
}

Simulation generate_dataset(const SimConfig& cfg, const RadialBasis& basis, const BasisIndexSet& idx,
                            const std::string& config_hash) {
  cfg.validate();
  require(basis.K == cfg.K && idx.K == cfg.K, ErrorKind::invalid_argument, "basis does not match the configured K");
  const std::size_t n = cfg.n;
  const int N = cfg.N;
  const std::size_t NN = static_cast<std::size_t>(N) * N;
  const int C = static_cast<int>(cfg.classes.size());

  Simulation sim;
  GroundTruth& gt = sim.truth;
  gt.mode = cfg.mode;
  gt.config_hash = config_hash;
  gt.class_coeffs.resize(idx.p_hat(), C);
  for (int c = 0; c < C; ++c) gt.class_coeffs.col(c) = phantom_to_coeffs(cfg.classes[c].phantom, basis, idx);

  // Mixing weights beta_s and their first two moments.
  gt.weights = MatR::Zero(C, static_cast<Eigen::Index>(n));
  gt.labels.assign(n, 0);
  std::mt19937_64 class_gen(substream_seed(cfg.seed, kStreamClasses, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatR second = MatR::Zero(C, C);
  if (cfg.mode == Heterogeneity::discrete) {
    gt.mean_weights.resize(C);
    for (int c = 0; c < C; ++c) {
      gt.mean_weights[c] = cfg.classes[c].probability;
      second(c, c) = cfg.classes[c].probability;
    }
    for (std::size_t s = 0; s < n; ++s) {
      double u = unif(class_gen), acc = 0.0;
      int c = C - 1;
      for (int j = 0; j < C; ++j) {
        acc += cfg.classes[j].probability;
        if (u < acc) {
          c = j;
          break;
        }
      }
      gt.labels[s] = c;
      gt.weights(c, static_cast<Eigen::Index>(s)) = 1.0;
    }
  } else {
    // Uniform on the perimeter measured in coefficient space.
    const int ea[3] = {0, 1, 2}, eb[3] = {1, 2, 0};
    double len[3], perim = 0.0;
    for (int e = 0; e < 3; ++e) {
      len[e] = (gt.class_coeffs.col(ea[e]) - gt.class_coeffs.col(eb[e])).norm();
      perim += len[e];
    }
    require(perim > 0.0, ErrorKind::config, "triangle vertices coincide");
    gt.mean_weights = VecR::Zero(3);
    for (int e = 0; e < 3; ++e) {
      const double w = len[e] / perim;
      gt.mean_weights[ea[e]] += 0.5 * w;
      gt.mean_weights[eb[e]] += 0.5 * w;
      second(ea[e], ea[e]) += w / 3.0;
      second(eb[e], eb[e]) += w / 3.0;
      second(ea[e], eb[e]) += w / 6.0;
      second(eb[e], ea[e]) += w / 6.0;
    }
    gt.edge_t.assign(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      double u = unif(class_gen) * perim;
      int e = 0;
      while (e < 2 && u >= len[e]) u -= len[e++];
      const double t = std::clamp(u / len[e], 0.0, 1.0);
      gt.labels[s] = e;
      gt.edge_t[s] = t;
      gt.weights(ea[e], static_cast<Eigen::Index>(s)) = 1.0 - t;
      gt.weights(eb[e], static_cast<Eigen::Index>(s)) = t;
    }
  }
  gt.weight_cov = second - gt.mean_weights * gt.mean_weights.transpose();
  gt.mu0 = gt.class_coeffs * gt.mean_weights.cast<cplx>();
  gt.sigma0 = gt.class_coeffs * gt.weight_cov.cast<cplx>() * gt.class_coeffs.adjoint();
  gt.sigma0 = 0.5 * (gt.sigma0 + gt.sigma0.adjoint()).eval();
  eigendecompose(gt.sigma0, gt.sigma0_eigvals, gt.sigma0_eigvecs);

  Dataset& d = sim.dataset;
  d.N = N;
  d.N_res = cfg.N_res;
  d.K = cfg.K;
  d.omega_max = cfg.effective_omega_max();
  d.seed = cfg.seed;
  d.pixel_convention = kPixelConvention;
  d.config_hash = config_hash;
  d.rotations = sample_uniform_rotations(n, substream_seed(cfg.seed, kStreamRotations, 0));
  d.images.assign(n * NN, 0.0f);

  std::vector<char> disc(NN);
  std::size_t q = 0;
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix) q += (disc[static_cast<std::size_t>(iy) * N + ix] = pixel_in_disc(ix, iy, N));

  struct Power {
    double het = 0.0, total = 0.0;
  };
  Power power;
  ordered_reduce(
      n, 128, power,
      [&](std::size_t b, std::size_t e) {
        Power pw;
        std::vector<std::vector<double>> proj(C);
        for (std::size_t s = b; s < e; ++s) {
          for (int c = 0; c < C; ++c) proj[c] = project_phantom_analytic(cfg.classes[c].phantom, d.rotations[s], N);
          float* img = d.images.data() + s * NN;
          for (std::size_t i = 0; i < NN; ++i) {
            double clean = 0.0, mean = 0.0;
            for (int c = 0; c < C; ++c) {
              clean += gt.weights(c, static_cast<Eigen::Index>(s)) * proj[c][i];
              mean += gt.mean_weights[c] * proj[c][i];
            }
            img[i] = static_cast<float>(clean);
            if (disc[i]) {
              pw.het += (clean - mean) * (clean - mean);
              pw.total += clean * clean;
            }
          }
        }
        return pw;
      },
      [](Power& t, const Power& p) {
        t.het += p.het;
        t.total += p.total;
      });
  gt.signal_het_power = power.het / (static_cast<double>(n) * q);
  gt.signal_power = power.total / (static_cast<double>(n) * q);
  gt.sigma2 = noise_variance_for(gt.signal_het_power, cfg.snr_het, N, cfg.N_res);
  const double realized = apply_noise(d.images, n, N, gt.sigma2, cfg.seed);
  const double noise_power = realized * cfg.N_res * cfg.N_res / (static_cast<double>(N) * N);
  gt.snr_het = noise_power > 0.0 ? gt.signal_het_power / noise_power : kNoiseless;
  gt.snr = noise_power > 0.0 ? gt.signal_power / noise_power : kNoiseless;
  d.sigma2 = gt.sigma2;
  d.extra = {{"simulation",
              {{"mode", mode_name(cfg.mode)},
               {"classes", C},
               {"snr_het_target", std::isinf(cfg.snr_het) ? json("inf") : json(cfg.snr_het)}}}};
  return sim;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  Container c("ground_truth", gt.config_hash);
  auto& m = c.meta();
  m["oracle_only"] = true;
  m["note"] = "simulation truth for evaluation only; never an input to estimation";
  m["mode"] = mode_name(gt.mode);
  m["sigma2"] = gt.sigma2;
  m["signal_het_power"] = gt.signal_het_power;
  m["signal_power"] = gt.signal_power;
  m["snr_het"] = std::isinf(gt.snr_het) ? json("inf") : json(gt.snr_het);
  m["snr"] = std::isinf(gt.snr) ? json("inf") : json(gt.snr);
  c.put("class_coeffs", gt.class_coeffs);
  c.put("mean_weights", MatR(gt.mean_weights));
  c.put("weight_cov", gt.weight_cov);
  c.put("mu0", MatC(gt.mu0));
  c.put("sigma0", gt.sigma0);
  c.put("sigma0_eigvals", MatR(gt.sigma0_eigvals));
  c.put("sigma0_eigvecs", gt.sigma0_eigvecs);
  c.put("labels", std::vector<std::int64_t>(gt.labels.begin(), gt.labels.end()));
  c.put("edge_t", gt.edge_t);
  c.put("weights", gt.weights);
  c.save(path);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  const Container c = Container::load(path, "ground_truth");
  GroundTruth gt;
  const auto& m = c.meta();
  if (!m.value("oracle_only", false)) fail(ErrorKind::format, "'" + path.string() + "' is not marked oracle-only");
  auto num = [&](const char* key) {
    const json& v = m.at(key);
    return v.is_string() ? kNoiseless : v.get<double>();
  };
  gt.mode = parse_mode(m.at("mode").get<std::string>());
  gt.sigma2 = m.at("sigma2").get<double>();
  gt.signal_het_power = m.at("signal_het_power").get<double>();
  gt.signal_power = m.at("signal_power").get<double>();
  gt.snr_het = num("snr_het");
  gt.snr = num("snr");
  gt.config_hash = c.config_hash();
  gt.class_coeffs = c.get_complex("class_coeffs");
  gt.mean_weights = c.get_real("mean_weights").col(0);
  gt.weight_cov = c.get_real("weight_cov");
  gt.mu0 = c.get_complex("mu0").col(0);
  gt.sigma0 = c.get_complex("sigma0");
  gt.sigma0_eigvals = c.get_real("sigma0_eigvals").col(0);
  gt.sigma0_eigvecs = c.get_complex("sigma0_eigvecs");
  for (auto v : c.get_int("labels")) gt.labels.push_back(static_cast<int>(v));
  gt.edge_t = c.get_vector("edge_t");
  gt.weights = c.get_real("weights");
  return gt;
}

std::vector<ClassSpec> two_class_phantoms() {
  Phantom a{{Blob{{0.0, 0.0, 0.0}, 1.0, 0.3}}};
  Phantom b = a;
  b.blobs.push_back(Blob{{0.35, 0.25, -0.2}, 2.1, 0.15});
  return {{a, 0.5}, {b, 0.5}};
}

std::vector<ClassSpec> three_class_phantoms() {
  Phantom core{{Blob{{0.0, 0.0, 0.0}, 1.0, 0.3}}};
  Phantom one = core, two = core;
  one.blobs.push_back(Blob{{0.4, 0.2, 0.1}, 2.5, 0.18});
  two.blobs.push_back(Blob{{-0.3, 0.3, -0.2}, 2.0, 0.18});
  const double third = 1.0 / 3.0;
  return {{one, third}, {two, third}, {core, third}};
}

}  // namespace hetcov

namespace hetcov {

std::vector<ClassSpec> triangle_phantoms() {
  // Equal blobs at the corners of an equilateral triangle of centers, so the
  // three volumes are pairwise equidistant.
  Phantom core{{Blob{{0.0, 0.0, 0.0}, 1.0, 0.3}}};
  std::vector<ClassSpec> out;
  for (int c = 0; c < 3; ++c) {
    const double a = 2.0 * kPi * c / 3.0;
    Phantom ph = core;
    ph.blobs.push_back(Blob{{0.45 * std::cos(a), 0.45 * std::sin(a), 0.15}, 2.0, 0.18});
    out.push_back({ph, 1.0 / 3.0});
  }
  return out;
}

}  // namespace hetcov
