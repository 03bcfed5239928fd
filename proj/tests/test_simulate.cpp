#include <fstream>
#include <set>

#include "evaluate.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

using namespace hetcov;

namespace {

SimConfig small_config(std::size_t n = 600) {
  SimConfig cfg;
  cfg.n = n;
  cfg.N = 33;
  cfg.N_res = 8;
  cfg.K = 6;
  cfg.classes = two_class_phantoms();
  cfg.snr_het = 0.5;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("phantom coefficients describe a real volume") {
  const int K = 6;
  const double omega = 8 * kPi / 2;
  const auto idx = make_index_sets(K);
  const auto b = build_radial_basis(K, omega, default_quad_order(K, omega));
  const VecC X = phantom_to_coeffs(two_class_phantoms()[1].phantom, b, idx);
  double worst = 0.0;
  for (int i = 0; i < idx.p_hat(); ++i)
    for (int j = 0; j < idx.p_hat(); ++j) {
      const auto u = idx.v_indices[i], v = idx.v_indices[j];
      if (u.k == v.k && u.l == v.l && u.m == -v.m)
        worst = std::max(worst, std::abs(X[i] - neg1pow(u.l + u.m) * std::conj(X[j])));
    }
  CHECK(worst < 1e-12 * X.norm());

  // The real-space rendering correlates with the phantom density.
  const Phantom g{{Blob{{0.1, -0.05, 0.0}, 1.0, 0.25}}};
  const auto grid = volume_to_real_grid({K, omega, phantom_to_coeffs(g, b, idx)}, b, idx, 24);
  double sab = 0, saa = 0, sbb = 0;
  for (int z = 0; z < 24; ++z)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        const double v = grid.at(x, y, z);
        const double t = g.density({grid_center(x, 24), grid_center(y, 24), grid_center(z, 24)});
        sab += v * t;
        saa += v * v;
        sbb += t * t;
      }
  CHECK(sab / std::sqrt(saa * sbb) > 0.98);
  CHECK(grid.max_imag_residual < 1e-8);
}

TEST_CASE("analytic projections agree with projected coefficients") {
  const int K = 8, N = 65;
  const double omega = 10 * kPi / 2;
  const auto setup = make_basis_setup(K, omega, N);
  ProjectionBuilder pb(setup.idx);
  const auto ph = two_class_phantoms()[1].phantom;
  const VecC X = phantom_to_coeffs(ph, setup.basis, setup.idx);
  for (const auto& r : sample_uniform_rotations(4, 11)) {
    const auto img = project_phantom_analytic(ph, r, N);
    const VecC c1 = image_to_coeffs(setup.map, std::span<const double>(img));
    const VecC c2 = pb.build(r).apply(X);
    CHECK((c1 - c2).norm() / c2.norm() < 0.05);
  }
}

TEST_CASE("phantom validation") {
  Phantom bad{{Blob{{0, 0, 0}, 1.0, -0.1}}};
  CHECK_THROWS_KIND(bad.validate(), ErrorKind::config);
  Phantom wide{{Blob{{1.1, 0, 0}, 1.0, 0.3}}};
  CHECK(!wide.validate().empty());
  CHECK(two_class_phantoms()[0].phantom.validate().empty());
}

TEST_CASE("simulation is deterministic in the seed and honours the target SNR") {
  const auto cfg = small_config();
  const auto setup = make_basis_setup(cfg.K, cfg.effective_omega_max(), cfg.N);
  const auto a = generate_dataset(cfg, setup.basis, setup.idx);
  const auto b = generate_dataset(cfg, setup.basis, setup.idx);
  CHECK(a.dataset.images == b.dataset.images);
  CHECK(a.truth.labels == b.truth.labels);
  auto other = cfg;
  other.seed = 5;
  CHECK(generate_dataset(other, setup.basis, setup.idx).dataset.images != a.dataset.images);

  CHECK(a.truth.snr_het == doctest::Approx(cfg.snr_het).epsilon(0.02));
  CHECK(a.truth.sigma2 == doctest::Approx(noise_variance_for(a.truth.signal_het_power, cfg.snr_het, cfg.N, cfg.N_res)));
  CHECK(estimate_sigma2_from_corners(a.dataset.images, cfg.n, cfg.N) == doctest::Approx(a.truth.sigma2).epsilon(0.03));

  // Labels follow the class probabilities, and the weights are one-hot.
  int ones = 0;
  for (std::size_t s = 0; s < cfg.n; ++s) {
    ones += a.truth.labels[s];
    CHECK(a.truth.weights.col(static_cast<Eigen::Index>(s)).sum() == doctest::Approx(1.0));
    CHECK(a.truth.weights(a.truth.labels[s], static_cast<Eigen::Index>(s)) == 1.0);
  }
  CHECK(std::abs(ones / double(cfg.n) - 0.5) < 0.07);

  // Two classes give a rank-one heterogeneity covariance.
  const auto& ev = a.truth.sigma0_eigvals;
  CHECK(ev[0] > 0.0);
  CHECK(ev[1] < 1e-10 * ev[0]);
}

TEST_CASE("triangle mode: rank-two truth, weights on the perimeter") {
  auto cfg = small_config(300);
  cfg.mode = Heterogeneity::triangle;
  cfg.classes = triangle_phantoms();
  const auto setup = make_basis_setup(cfg.K, cfg.effective_omega_max(), cfg.N);
  const auto sim = generate_dataset(cfg, setup.basis, setup.idx);
  const auto& ev = sim.truth.sigma0_eigvals;
  CHECK(ev[1] > 1e-3 * ev[0]);
  CHECK(ev[2] < 1e-10 * ev[0]);
  for (std::size_t s = 0; s < cfg.n; ++s) {
    const auto w = sim.truth.weights.col(static_cast<Eigen::Index>(s));
    CHECK(w.sum() == doctest::Approx(1.0));
    CHECK(w.minCoeff() >= 0.0);
    CHECK((w.array() > 1e-12).count() <= 2);  // on an edge
    CHECK(sim.truth.labels[s] >= 0);
    CHECK(sim.truth.labels[s] < 3);
  }
  const MatR V = triangle_vertices(sim.truth.class_coeffs, sim.truth.mean_weights);
  const double e01 = (V.col(0) - V.col(1)).norm(), e12 = (V.col(1) - V.col(2)).norm(), e20 = (V.col(2) - V.col(0)).norm();
  CHECK(e01 == doctest::Approx(e12).epsilon(0.02));
  CHECK(e12 == doctest::Approx(e20).epsilon(0.02));
}

TEST_CASE("configuration validation") {
  auto cfg = small_config();
  cfg.classes[0].probability = 0.7;
  CHECK_THROWS_KIND(cfg.validate(), ErrorKind::config);
  cfg = small_config();
  cfg.mode = Heterogeneity::triangle;
  CHECK_THROWS_KIND(cfg.validate(), ErrorKind::config);
  cfg = small_config();
  cfg.snr_het = 0.0;
  CHECK_THROWS_KIND(cfg.validate(), ErrorKind::config);
  cfg = small_config();
  cfg.N_res = 40;
  CHECK_THROWS_KIND(cfg.validate(), ErrorKind::config);
}

TEST_CASE("random substreams are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t purpose = 0; purpose < 4; ++purpose)
    for (std::uint64_t item = 0; item < 50; ++item) seen.insert(substream_seed(7, purpose, item));
  CHECK(seen.size() == 200);
  CHECK(substream_seed(7, 1, 2) == substream_seed(7, 1, 2));
  CHECK(substream_seed(7, 1, 2) != substream_seed(8, 1, 2));
}

TEST_CASE("noise variance formula") {
  CHECK(noise_variance_for(2.0, 0.5, 65, 17) == doctest::Approx(2.0 * 65 * 65 / (17.0 * 17 * 0.5)));
  CHECK_THROWS_KIND(noise_variance_for(0.0, 0.5, 65, 17), ErrorKind::domain);
}

TEST_CASE("dataset and truth files round trip and are version checked") {
  const auto dir = test_support::scratch_dir("simulate_io");
  const auto cfg = small_config(50);
  const auto setup = make_basis_setup(cfg.K, cfg.effective_omega_max(), cfg.N);
  auto sim = generate_dataset(cfg, setup.basis, setup.idx, "feedbeef");
  sim.truth.config_hash = "feedbeef";
  save_dataset(sim.dataset, dir / "ds.json");
  save_ground_truth(sim.truth, dir / "ds.truth.bin");
  CHECK(std::filesystem::file_size(payload_path(dir / "ds.json")) == 50u * 33 * 33 * 4);

  const auto d = load_dataset(dir / "ds.json");
  CHECK(d.images == sim.dataset.images);
  CHECK(d.config_hash == "feedbeef");
  CHECK(d.sigma2 == sim.dataset.sigma2);
  for (std::size_t s = 0; s < d.size(); ++s) CHECK((d.rotations[s].matrix() - sim.dataset.rotations[s].matrix()).norm() < 1e-14);

  const auto t = load_ground_truth(dir / "ds.truth.bin");
  CHECK(t.labels == sim.truth.labels);
  CHECK((t.sigma0 - sim.truth.sigma0).norm() == 0.0);
  CHECK((t.mu0 - sim.truth.mu0).norm() == 0.0);

  // A newer format version is refused.
  json meta;
  std::ifstream(dir / "ds.json") >> meta;
  meta["format_version"] = kFormatVersion + 1;
  std::ofstream(dir / "v2.json") << meta.dump();
  std::filesystem::copy_file(payload_path(dir / "ds.json"), payload_path(dir / "v2.json"));
  CHECK_THROWS_KIND(load_dataset(dir / "v2.json"), ErrorKind::format);

  // A truncated payload is refused.
  meta["format_version"] = kFormatVersion;
  meta["payload"]["file"] = payload_path(dir / "short.json").filename().string();
  std::ofstream(dir / "short.json") << meta.dump();
  std::filesystem::copy_file(payload_path(dir / "ds.json"), payload_path(dir / "short.json"));
  std::filesystem::resize_file(payload_path(dir / "short.json"), 1000);
  CHECK_THROWS_KIND(load_dataset(dir / "short.json"), ErrorKind::format);
  CHECK_THROWS_KIND(load_dataset(dir / "absent.json"), ErrorKind::io);
}
