#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetcov/hetcov.h"
#include "test_support.hpp"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  hetcov_string_free(s);
  return out;
}

struct Config {
  hetcov_config* h = nullptr;
  Config() { REQUIRE(hetcov_config_create(&h) == HETCOV_OK); }
  ~Config() { hetcov_config_free(h); }
  void set(const std::string& k, const std::string& v) {
    INFO(hetcov_last_error());
    REQUIRE(hetcov_config_set(h, k.c_str(), v.c_str()) == HETCOV_OK);
  }
};

std::string quoted(const std::filesystem::path& p) { return nlohmann::json(p.string()).dump(); }

}  // namespace

TEST_CASE("status names, versions and error reporting") {
  CHECK(std::string(hetcov_status_name(HETCOV_OK)) == "ok");
  CHECK(std::string(hetcov_status_name(HETCOV_ERR_FORMAT)) == "format");
  CHECK(hetcov_format_version() == 1);
  CHECK(std::string(hetcov_version()).size() > 0);

  CHECK(hetcov_config_create(nullptr) == HETCOV_ERR_INVALID_ARGUMENT);
  CHECK(std::string(hetcov_last_error()).find("null") != std::string::npos);
  CHECK(hetcov_set_threads(-1) == HETCOV_ERR_INVALID_ARGUMENT);
  CHECK(hetcov_set_threads(0) == HETCOV_OK);
  CHECK(std::string(hetcov_last_error()).empty());
}

TEST_CASE("configuration handles") {
  Config cfg;
  CHECK(hetcov_config_set(cfg.h, "estimate.bogus", "1") == HETCOV_ERR_CONFIG);
  CHECK(hetcov_config_set(cfg.h, "estimate.cg_tol", "\"x\"") == HETCOV_ERR_CONFIG);
  cfg.set("estimate.cg_tol", "1e-9");
  char* text = nullptr;
  REQUIRE(hetcov_config_to_json(cfg.h, &text) == HETCOV_OK);
  const auto doc = nlohmann::json::parse(take(text));
  CHECK(doc["estimate"]["cg_tol"] == 1e-9);
  char* hash = nullptr;
  REQUIRE(hetcov_config_hash(cfg.h, &hash) == HETCOV_OK);
  CHECK(take(hash).size() == 16);

  hetcov_config* parsed = nullptr;
  CHECK(hetcov_config_parse("{\"analyze\": {\"classes\": 2}}", &parsed) == HETCOV_OK);
  hetcov_config_free(parsed);
  CHECK(hetcov_config_parse("{\"analyze\": {\"klasses\": 2}}", &parsed) == HETCOV_ERR_CONFIG);
  CHECK(hetcov_config_parse("{oops", &parsed) == HETCOV_ERR_CONFIG);
  CHECK(hetcov_config_load("/nonexistent/run.json", &parsed) == HETCOV_ERR_IO);
}

TEST_CASE("basis and kernel queries") {
  hetcov_basis* b = nullptr;
  REQUIRE(hetcov_basis_create(4, 6.0, 0, &b) == HETCOV_OK);
  CHECK(hetcov_basis_p_hat(b) == 35);
  CHECK(hetcov_basis_q_hat(b) == 15);
  std::vector<double> f(5);
  CHECK(hetcov_basis_eval(b, 0.3, f.data(), f.size()) == HETCOV_OK);
  CHECK(hetcov_basis_eval(b, 0.3, f.data(), 2) == HETCOV_ERR_INVALID_ARGUMENT);
  hetcov_basis_free(b);
  CHECK(hetcov_basis_create(-1, 6.0, 0, &b) == HETCOV_ERR_INVALID_ARGUMENT);

  double c = -1.0;
  CHECK(hetcov_funk_hecke_coeff(0, &c) == HETCOV_OK);
  CHECK(c == doctest::Approx(M_PI));
  CHECK(hetcov_funk_hecke_coeff(3, &c) == HETCOV_OK);
  CHECK(c == 0.0);
}

TEST_CASE("subcommands through the C interface") {
  const auto dir = test_support::scratch_dir("c_api_run");
  Config cfg;
  cfg.set("simulate.n", "400");
  cfg.set("simulate.N", "33");
  cfg.set("simulate.N_res", "8");
  cfg.set("simulate.K", "4");
  cfg.set("simulate.snr_het", "1.0");
  cfg.set("simulate.output", quoted(dir / "ds.json"));
  cfg.set("estimate.dataset", quoted(dir / "ds.json"));
  cfg.set("estimate.output", quoted(dir / "est.bin"));
  cfg.set("runtime.deterministic", "true");

  char* summary = nullptr;
  REQUIRE(hetcov_run_simulate(cfg.h, &summary) == HETCOV_OK);
  CHECK(nlohmann::json::parse(take(summary))["command"] == "simulate");
  REQUIRE(hetcov_run_estimate(cfg.h, &summary) == HETCOV_OK);
  const auto est_summary = nlohmann::json::parse(take(summary));

  hetcov_dataset* ds = nullptr;
  REQUIRE(hetcov_dataset_load((dir / "ds.json").string().c_str(), &ds) == HETCOV_OK);
  CHECK(hetcov_dataset_size(ds) == 400);
  CHECK(hetcov_dataset_image_size(ds) == 33);
  CHECK(hetcov_dataset_sigma2(ds) > 0.0);
  std::vector<float> img(33 * 33);
  CHECK(hetcov_dataset_image(ds, 3, img.data(), img.size()) == HETCOV_OK);
  CHECK(hetcov_dataset_image(ds, 400, img.data(), img.size()) == HETCOV_ERR_INVALID_ARGUMENT);
  hetcov_dataset_free(ds);

  hetcov_estimate* est = nullptr;
  REQUIRE(hetcov_estimate_load((dir / "est.bin").string().c_str(), &est) == HETCOV_OK);
  CHECK(hetcov_estimate_rank(est) == est_summary["rank_estimate"].get<int>());
  CHECK(hetcov_estimate_p_hat(est) == 35);
  std::vector<double> ev(100);
  std::size_t written = 0;
  CHECK(hetcov_estimate_eigenvalues(est, ev.data(), ev.size(), &written) == HETCOV_OK);
  CHECK(written == 35);
  for (std::size_t i = 1; i < written; ++i) CHECK(ev[i - 1] >= ev[i]);
  std::vector<double> mu(70);
  CHECK(hetcov_estimate_mean(est, mu.data(), mu.size()) == HETCOV_OK);
  hetcov_estimate_free(est);

  CHECK(hetcov_estimate_load((dir / "ds.f32").string().c_str(), &est) == HETCOV_ERR_FORMAT);
  CHECK(hetcov_dataset_load((dir / "none.json").string().c_str(), &ds) == HETCOV_ERR_IO);

  cfg.set("estimate.dataset", quoted(dir / "missing.json"));
  CHECK(hetcov_run_estimate(cfg.h, nullptr) == HETCOV_ERR_IO);
  CHECK(std::string(hetcov_last_error()).find("load dataset") != std::string::npos);
  CHECK(hetcov_run_report(nullptr, nullptr) == HETCOV_ERR_INVALID_ARGUMENT);
}
