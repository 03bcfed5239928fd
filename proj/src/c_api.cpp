#include "hetcov/hetcov.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "commands.hpp"
#include "parallel.hpp"

struct hetcov_config {
  hetcov::RunConfig cfg;
};
struct hetcov_basis {
  hetcov::RadialBasis basis;
  hetcov::BasisIndexSet idx;
};
struct hetcov_dataset {
  hetcov::Dataset data;
};
struct hetcov_estimate {
  hetcov::EstimateResult est;
};

namespace {

thread_local std::string last_error;

hetcov_status status_of(hetcov::ErrorKind kind) { return static_cast<hetcov_status>(static_cast<int>(kind)); }

// Runs f, translating exceptions into status codes and the thread's error message.
template <typename F>
hetcov_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return HETCOV_OK;
  } catch (const hetcov::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HETCOV_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return HETCOV_ERR_IO;
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return HETCOV_ERR_FORMAT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HETCOV_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return HETCOV_ERR_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) hetcov::fail(hetcov::ErrorKind::invalid_argument, std::string(what) + " is null");
}

template <typename Cmd>
hetcov_status run(const hetcov_config* cfg, char** summary, Cmd cmd) {
  return guarded([&] {
    need(cfg, "config");
    const auto result = cmd(cfg->cfg);
    if (summary) *summary = copy_string(result.dump());
  });
}

}  // namespace

extern "C" {

const char* hetcov_version(void) { return "1.0.0"; }
int hetcov_format_version(void) { return hetcov::kFormatVersion; }

const char* hetcov_status_name(hetcov_status status) {
  switch (status) {
    case HETCOV_OK: return "ok";
    case HETCOV_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HETCOV_ERR_DOMAIN: return "domain";
    case HETCOV_ERR_CONFIG: return "config";
    case HETCOV_ERR_IO: return "io";
    case HETCOV_ERR_FORMAT: return "format";
    case HETCOV_ERR_CONSTRUCTION: return "construction";
    case HETCOV_ERR_SOLVER: return "solver";
    case HETCOV_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hetcov_last_error(void) { return last_error.c_str(); }
void hetcov_string_free(char* s) { std::free(s); }

hetcov_status hetcov_set_threads(int threads) {
  return guarded([&] {
    if (threads < 0) hetcov::fail(hetcov::ErrorKind::invalid_argument, "thread count must be non-negative");
    hetcov::set_thread_count(threads);
  });
}

hetcov_status hetcov_config_create(hetcov_config** out) {
  return guarded([&] {
    need(out, "output handle");
    *out = new hetcov_config{};
  });
}

hetcov_status hetcov_config_load(const char* path, hetcov_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    *out = new hetcov_config{hetcov::RunConfig::load(path)};
  });
}

hetcov_status hetcov_config_parse(const char* json_text, hetcov_config** out) {
  return guarded([&] {
    need(json_text, "text");
    need(out, "output handle");
    hetcov::json doc;
    try {
      doc = hetcov::json::parse(json_text, nullptr, true, true);
    } catch (const hetcov::json::exception& e) {
      hetcov::fail(hetcov::ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    *out = new hetcov_config{hetcov::RunConfig::from_json(doc)};
  });
}

hetcov_status hetcov_config_set(hetcov_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

hetcov_status hetcov_config_to_json(const hetcov_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "output");
    *out = copy_string(cfg->cfg.doc().dump(2));
  });
}

hetcov_status hetcov_config_hash(const hetcov_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "output");
    *out = copy_string(cfg->cfg.hash());
  });
}

void hetcov_config_free(hetcov_config* cfg) { delete cfg; }

hetcov_status hetcov_run_simulate(const hetcov_config* cfg, char** summary) {
  return run(cfg, summary, hetcov::cmd_simulate);
}
hetcov_status hetcov_run_precompute(const hetcov_config* cfg, char** summary) {
  return run(cfg, summary, hetcov::cmd_precompute);
}
hetcov_status hetcov_run_estimate(const hetcov_config* cfg, char** summary) {
  return run(cfg, summary, hetcov::cmd_estimate);
}
hetcov_status hetcov_run_analyze(const hetcov_config* cfg, char** summary) {
  return run(cfg, summary, hetcov::cmd_analyze);
}
hetcov_status hetcov_run_report(const hetcov_config* cfg, char** summary) {
  return run(cfg, summary, hetcov::cmd_report);
}
hetcov_status hetcov_run_plot_data(const hetcov_config* cfg, char** summary) {
  return run(cfg, summary, hetcov::cmd_plot_data);
}

hetcov_status hetcov_basis_create(int K, double omega_max, int quad_order, hetcov_basis** out) {
  return guarded([&] {
    need(out, "output handle");
    if (K < 0) hetcov::fail(hetcov::ErrorKind::invalid_argument, "K must be non-negative");
    if (!(omega_max > 0)) hetcov::fail(hetcov::ErrorKind::invalid_argument, "omega_max must be positive");
    const int q = quad_order > 0 ? quad_order : hetcov::default_quad_order(K, omega_max);
    *out = new hetcov_basis{hetcov::build_radial_basis(K, omega_max, q), hetcov::make_index_sets(K)};
  });
}

int hetcov_basis_p_hat(const hetcov_basis* b) { return b ? b->idx.p_hat() : 0; }
int hetcov_basis_q_hat(const hetcov_basis* b) { return b ? b->idx.q_hat() : 0; }

hetcov_status hetcov_basis_eval(const hetcov_basis* b, double r, double* out, size_t len) {
  return guarded([&] {
    need(b, "basis");
    need(out, "output");
    if (len < static_cast<size_t>(b->basis.K + 1))
      hetcov::fail(hetcov::ErrorKind::invalid_argument, "output buffer shorter than K + 1");
    b->basis.eval_all(r, out);
  });
}

void hetcov_basis_free(hetcov_basis* b) { delete b; }

hetcov_status hetcov_funk_hecke_coeff(int l, double* out) {
  return guarded([&] {
    need(out, "output");
    *out = hetcov::funk_hecke_coeff(l);
  });
}

hetcov_status hetcov_dataset_load(const char* path, hetcov_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    *out = new hetcov_dataset{hetcov::load_dataset(path)};
  });
}

size_t hetcov_dataset_size(const hetcov_dataset* d) { return d ? d->data.size() : 0; }
int hetcov_dataset_image_size(const hetcov_dataset* d) { return d ? d->data.N : 0; }
double hetcov_dataset_sigma2(const hetcov_dataset* d) { return d ? d->data.sigma2 : 0.0; }

hetcov_status hetcov_dataset_image(const hetcov_dataset* d, size_t s, float* out, size_t len) {
  return guarded([&] {
    need(d, "dataset");
    need(out, "output");
    const size_t NN = static_cast<size_t>(d->data.N) * d->data.N;
    if (s >= d->data.size()) hetcov::fail(hetcov::ErrorKind::invalid_argument, "image index out of range");
    if (len < NN) hetcov::fail(hetcov::ErrorKind::invalid_argument, "output buffer shorter than N * N");
    std::memcpy(out, d->data.image(s), NN * sizeof(float));
  });
}

void hetcov_dataset_free(hetcov_dataset* d) { delete d; }

hetcov_status hetcov_estimate_load(const char* path, hetcov_estimate** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    *out = new hetcov_estimate{hetcov::load_estimate(path)};
  });
}

int hetcov_estimate_rank(const hetcov_estimate* e) { return e ? e->est.covariance.rank_estimate : -1; }
int hetcov_estimate_p_hat(const hetcov_estimate* e) { return e ? static_cast<int>(e->est.mean.mu.size()) : 0; }

hetcov_status hetcov_estimate_eigenvalues(const hetcov_estimate* e, double* out, size_t len, size_t* written) {
  return guarded([&] {
    need(e, "estimate");
    need(out, "output");
    const auto& ev = e->est.covariance.eigvals;
    const size_t n = std::min(len, static_cast<size_t>(ev.size()));
    std::copy(ev.data(), ev.data() + n, out);
    if (written) *written = n;
  });
}

hetcov_status hetcov_estimate_mean(const hetcov_estimate* e, double* out, size_t len) {
  return guarded([&] {
    need(e, "estimate");
    need(out, "output");
    const auto& mu = e->est.mean.mu;
    if (len < 2 * static_cast<size_t>(mu.size()))
      hetcov::fail(hetcov::ErrorKind::invalid_argument, "output buffer shorter than 2 p_hat");
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      out[2 * i] = mu[i].real();
      out[2 * i + 1] = mu[i].imag();
    }
  });
}

void hetcov_estimate_free(hetcov_estimate* e) { delete e; }

}  // extern "C"
