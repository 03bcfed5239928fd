#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace hetcov {

namespace {

// Keys whose default is null accept these types.
const std::map<std::string, std::vector<json::value_t>>& nullable_types() {
  static const std::map<std::string, std::vector<json::value_t>> m = {
      {"simulate.truth", {json::value_t::string}},
      {"simulate.classes", {json::value_t::array}},
      {"analyze.truth", {json::value_t::string}},
      {"report.truth", {json::value_t::string}},
      {"runtime.cache_dir", {json::value_t::string}},
  };
  return m;
}

bool is_number(json::value_t t) {
  return t == json::value_t::number_float || t == json::value_t::number_integer ||
         t == json::value_t::number_unsigned;
}

bool is_integer(json::value_t t) { return t == json::value_t::number_integer || t == json::value_t::number_unsigned; }

void check_type(const std::string& key, const json& def, const json& value) {
  if (value.is_null() && def.is_null()) return;
  if (def.is_null()) {
    const auto& allowed = nullable_types().at(key);
    if (std::find(allowed.begin(), allowed.end(), value.type()) == allowed.end())
      fail(ErrorKind::config, "config key '" + key + "' has the wrong type");
    return;
  }
  if (key == "simulate.snr_het" && value.is_string()) {
    if (value != "inf") fail(ErrorKind::config, "simulate.snr_het must be a number or \"inf\"");
    return;
  }
  const bool ok = is_integer(def.type()) ? is_integer(value.type())
                  : is_number(def.type()) ? is_number(value.type())
                                          : def.type() == value.type();
  if (!ok) fail(ErrorKind::config, "config key '" + key + "' expects " + std::string(def.type_name()) + ", got " +
                                       value.type_name());
}

std::string get_string(const json& s, const char* key) { return s.at(key).get<std::string>(); }

}  // namespace

json RunConfig::defaults() {
  return {
      {"simulate",
       {{"n", 10000},
        {"N", 65},
        {"N_res", 17},
        {"K", 15},
        {"omega_max", 0.0},
        {"heterogeneity", "discrete"},
        {"phantoms", "two_class"},
        {"classes", nullptr},
        {"snr_het", 0.013},
        {"seed", 1},
        {"output", "dataset.json"},
        {"truth", nullptr}}},
      {"precompute", {{"K", 15}, {"stats", false}}},
      {"estimate",
       {{"dataset", "dataset.json"},
        {"output", "estimate.bin"},
        {"solver", "limiting"},
        {"cg_tol", 1e-8},
        {"max_iter", 0},
        {"jacobi", false},
        {"rank_gap_delta", 0.5},
        {"guard_factor", 2.0},
        {"noise", "corners"},
        {"K", -1},
        {"quad_order", 0}}},
      {"analyze",
       {{"dataset", "dataset.json"},
        {"estimate", "estimate.bin"},
        {"output", "report.json"},
        {"coordinates", "coordinates.csv"},
        {"volumes_dir", "volumes"},
        {"volume_grid", 32},
        {"classes", 0},
        {"truth", nullptr},
        {"gmm_max_iter", 200},
        {"gmm_tol", 1e-8},
        {"gmm_seed", 1},
        {"gmm_covariance", "isotropic"}}},
      {"report",
       {{"report", "report.json"},
        {"truth", nullptr},
        {"output_dir", "metrics"},
        {"fsc_shells", 24},
        {"histogram_bins", 60}}},
      {"runtime", {{"threads", 0}, {"deterministic", false}, {"cache_dir", nullptr}}},
  };
}

RunConfig::RunConfig() : doc_(defaults()) {}

RunConfig RunConfig::from_json(const json& user) {
  RunConfig cfg;
  if (!user.is_object()) fail(ErrorKind::config, "configuration must be a JSON object");
  for (const auto& [sec, body] : user.items()) {
    if (!cfg.doc_.contains(sec)) fail(ErrorKind::config, "unknown config section '" + sec + "'");
    if (!body.is_object()) fail(ErrorKind::config, "config section '" + sec + "' must be an object");
    for (const auto& [key, value] : body.items()) cfg.set_json(sec + "." + key, value);
  }
  // Typed views validate the remaining invariants up front.
  cfg.sim_config();
  cfg.estimate_settings();
  cfg.analyze_settings();
  cfg.threads();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::io, "cannot open config '" + path.string() + "'");
  json user;
  try {
    user = json::parse(is, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(user);
}

void RunConfig::set_json(const std::string& dotted_key, const json& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) fail(ErrorKind::config, "config key '" + dotted_key + "' must be section.key");
  const std::string sec = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  if (!doc_.contains(sec)) fail(ErrorKind::config, "unknown config section '" + sec + "'");
  if (!doc_[sec].contains(key)) fail(ErrorKind::config, "unknown config key '" + dotted_key + "'");
  check_type(dotted_key, defaults()[sec][key], value);
  doc_[sec][key] = value;
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  set_json(dotted_key, parsed);
}

namespace {

// File locations do not change results; upstream inputs enter through their own hashes.
const std::set<std::string> kPathKeys = {"output", "truth",       "dataset",     "estimate",
                                         "report", "coordinates", "volumes_dir", "output_dir"};

json without_paths(const json& section) {
  json out = section;
  for (const auto& k : kPathKeys) out.erase(k);
  return out;
}

}  // namespace

std::string RunConfig::hash(std::initializer_list<const char*> sections) const {
  json sub;
  if (sections.size() == 0) {
    for (const auto& [name, body] : doc_.items())
      if (name != "runtime") sub[name] = without_paths(body);
  } else {
    for (const char* s : sections) sub[s] = without_paths(doc_.at(s));
  }
  return fnv1a_hex(sub.dump());
}

std::vector<ClassSpec> named_phantoms(const std::string& name) {
  if (name == "two_class") return two_class_phantoms();
  if (name == "three_class") return three_class_phantoms();
  if (name == "triangle") return triangle_phantoms();
  fail(ErrorKind::config, "unknown phantom set '" + name + "' (expected two_class, three_class, triangle or custom)");
}

// [{"probability": p, "blobs": [{"center": [x,y,z], "amplitude": a, "sigma": s}, ...]}, ...]
std::vector<ClassSpec> phantoms_from_json(const json& classes) {
  std::vector<ClassSpec> out;
  try {
    for (const auto& c : classes) {
      ClassSpec spec;
      spec.probability = c.value("probability", 1.0 / static_cast<double>(classes.size()));
      for (const auto& b : c.at("blobs")) {
        const auto center = b.at("center").get<std::vector<double>>();
        if (center.size() != 3) fail(ErrorKind::config, "blob center must have three entries");
        spec.phantom.blobs.push_back(
            Blob{{center[0], center[1], center[2]}, b.at("amplitude").get<double>(), b.at("sigma").get<double>()});
      }
      for (const auto& key : c.items())
        if (key.key() != "probability" && key.key() != "blobs")
          fail(ErrorKind::config, "unknown phantom key '" + key.key() + "'");
      out.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("malformed phantom classes: ") + e.what());
  }
  return out;
}

SimConfig RunConfig::sim_config() const {
  const json& s = section("simulate");
  SimConfig c;
  const auto n = s.at("n").get<long long>();
  if (n < 1) fail(ErrorKind::config, "simulate.n must be positive");
  c.n = static_cast<std::size_t>(n);
  c.N = s.at("N").get<int>();
  c.N_res = s.at("N_res").get<int>();
  c.K = s.at("K").get<int>();
  c.omega_max = s.at("omega_max").get<double>();
  const std::string mode = get_string(s, "heterogeneity");
  if (mode == "discrete")
    c.mode = Heterogeneity::discrete;
  else if (mode == "triangle")
    c.mode = Heterogeneity::triangle;
  else
    fail(ErrorKind::config, "simulate.heterogeneity must be discrete or triangle");
  const std::string ph = get_string(s, "phantoms");
  if (ph == "custom") {
    if (s.at("classes").is_null()) fail(ErrorKind::config, "simulate.phantoms = custom needs simulate.classes");
    c.classes = phantoms_from_json(s.at("classes"));
  } else {
    if (!s.at("classes").is_null()) fail(ErrorKind::config, "simulate.classes requires simulate.phantoms = custom");
    c.classes = named_phantoms(ph);
  }
  c.snr_het = s.at("snr_het").is_string() ? kNoiseless : s.at("snr_het").get<double>();
  c.seed = s.at("seed").get<std::uint64_t>();
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("invalid simulate section: ") + e.what());
  }
  return c;
}

EstimateSettings RunConfig::estimate_settings() const {
  const json& s = section("estimate");
  EstimateSettings e;
  e.solver = parse_solver_mode(get_string(s, "solver"));
  e.covariance.cg_tol = s.at("cg_tol").get<double>();
  e.covariance.max_iter = s.at("max_iter").get<int>();
  e.covariance.jacobi = s.at("jacobi").get<bool>();
  e.covariance.rank_gap_delta = s.at("rank_gap_delta").get<double>();
  e.covariance.guard_factor = s.at("guard_factor").get<double>();
  e.mean_guard_factor = e.covariance.guard_factor;
  e.noise = parse_noise_source(get_string(s, "noise"));
  e.K = s.at("K").get<int>();
  e.quad_order = s.at("quad_order").get<int>();
  e.cache_dir = cache_dir();
  if (!(e.covariance.cg_tol > 0 && e.covariance.cg_tol < 1)) fail(ErrorKind::config, "estimate.cg_tol must be in (0, 1)");
  if (e.covariance.max_iter < 0) fail(ErrorKind::config, "estimate.max_iter must be non-negative");
  if (!(e.covariance.rank_gap_delta > 0)) fail(ErrorKind::config, "estimate.rank_gap_delta must be positive");
  if (!(e.covariance.guard_factor >= 1)) fail(ErrorKind::config, "estimate.guard_factor must be at least 1");
  if (e.K < -1) fail(ErrorKind::config, "estimate.K must be -1 (dataset value) or non-negative");
  if (e.quad_order < 0) fail(ErrorKind::config, "estimate.quad_order must be non-negative");
  return e;
}

AnalyzeSettings RunConfig::analyze_settings() const {
  const json& s = section("analyze");
  AnalyzeSettings a;
  a.classes = s.at("classes").get<int>();
  a.gmm.max_iter = s.at("gmm_max_iter").get<int>();
  a.gmm.tol = s.at("gmm_tol").get<double>();
  a.gmm.seed = s.at("gmm_seed").get<std::uint64_t>();
  const std::string cov = get_string(s, "gmm_covariance");
  if (cov == "isotropic")
    a.gmm.covariance = CovarianceModel::isotropic;
  else if (cov == "full")
    a.gmm.covariance = CovarianceModel::full;
  else
    fail(ErrorKind::config, "analyze.gmm_covariance must be isotropic or full");
  if (a.classes < 0) fail(ErrorKind::config, "analyze.classes must be non-negative (0: from the rank)");
  if (a.gmm.max_iter < 1 || a.gmm.tol < 0) fail(ErrorKind::config, "invalid mixture iteration settings");
  if (s.at("volume_grid").get<int>() < 0 || s.at("volume_grid").get<int>() == 1)
    fail(ErrorKind::config, "analyze.volume_grid must be 0 (off) or at least 2");
  return a;
}

std::optional<std::filesystem::path> RunConfig::cache_dir() const {
  const json& c = section("runtime").at("cache_dir");
  if (c.is_string() && !c.get<std::string>().empty()) return std::filesystem::path(c.get<std::string>());
  if (const char* env = std::getenv("HETCOV_CACHE_DIR"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

int RunConfig::threads() const {
  const int t = section("runtime").at("threads").get<int>();
  if (t < 0) fail(ErrorKind::config, "runtime.threads must be non-negative (0: all cores)");
  return t;
}

bool RunConfig::deterministic() const { return section("runtime").at("deterministic").get<bool>(); }

}  // namespace hetcov
