#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "container.hpp"
#include "estimator.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"

namespace hetcov {

// Run configuration: one JSON document with sections simulate, precompute,
// estimate, analyze, report, runtime. Missing keys take defaults; unknown keys
// and type mismatches are config errors.
class RunConfig {
 public:
  RunConfig();
  static RunConfig from_json(const json& user);
  static RunConfig load(const std::filesystem::path& path);

  // Sets "section.key" to a value; the string is parsed as JSON when possible,
  // otherwise taken as a string.
  void set(const std::string& dotted_key, const std::string& value);
  void set_json(const std::string& dotted_key, const json& value);

  const json& doc() const { return doc_; }
  const json& section(const std::string& name) const { return doc_.at(name); }

  // Stable hash of the named sections (all but runtime when empty), ignoring
  // file-location keys.
  std::string hash(std::initializer_list<const char*> sections = {}) const;

  // Typed views; each validates ranges and names.
  SimConfig sim_config() const;
  EstimateSettings estimate_settings() const;
  AnalyzeSettings analyze_settings() const;
  std::optional<std::filesystem::path> cache_dir() const;
  int threads() const;
  bool deterministic() const;

  static json defaults();

 private:
  json doc_;
};

// Phantom sets addressed by name in the simulate section.
std::vector<ClassSpec> named_phantoms(const std::string& name);
std::vector<ClassSpec> phantoms_from_json(const json& classes);

}  // namespace hetcov
