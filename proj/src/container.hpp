#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace hetcov {

using json = nlohmann::json;

// Version stamped into every file this library writes. Readers reject any other value.
inline constexpr int kFormatVersion = 1;

// Self-describing binary file: magic, format version, a JSON header listing
// named arrays (dtype, shape, byte offset), then little-endian array payloads.
// Complex arrays are stored as float64 with a trailing dimension of 2.
class Container {
 public:
  Container() = default;
  Container(std::string kind, std::string config_hash) : kind_(std::move(kind)), config_hash_(std::move(config_hash)) {}

  const std::string& kind() const { return kind_; }
  const std::string& config_hash() const { return config_hash_; }
  json& meta() { return meta_; }
  const json& meta() const { return meta_; }

  void put(const std::string& name, const MatR& m);
  void put(const std::string& name, const MatC& m);
  void put(const std::string& name, const std::vector<double>& v);
  void put(const std::string& name, const std::vector<std::int64_t>& v);
  void put(const std::string& name, const std::vector<std::int32_t>& v);

  bool has(const std::string& name) const { return arrays_.count(name) != 0; }
  MatR get_real(const std::string& name) const;
  MatC get_complex(const std::string& name) const;
  std::vector<double> get_vector(const std::string& name) const;
  std::vector<std::int64_t> get_int(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  // Throws a format error if the file kind differs from `expected_kind` (when nonempty).
  static Container load(const std::filesystem::path& path, const std::string& expected_kind = {});

 private:
  struct Array {
    std::string dtype;  // "f64" or "i64"
    std::vector<std::int64_t> shape;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
  };
  const Array& find(const std::string& name) const;

  std::string kind_;
  std::string config_hash_;
  json meta_ = json::object();
  std::map<std::string, Array> arrays_;
};

// Little-endian helpers for raw payloads.
void write_f32_le(std::ostream& os, const float* data, std::size_t count);
void read_f32_le(std::istream& is, float* data, std::size_t count);

// Writes a JSON document with the standard version/hash stamp.
void save_json_document(const std::filesystem::path& path, json doc, const std::string& kind,
                        const std::string& config_hash);
// Reads a stamped JSON document and checks version and kind.
json load_json_document(const std::filesystem::path& path, const std::string& expected_kind);

// Stable 64-bit FNV-1a hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace hetcov
