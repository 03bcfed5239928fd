#include "container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hetcov {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'T', 'C', 'O', 'V', 'B', '1'};

template <typename T>
T byteswap_if_needed(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <typename T>
void write_le(std::ostream& os, const T* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const T v = byteswap_if_needed(data[i]);
      os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
  }
}

template <typename T>
void read_le(std::istream& is, T* data, std::size_t count) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t i = 0; i < count; ++i) data[i] = byteswap_if_needed(data[i]);
  }
}

std::int64_t product(const std::vector<std::int64_t>& shape) {
  std::int64_t p = 1;
  for (auto s : shape) p *= s;
  return p;
}

}  // namespace

void write_f32_le(std::ostream& os, const float* data, std::size_t count) { write_le(os, data, count); }
void read_f32_le(std::istream& is, float* data, std::size_t count) { read_le(is, data, count); }

void Container::put(const std::string& name, const MatR& m) {
  Array a;
  a.dtype = "f64";
  a.shape = {m.rows(), m.cols()};
  a.f64.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.f64[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  arrays_[name] = std::move(a);
}

void Container::put(const std::string& name, const MatC& m) {
  Array a;
  a.dtype = "f64";
  a.shape = {m.rows(), m.cols(), 2};
  a.f64.resize(static_cast<std::size_t>(m.size()) * 2);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto at = static_cast<std::size_t>(i * m.cols() + j) * 2;
      a.f64[at] = m(i, j).real();
      a.f64[at + 1] = m(i, j).imag();
    }
  arrays_[name] = std::move(a);
}

void Container::put(const std::string& name, const std::vector<double>& v) {
  Array a;
  a.dtype = "f64";
  a.shape = {static_cast<std::int64_t>(v.size())};
  a.f64 = v;
  arrays_[name] = std::move(a);
}

void Container::put(const std::string& name, const std::vector<std::int64_t>& v) {
  Array a;
  a.dtype = "i64";
  a.shape = {static_cast<std::int64_t>(v.size())};
  a.i64 = v;
  arrays_[name] = std::move(a);
}

void Container::put(const std::string& name, const std::vector<std::int32_t>& v) {
  put(name, std::vector<std::int64_t>(v.begin(), v.end()));
}

const Container::Array& Container::find(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) fail(ErrorKind::format, "container of kind '" + kind_ + "' has no array '" + name + "'");
  return it->second;
}

MatR Container::get_real(const std::string& name) const {
  const Array& a = find(name);
  require(a.dtype == "f64" && a.shape.size() <= 2, ErrorKind::format, "array '" + name + "' is not a real matrix");
  const Eigen::Index rows = a.shape[0];
  const Eigen::Index cols = a.shape.size() == 2 ? a.shape[1] : 1;
  MatR m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a.f64[static_cast<std::size_t>(i * cols + j)];
  return m;
}

MatC Container::get_complex(const std::string& name) const {
  const Array& a = find(name);
  require(a.dtype == "f64" && a.shape.size() == 3 && a.shape[2] == 2, ErrorKind::format,
          "array '" + name + "' is not a complex matrix");
  const Eigen::Index rows = a.shape[0], cols = a.shape[1];
  MatC m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto at = static_cast<std::size_t>(i * cols + j) * 2;
      m(i, j) = cplx(a.f64[at], a.f64[at + 1]);
    }
  return m;
}

std::vector<double> Container::get_vector(const std::string& name) const {
  const Array& a = find(name);
  require(a.dtype == "f64", ErrorKind::format, "array '" + name + "' is not float64");
  return a.f64;
}

std::vector<std::int64_t> Container::get_int(const std::string& name) const {
  const Array& a = find(name);
  require(a.dtype == "i64", ErrorKind::format, "array '" + name + "' is not int64");
  return a.i64;
}

void Container::save(const std::filesystem::path& path) const {
  json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = kind_;
  header["config_hash"] = config_hash_;
  header["meta"] = meta_;
  header["byte_order"] = "little";
  json arrays = json::array();
  std::int64_t offset = 0;
  for (const auto& [name, a] : arrays_) {
    arrays.push_back({{"name", name}, {"dtype", a.dtype}, {"shape", a.shape}, {"offset", offset}});
    offset += product(a.shape) * 8;
  }
  header["arrays"] = arrays;
  std::string text = header.dump();
  while ((text.size() + 20) % 8 != 0) text.push_back(' ');

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  os.write(kMagic, 8);
  const std::uint32_t version = kFormatVersion;
  write_le(os, &version, 1);
  const std::uint64_t header_len = text.size();
  write_le(os, &header_len, 1);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, a] : arrays_) {
    if (a.dtype == "f64")
      write_le(os, a.f64.data(), a.f64.size());
    else
      write_le(os, a.i64.data(), a.i64.size());
  }
  if (!os) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

Container Container::load(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    fail(ErrorKind::format, "'" + path.string() + "' is not a hetcov binary container");
  std::uint32_t version = 0;
  read_le(is, &version, 1);
  if (version != static_cast<std::uint32_t>(kFormatVersion))
    fail(ErrorKind::format, "'" + path.string() + "' has format version " + std::to_string(version) +
                                ", this build reads version " + std::to_string(kFormatVersion));
  std::uint64_t header_len = 0;
  read_le(is, &header_len, 1);
  if (!is || header_len > (1u << 30)) fail(ErrorKind::format, "corrupt container header in '" + path.string() + "'");
  std::string text(header_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(header_len));
  json header;
  try {
    header = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::format, "corrupt container header in '" + path.string() + "': " + e.what());
  }
  if (header.value("format_version", -1) != kFormatVersion)
    fail(ErrorKind::format, "format version mismatch in '" + path.string() + "'");
  Container c(header.at("kind").get<std::string>(), header.at("config_hash").get<std::string>());
  if (!expected_kind.empty() && c.kind_ != expected_kind)
    fail(ErrorKind::format, "'" + path.string() + "' holds '" + c.kind_ + "', expected '" + expected_kind + "'");
  c.meta_ = header.at("meta");
  const auto data_start = is.tellg();
  for (const auto& entry : header.at("arrays")) {
    Array a;
    a.dtype = entry.at("dtype").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto count = static_cast<std::size_t>(product(a.shape));
    is.seekg(data_start + static_cast<std::streamoff>(entry.at("offset").get<std::int64_t>()));
    if (a.dtype == "f64") {
      a.f64.resize(count);
      read_le(is, a.f64.data(), count);
    } else if (a.dtype == "i64") {
      a.i64.resize(count);
      read_le(is, a.i64.data(), count);
    } else {
      fail(ErrorKind::format, "unknown dtype '" + a.dtype + "' in '" + path.string() + "'");
    }
    if (!is) fail(ErrorKind::format, "truncated array '" + entry.at("name").get<std::string>() + "' in '" +
                                         path.string() + "'");
    c.arrays_[entry.at("name").get<std::string>()] = std::move(a);
  }
  return c;
}

void save_json_document(const std::filesystem::path& path, json doc, const std::string& kind,
                        const std::string& config_hash) {
  doc["format_version"] = kFormatVersion;
  doc["kind"] = kind;
  doc["config_hash"] = config_hash;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  os << doc.dump(2) << '\n';
  if (!os) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

json load_json_document(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(is);
  } catch (const std::exception& e) {
    fail(ErrorKind::format, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version"))
    fail(ErrorKind::format, "'" + path.string() + "' carries no format version");
  if (doc["format_version"] != kFormatVersion)
    fail(ErrorKind::format, "'" + path.string() + "' has format version " + doc["format_version"].dump() +
                                ", this build reads version " + std::to_string(kFormatVersion));
  if (doc.value("kind", std::string()) != expected_kind)
    fail(ErrorKind::format, "'" + path.string() + "' holds '" + doc.value("kind", std::string("?")) +
                                "', expected '" + expected_kind + "'");
  return doc;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace hetcov
