#include "dataset.hpp"

#include <fstream>

#include "projection.hpp"

namespace hetcov {

std::filesystem::path payload_path(const std::filesystem::path& json_path) {
  auto p = json_path;
  p.replace_extension(".f32");
  return p;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  const std::size_t NN = static_cast<std::size_t>(d.N) * d.N;
  require(d.images.size() == NN * d.size(), ErrorKind::invalid_argument, "image payload does not match n x N x N");
  json doc;
  doc["n"] = d.size();
  doc["N"] = d.N;
  doc["N_res"] = d.N_res;
  doc["K"] = d.K;
  doc["omega_max"] = d.omega_max;
  doc["sigma2"] = d.sigma2;
  doc["seed"] = d.seed;
  doc["pixel_convention"] = d.pixel_convention;
  json quats = json::array();
  for (const auto& r : d.rotations) {
    const auto& q = r.quaternion();
    quats.push_back({q[0], q[1], q[2], q[3]});
  }
  doc["quaternions"] = std::move(quats);
  const auto payload = payload_path(path);
  doc["payload"] = {{"file", payload.filename().string()},
                    {"dtype", "float32"},
                    {"byte_order", "little"},
                    {"shape", {d.size(), d.N, d.N}}};
  doc["extra"] = d.extra;
  save_json_document(path, doc, "dataset", d.config_hash);
  std::ofstream os(payload, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot open '" + payload.string() + "' for writing");
  write_f32_le(os, d.images.data(), d.images.size());
  if (!os) fail(ErrorKind::io, "write failed for '" + payload.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) {
  const json doc = load_json_document(path, "dataset");
  Dataset d;
  try {
    d.N = doc.at("N").get<int>();
    d.N_res = doc.at("N_res").get<int>();
    d.K = doc.at("K").get<int>();
    d.omega_max = doc.at("omega_max").get<double>();
    d.sigma2 = doc.at("sigma2").get<double>();
    d.seed = doc.at("seed").get<std::uint64_t>();
    d.pixel_convention = doc.at("pixel_convention").get<std::string>();
    d.config_hash = doc.at("config_hash").get<std::string>();
    d.extra = doc.value("extra", json::object());
    for (const auto& q : doc.at("quaternions"))
      d.rotations.push_back(Rotation::from_quaternion(q.at(0), q.at(1), q.at(2), q.at(3)));
    const std::size_t n = doc.at("n").get<std::size_t>();
    if (n != d.rotations.size()) fail(ErrorKind::format, "quaternion count differs from n in '" + path.string() + "'");
    const auto& pl = doc.at("payload");
    if (pl.at("dtype") != "float32" || pl.at("byte_order") != "little")
      fail(ErrorKind::format, "unsupported payload encoding in '" + path.string() + "'");
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "malformed dataset metadata '" + path.string() + "': " + e.what());
  }
  if (d.pixel_convention != kPixelConvention)
    fail(ErrorKind::format, "dataset '" + path.string() + "' uses pixel convention '" + d.pixel_convention +
                                "', this build expects '" + kPixelConvention + "'");
  const auto payload = path.parent_path() / doc["payload"]["file"].get<std::string>();
  const std::size_t count = d.size() * static_cast<std::size_t>(d.N) * d.N;
  std::ifstream is(payload, std::ios::binary | std::ios::ate);
  if (!is) fail(ErrorKind::io, "cannot open image payload '" + payload.string() + "'");
  if (static_cast<std::size_t>(is.tellg()) != count * sizeof(float))
    fail(ErrorKind::format, "image payload '" + payload.string() + "' has the wrong size");
  is.seekg(0);
  d.images.resize(count);
  read_f32_le(is, d.images.data(), count);
  if (!is) fail(ErrorKind::io, "read failed for '" + payload.string() + "'");
  return d;
}

}  // namespace hetcov
