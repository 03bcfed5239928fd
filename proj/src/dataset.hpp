#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "container.hpp"
#include "rotation.hpp"

namespace hetcov {

// n projection images (N x N, row-major y then x) with their rotations.
struct Dataset {
  int N = 0;
  int N_res = 0;
  int K = 0;
  double omega_max = 0.0;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  std::string pixel_convention;
  std::string config_hash;
  std::vector<Rotation> rotations;
  std::vector<float> images;
  json extra = json::object();  // free-form provenance, e.g. simulation settings

  std::size_t size() const { return rotations.size(); }
  const float* image(std::size_t s) const { return images.data() + s * static_cast<std::size_t>(N) * N; }
};

// Writes `<stem>.json` (metadata and quaternions) and `<stem>.f32` (raw
// little-endian float32 payload of shape n x N x N). `path` names the JSON file.
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::filesystem::path payload_path(const std::filesystem::path& json_path);

}  // namespace hetcov
