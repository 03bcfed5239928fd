#pragma once

#include <filesystem>
#include <string>

#include <doctest.h>

namespace test_support {

// Fresh scratch directory under the build tree, one per test case name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(HETCOV_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test_support

// Checks that `expr` throws hetcov::Error of the given kind.
#define CHECK_THROWS_KIND(expr, kind_value)                     \
  do {                                                          \
    bool thrown_ = false;                                       \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const hetcov::Error& e_) {                         \
      thrown_ = true;                                           \
      CHECK_MESSAGE(e_.kind() == (kind_value), e_.what());      \
    }                                                           \
    CHECK_MESSAGE(thrown_, "expected hetcov::Error from " #expr); \
  } while (0)
