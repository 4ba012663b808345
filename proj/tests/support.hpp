#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <Eigen/Core>

namespace swarmopt::testing {

// Hand-rolled generator helpers for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  Eigen::Vector3d unit3() {
    Eigen::Vector3d v;
    do {
      v = Eigen::Vector3d(normal(), normal(), normal());
    } while (v.norm() < 1e-3);
    return v.normalized();
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto dir = std::filesystem::temp_directory_path() / "swarmopt_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << contents;
  return path;
}

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(SWARMOPT_DATA_DIR) / relative;
}

}  // namespace swarmopt::testing
