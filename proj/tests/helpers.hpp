#pragma once

#include "ndk/datamodel.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace testing {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("ndk_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

inline std::vector<std::string> sensor_names(Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("s" + std::to_string(i + 1));
  return names;
}

// L recordings of white noise, labels cycling through 1..K.
inline ndk::Dataset noise_dataset(int L, Eigen::Index n, Eigen::Index T, int K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ndk::Recording> recs;
  for (int l = 0; l < L; ++l) {
    ndk::Recording r;
    r.signals = gaussian_matrix(n, T, rng);
    r.sample_id = "r" + std::to_string(l);
    r.label = l % K + 1;
    recs.push_back(std::move(r));
  }
  return ndk::Dataset(std::move(recs), K, sensor_names(n));
}

}  // namespace testing
