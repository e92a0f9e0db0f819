#pragma once

#include "ndk/datamodel.hpp"

#include <filesystem>
#include <vector>

namespace ndk {

// Functional principal components of one sensor's curves on the grid 1..T.
// With unit grid spacing the components are orthonormal in the plain dot
// product, and scores are plain projections.
struct SensorBasis {
  Eigen::VectorXd mean;        // length T
  Eigen::MatrixXd components;  // M x T, one component per row
  Eigen::VectorXd variances;   // length M, descending
  double fve = 1.0;            // fraction of variance captured by the M components
  double total_variance = 0.0; // trace of the empirical covariance

  Eigen::Index count() const { return components.rows(); }
};

struct FpcaBasis {
  double fve_threshold = 0.9;
  std::vector<std::string> sensor_names;
  std::vector<SensorBasis> sensors;

  std::size_t feature_count() const;
  // fpc[sensor][m] with m starting at 1.
  std::vector<std::string> column_names() const;
};

// Per-sensor eigendecomposition of the empirical covariance (denominator L-1)
// of the curves in `train`. Each component's largest-magnitude entry is made
// positive (earliest index on ties). A sensor with zero total variance gets
// M = 0 and a warning.
FpcaBasis fit_fpca(const Dataset& train, double fve_threshold = 0.9, std::size_t workers = 1);

// Scores of every recording against the basis, one L x M_i block per sensor.
std::vector<Eigen::MatrixXd> fpc_scores(const FpcaBasis& basis, const Dataset& data);

// All sensors' scores side by side as a feature block.
FeatureMatrix fpca_features(const FpcaBasis& basis, const Dataset& data);

void save_basis(const FpcaBasis& basis, const std::filesystem::path& path);
FpcaBasis load_basis(const std::filesystem::path& path);

}  // namespace ndk
