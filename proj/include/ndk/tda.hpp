#pragma once

#include "ndk/datamodel.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace ndk {

// Symmetric n x n matrix with entries in [0, 1] and zero diagonal.
struct DistanceMatrix {
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
};

// D_ij = 1 - rho_ij^2 with rho the Pearson correlation over t = 1..T.
// Throws ValidationError when a sensor has zero variance.
DistanceMatrix correlation_distance(const Recording& rec,
                                    std::span<const std::string> sensor_names = {});

struct PersistencePair {
  int dimension = 0;
  double birth = 0.0;
  double death = 0.0;
  bool essential = false;  // never dies; death is recorded as max_filtration

  double persistence() const { return death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
  std::vector<PersistencePair> pairs;
  double max_filtration = 1.0;

  // Pairs sorted by (dimension, birth, death, essential); handy for comparing
  // diagrams as multisets.
  std::vector<PersistencePair> sorted() const;
  // Number of bars of `dimension` alive at filtration value `eps`.
  int betti(int dimension, double eps) const;
};

// Vietoris-Rips persistent homology over the two-element field in dimensions
// 0..max_dim. Edges longer than max_filtration are left out. Bars of zero
// length are not reported; the remaining diagram does not depend on how
// simplices with equal filtration value are ordered.
PersistenceDiagram rips_persistence(const DistanceMatrix& distances, int max_dim = 2,
                                    double max_filtration = 1.0);

// Total persistence (half the sum), population variance, skewness and
// kurtosis (standardized third and fourth moments) of the bar lengths in each
// dimension 0, 1, 2. Essential bars count with length max_filtration - birth.
struct PersistenceSummary {
  std::array<double, 3> total{};
  std::array<double, 3> variance{};
  std::array<double, 3> skewness{};
  std::array<double, 3> kurtosis{};

  // PM0 PV0 PS0 PK0 PM1 ... PK2
  std::array<double, 12> as_features() const;
  static std::vector<std::string> column_names();
};

PersistenceSummary persistence_summary(const PersistenceDiagram& diagram);

struct TdaOptions {
  int max_dim = 2;
  double max_filtration = 1.0;
};

// L x 12 block of persistence summaries, columns ph.PM0 .. ph.PK2.
FeatureMatrix tda_features(const Dataset& data, const TdaOptions& options = {},
                           std::size_t workers = 1);

}  // namespace ndk
