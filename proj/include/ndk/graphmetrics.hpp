#pragma once

#include "ndk/datamodel.hpp"
#include "ndk/minet.hpp"

#include <array>
#include <string>
#include <vector>

namespace ndk {

struct GraphFeatures {
  double char_path_length = 0.0;
  double global_efficiency = 0.0;
  double local_efficiency = 0.0;
  double clustering_coefficient = 0.0;
  double transitivity = 0.0;
  double modularity = 0.0;
  double assortativity = 0.0;
  // Some node pairs are unreachable; char_path_length averages the rest.
  bool disconnected = false;

  std::array<double, 7> as_features() const;
  // net.cpl net.geff net.leff net.cc net.trans net.mod net.assort
  static std::vector<std::string> column_names();
};

// All-pairs shortest paths with edge length 1/w over nonzero weights.
// Unreachable pairs are +infinity.
Eigen::MatrixXd shortest_path_matrix(const WeightedNetwork& net);

// Global efficiency of a weighted graph given directly by its weights.
double global_efficiency(const Eigen::MatrixXd& weights);

// Newman weighted modularity of the partition found by greedy agglomeration:
// repeatedly merge the pair of connected communities with the largest gain
// (ties: smallest community indices) and keep the best value seen.
double greedy_modularity(const Eigen::MatrixXd& weights);

// Newman weighted modularity of a given community assignment.
double modularity_of(const Eigen::MatrixXd& weights, const std::vector<int>& community);

// The seven summaries. Clustering and transitivity use geometric-mean triangle
// intensities with weights scaled by the largest weight; assortativity
// correlates node strengths across both orientations of every edge (0 when
// all strengths are equal). Requires n >= 3.
GraphFeatures graph_features(const WeightedNetwork& net);

// L x 7 block of graph summaries of each recording's thresholded network.
FeatureMatrix network_features(const Dataset& data, const NetworkOptions& options,
                               std::size_t workers = 1);

}  // namespace ndk
