#include "helpers.hpp"
#include "oracles/graph_bruteforce.hpp"

#include "ndk/error.hpp"
#include "ndk/graphmetrics.hpp"
#include "ndk/log.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

namespace {

ndk::WeightedNetwork from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges) {
  ndk::WeightedNetwork net;
  net.weights = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j, w] : edges) net.weights(i, j) = net.weights(j, i) = w;
  return net;
}

ndk::WeightedNetwork random_network(int n, double keep, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ndk::WeightedNetwork net;
  net.weights = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < keep) net.weights(i, j) = net.weights(j, i) = 0.05 + 0.95 * u(rng);
  return net;
}

void check_exact(const ndk::GraphFeatures& g, const std::array<double, 7>& want) {
  const auto got = g.as_features();
  for (std::size_t k = 0; k < 7; ++k) {
    CAPTURE(k);
    CHECK(std::abs(got[k] - want[k]) <= 1e-12);
  }
}

}  // namespace

TEST_CASE("shortest paths") {
  const auto tri = from_edges(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
  const auto d = ndk::shortest_path_matrix(tri);
  CHECK(d(0, 1) == 1);
  CHECK(d(0, 2) == 1);
  CHECK(d(1, 2) == 1);
  CHECK(d.diagonal().isZero());

  const auto path = from_edges(3, {{0, 1, 0.5}, {1, 2, 0.5}});
  CHECK(ndk::shortest_path_matrix(path)(0, 2) == 4);

  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = random_network(6, 0.5, rng);
    const auto got = ndk::shortest_path_matrix(net);
    const auto want = oracle::path_enumeration_distances(net.weights);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        if (std::isinf(want(i, j))) {
          CHECK(std::isinf(got(i, j)));
        } else {
          CHECK(got(i, j) == doctest::Approx(want(i, j)).epsilon(1e-13));
        }
      }
  }
}

TEST_CASE("golden fixtures") {
  SUBCASE("triangle") {
    const auto g = ndk::graph_features(from_edges(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}));
    check_exact(g, {1, 1, 1, 1, 1, 0, 0});
    CHECK_FALSE(g.disconnected);
  }
  SUBCASE("star") {
    const auto g = ndk::graph_features(from_edges(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}}));
    check_exact(g, {1.5, 0.75, 0, 0, 0, 0, -1});
  }
  SUBCASE("path of four") {
    const auto g = ndk::graph_features(from_edges(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}}));
    check_exact(g, {5.0 / 3, 13.0 / 18, 0, 0, 0, 1.0 / 6, -0.5});
  }
  SUBCASE("two disjoint triangles") {
    const auto net = from_edges(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}});
    const auto g = ndk::graph_features(net);
    check_exact(g, {1, 0.4, 1, 1, 1, 0.5, 0});
    CHECK(g.disconnected);
    CHECK(oracle::best_partition_modularity(net.weights) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("modularity against partition enumeration") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const auto net = random_network(6, 0.6, rng);
    if (net.edge_count() == 0) continue;
    const double greedy = ndk::greedy_modularity(net.weights);
    const double best = oracle::best_partition_modularity(net.weights);
    CHECK(greedy <= best + 1e-12);
    CHECK(greedy >= -1e-12);  // never worse than one community
    std::vector<int> singletons(6);
    std::iota(singletons.begin(), singletons.end(), 0);
    CHECK(ndk::modularity_of(net.weights, singletons) ==
          doctest::Approx(oracle::modularity(net.weights, singletons)).epsilon(1e-12));
  }
}

TEST_CASE("weighted clustering matches the triple-loop oracle") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 15; ++trial) {
    const auto net = random_network(7, 0.6, rng);
    if (net.edge_count() == 0) continue;
    const auto g = ndk::graph_features(net);
    const auto want = oracle::geometric_clustering(net.weights);
    CHECK(g.clustering_coefficient == doctest::Approx(want.mean_coefficient).epsilon(1e-12));
    CHECK(g.transitivity == doctest::Approx(want.transitivity).epsilon(1e-12));
    CHECK(g.clustering_coefficient >= 0);
    CHECK(g.clustering_coefficient <= 1);
  }
}

TEST_CASE("equal weights reduce clustering to the binary coefficient") {
  // Triangle 0-1-2 with a pendant 3 on node 2: binary C = (1 + 1 + 1/3 + 0) / 4.
  const auto g = ndk::graph_features(from_edges(4, {{0, 1, 0.4}, {1, 2, 0.4}, {0, 2, 0.4}, {2, 3, 0.4}}));
  CHECK(g.clustering_coefficient == doctest::Approx((1 + 1 + 1.0 / 3) / 4).epsilon(1e-12));
}

TEST_CASE("permutation invariance and efficiency monotonicity") {
  std::mt19937_64 rng(5);
  const auto net = random_network(7, 0.5, rng);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  ndk::WeightedNetwork shuffled;
  shuffled.weights.resize(7, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) shuffled.weights(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = net.weights(i, j);
  const auto a = ndk::graph_features(net).as_features();
  const auto b = ndk::graph_features(shuffled).as_features();
  for (std::size_t k = 0; k < 7; ++k) {
    // greedy modularity breaks ties by index and may land elsewhere
    if (k == 5) continue;
    CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }

  auto stronger = net;
  for (int i = 0; i < 7; ++i)
    for (int j = i + 1; j < 7; ++j)
      if (stronger.weights(i, j) > 0) {
        const double before = ndk::global_efficiency(stronger.weights);
        stronger.weights(i, j) = stronger.weights(j, i) = stronger.weights(i, j) * 1.5;
        CHECK(ndk::global_efficiency(stronger.weights) >= before);
      }
}

TEST_CASE("empty edge set and tiny graphs") {
  std::vector<std::string> warnings;
  auto previous = ndk::set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
  const auto g = ndk::graph_features(from_edges(4, {}));
  ndk::set_warning_sink(previous);
  check_exact(g, {0, 0, 0, 0, 0, 0, 0});
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS((void)ndk::graph_features(from_edges(2, {{0, 1, 1}})), ndk::ValidationError);
}

TEST_CASE("network feature block") {
  const auto ds = testing::noise_dataset(3, 6, 64, 2, 2);
  const ndk::NetworkOptions opts;
  const auto fm = ndk::network_features(ds, opts, 2);
  CHECK(fm.cols() == 7);
  CHECK(fm.column_names == ndk::GraphFeatures::column_names());
  const auto direct = ndk::graph_features(ndk::mi_network(ds[2], opts)).as_features();
  for (int c = 0; c < 7; ++c) CHECK(fm.values(2, c) == direct[static_cast<std::size_t>(c)]);
}
