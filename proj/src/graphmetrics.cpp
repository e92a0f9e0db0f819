#include "ndk/graphmetrics.hpp"

#include "ndk/error.hpp"
#include "ndk/log.hpp"
#include "ndk/parallel.hpp"

#include <cmath>
#include <limits>

namespace ndk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd floyd_warshall(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, kInf);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && w(i, j) > 0.0) d(i, j) = 1.0 / w(i, j);
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dik = d(i, k);
      if (dik == kInf) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double via = dik + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
    }
  return d;
}

double efficiency_from_distances(const Eigen::MatrixXd& d) {
  const Eigen::Index n = d.rows();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && d(i, j) != kInf) sum += 1.0 / d(i, j);
  return sum / static_cast<double>(n * (n - 1));
}

double local_efficiency(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> nb;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && w(i, j) > 0.0) nb.push_back(j);
    if (nb.size() < 2) continue;
    const auto k = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        sub(a, b) = w(nb[static_cast<std::size_t>(a)], nb[static_cast<std::size_t>(b)]);
    sum += global_efficiency(sub);
  }
  return sum / static_cast<double>(n);
}

// Strength-based assortativity over both orientations of every edge.
double assortativity(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  const Eigen::VectorXd strength = w.rowwise().sum();
  double count = 0, sx = 0, sxx = 0, sxy = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && w(i, j) > 0.0) {
        count += 1;
        sx += strength(i);
        sxx += strength(i) * strength(i);
        sxy += strength(i) * strength(j);
      }
  if (count == 0) return 0.0;
  // Both orientations make the two endpoint samples identical in distribution.
  const double mean = sx / count;
  const double var = sxx / count - mean * mean;
  if (!(var > 1e-14 * std::max(1.0, mean * mean))) return 0.0;
  return (sxy / count - mean * mean) / var;
}

}  // namespace

std::array<double, 7> GraphFeatures::as_features() const {
  return {char_path_length, global_efficiency, local_efficiency, clustering_coefficient,
          transitivity,     modularity,        assortativity};
}

std::vector<std::string> GraphFeatures::column_names() {
  return {"net.cpl", "net.geff", "net.leff", "net.cc", "net.trans", "net.mod", "net.assort"};
}

Eigen::MatrixXd shortest_path_matrix(const WeightedNetwork& net) {
  if (net.weights.rows() != net.weights.cols()) throw ValidationError("weight matrix must be square");
  if ((net.weights.array() < 0.0).any()) throw ValidationError("network weights must be non-negative");
  return floyd_warshall(net.weights);
}

double global_efficiency(const Eigen::MatrixXd& weights) {
  return efficiency_from_distances(floyd_warshall(weights));
}

double modularity_of(const Eigen::MatrixXd& w, const std::vector<int>& community) {
  const Eigen::Index n = w.rows();
  const double two_m = w.sum();
  if (!(two_m > 0.0)) return 0.0;
  const Eigen::VectorXd s = w.rowwise().sum();
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (community[static_cast<std::size_t>(i)] == community[static_cast<std::size_t>(j)])
        q += w(i, j) - s(i) * s(j) / two_m;
  return q / two_m;
}

double greedy_modularity(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  const double two_m = w.sum();
  if (!(two_m > 0.0)) return 0.0;
  // e(a, b): fraction of edge ends running from community a to b; a(c): degree share.
  Eigen::MatrixXd e = w / two_m;
  Eigen::VectorXd a = e.rowwise().sum();
  std::vector<bool> alive(static_cast<std::size_t>(n), true);

  double q = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) q += e(c, c) - a(c) * a(c);
  double best = q;

  while (true) {
    double best_gain = -kInf;
    Eigen::Index ba = -1, bb = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!alive[static_cast<std::size_t>(j)] || !(e(i, j) > 0.0)) continue;
        const double gain = 2.0 * (e(i, j) - a(i) * a(j));
        if (gain > best_gain) {
          best_gain = gain;
          ba = i;
          bb = j;
        }
      }
    }
    if (ba < 0) break;
    // Merge bb into ba.
    e.row(ba) += e.row(bb);
    e.col(ba) += e.col(bb);
    e.row(bb).setZero();
    e.col(bb).setZero();
    a(ba) += a(bb);
    a(bb) = 0.0;
    alive[static_cast<std::size_t>(bb)] = false;
    q += best_gain;
    best = std::max(best, q);
  }
  return best;
}

GraphFeatures graph_features(const WeightedNetwork& net) {
  const auto& w = net.weights;
  const Eigen::Index n = w.rows();
  if (n < 3) throw ValidationError("graph features need at least 3 nodes");
  GraphFeatures g;
  if (net.edge_count() == 0) {
    warn("graph features: network has no edges; all measures set to 0");
    g.disconnected = true;
    return g;
  }

  const Eigen::MatrixXd d = shortest_path_matrix(net);
  double finite_sum = 0.0;
  double finite_count = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (d(i, j) == kInf) {
        g.disconnected = true;
      } else {
        finite_sum += d(i, j);
        finite_count += 1.0;
      }
    }
  g.char_path_length = finite_count > 0 ? finite_sum / finite_count : 0.0;
  g.global_efficiency = efficiency_from_distances(d);
  g.local_efficiency = local_efficiency(w);

  const double wmax = w.maxCoeff();
  const Eigen::MatrixXd cube = (w / wmax).unaryExpr([](double v) { return std::cbrt(v); });
  const Eigen::VectorXd cycles = (cube * cube * cube).diagonal();
  double cc_sum = 0.0, cyc_total = 0.0, pairs_total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double k = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && w(i, j) > 0.0) k += 1.0;
    const double pairs = k * (k - 1.0);
    if (k >= 2.0) cc_sum += cycles(i) / pairs;
    cyc_total += cycles(i);
    pairs_total += pairs;
  }
  g.clustering_coefficient = cc_sum / static_cast<double>(n);
  g.transitivity = pairs_total > 0 ? cyc_total / pairs_total : 0.0;
  g.modularity = greedy_modularity(w);
  g.assortativity = assortativity(w);
  return g;
}

FeatureMatrix network_features(const Dataset& data, const NetworkOptions& options,
                               std::size_t workers) {
  FeatureMatrix fm = feature_rows(data);
  fm.values.resize(static_cast<Eigen::Index>(data.size()), 7);
  parallel_for(data.size(), workers, [&](std::size_t l) {
    std::array<double, 7> f;
    try {
      f = graph_features(mi_network(data[l], options)).as_features();
    } catch (const NumericalError& e) {
      throw NumericalError("sample " + data[l].sample_id + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("sample " + data[l].sample_id + ": " + e.what());
    }
    for (int c = 0; c < 7; ++c) fm.values(static_cast<Eigen::Index>(l), c) = f[static_cast<std::size_t>(c)];
  });
  fm.column_names = GraphFeatures::column_names();
  return fm;
}

}  // namespace ndk
