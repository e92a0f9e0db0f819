#include "ndk/tda.hpp"

#include "ndk/error.hpp"
#include "ndk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace ndk {
namespace {

using Index = std::int64_t;

class BinomialTable {
 public:
  BinomialTable(Index n, Index k) : n_(n), k_(k), table_(static_cast<std::size_t>((n + 1) * (k + 1)), 0) {
    for (Index i = 0; i <= n; ++i) {
      at(i, 0) = 1;
      for (Index j = 1; j <= std::min(i, k); ++j) at(i, j) = at(i - 1, j - 1) + (j < i ? at(i - 1, j) : 0);
    }
  }

  Index operator()(Index n, Index k) const {
    if (n < k || k < 0 || n < 0) return 0;
    return table_[static_cast<std::size_t>(n * (k_ + 1) + k)];
  }

 private:
  Index& at(Index i, Index j) { return table_[static_cast<std::size_t>(i * (k_ + 1) + j)]; }

  Index n_, k_;
  std::vector<Index> table_;
};

// A simplex in the combinatorial number system together with its filtration
// value (the length of its longest edge).
struct Entry {
  double diameter;
  Index index;
};

// Reverse filtration order: larger diameter first, then smaller index. Used
// both to sort columns and, as a heap comparator, to surface the earliest
// simplex in filtration order (the pivot) at the heap front.
struct ReverseFiltrationOrder {
  bool operator()(const Entry& a, const Entry& b) const {
    return a.diameter > b.diameter || (a.diameter == b.diameter && a.index < b.index);
  }
};

constexpr Entry kNone{0.0, -1};

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)), rank_(static_cast<std::size_t>(n), 0) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    Index root = x;
    while (parent_[static_cast<std::size_t>(root)] != root) root = parent_[static_cast<std::size_t>(root)];
    while (parent_[static_cast<std::size_t>(x)] != root) {
      Index next = parent_[static_cast<std::size_t>(x)];
      parent_[static_cast<std::size_t>(x)] = root;
      x = next;
    }
    return root;
  }
  void link(Index x, Index y) {
    x = find(x);
    y = find(y);
    if (x == y) return;
    auto& rx = rank_[static_cast<std::size_t>(x)];
    auto& ry = rank_[static_cast<std::size_t>(y)];
    if (rx > ry) {
      parent_[static_cast<std::size_t>(y)] = x;
    } else {
      parent_[static_cast<std::size_t>(x)] = y;
      if (rx == ry) ++ry;
    }
  }

 private:
  std::vector<Index> parent_;
  std::vector<std::uint8_t> rank_;
};

using Heap = std::vector<Entry>;

void heap_push(Heap& h, Entry e) {
  h.push_back(e);
  std::push_heap(h.begin(), h.end(), ReverseFiltrationOrder{});
}

Entry heap_pop(Heap& h) {
  std::pop_heap(h.begin(), h.end(), ReverseFiltrationOrder{});
  Entry e = h.back();
  h.pop_back();
  return e;
}

// Pops the leading entry, cancelling duplicate pairs (coefficients mod 2).
Entry pop_pivot(Heap& h) {
  if (h.empty()) return kNone;
  Entry pivot = heap_pop(h);
  while (!h.empty() && h.front().index == pivot.index) {
    heap_pop(h);
    if (h.empty()) return kNone;
    pivot = heap_pop(h);
  }
  return pivot;
}

Entry get_pivot(Heap& h) {
  Entry pivot = pop_pivot(h);
  if (pivot.index != -1) heap_push(h, pivot);
  return pivot;
}

// Persistent cohomology of the Rips filtration with clearing and the
// emergent-pair shortcut; simplices are never stored explicitly.
class RipsReducer {
 public:
  RipsReducer(const Eigen::MatrixXd& dist, int max_dim, double threshold)
      : dist_(dist),
        n_(dist.rows()),
        max_dim_(max_dim),
        threshold_(threshold),
        binomial_(n_, max_dim + 2) {}

  std::vector<PersistencePair> run() {
    std::vector<Entry> columns;
    compute_dim0(columns);
    std::unordered_map<Index, Index> pivots;
    for (int dim = 1; dim <= max_dim_; ++dim) {
      compute_pairs(columns, pivots, dim);
      if (dim < max_dim_) assemble_columns(columns, pivots, dim + 1);
    }
    return std::move(pairs_);
  }

 private:
  double d(Index i, Index j) const { return dist_(i, j); }

  Index max_vertex(Index idx, Index k, Index top) const {
    // Largest v in [k - 1, top] with C(v, k) <= idx.
    Index lo = k - 1, hi = top;
    while (lo < hi) {
      Index mid = hi - (hi - lo) / 2;
      if (binomial_(mid, k) <= idx) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    return lo;
  }

  void vertices(Index idx, int dim, std::vector<Index>& out) const {
    out.clear();
    Index top = n_ - 1;
    for (Index k = dim + 1; k > 0; --k) {
      top = max_vertex(idx, k, top);
      out.push_back(top);
      idx -= binomial_(top, k);
    }
  }

  double diameter(Index idx, int dim) {
    vertices(idx, dim, scratch_vertices_);
    double diam = 0.0;
    for (std::size_t a = 0; a < scratch_vertices_.size(); ++a)
      for (std::size_t b = a + 1; b < scratch_vertices_.size(); ++b)
        diam = std::max(diam, d(scratch_vertices_[a], scratch_vertices_[b]));
    return diam;
  }

  // Calls f(cofacet) for every cofacet of `simplex`, in decreasing index order.
  template <class F>
  void for_each_cofacet(const Entry& simplex, int dim, std::vector<Index>& verts, F&& f) const {
    vertices(simplex.index, dim, verts);
    Index idx_below = simplex.index;
    Index idx_above = 0;
    Index v = n_ - 1;
    Index k = dim + 1;
    while (v >= k) {
      while (binomial_(v, k) <= idx_below) {
        idx_below -= binomial_(v, k);
        idx_above += binomial_(v, k + 1);
        --v;
        --k;
      }
      double diam = simplex.diameter;
      for (Index w : verts) diam = std::max(diam, d(v, w));
      const Index cofacet = idx_above + binomial_(v, k + 1) + idx_below;
      --v;
      if (!f(Entry{diam, cofacet})) return;
    }
  }

  void compute_dim0(std::vector<Entry>& columns) {
    std::vector<Entry> edges;
    for (Index i = 1; i < n_; ++i)
      for (Index j = 0; j < i; ++j)
        if (d(i, j) <= threshold_) edges.push_back(Entry{d(i, j), binomial_(i, 2) + j});
    std::sort(edges.begin(), edges.end(), ReverseFiltrationOrder{});

    UnionFind uf(n_);
    columns.clear();
    std::vector<Index> verts;
    for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
      vertices(it->index, 1, verts);
      const Index u = uf.find(verts[0]);
      const Index w = uf.find(verts[1]);
      if (u != w) {
        if (it->diameter > 0.0) pairs_.push_back({0, 0.0, it->diameter, false});
        uf.link(u, w);
      } else {
        columns.push_back(*it);
      }
    }
    std::reverse(columns.begin(), columns.end());
    for (Index i = 0; i < n_; ++i)
      if (uf.find(i) == i) pairs_.push_back({0, 0.0, threshold_, true});
  }

  void push_coboundary(const Entry& simplex, int dim, Heap& coboundary) {
    for_each_cofacet(simplex, dim, cofacet_vertices_, [&](const Entry& c) {
      if (c.diameter <= threshold_) heap_push(coboundary, c);
      return true;
    });
  }

  Entry init_coboundary_and_get_pivot(const Entry& simplex, int dim, Heap& coboundary,
                                      const std::unordered_map<Index, Index>& pivots) {
    bool check_emergent = true;
    Entry emergent = kNone;
    cofacet_entries_.clear();
    for_each_cofacet(simplex, dim, cofacet_vertices_, [&](const Entry& c) {
      if (c.diameter > threshold_) return true;
      cofacet_entries_.push_back(c);
      if (check_emergent && c.diameter == simplex.diameter) {
        if (!pivots.contains(c.index)) {
          emergent = c;
          return false;
        }
        check_emergent = false;
      }
      return true;
    });
    if (emergent.index != -1) return emergent;
    for (const auto& c : cofacet_entries_) heap_push(coboundary, c);
    return get_pivot(coboundary);
  }

  void compute_pairs(const std::vector<Entry>& columns, std::unordered_map<Index, Index>& pivots,
                     int dim) {
    pivots.clear();
    pivots.reserve(columns.size());
    std::vector<Entry> reduction_data;
    std::vector<std::size_t> reduction_offsets{0};
    reduction_offsets.reserve(columns.size() + 1);
    Heap working_reduction;
    Heap working_coboundary;

    for (std::size_t i = 0; i < columns.size(); ++i) {
      const Entry column = columns[i];
      const double birth = column.diameter;
      working_reduction.clear();
      working_coboundary.clear();

      Entry pivot = init_coboundary_and_get_pivot(column, dim, working_coboundary, pivots);
      while (true) {
        if (pivot.index == -1) {
          if (birth < threshold_) pairs_.push_back({dim, birth, threshold_, true});
          break;
        }
        auto found = pivots.find(pivot.index);
        if (found == pivots.end()) {
          if (pivot.diameter > birth) pairs_.push_back({dim, birth, pivot.diameter, false});
          pivots.emplace(pivot.index, static_cast<Index>(i));
          for (Entry e = pop_pivot(working_reduction); e.index != -1; e = pop_pivot(working_reduction))
            reduction_data.push_back(e);
          break;
        }
        const auto j = static_cast<std::size_t>(found->second);
        heap_push(working_reduction, columns[j]);
        push_coboundary(columns[j], dim, working_coboundary);
        for (std::size_t r = reduction_offsets[j]; r < reduction_offsets[j + 1]; ++r) {
          heap_push(working_reduction, reduction_data[r]);
          push_coboundary(reduction_data[r], dim, working_coboundary);
        }
        pivot = get_pivot(working_coboundary);
      }
      reduction_offsets.push_back(reduction_data.size());
    }
  }

  void assemble_columns(std::vector<Entry>& columns, const std::unordered_map<Index, Index>& pivots,
                        int dim) {
    columns.clear();
    const Index count = binomial_(n_, dim + 1);
    for (Index idx = 0; idx < count; ++idx) {
      if (pivots.contains(idx)) continue;
      const double diam = diameter(idx, dim);
      if (diam <= threshold_) columns.push_back(Entry{diam, idx});
    }
    std::sort(columns.begin(), columns.end(), ReverseFiltrationOrder{});
  }

  const Eigen::MatrixXd& dist_;
  Index n_;
  int max_dim_;
  double threshold_;
  BinomialTable binomial_;
  std::vector<PersistencePair> pairs_;
  std::vector<Index> scratch_vertices_;
  std::vector<Index> cofacet_vertices_;
  std::vector<Entry> cofacet_entries_;
};

struct Moments {
  double total = 0, variance = 0, skewness = 0, kurtosis = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  if (x.empty()) return m;
  const double count = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / count;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double dv = v - mean;
    m2 += dv * dv;
    m3 += dv * dv * dv;
    m4 += dv * dv * dv * dv;
  }
  m2 /= count;
  m3 /= count;
  m4 /= count;
  m.total = 0.5 * sum;
  m.variance = m2;
  if (m2 > 1e-24 * std::max(1.0, mean * mean)) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
  }
  return m;
}

}  // namespace

DistanceMatrix correlation_distance(const Recording& rec, std::span<const std::string> sensor_names) {
  const Eigen::Index n = rec.sensors();
  Eigen::MatrixXd centered = rec.signals.colwise() - rec.signals.rowwise().mean();
  Eigen::VectorXd norms = centered.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(norms(i) > 0.0)) {
      std::string name = static_cast<std::size_t>(i) < sensor_names.size()
                             ? sensor_names[static_cast<std::size_t>(i)]
                             : "#" + std::to_string(i + 1);
      throw ValidationError("sample " + rec.sample_id + ": sensor " + name +
                            " has zero variance; correlation undefined");
    }
  }
  DistanceMatrix out;
  out.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double rho = centered.row(i).dot(centered.row(j)) / (norms(i) * norms(j));
      const double dij = std::clamp(1.0 - rho * rho, 0.0, 1.0);
      out.values(i, j) = dij;
      out.values(j, i) = dij;
    }
  }
  return out;
}

std::vector<PersistencePair> PersistenceDiagram::sorted() const {
  auto out = pairs;
  std::sort(out.begin(), out.end(), [](const PersistencePair& a, const PersistencePair& b) {
    return std::tie(a.dimension, a.birth, a.death, a.essential) <
           std::tie(b.dimension, b.birth, b.death, b.essential);
  });
  return out;
}

int PersistenceDiagram::betti(int dimension, double eps) const {
  int count = 0;
  for (const auto& p : pairs)
    if (p.dimension == dimension && p.birth <= eps && (eps < p.death || p.essential)) ++count;
  return count;
}

PersistenceDiagram rips_persistence(const DistanceMatrix& distances, int max_dim, double max_filtration) {
  if (max_dim < 0 || max_dim > 2) throw ValidationError("rips max_dim must be 0, 1 or 2");
  if (!(max_filtration > 0.0)) throw ValidationError("rips max_filtration must be positive");
  const auto& D = distances.values;
  if (D.rows() != D.cols()) throw ValidationError("distance matrix must be square");
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    if (D(i, i) != 0.0) throw ValidationError("distance matrix must have zero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (D(i, j) != D(j, i) || !(D(i, j) >= 0.0)) {
        throw ValidationError("distance matrix must be symmetric and non-negative");
      }
    }
  }
  PersistenceDiagram diagram;
  diagram.max_filtration = max_filtration;
  if (D.rows() == 0) return diagram;
  diagram.pairs = RipsReducer(D, max_dim, max_filtration).run();
  return diagram;
}

std::array<double, 12> PersistenceSummary::as_features() const {
  std::array<double, 12> f{};
  for (std::size_t p = 0; p < 3; ++p) {
    f[4 * p + 0] = total[p];
    f[4 * p + 1] = variance[p];
    f[4 * p + 2] = skewness[p];
    f[4 * p + 3] = kurtosis[p];
  }
  return f;
}

std::vector<std::string> PersistenceSummary::column_names() {
  std::vector<std::string> names;
  for (int p = 0; p < 3; ++p)
    for (const char* stat : {"PM", "PV", "PS", "PK"})
      names.push_back(std::string("ph.") + stat + std::to_string(p));
  return names;
}

PersistenceSummary persistence_summary(const PersistenceDiagram& diagram) {
  std::array<std::vector<double>, 3> values;
  for (const auto& p : diagram.pairs) {
    if (p.dimension < 0 || p.dimension > 2) continue;
    const double death = p.essential ? diagram.max_filtration : p.death;
    values[static_cast<std::size_t>(p.dimension)].push_back(death - p.birth);
  }
  PersistenceSummary s;
  for (std::size_t p = 0; p < 3; ++p) {
    auto m = moments(values[p]);
    s.total[p] = m.total;
    s.variance[p] = m.variance;
    s.skewness[p] = m.skewness;
    s.kurtosis[p] = m.kurtosis;
  }
  return s;
}

FeatureMatrix tda_features(const Dataset& data, const TdaOptions& options, std::size_t workers) {
  FeatureMatrix fm = feature_rows(data);
  fm.values.resize(static_cast<Eigen::Index>(data.size()), 12);
  parallel_for(data.size(), workers, [&](std::size_t l) {
    auto D = correlation_distance(data[l], data.sensor_names());
    auto diagram = rips_persistence(D, options.max_dim, options.max_filtration);
    auto f = persistence_summary(diagram).as_features();
    for (int c = 0; c < 12; ++c) fm.values(static_cast<Eigen::Index>(l), c) = f[static_cast<std::size_t>(c)];
  });
  fm.column_names = PersistenceSummary::column_names();
  return fm;
}

}  // namespace ndk
