#include "helpers.hpp"
#include "oracles/rips_bruteforce.hpp"

#include "ndk/error.hpp"
#include "ndk/tda.hpp"

#include <doctest.h>

#include <cmath>

namespace {

ndk::DistanceMatrix random_metric(int n, std::mt19937_64& rng, double grid) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ndk::DistanceMatrix d;
  d.values = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = u(rng);
      if (grid > 0) v = std::ceil(v / grid) * grid;
      d.values(i, j) = d.values(j, i) = std::min(v, 1.0);
    }
  return d;
}

std::vector<oracle::Bar> as_bars(const ndk::PersistenceDiagram& diagram) {
  std::vector<oracle::Bar> out;
  for (const auto& p : diagram.pairs) out.push_back({p.dimension, p.birth, p.death, p.essential});
  std::sort(out.begin(), out.end());
  return out;
}

ndk::DistanceMatrix circle(int n) {
  ndk::DistanceMatrix d;
  d.values = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = std::abs(i - j);
      d.values(i, j) = std::min(k, n - k) / (n / 2.0);
    }
  return d;
}

}  // namespace

TEST_CASE("a single point has one essential component") {
  ndk::DistanceMatrix d{Eigen::MatrixXd::Zero(1, 1)};
  const auto diagram = ndk::rips_persistence(d, 2, 1.0);
  REQUIRE(diagram.pairs.size() == 1);
  CHECK(diagram.pairs[0] == ndk::PersistencePair{0, 0.0, 1.0, true});
}

TEST_CASE("three points with distances 0.2, 0.4, 0.9") {
  ndk::DistanceMatrix d;
  d.values = Eigen::MatrixXd{{0, 0.2, 0.4}, {0.2, 0, 0.9}, {0.4, 0.9, 0}};
  const auto bars = ndk::rips_persistence(d, 2, 1.0).sorted();
  REQUIRE(bars.size() == 3);
  CHECK(bars[0] == ndk::PersistencePair{0, 0.0, 0.2, false});
  CHECK(bars[1] == ndk::PersistencePair{0, 0.0, 0.4, false});
  CHECK(bars[2] == ndk::PersistencePair{0, 0.0, 1.0, true});
}

TEST_CASE("eight points on a circle carry one dominant loop") {
  const auto diagram = ndk::rips_persistence(circle(8), 2, 1.0);
  std::vector<double> h1;
  for (const auto& p : diagram.pairs)
    if (p.dimension == 1) h1.push_back(p.persistence());
  REQUIRE(h1.size() == 1);
  CHECK(h1[0] == doctest::Approx(0.5));
  CHECK(diagram.betti(1, 0.5) == 1);
  CHECK(diagram.betti(0, 0.5) == 1);
  CHECK(diagram.betti(1, 0.8) == 0);
}

TEST_CASE("random metrics agree with brute-force reduction") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 7;
    const double grid = trial % 3 == 0 ? 0.1 : 0.0;  // coarse grid forces ties
    const double max_filt = trial % 4 == 0 ? 0.6 : 1.0;
    const int max_dim = trial % 5 == 0 ? 1 : 2;
    const auto d = random_metric(n, rng, grid);
    const auto got = as_bars(ndk::rips_persistence(d, max_dim, max_filt));
    const auto want = oracle::rips_bruteforce(d.values, max_dim, max_filt);
    CAPTURE(trial);
    CHECK(got == want);
  }
}

TEST_CASE("invalid rips arguments") {
  ndk::DistanceMatrix d{Eigen::MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS((void)ndk::rips_persistence(d, 3, 1.0), ndk::ValidationError);
  CHECK_THROWS_AS((void)ndk::rips_persistence(d, 1, 0.0), ndk::ValidationError);
}

TEST_CASE("correlation distance") {
  ndk::Recording r;
  Eigen::RowVectorXd y(6);
  y << 1, 4, 2, 8, 5, 7;
  r.signals.resize(3, 6);
  r.signals.row(0) = y;
  r.signals.row(1) = (3.0 * y.array() + 2.0).matrix();
  r.signals.row(2) = -y;
  const auto d = ndk::correlation_distance(r);
  CHECK(d.values(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.values(0, 2) == doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937_64 rng(5);
  r.signals = testing::gaussian_matrix(4, 16, rng);
  const auto dr = ndk::correlation_distance(r);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      // two-pass oracle
      double mi = 0, mj = 0;
      for (int t = 0; t < 16; ++t) {
        mi += r.signals(i, t) / 16;
        mj += r.signals(j, t) / 16;
      }
      double sij = 0, sii = 0, sjj = 0;
      for (int t = 0; t < 16; ++t) {
        sij += (r.signals(i, t) - mi) * (r.signals(j, t) - mj);
        sii += (r.signals(i, t) - mi) * (r.signals(i, t) - mi);
        sjj += (r.signals(j, t) - mj) * (r.signals(j, t) - mj);
      }
      const double expected = i == j ? 0.0 : 1.0 - sij * sij / (sii * sjj);
      CHECK(std::abs(dr.values(i, j) - expected) < 1e-12);
    }

  r.signals.row(2).setConstant(1.0);
  CHECK_THROWS_AS((void)ndk::correlation_distance(r), ndk::ValidationError);
}

TEST_CASE("persistence summaries") {
  ndk::PersistenceDiagram diagram;
  diagram.max_filtration = 1.0;
  diagram.pairs = {{0, 0.0, 0.1, false}, {0, 0.0, 0.2, false}, {0, 0.0, 0.7, false},
                   {1, 0.2, 0.5, false}, {1, 0.4, 0.7, false}};
  const auto s = ndk::persistence_summary(diagram);

  const std::vector<double> h0{0.1, 0.2, 0.7};
  const double mean = (0.1 + 0.2 + 0.7) / 3;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : h0) {
    m2 += std::pow(v - mean, 2) / 3;
    m3 += std::pow(v - mean, 3) / 3;
    m4 += std::pow(v - mean, 4) / 3;
  }
  CHECK(s.total[0] == doctest::Approx(0.5));
  CHECK(s.variance[0] == doctest::Approx(m2).epsilon(1e-12));
  CHECK(s.skewness[0] == doctest::Approx(m3 / std::pow(m2, 1.5)).epsilon(1e-12));
  CHECK(s.kurtosis[0] == doctest::Approx(m4 / (m2 * m2)).epsilon(1e-12));

  CHECK(s.total[1] == doctest::Approx(0.3));
  CHECK(s.variance[1] == doctest::Approx(0.0));
  CHECK(s.skewness[1] == 0.0);
  CHECK(s.kurtosis[1] == 0.0);
  CHECK(s.total[2] == 0.0);
  CHECK(s.variance[2] == 0.0);
  CHECK(s.skewness[2] == 0.0);
  CHECK(s.kurtosis[2] == 0.0);

  const auto f = s.as_features();
  CHECK(f[4] == s.total[1]);
  CHECK(ndk::PersistenceSummary::column_names().size() == 12);
  CHECK(ndk::PersistenceSummary::column_names()[0] == "ph.PM0");
}

TEST_CASE("essential bars count to max_filtration") {
  ndk::PersistenceDiagram diagram;
  diagram.max_filtration = 0.8;
  diagram.pairs = {{0, 0.0, 0.8, true}};
  CHECK(ndk::persistence_summary(diagram).total[0] == doctest::Approx(0.4));
}

TEST_CASE("tda feature block") {
  const auto ds = testing::noise_dataset(3, 6, 20, 2, 12);
  const auto fm = ndk::tda_features(ds, {2, 1.0}, 2);
  CHECK(fm.cols() == 12);
  CHECK(fm.rows() == 3);
  const auto direct = ndk::persistence_summary(
      ndk::rips_persistence(ndk::correlation_distance(ds[1]), 2, 1.0)).as_features();
  for (int c = 0; c < 12; ++c) CHECK(fm.values(1, c) == direct[static_cast<std::size_t>(c)]);
}
