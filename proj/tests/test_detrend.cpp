#include "helpers.hpp"

#include "ndk/detrend.hpp"
#include "ndk/error.hpp"

#include <doctest.h>

namespace {

// Residual variance from the 2x2 normal equations solved by Cramer's rule.
double normal_equation_variance(const std::vector<double>& y) {
  const auto T = static_cast<double>(y.size());
  long double st = 0, stt = 0, sy = 0, sty = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const long double t = static_cast<long double>(k + 1);
    st += t;
    stt += t * t;
    sy += y[k];
    sty += t * y[k];
  }
  const long double det = T * stt - st * st;
  const long double a = (sy * stt - st * sty) / det;
  const long double b = (T * sty - st * sy) / det;
  long double rss = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const long double r = y[k] - a - b * static_cast<long double>(k + 1);
    rss += r * r;
  }
  return static_cast<double>(rss / (T - 2));
}

ndk::Recording one_row(const std::vector<double>& y) {
  ndk::Recording r;
  r.signals = Eigen::Map<const Eigen::RowVectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return r;
}

}  // namespace

TEST_CASE("constant and ramp signals have zero detrended variance") {
  std::vector<double> flat(10, 5.0), ramp;
  for (int t = 1; t <= 10; ++t) ramp.push_back(3.0 * t + 1.0);
  CHECK(ndk::detrended_variance(one_row(flat))(0) == doctest::Approx(0.0));
  CHECK(ndk::detrended_variance(one_row(ramp))(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("alternating signal matches the normal-equation oracle") {
  const std::vector<double> y{1, -1, 1, -1, 1, -1};
  const double expected = normal_equation_variance(y);
  CHECK(ndk::detrended_variance(one_row(y))(0) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("random signals match the oracle, trend invariance and scaling") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    ndk::Recording r;
    r.signals = testing::gaussian_matrix(4, 5 + trial, rng);
    const Eigen::VectorXd v = ndk::detrended_variance(r);
    for (Eigen::Index i = 0; i < 4; ++i) {
      std::vector<double> y(static_cast<std::size_t>(r.signals.cols()));
      for (Eigen::Index t = 0; t < r.signals.cols(); ++t) y[static_cast<std::size_t>(t)] = r.signals(i, t);
      CHECK(v(i) == doctest::Approx(normal_equation_variance(y)).epsilon(1e-12));
    }
    ndk::Recording shifted = r;
    for (Eigen::Index t = 0; t < r.signals.cols(); ++t) shifted.signals.col(t).array() += 2.5 - 0.75 * (t + 1);
    const Eigen::VectorXd vs = ndk::detrended_variance(shifted);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(vs(i) == doctest::Approx(v(i)).epsilon(1e-9));
    ndk::Recording scaled = r;
    scaled.signals *= -3.0;
    CHECK(ndk::detrended_variance(scaled).isApprox(9.0 * v, 1e-12));
  }
}

TEST_CASE("too few time points is an error") {
  CHECK_THROWS_AS((void)ndk::detrended_variance(one_row({1.0, 2.0})), ndk::ValidationError);
}

TEST_CASE("variance feature block") {
  const auto ds = testing::noise_dataset(5, 3, 16, 2, 4);
  const auto fm = ndk::variance_features(ds);
  CHECK(fm.rows() == 5);
  CHECK(fm.cols() == 3);
  CHECK(fm.column_names[2] == "var[s3]");
  CHECK(fm.values.row(4).transpose().isApprox(ndk::detrended_variance(ds[4])));
}
