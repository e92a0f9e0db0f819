#include "ndk/minet.hpp"

#include "ndk/detrend.hpp"
#include "ndk/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <tuple>

namespace ndk {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int length) : length_(length) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(length)));
    out_ = static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(length / 2 + 1)));
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(length, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Full-length DFT sum_t x(t) exp(-2 pi i k t / T), k = 0..T-1.
  Eigen::VectorXcd transform(const Eigen::RowVectorXd& x) {
    for (int t = 0; t < length_; ++t) in_[t] = x(t);
    fftw_execute(plan_);
    Eigen::VectorXcd full(length_);
    for (int k = 0; k <= length_ / 2; ++k) full(k) = {out_[k][0], out_[k][1]};
    for (int k = length_ / 2 + 1; k < length_; ++k) full(k) = std::conj(full(length_ - k));
    return full;
  }

 private:
  int length_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

constexpr double kCoherenceCeiling = 1.0 - 1e-12;

}  // namespace

SpectralEstimate::SpectralEstimate(std::vector<double> frequencies, Eigen::Index sensors,
                                   int halfwidth)
    : frequencies_(std::move(frequencies)),
      sensors_(sensors),
      halfwidth_(halfwidth),
      cross_(static_cast<std::size_t>(sensors * (sensors + 1) / 2) * frequencies_.size()) {}

std::size_t SpectralEstimate::slot(Eigen::Index i, Eigen::Index j) const {
  // Row-major upper triangle including the diagonal.
  const auto n = sensors_;
  const auto row_start = i * n - i * (i - 1) / 2;
  return static_cast<std::size_t>(row_start + (j - i)) * frequencies_.size();
}

std::complex<double> SpectralEstimate::cross(Eigen::Index i, Eigen::Index j, std::size_t k) const {
  if (i <= j) return cross_[slot(i, j) + k];
  return std::conj(cross_[slot(j, i) + k]);
}

void SpectralEstimate::set_cross(Eigen::Index i, Eigen::Index j, std::size_t k,
                                 std::complex<double> value) {
  if (i <= j) {
    cross_[slot(i, j) + k] = value;
  } else {
    cross_[slot(j, i) + k] = std::conj(value);
  }
}

Eigen::VectorXd cosine_bell_taper(Eigen::Index length, double proportion) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(length);
  const auto m = static_cast<Eigen::Index>(std::floor(static_cast<double>(length) * proportion));
  for (Eigen::Index t = 0; t < m; ++t) {
    const double v =
        0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(2 * t + 1) / (2.0 * static_cast<double>(m))));
    w(t) = v;
    w(length - 1 - t) = v;
  }
  return w;
}

std::vector<double> modified_daniell(int halfwidth) {
  if (halfwidth == 0) return {1.0};
  std::vector<double> h(static_cast<std::size_t>(2 * halfwidth + 1), 1.0 / (2.0 * halfwidth));
  h.front() = h.back() = 1.0 / (4.0 * halfwidth);
  return h;
}

SpectralEstimate estimate_spectra(const Recording& rec, int smoothing_halfwidth) {
  const Eigen::Index T = rec.timepoints();
  const Eigen::Index n = rec.sensors();
  if (T < 8) throw ValidationError("spectral estimation needs at least 8 time points");
  if (smoothing_halfwidth < 0 || 4 * smoothing_halfwidth >= T) {
    throw ValidationError("smoothing halfwidth must satisfy 0 <= m < T/4");
  }

  const Eigen::VectorXd taper = cosine_bell_taper(T, 0.1);
  const double taper_power = taper.squaredNorm();
  Eigen::MatrixXd x = linear_detrend(rec.signals);
  x.array().rowwise() *= taper.transpose().array();

  Eigen::MatrixXcd dft(n, T);
  {
    RealFft fft(static_cast<int>(T));
    for (Eigen::Index i = 0; i < n; ++i) dft.row(i) = fft.transform(x.row(i)).transpose();
  }

  const Eigen::Index F = T / 2;
  std::vector<double> grid(static_cast<std::size_t>(F));
  for (Eigen::Index k = 1; k <= F; ++k)
    grid[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) / static_cast<double>(T);

  SpectralEstimate est(std::move(grid), n, smoothing_halfwidth);
  const auto kernel = modified_daniell(smoothing_halfwidth);
  Eigen::VectorXcd pgram(T);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      for (Eigen::Index q = 0; q < T; ++q) pgram(q) = dft(i, q) * std::conj(dft(j, q)) / taper_power;
      pgram(0) = 0.5 * (pgram(1) + pgram(T - 1));
      for (Eigen::Index k = 1; k <= F; ++k) {
        std::complex<double> acc = 0.0;
        for (int o = -smoothing_halfwidth; o <= smoothing_halfwidth; ++o) {
          const Eigen::Index q = ((k + o) % T + T) % T;
          acc += kernel[static_cast<std::size_t>(o + smoothing_halfwidth)] * pgram(q);
        }
        if (i == j) acc.imag(0.0);
        est.set_cross(i, j, static_cast<std::size_t>(k - 1), acc);
      }
    }
  }
  return est;
}

std::vector<double> coherence(const SpectralEstimate& spectra, Eigen::Index i, Eigen::Index j) {
  if (spectra.smoothing_halfwidth() < 1) {
    throw ValidationError("coherence needs a smoothed spectral estimate (halfwidth >= 1)");
  }
  if (i < 0 || j < 0 || i >= spectra.sensors() || j >= spectra.sensors()) {
    throw ValidationError("coherence sensor index out of range");
  }
  const auto& grid = spectra.frequencies();
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double fi = spectra.auto_spectrum(i, k);
    const double fj = spectra.auto_spectrum(j, k);
    if (!(fi > 0.0) || !(fj > 0.0)) {
      throw NumericalError("zero auto-spectrum at sensor " + std::to_string(fi > 0.0 ? j + 1 : i + 1) +
                           ", frequency " + format_double(grid[k]));
    }
    const double c = std::norm(spectra.cross(i, j, k)) / (fi * fj);
    out[k] = std::clamp(c, 0.0, kCoherenceCeiling);
  }
  return out;
}

double mutual_information(std::span<const double> coh, std::span<const double> grid, Band band) {
  if (!(band.low >= 0.0 && band.low < band.high && band.high <= 0.5)) {
    throw ValidationError("mutual information band must satisfy 0 <= low < high <= 0.5");
  }
  if (coh.size() != grid.size() || grid.empty()) {
    throw ValidationError("coherence and frequency grid sizes differ");
  }
  auto integrand = [&](std::size_t k) {
    return -std::log1p(-std::clamp(coh[k], 0.0, kCoherenceCeiling));
  };
  // Linear interpolation of the integrand at an arbitrary frequency, constant
  // beyond the ends of the grid.
  auto value_at = [&](double f) {
    if (f <= grid.front()) return integrand(0);
    if (f >= grid.back()) return integrand(grid.size() - 1);
    auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), f) - grid.begin());
    const std::size_t lo = hi - 1;
    const double t = (f - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - t) * integrand(lo) + t * integrand(hi);
  };

  std::vector<std::pair<double, double>> nodes;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid[k] >= band.low && grid[k] <= band.high) nodes.emplace_back(grid[k], integrand(k));
  if (nodes.empty()) throw ValidationError("frequency band contains no grid points");
  if (nodes.front().first > band.low) nodes.insert(nodes.begin(), {band.low, value_at(band.low)});
  if (nodes.back().first < band.high) nodes.emplace_back(band.high, value_at(band.high));

  double integral = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k)
    integral += 0.5 * (nodes[k].second + nodes[k - 1].second) * (nodes[k].first - nodes[k - 1].first);
  return integral / (2.0 * std::numbers::pi);
}

double mi_weight(double delta) {
  if (!(delta >= 0.0)) throw ValidationError("mutual information must be non-negative");
  return std::sqrt(-std::expm1(-2.0 * delta));
}

double mi_from_weight(double weight) {
  if (!(weight >= 0.0 && weight < 1.0)) throw ValidationError("weight must lie in [0, 1)");
  return -0.5 * std::log((1.0 - weight) * (1.0 + weight));
}

std::size_t WeightedNetwork::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = i + 1; j < weights.cols(); ++j)
      if (weights(i, j) != 0.0) ++count;
  return count;
}

WeightedNetwork threshold_network(const Eigen::MatrixXd& weights, double density) {
  if (!(density > 0.0 && density <= 1.0)) throw ValidationError("network density must lie in (0, 1]");
  if (weights.rows() != weights.cols()) throw ValidationError("weight matrix must be square");
  const Eigen::Index n = weights.rows();
  struct Edge {
    double w;
    Eigen::Index i, j;
  };
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) edges.push_back({weights(i, j), i, j});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w > b.w;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  const auto quota = static_cast<std::size_t>(std::floor(density * static_cast<double>(edges.size()) + 1e-9));

  WeightedNetwork net;
  net.density = density;
  net.weights = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < std::min(quota, edges.size()); ++e) {
    net.weights(edges[e].i, edges[e].j) = edges[e].w;
    net.weights(edges[e].j, edges[e].i) = edges[e].w;
  }
  return net;
}

Eigen::MatrixXd mutual_information_weights(const Recording& rec, const NetworkOptions& options) {
  const auto spectra = estimate_spectra(rec, options.halfwidth);
  const Eigen::Index n = rec.sensors();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto coh = coherence(spectra, i, j);
      const double delta = mutual_information(coh, spectra.frequencies(), options.band);
      w(i, j) = w(j, i) = mi_weight(delta);
    }
  }
  return w;
}

WeightedNetwork mi_network(const Recording& rec, const NetworkOptions& options) {
  return threshold_network(mutual_information_weights(rec, options), options.density);
}

}  // namespace ndk
