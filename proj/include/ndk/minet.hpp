#pragma once

#include "ndk/datamodel.hpp"

#include <complex>
#include <span>
#include <vector>

namespace ndk {

// Smoothed auto- and cross-spectra on the Fourier grid k/T, k = 1..floor(T/2),
// in cycles/sample. Cross-spectra are stored for i <= j only; cross(j, i, k)
// returns the conjugate.
class SpectralEstimate {
 public:
  SpectralEstimate() = default;
  SpectralEstimate(std::vector<double> frequencies, Eigen::Index sensors, int halfwidth);

  const std::vector<double>& frequencies() const { return frequencies_; }
  Eigen::Index sensors() const { return sensors_; }
  int smoothing_halfwidth() const { return halfwidth_; }

  double auto_spectrum(Eigen::Index i, std::size_t k) const { return cross(i, i, k).real(); }
  std::complex<double> cross(Eigen::Index i, Eigen::Index j, std::size_t k) const;
  void set_cross(Eigen::Index i, Eigen::Index j, std::size_t k, std::complex<double> value);

 private:
  std::size_t slot(Eigen::Index i, Eigen::Index j) const;

  std::vector<double> frequencies_;
  Eigen::Index sensors_ = 0;
  int halfwidth_ = 0;
  std::vector<std::complex<double>> cross_;  // upper triangle by rows, then frequency
};

// Split-cosine-bell weights tapering `proportion` of the series at each end.
Eigen::VectorXd cosine_bell_taper(Eigen::Index length, double proportion = 0.1);

// Modified Daniell weights for offsets -halfwidth..halfwidth.
std::vector<double> modified_daniell(int halfwidth);

// Per sensor: remove the linear trend, taper the outer 10% at each end, take
// the DFT and form (cross-)periodograms, then smooth across frequency with a
// modified Daniell kernel (halfwidth 0 = raw periodogram). The kernel wraps
// around the full circle of Fourier frequencies; the zero frequency is
// replaced by the mean of its two neighbours first.
SpectralEstimate estimate_spectra(const Recording& rec, int smoothing_halfwidth);

// |f_ij|^2 / (f_i f_j) clamped to [0, 1 - 1e-12]. Requires a smoothed
// estimate (halfwidth >= 1); a raw periodogram gives coherence 1 everywhere.
std::vector<double> coherence(const SpectralEstimate& spectra, Eigen::Index i, Eigen::Index j);

struct Band {
  double low = 0.0;
  double high = 0.5;
};

// -(1/2pi) * integral over the band of log(1 - coh), trapezoidal rule over the
// grid points inside the band. The band edges are included as extra nodes
// whose values are interpolated linearly between neighbouring grid points, or
// held constant beyond the outermost grid point.
double mutual_information(std::span<const double> coh, std::span<const double> grid, Band band);

// sqrt(1 - exp(-2 delta)), a dependence measure in [0, 1).
double mi_weight(double delta);
// Inverse of mi_weight.
double mi_from_weight(double weight);

struct WeightedNetwork {
  Eigen::MatrixXd weights;  // symmetric, zero diagonal
  double density = 1.0;

  Eigen::Index nodes() const { return weights.rows(); }
  std::size_t edge_count() const;
};

// Keeps the floor(density * n(n-1)/2) largest upper-triangle weights; equal
// weights at the cut are kept in lexicographic (i, j) order.
WeightedNetwork threshold_network(const Eigen::MatrixXd& weights, double density);

struct NetworkOptions {
  int halfwidth = 3;
  Band band{};
  double density = 0.2;
};

// Full (unthresholded) weight matrix of a recording.
Eigen::MatrixXd mutual_information_weights(const Recording& rec, const NetworkOptions& options);

WeightedNetwork mi_network(const Recording& rec, const NetworkOptions& options);

}  // namespace ndk
