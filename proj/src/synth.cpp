#include "ndk/synth.hpp"

#include "ndk/error.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace ndk {
namespace {

constexpr double kResonanceRadius = 0.9;
constexpr int kBurnIn = 100;

// Unit-variance AR(1) series.
Eigen::VectorXd ar1_series(int T, double phi, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(T);
  const double innovation_sd = std::sqrt(1.0 - phi * phi);
  x(0) = normal(rng);
  for (int t = 1; t < T; ++t) x(t) = phi * x(t - 1) + innovation_sd * normal(rng);
  return x;
}

// Unit-variance AR(2) resonance at `frequency` cycles/sample.
Eigen::VectorXd resonance_series(int T, double frequency, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double phi1 = 2.0 * kResonanceRadius * std::cos(2.0 * std::numbers::pi * frequency);
  const double phi2 = -kResonanceRadius * kResonanceRadius;
  const double gamma0 =
      (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1));
  const double scale = 1.0 / std::sqrt(gamma0);
  double x1 = 0.0, x2 = 0.0;
  for (int t = 0; t < kBurnIn; ++t) {
    double x = phi1 * x1 + phi2 * x2 + normal(rng);
    x2 = x1;
    x1 = x;
  }
  Eigen::VectorXd out(T);
  for (int t = 0; t < T; ++t) {
    double x = phi1 * x1 + phi2 * x2 + normal(rng);
    x2 = x1;
    x1 = x;
    out(t) = scale * x;
  }
  return out;
}

void check_spec(const SynthSpec& spec) {
  if (spec.sensors < 2 || spec.timepoints < 4 || spec.samples < 1) {
    throw ValidationError("synth spec needs sensors >= 2, timepoints >= 4, samples >= 1");
  }
  if (spec.classes.size() < 2) throw ValidationError("synth spec needs at least 2 class templates");
  if (!(spec.noise_ar >= 0.0 && spec.noise_ar < 1.0)) {
    throw ValidationError("synth noise_ar must lie in [0, 1)");
  }
  if (!(spec.evoked_sd >= 0.0)) throw ValidationError("synth evoked_sd must be non-negative");
  if (!spec.domains.empty() && spec.domains.size() != static_cast<std::size_t>(spec.samples)) {
    throw ValidationError("synth domains must have one tag per sample");
  }
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& tpl = spec.classes[c];
    const std::string ctx = "class template " + std::to_string(c + 1);
    if (tpl.sensor_sd.size() != static_cast<std::size_t>(spec.sensors)) {
      throw ValidationError(ctx + ": sensor_sd length must equal sensor count");
    }
    for (double sd : tpl.sensor_sd) {
      if (!(sd > 0.0) || !std::isfinite(sd)) throw ValidationError(ctx + ": sd must be positive");
    }
    if (!tpl.evoked_mean.empty() && tpl.evoked_mean.size() != static_cast<std::size_t>(spec.sensors)) {
      throw ValidationError(ctx + ": evoked_mean length must equal sensor count");
    }
    for (const auto& cp : tpl.couplings) {
      if (cp.sensor_a < 0 || cp.sensor_b < 0 || cp.sensor_a >= spec.sensors ||
          cp.sensor_b >= spec.sensors || cp.sensor_a == cp.sensor_b) {
        throw ValidationError(ctx + ": coupling references invalid sensors");
      }
      if (!(cp.frequency > 0.0 && cp.frequency < 0.5)) {
        throw ValidationError(ctx + ": coupling frequency must lie in (0, 0.5)");
      }
    }
  }
}

}  // namespace

Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  const int K = static_cast<int>(spec.classes.size());
  Eigen::RowVectorXd evoked(spec.timepoints);
  for (int t = 0; t < spec.timepoints; ++t)
    evoked(t) = std::sqrt(2.0) * std::sin(std::numbers::pi * (t + 0.5) / spec.timepoints);
  std::vector<Recording> recs(static_cast<std::size_t>(spec.samples));
  for (int l = 0; l < spec.samples; ++l) {
    // Each sample owns a generator derived from (seed, l) so that changing L
    // does not perturb earlier samples.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(l), 0x5eedu};
    std::mt19937_64 rng(seq);

    const int cls = l % K;
    const auto& tpl = spec.classes[static_cast<std::size_t>(cls)];
    Recording& rec = recs[static_cast<std::size_t>(l)];
    rec.signals.resize(spec.sensors, spec.timepoints);
    for (int i = 0; i < spec.sensors; ++i) {
      rec.signals.row(i) =
          tpl.sensor_sd[static_cast<std::size_t>(i)] *
          ar1_series(spec.timepoints, spec.noise_ar, rng).transpose();
    }
    std::normal_distribution<double> normal;
    for (int i = 0; i < spec.sensors; ++i) {
      const double mean = tpl.evoked_mean.empty() ? 0.0 : tpl.evoked_mean[static_cast<std::size_t>(i)];
      const double amplitude = mean + spec.evoked_sd * normal(rng);
      if (amplitude != 0.0) rec.signals.row(i) += amplitude * evoked;
    }
    for (const auto& cp : tpl.couplings) {
      Eigen::RowVectorXd latent =
          cp.strength * resonance_series(spec.timepoints, cp.frequency, rng).transpose();
      rec.signals.row(cp.sensor_a) += latent;
      rec.signals.row(cp.sensor_b) += latent;
    }
    rec.domain_tag = spec.domains.empty() ? 1 : spec.domains[static_cast<std::size_t>(l)];
    if (auto it = spec.domain_gain.find(rec.domain_tag); it != spec.domain_gain.end()) {
      rec.signals *= it->second;
    }
    rec.label = cls + 1;
    char id[32];
    std::snprintf(id, sizeof(id), "s%04d", l + 1);
    rec.sample_id = id;
  }
  std::vector<std::string> names;
  for (int i = 0; i < spec.sensors; ++i) names.push_back("S" + std::to_string(i + 1));
  return Dataset(std::move(recs), K, std::move(names));
}

SynthSpec benchmark_spec(int sensors, int timepoints, int samples, int classes, int second_domain) {
  if (classes < 2 || sensors < 2) throw ValidationError("benchmark needs at least 2 classes and 2 sensors");
  if (second_domain < 0 || second_domain > samples) {
    throw ValidationError("second-domain sample count must lie in 0..samples");
  }
  SynthSpec spec;
  spec.sensors = sensors;
  spec.noise_ar = 0.99;
  spec.timepoints = timepoints;
  spec.samples = samples;
  for (int c = 0; c < classes; ++c) {
    ClassTemplate tpl;
    tpl.sensor_sd.assign(static_cast<std::size_t>(sensors), 1.0);
    for (int i = c % sensors; i < sensors; i += classes) tpl.sensor_sd[static_cast<std::size_t>(i)] = 1.5;
    const int a = (2 * c) % sensors;
    const int b = (2 * c + sensors / 2) % sensors;
    tpl.couplings.push_back({a, b, 1.2, 0.08 + 0.06 * (c % 5)});
    spec.classes.push_back(std::move(tpl));
  }
  if (second_domain > 0) {
    spec.domains.assign(static_cast<std::size_t>(samples), 1);
    for (int l = samples - second_domain; l < samples; ++l) spec.domains[static_cast<std::size_t>(l)] = 2;
    spec.domain_gain[2] = 1.15;
  }
  return spec;
}

}  // namespace ndk
