#pragma once

#include "ndk/datamodel.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace ndk {

// A shared latent oscillation added to two sensors. The latent series is a
// unit-variance AR(2) resonance centred at `frequency` (cycles/sample).
struct Coupling {
  int sensor_a = 0;  // zero-based
  int sensor_b = 0;
  double strength = 1.0;
  double frequency = 0.1;
};

struct ClassTemplate {
  std::vector<double> sensor_sd;  // per-sensor scale of the independent noise
  std::vector<Coupling> couplings;
  // Per-sensor mean amplitude of the evoked waveform; empty means all 0.
  std::vector<double> evoked_mean;
};

struct SynthSpec {
  int sensors = 0;
  int timepoints = 0;
  int samples = 0;
  std::vector<ClassTemplate> classes;
  // AR(1) coefficient of the independent per-sensor noise; 0 gives white noise.
  double noise_ar = 0.9;
  // Every sensor carries a smooth evoked waveform (a half-period sine with
  // unit mean square) whose per-sample amplitude is the class mean plus
  // Gaussian scatter of this sd.
  double evoked_sd = 0.0;
  // Optional per-sample domain tags (size == samples); empty means all 1.
  std::vector<int> domains;
  // Multiplicative gain applied to every signal of a domain (default 1).
  std::map<int, double> domain_gain;
};

// Sample l gets class (l mod K) + 1. The result is a pure function of
// (spec, seed). Throws ValidationError on inconsistent dimensions.
Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed);

// A decoding benchmark: class c raises the noise scale of every sensor i with
// i mod K == c by 1.5 and couples sensors 2c and 2c + n/2 (mod n) through a
// resonance whose frequency depends on c. Noise is AR(1) with coefficient 0.99. The last `second_domain` samples are tagged
// domain 2 and scaled by a gain of 1.15.
SynthSpec benchmark_spec(int sensors, int timepoints, int samples, int classes, int second_domain = 0);

}  // namespace ndk
