#pragma once

#include "ndk/cvharness.hpp"
#include "ndk/minet.hpp"
#include "ndk/tda.hpp"

#include <filesystem>
#include <string>

namespace ndk {

struct FeatureFlags {
  bool variance = true;
  bool fpca = true;
  bool tda = false;
  bool network = true;
};

struct PipelineConfig {
  FeatureFlags features;
  double fpca_fve = 0.9;
  TdaOptions tda;
  NetworkOptions network;
  CvPlan cv;

  void validate() const;
};

// Flat `section.key = value` text. Blank lines and lines starting with '#'
// are ignored. Every key must be present exactly once; unknown keys are
// rejected. Errors name the offending key and line.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string format_config(const PipelineConfig& config);

}  // namespace ndk
