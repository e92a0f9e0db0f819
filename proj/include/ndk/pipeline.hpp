#pragma once

#include "ndk/config.hpp"
#include "ndk/fpca.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace ndk {

struct Extraction {
  FeatureMatrix features;
  std::optional<FpcaBasis> basis;  // set when the fpca family is enabled
};

// Enabled feature families side by side in the order variance, fpca, tda,
// network. Without `basis` the FPCA basis is fit on the labelled recordings.
Extraction extract_features(const Dataset& data, const PipelineConfig& config,
                            const FpcaBasis* basis = nullptr, std::size_t workers = 1);

// Each command reads its inputs from disk and writes its artifacts; failures
// surface as ValidationError or NumericalError.

struct SynthOptions {
  int sensors = 20;
  int timepoints = 64;
  int samples = 100;
  int classes = 5;
  int second_domain = 0;
  std::uint64_t seed = 1;
  DatasetFormat format = DatasetFormat::PackedBinary;
};
void cmd_synth(const SynthOptions& options, const std::filesystem::path& out);

// Writes the feature CSV to `out` and, when fpca is enabled, the basis to
// `out` with extension .basis (unless `basis_in` is given).
FeatureMatrix cmd_extract(const std::filesystem::path& dataset, const std::filesystem::path& config,
                          const std::filesystem::path& out,
                          const std::optional<std::filesystem::path>& basis_in = std::nullopt,
                          std::size_t workers = 1);

// Writes errors.csv, folds.csv and manifest.json into `out_dir`.
CvResult cmd_cv(const std::filesystem::path& features, const std::filesystem::path& config,
                const std::filesystem::path& out_dir, std::size_t workers = 1);

struct TrainChoice {
  double alpha = 1.0;
  double lambda = 0.0;
  int lambda_path_length = 50;
};
// Reads best_alpha, best_lambda and the path length from a cv manifest.
TrainChoice read_cv_choice(const std::filesystem::path& manifest);

// Writes the model and a coefficient CSV next to it (extension .csv).
FitModel cmd_train(const std::filesystem::path& features, const TrainChoice& choice,
                   const std::filesystem::path& model_out);

// sample_id,predicted_class,p1..pK
void cmd_predict(const std::filesystem::path& model, const std::filesystem::path& features,
                 const std::filesystem::path& out);

// Scores a predictions file against the labels of a feature file (matched by
// sample_id) and writes accuracy plus the confusion matrix.
Evaluation cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& labels,
                        const std::filesystem::path& out);

// sample_id,dimension,birth,death,essential for every recording, or only the
// one named `sample_id`.
void cmd_dump_diagrams(const std::filesystem::path& dataset, const std::filesystem::path& config,
                       const std::filesystem::path& out, const std::optional<std::string>& sample_id = std::nullopt);

// sample_id,sensor_a,sensor_b,mi,weight for the retained edges.
void cmd_dump_network(const std::filesystem::path& dataset, const std::filesystem::path& config,
                      const std::filesystem::path& out, const std::optional<std::string>& sample_id = std::nullopt);

}  // namespace ndk
