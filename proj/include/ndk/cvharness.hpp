#pragma once

#include "ndk/classifier.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace ndk {

struct CvPlan {
  std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  int outer_folds = 200;
  int holdout_per_fold = 25;
  int inner_folds = 5;
  std::uint64_t seed = 1;
  // Domain whose samples are split between training and validation in every
  // outer fold. Without it the outer loop is a plain k-fold partition.
  std::optional<int> emphasis_domain;
  int lambda_path_length = 50;
  double lambda_min_ratio = 1e-3;

  void validate() const;
};

struct FoldRecord {
  std::size_t alpha_index = 0;
  int fold = 0;
  double alpha = 0.0;
  double lambda = 0.0;   // chosen by the inner CV
  double epsilon = 0.0;  // validation misclassification rate
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
};

struct CvResult {
  double best_alpha = 0.0;
  double best_lambda = 0.0;
  std::vector<double> alpha_error;  // mean epsilon per grid entry
  std::vector<FoldRecord> folds;    // ordered by (alpha index, fold)
};

// Row indices of the outer training/validation split for (alpha index, fold).
// Deterministic in (plan.seed, alpha_index, fold, retry).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split outer_split(const FeatureMatrix& features, const CvPlan& plan, std::size_t alpha_index, int fold);

// Chooses lambda for one alpha by k-fold CV on the given rows: the lambda path
// comes from the rows as a whole, each fold is fit along it, and the lambda
// with the smallest mean held-out multinomial deviance wins (ties: larger).
double select_lambda(const FeatureMatrix& features, std::span<const std::size_t> rows, double alpha,
                     const CvPlan& plan, std::uint64_t stream, const SolverOptions& options = {});

// Nested cross-validation over plan.alpha_grid; only labelled rows are used.
// Every (alpha, fold) task runs on the worker pool; results are reduced in
// (alpha, fold) order.
CvResult nested_cv(const FeatureMatrix& features, const CvPlan& plan, std::size_t workers = 1,
                   const SolverOptions& options = {});

struct Evaluation {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows predicted, columns true
};

Evaluation evaluate(const FitModel& model, const FeatureMatrix& test);
Evaluation evaluate_predictions(std::span<const int> predicted, std::span<const int> truth, int class_count);

// alpha,fold,lambda,epsilon
void write_error_table(const CvResult& result, const std::filesystem::path& path);
// alpha,fold,role,sample_id
void write_fold_audit(const CvResult& result, const FeatureMatrix& features, const std::filesystem::path& path);
// accuracy line followed by the confusion matrix
void write_confusion_csv(const Evaluation& evaluation, const std::filesystem::path& path);

}  // namespace ndk
