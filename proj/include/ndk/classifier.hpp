#pragma once

#include "ndk/datamodel.hpp"
#include "ndk/error.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ndk {

struct ElasticNetConfig {
  double alpha = 1.0;   // 0 = ridge, 1 = lasso
  double lambda = 0.0;  // overall penalty strength
  int lambda_path_length = 50;
  bool standardize = true;
};

// Symmetric multinomial logistic model. Coefficients act on standardized
// features (x - mean) / sd.
struct FitModel {
  Eigen::VectorXd intercepts;    // K
  Eigen::MatrixXd coefficients;  // K x m
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_sds;
  ElasticNetConfig config;
  std::vector<std::string> column_names;

  int class_count() const { return static_cast<int>(intercepts.size()); }
  Eigen::Index feature_count() const { return coefficients.cols(); }
};

// Thrown when coordinate descent exhausts its sweep budget; carries the best
// iterate reached.
class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, FitModel best)
      : NumericalError(what), best_(std::move(best)) {}
  const FitModel& best() const { return best_; }

 private:
  FitModel best_;
};

struct SolverOptions {
  double tolerance = 1e-7;          // max coefficient change between sweeps
  long max_sweeps = 100000;         // sweeps over all class blocks, per lambda
  double lambda_min_ratio = 1e-3;   // path end relative to lambda_max
  // fit_path stops once the training deviance ratio exceeds 0.999 or gains
  // less than 1e-5 of itself between consecutive lambdas (after the fifth).
  bool early_stop = false;
};

// Per-sweep objective values of the final path point (for monotonicity checks).
struct FitTrace {
  std::vector<double> objective;
  long sweeps = 0;  // summed over the whole path
};

// Softmax class probabilities for one raw feature vector.
Eigen::VectorXd class_probabilities(const FitModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Smallest lambda at which every coefficient is zero, for labels in 1..K.
// For alpha below 1e-3 the lasso share is taken as 1e-3.
double lambda_max(const Eigen::MatrixXd& x, std::span<const int> labels, int class_count,
                  double alpha, bool standardize = true);

// Descending log-spaced sequence from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_sequence(double lambda_max, int length, double ratio);

// Fits the penalized model at every lambda of a descending sequence with warm
// starts. Labels are 1..class_count and every class must be present. With
// options.early_stop the result may be shorter than `lambdas`.
std::vector<FitModel> fit_path(const Eigen::MatrixXd& x, std::span<const int> labels,
                               int class_count, double alpha, std::span<const double> lambdas,
                               bool standardize = true, const SolverOptions& options = {},
                               FitTrace* trace = nullptr);

// Maximizes the mean log-likelihood minus
// lambda * sum_j sum_v [alpha |b_jv| + (1 - alpha) b_jv^2 / 2] (intercepts
// unpenalized), approaching config.lambda along a warm-started path of
// config.lambda_path_length points from lambda_max. With lambda = 0 the model
// is unidentifiable in symmetric form and class K is fixed as reference.
FitModel fit(const FeatureMatrix& features, const ElasticNetConfig& config,
             const SolverOptions& options = {}, FitTrace* trace = nullptr);

// Argmax of the class probabilities, ties to the smallest class (1-based).
std::vector<int> predict(const FitModel& model, const FeatureMatrix& features);
Eigen::MatrixXd predict_probabilities(const FitModel& model, const Eigen::MatrixXd& x);
std::vector<int> predict_classes(const FitModel& model, const Eigen::MatrixXd& x);

// The penalized objective being minimized (negated mean log-likelihood plus
// penalty), evaluated on raw features with the model's own standardization.
double penalized_objective(const FitModel& model, const Eigen::MatrixXd& x, std::span<const int> labels);

void save_model(const FitModel& model, const std::filesystem::path& path);
FitModel load_model(const std::filesystem::path& path);
// class,intercept,<column names...> one row per class.
void write_model_csv(const FitModel& model, const std::filesystem::path& path);

}  // namespace ndk
