#include "ndk/cvharness.hpp"

#include "ndk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace ndk {
namespace {

constexpr int kMaxRetries = 10;
constexpr std::uint64_t kFinalStream = ~std::uint64_t{0};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t retry,
                         std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(retry), tag};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> labelled_rows(const FeatureMatrix& f) {
  std::vector<std::size_t> rows;
  for (std::size_t l = 0; l < f.labels.size(); ++l)
    if (f.labels[l]) rows.push_back(l);
  return rows;
}

bool has_all_classes(const FeatureMatrix& f, std::span<const std::size_t> rows, int K) {
  std::vector<bool> seen(static_cast<std::size_t>(K), false);
  int count = 0;
  for (std::size_t r : rows) {
    const auto c = static_cast<std::size_t>(*f.labels[r] - 1);
    if (!seen[c]) {
      seen[c] = true;
      ++count;
    }
  }
  return count == K;
}

Eigen::MatrixXd gather(const FeatureMatrix& f, std::span<const std::size_t> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), f.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    x.row(static_cast<Eigen::Index>(r)) = f.values.row(static_cast<Eigen::Index>(rows[r]));
  return x;
}

std::vector<int> gather_labels(const FeatureMatrix& f, std::span<const std::size_t> rows) {
  std::vector<int> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) y[r] = *f.labels[rows[r]];
  return y;
}

// Contiguous chunk `fold` of `folds` near-equal chunks of `order`.
Split chunk_split(const std::vector<std::size_t>& order, int folds, int fold) {
  const std::size_t n = order.size();
  const std::size_t lo = n * static_cast<std::size_t>(fold) / static_cast<std::size_t>(folds);
  const std::size_t hi = n * static_cast<std::size_t>(fold + 1) / static_cast<std::size_t>(folds);
  Split s;
  for (std::size_t i = 0; i < n; ++i) (i >= lo && i < hi ? s.validation : s.train).push_back(order[i]);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

double misclassification(const FitModel& model, const FeatureMatrix& f, std::span<const std::size_t> rows) {
  const auto predicted = predict_classes(model, gather(f, rows));
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (predicted[r] != *f.labels[rows[r]]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

}  // namespace

void CvPlan::validate() const {
  if (alpha_grid.empty()) throw ValidationError("cv alpha grid is empty");
  for (double a : alpha_grid)
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("cv alpha values must lie in [0, 1]");
  if (outer_folds < 1) throw ValidationError("cv outer_folds must be at least 1");
  if (inner_folds < 2) throw ValidationError("cv inner_folds must be at least 2");
  if (holdout_per_fold < 1) throw ValidationError("cv holdout_per_fold must be at least 1");
  if (lambda_path_length < 1) throw ValidationError("cv lambda_path_length must be at least 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ValidationError("cv lambda_min_ratio must lie in (0, 1)");
  }
}

Split outer_split(const FeatureMatrix& features, const CvPlan& plan, std::size_t alpha_index, int fold) {
  const int K = features.max_label();
  const auto rows = labelled_rows(features);
  if (plan.emphasis_domain) {
    std::vector<std::size_t> emphasis, rest;
    for (std::size_t r : rows)
      (features.domain_tags[r] == *plan.emphasis_domain ? emphasis : rest).push_back(r);
    const auto h = static_cast<std::size_t>(plan.holdout_per_fold);
    if (emphasis.size() < 2 * h) {
      throw ValidationError("emphasis domain " + std::to_string(*plan.emphasis_domain) + " has " +
                            std::to_string(emphasis.size()) + " labelled samples, need at least " +
                            std::to_string(2 * h));
    }
    for (int retry = 0; retry <= kMaxRetries; ++retry) {
      auto rng = make_rng(plan.seed, alpha_index, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(retry), 1);
      std::vector<std::size_t> order = emphasis;
      std::shuffle(order.begin(), order.end(), rng);
      Split s;
      s.train = rest;
      s.train.insert(s.train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
      s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(h), order.end());
      std::sort(s.train.begin(), s.train.end());
      std::sort(s.validation.begin(), s.validation.end());
      if (has_all_classes(features, s.train, K)) return s;
    }
  } else {
    if (plan.outer_folds > 1 && rows.size() < static_cast<std::size_t>(plan.outer_folds)) {
      throw ValidationError("more outer folds than labelled samples");
    }
    for (int retry = 0; retry <= kMaxRetries; ++retry) {
      // One permutation per (alpha, retry); fold j is its j-th chunk.
      auto rng = make_rng(plan.seed, alpha_index, 0, static_cast<std::uint64_t>(retry), 2);
      std::vector<std::size_t> order = rows;
      std::shuffle(order.begin(), order.end(), rng);
      Split s;
      if (plan.outer_folds == 1) {
        const std::size_t h = std::min<std::size_t>(static_cast<std::size_t>(plan.holdout_per_fold), rows.size() / 2);
        s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
        s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(h), order.end());
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.validation.begin(), s.validation.end());
        if (has_all_classes(features, s.train, K)) return s;
        continue;
      }
      bool ok = true;
      for (int j = 0; j < plan.outer_folds && ok; ++j)
        ok = has_all_classes(features, chunk_split(order, plan.outer_folds, j).train, K);
      if (ok) return chunk_split(order, plan.outer_folds, fold);
    }
  }
  throw ValidationError("could not draw outer fold " + std::to_string(fold) + " with every class in training after " +
                        std::to_string(kMaxRetries) + " retries");
}

double select_lambda(const FeatureMatrix& features, std::span<const std::size_t> rows, double alpha,
                     const CvPlan& plan, std::uint64_t stream, const SolverOptions& options) {
  const int K = features.max_label();
  const Eigen::MatrixXd x_all = gather(features, rows);
  const auto y_all = gather_labels(features, rows);
  const double lmax = lambda_max(x_all, y_all, K, alpha);
  const auto path = lambda_sequence(lmax, plan.lambda_path_length, plan.lambda_min_ratio);
  if (rows.size() < static_cast<std::size_t>(plan.inner_folds)) {
    throw ValidationError("fewer samples than inner folds");
  }

  std::vector<std::size_t> order;
  for (int retry = 0;; ++retry) {
    if (retry > kMaxRetries) {
      throw ValidationError("could not draw inner folds with every class in training after " +
                            std::to_string(kMaxRetries) + " retries");
    }
    auto rng = make_rng(plan.seed, stream, 0, static_cast<std::uint64_t>(retry), 3);
    order.assign(rows.begin(), rows.end());
    std::shuffle(order.begin(), order.end(), rng);
    bool ok = true;
    for (int j = 0; j < plan.inner_folds && ok; ++j)
      ok = has_all_classes(features, chunk_split(order, plan.inner_folds, j).train, K);
    if (ok) break;
  }

  // Like the path fits, the grid ends where the shortest fold path stopped.
  SolverOptions fold_options = options;
  fold_options.early_stop = true;
  std::size_t usable = path.size();
  std::vector<double> deviance(path.size(), 0.0);
  for (int j = 0; j < plan.inner_folds; ++j) {
    const Split s = chunk_split(order, plan.inner_folds, j);
    const auto models = fit_path(gather(features, s.train), gather_labels(features, s.train), K, alpha,
                                 std::span(path).first(usable), true, fold_options);
    usable = std::min(usable, models.size());
    const Eigen::MatrixXd xv = gather(features, s.validation);
    for (std::size_t p = 0; p < usable; ++p) {
      const Eigen::MatrixXd prob = predict_probabilities(models[p], xv);
      for (std::size_t r = 0; r < s.validation.size(); ++r) {
        const double py = prob(static_cast<Eigen::Index>(r), *features.labels[s.validation[r]] - 1);
        deviance[p] -= 2.0 * std::log(std::max(py, 1e-300));
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t p = 1; p < usable; ++p)
    if (deviance[p] < deviance[best]) best = p;
  return path[best];
}

CvResult nested_cv(const FeatureMatrix& features, const CvPlan& plan, std::size_t workers,
                   const SolverOptions& options) {
  plan.validate();
  features.validate();
  const int K = features.max_label();
  if (K < 2) throw ValidationError("nested CV needs labelled samples from at least 2 classes");
  const std::size_t A = plan.alpha_grid.size();
  const auto F = static_cast<std::size_t>(plan.outer_folds);

  CvResult result;
  result.folds.resize(A * F);
  parallel_for(A * F, workers, [&](std::size_t task) {
    const std::size_t a = task / F;
    const int j = static_cast<int>(task % F);
    FoldRecord rec;
    rec.alpha_index = a;
    rec.fold = j;
    rec.alpha = plan.alpha_grid[a];
    Split s = outer_split(features, plan, a, j);
    rec.lambda = select_lambda(features, s.train, rec.alpha, plan, (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(j), options);
    const Eigen::MatrixXd xt = gather(features, s.train);
    const auto yt = gather_labels(features, s.train);
    const double lmax = lambda_max(xt, yt, K, rec.alpha);
    auto path = lambda_sequence(lmax, plan.lambda_path_length, plan.lambda_min_ratio);
    // Same path as the inner CV, truncated at the chosen value.
    std::vector<double> prefix;
    for (double l : path) {
      prefix.push_back(l);
      if (l <= rec.lambda) break;
    }
    prefix.back() = rec.lambda;
    const auto models = fit_path(xt, yt, K, rec.alpha, prefix, true, options);
    rec.epsilon = misclassification(models.back(), features, s.validation);
    rec.train_rows = std::move(s.train);
    rec.validation_rows = std::move(s.validation);
    result.folds[task] = std::move(rec);
  });

  result.alpha_error.assign(A, 0.0);
  for (const auto& rec : result.folds) result.alpha_error[rec.alpha_index] += rec.epsilon;
  for (double& e : result.alpha_error) e /= static_cast<double>(F);
  std::size_t best = 0;
  for (std::size_t a = 1; a < A; ++a) {
    const bool better = result.alpha_error[a] < result.alpha_error[best] ||
                        (result.alpha_error[a] == result.alpha_error[best] &&
                         plan.alpha_grid[a] < plan.alpha_grid[best]);
    if (better) best = a;
  }
  result.best_alpha = plan.alpha_grid[best];
  const auto rows = labelled_rows(features);
  result.best_lambda = select_lambda(features, rows, result.best_alpha, plan, kFinalStream, options);
  return result;
}

Evaluation evaluate_predictions(std::span<const int> predicted, std::span<const int> truth, int class_count) {
  if (predicted.size() != truth.size()) throw ValidationError("prediction and label counts differ");
  if (truth.empty()) throw ValidationError("nothing to evaluate");
  Evaluation e;
  e.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  for (std::size_t l = 0; l < truth.size(); ++l) {
    if (predicted[l] < 1 || predicted[l] > class_count || truth[l] < 1 || truth[l] > class_count) {
      throw ValidationError("class index outside 1.." + std::to_string(class_count));
    }
    ++e.confusion(predicted[l] - 1, truth[l] - 1);
  }
  e.accuracy = static_cast<double>(e.confusion.trace()) / static_cast<double>(truth.size());
  return e;
}

Evaluation evaluate(const FitModel& model, const FeatureMatrix& test) {
  std::vector<int> truth;
  truth.reserve(test.labels.size());
  for (std::size_t l = 0; l < test.labels.size(); ++l) {
    if (!test.labels[l]) throw ValidationError("sample " + test.sample_ids[l] + " has no label");
    truth.push_back(*test.labels[l]);
  }
  return evaluate_predictions(predict(model, test), truth, model.class_count());
}

void write_error_table(const CvResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "alpha,fold,lambda,epsilon\n";
  for (const auto& rec : result.folds) {
    out << format_double(rec.alpha) << ',' << (rec.fold + 1) << ',' << format_double(rec.lambda) << ','
        << format_double(rec.epsilon) << '\n';
  }
}

void write_fold_audit(const CvResult& result, const FeatureMatrix& features, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "alpha,fold,role,sample_id\n";
  for (const auto& rec : result.folds) {
    for (std::size_t r : rec.train_rows)
      out << format_double(rec.alpha) << ',' << (rec.fold + 1) << ",train," << features.sample_ids[r] << '\n';
    for (std::size_t r : rec.validation_rows)
      out << format_double(rec.alpha) << ',' << (rec.fold + 1) << ",validation," << features.sample_ids[r] << '\n';
  }
}

void write_confusion_csv(const Evaluation& evaluation, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  const auto K = evaluation.confusion.rows();
  out << "accuracy," << format_double(evaluation.accuracy) << '\n';
  out << "predicted\\true";
  for (Eigen::Index k = 0; k < K; ++k) out << ',' << (k + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < K; ++i) {
    out << (i + 1);
    for (Eigen::Index k = 0; k < K; ++k) out << ',' << evaluation.confusion(i, k);
    out << '\n';
  }
}

}  // namespace ndk
