#include "ndk/classifier.hpp"

#include "ndk/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace ndk {
namespace {

constexpr double kMinWeight = 1e-5;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 50;
constexpr int kHistory = 5;      // sweeps combined by each extrapolation
constexpr int kInnerPasses = 3;  // coordinate-descent passes per block update

struct Standardized {
  Eigen::MatrixXd x;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;
  std::vector<bool> constant;
};

Standardized standardize_columns(const Eigen::MatrixXd& raw, bool standardize) {
  Standardized s;
  const Eigen::Index L = raw.rows();
  const Eigen::Index m = raw.cols();
  s.means = raw.colwise().mean().transpose();
  s.sds = Eigen::VectorXd::Ones(m);
  s.constant.assign(static_cast<std::size_t>(m), false);
  s.x = raw;
  for (Eigen::Index v = 0; v < m; ++v) {
    const double sd = std::sqrt((raw.col(v).array() - s.means(v)).square().sum() / static_cast<double>(L));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(s.means(v))))) {
      s.constant[static_cast<std::size_t>(v)] = true;
      s.x.col(v).setZero();
      if (!standardize) s.means(v) = 0.0;
      continue;
    }
    if (standardize) {
      s.sds(v) = sd;
      s.x.col(v) = (raw.col(v).array() - s.means(v)) / sd;
    } else {
      s.means(v) = 0.0;
    }
  }
  return s;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// Row-wise log-sum-exp.
Eigen::VectorXd log_sum_exp(const Eigen::MatrixXd& eta) {
  const Eigen::VectorXd top = eta.rowwise().maxCoeff();
  const Eigen::ArrayXd sum = (eta.colwise() - top).array().exp().rowwise().sum();
  return top + sum.log().matrix();
}

// Proximal-Newton block coordinate descent for the symmetric multinomial
// elastic net on standardized features. One sweep visits every class block;
// each block takes a few cyclic coordinate-descent passes over the weighted
// least-squares model of the loss and is accepted through a backtracking line
// search, so the objective never increases. After each sweep the coefficients
// of every feature are shifted jointly to their penalty-minimizing offset and
// every few sweeps an Anderson extrapolation of the recent iterates is tried.
class MultinomialSolver {
 public:
  MultinomialSolver(const Standardized& data, std::span<const int> labels0, int K, double alpha,
                    const SolverOptions& options)
      : x_(data.x),
        constant_(data.constant),
        y0_(labels0.begin(), labels0.end()),
        K_(K),
        alpha_(alpha),
        options_(options),
        L_(data.x.rows()),
        m_(data.x.cols()) {
    y_ = Eigen::MatrixXd::Zero(L_, K_);
    for (Eigen::Index l = 0; l < L_; ++l) y_(l, y0_[static_cast<std::size_t>(l)]) = 1.0;
    Eigen::VectorXd share = y_.colwise().mean().transpose();
    b0_ = share.array().log().matrix();
    b0_.array() -= b0_.mean();
    beta_ = Eigen::MatrixXd::Zero(m_, K_);
    eta_ = Eigen::MatrixXd::Zero(L_, K_);
    eta_.rowwise() = b0_.transpose();
    lse_ = log_sum_exp(eta_);
  }

  void solve(double lambda, FitTrace* trace) {
    lambda_ = lambda;
    const bool reference = lambda == 0.0;
    if (reference && !reference_mode_) {
      // Penalty-free likelihood is invariant to a common shift; pin class K.
      reference_mode_ = true;
      eta_.colwise() -= eta_.col(K_ - 1);
      b0_.array() -= b0_(K_ - 1);
      for (Eigen::Index k = 0; k < K_ - 1; ++k) beta_.col(k) -= beta_.col(K_ - 1);
      beta_.col(K_ - 1).setZero();
      lse_ = log_sum_exp(eta_);
    }
    double f = loss(eta_, lse_) + penalty(beta_);
    long sweeps_here = 0;
    history_.clear();
    if (trace) trace->objective.assign(1, f);
    while (true) {
      const Eigen::VectorXd prev_b0 = b0_;
      const Eigen::MatrixXd prev_beta = beta_;
      const Eigen::Index blocks = reference ? K_ - 1 : K_;
      for (Eigen::Index k = 0; k < blocks; ++k) f = update_block(k, f);
      if (!reference) {
        f = recentre_coefficients(f);
        // Common intercept shift: the likelihood is unchanged.
        const double shift = b0_.mean();
        b0_.array() -= shift;
        eta_.array() -= shift;
        lse_.array() -= shift;
      }
      ++sweeps_;
      ++sweeps_here;
      if (trace) trace->objective.push_back(f);
      const double change = std::max((b0_ - prev_b0).cwiseAbs().maxCoeff(),
                                     m_ > 0 ? (beta_ - prev_beta).cwiseAbs().maxCoeff() : 0.0);
      if (change < options_.tolerance) break;
      if (sweeps_here >= options_.max_sweeps) {
        throw NonConvergenceError("coordinate descent did not converge within " +
                                      std::to_string(options_.max_sweeps) + " sweeps",
                                  FitModel{b0_, beta_.transpose(), {}, {}, {}, {}});
      }
      f = extrapolate(f);
    }
    if (trace) trace->sweeps = sweeps_;
  }

  double objective() const { return loss(eta_, log_sum_exp(eta_)) + penalty(beta_); }

  const Eigen::VectorXd& intercepts() const { return b0_; }
  Eigen::MatrixXd coefficients() const { return beta_.transpose(); }
  // -2 * log-likelihood of the current iterate.
  double deviance() const { return 2.0 * static_cast<double>(L_) * loss(eta_, lse_); }

 private:
  double loss(const Eigen::MatrixXd& eta, const Eigen::VectorXd& lse) const {
    double sum = lse.sum();
    for (Eigen::Index l = 0; l < L_; ++l) sum -= eta(l, y0_[static_cast<std::size_t>(l)]);
    return sum / static_cast<double>(L_);
  }

  double penalty_of(const Eigen::VectorXd& b) const {
    return lambda_ * (alpha_ * b.cwiseAbs().sum() + 0.5 * (1.0 - alpha_) * b.squaredNorm());
  }

  double penalty(const Eigen::MatrixXd& beta) const {
    double p = 0.0;
    for (Eigen::Index k = 0; k < beta.cols(); ++k) p += penalty_of(beta.col(k));
    return p;
  }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd theta(K_ + m_ * K_);
    theta.head(K_) = b0_;
    theta.tail(m_ * K_) = beta_.reshaped();
    return theta;
  }

  // Anderson extrapolation over the last kHistory sweeps; taken only when it
  // lowers the objective.
  double extrapolate(double f) {
    history_.push_back(flatten());
    if (static_cast<int>(history_.size()) <= kHistory) return f;
    Eigen::MatrixXd steps(history_[0].size(), kHistory);
    for (int i = 0; i < kHistory; ++i) {
      steps.col(i) = history_[static_cast<std::size_t>(i) + 1] - history_[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd gram = steps.transpose() * steps;
    gram.diagonal().array() += 1e-12 * gram.trace();
    const Eigen::VectorXd z = gram.ldlt().solve(Eigen::VectorXd::Ones(kHistory));
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(history_[0].size());
    const double total = z.sum();
    for (int i = 0; i < kHistory; ++i) theta += (z(i) / total) * history_[static_cast<std::size_t>(i) + 1];
    history_.clear();
    if (!theta.allFinite()) return f;

    const Eigen::VectorXd b0 = theta.head(K_);
    const Eigen::MatrixXd beta = theta.tail(m_ * K_).reshaped(m_, K_);
    Eigen::MatrixXd eta = x_ * beta;
    eta.rowwise() += b0.transpose();
    Eigen::VectorXd lse = log_sum_exp(eta);
    const double f_new = loss(eta, lse) + penalty(beta);
    if (!(f_new < f)) return f;
    b0_ = b0;
    beta_ = beta;
    eta_ = std::move(eta);
    lse_ = std::move(lse);
    return f_new;
  }

  // Adding the same c to every class's coefficient of a feature leaves the
  // likelihood unchanged; move each feature to the c with the smallest
  // penalty. Block updates cannot make this joint move on their own.
  double recentre_coefficients(double f) {
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(m_);
    std::vector<double> b(static_cast<std::size_t>(K_));
    bool any = false;
    for (Eigen::Index v = 0; v < m_; ++v) {
      if (constant_[static_cast<std::size_t>(v)]) continue;
      for (Eigen::Index k = 0; k < K_; ++k) b[static_cast<std::size_t>(k)] = beta_(v, k);
      const double c = best_shift(b);
      if (c == 0.0) continue;
      const double before = penalty_of(beta_.row(v).transpose());
      const double after = penalty_of((beta_.row(v).array() - c).matrix().transpose());
      if (!(after < before)) continue;
      beta_.row(v).array() -= c;
      shift(v) = c;
      f += after - before;
      any = true;
    }
    if (any) {
      const Eigen::VectorXd moved = x_ * shift;
      eta_.colwise() -= moved;
      lse_ -= moved;
    }
    return f;
  }

  // argmin_c alpha * sum|b_k - c| + (1 - alpha)/2 * sum (b_k - c)^2
  double best_shift(std::vector<double> b) const {
    std::sort(b.begin(), b.end());
    const double K = static_cast<double>(b.size());
    const double sum = std::accumulate(b.begin(), b.end(), 0.0);
    auto h = [&](double c) {
      double v = 0.0;
      for (double x : b) v += alpha_ * std::abs(x - c) + 0.5 * (1.0 - alpha_) * (x - c) * (x - c);
      return v;
    };
    std::vector<double> candidates(b.begin(), b.end());
    if (alpha_ < 1.0) {
      // Stationary point with i entries below c, clipped to its interval.
      for (std::size_t i = 0; i <= b.size(); ++i) {
        double c = (sum - alpha_ * (2.0 * static_cast<double>(i) - K) / (1.0 - alpha_)) / K;
        if (i > 0) c = std::max(c, b[i - 1]);
        if (i < b.size()) c = std::min(c, b[i]);
        candidates.push_back(c);
      }
    }
    double best = 0.0, best_value = h(0.0);
    for (double c : candidates) {
      const double v = h(c);
      if (v < best_value) {
        best_value = v;
        best = c;
      }
    }
    return best;
  }

  // One proximal-Newton step on class k's (intercept, coefficients).
  double update_block(Eigen::Index k, double f) {
    const double Ld = static_cast<double>(L_);
    const Eigen::ArrayXd p = (eta_.col(k) - lse_).array().exp();
    const Eigen::ArrayXd w = (p * (1.0 - p)).max(kMinWeight);
    const Eigen::ArrayXd grad_resid = y_.col(k).array() - p;  // y - p
    const Eigen::VectorXd r = (grad_resid / w).matrix();

    const Eigen::MatrixXd wx = x_.array().colwise() * w;
    Eigen::VectorXd xw2(m_);
    for (Eigen::Index v = 0; v < m_; ++v) xw2(v) = wx.col(v).dot(x_.col(v)) / Ld;
    const double wsum = w.sum() / Ld;

    double nb0 = b0_(k);
    Eigen::VectorXd nbeta = beta_.col(k);
    Eigen::VectorXd res = r;
    const double l1 = lambda_ * alpha_;
    const double l2 = lambda_ * (1.0 - alpha_);
    const double inner_tol = 0.1 * options_.tolerance;

    int passes = 0;
    auto pass = [&](bool active_only) {
      ++passes;
      const double d0 = (w * res.array()).sum() / Ld / wsum;
      nb0 += d0;
      res.array() -= d0;
      double max_delta = std::abs(d0);
      for (Eigen::Index v = 0; v < m_; ++v) {
        if (constant_[static_cast<std::size_t>(v)]) continue;
        const double old = nbeta(v);
        if (active_only && old == 0.0) continue;
        const double g = wx.col(v).dot(res) / Ld + xw2(v) * old;
        const double updated = soft_threshold(g, l1) / (xw2(v) + l2);
        if (updated != old) {
          res -= (updated - old) * x_.col(v);
          nbeta(v) = updated;
          max_delta = std::max(max_delta, std::abs(updated - old));
        }
      }
      return max_delta;
    };
    // The quadratic model is only solved roughly: later sweeps refine it.
    while (passes < kInnerPasses) {
      if (pass(false) < inner_tol) break;
      while (passes < kInnerPasses && pass(true) >= inner_tol) {
      }
    }

    const Eigen::VectorXd step_eta = r - res;  // = d_b0 + X d_beta
    const double d_b0 = nb0 - b0_(k);
    const Eigen::VectorXd d_beta = nbeta - beta_.col(k);
    const double pen_old = penalty_of(beta_.col(k));
    const double pen_rest = penalty(beta_) - pen_old;
    const double grad_dot = -(grad_resid.matrix().dot(step_eta)) / Ld;
    const double decrease = grad_dot + penalty_of(nbeta) - pen_old;

    Eigen::MatrixXd trial = eta_;
    const Eigen::VectorXd eta_k = eta_.col(k);
    double t = 1.0;
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      trial.col(k) = eta_k + t * step_eta;
      const Eigen::VectorXd cand = beta_.col(k) + t * d_beta;
      Eigen::VectorXd lse = log_sum_exp(trial);
      const double f_new = loss(trial, lse) + pen_rest + penalty_of(cand);
      if (f_new <= f + kArmijo * t * std::min(decrease, 0.0) && f_new <= f) {
        b0_(k) += t * d_b0;
        beta_.col(k) = cand;
        eta_.col(k) = trial.col(k);
        lse_ = std::move(lse);
        return f_new;
      }
    }
    return f;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<bool>& constant_;
  std::vector<int> y0_;
  Eigen::MatrixXd y_;
  Eigen::Index K_;
  double alpha_;
  SolverOptions options_;
  Eigen::Index L_, m_;
  double lambda_ = 0.0;
  bool reference_mode_ = false;
  long sweeps_ = 0;
  Eigen::VectorXd b0_;
  Eigen::MatrixXd beta_;
  Eigen::MatrixXd eta_;
  Eigen::VectorXd lse_;  // log-sum-exp of eta_ by row
  std::vector<Eigen::VectorXd> history_;  // iterates since the last extrapolation
};

std::vector<int> zero_based_labels(std::span<const int> labels, int K) {
  std::vector<int> out(labels.size());
  std::vector<bool> seen(static_cast<std::size_t>(K), false);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (labels[l] < 1 || labels[l] > K) {
      throw ValidationError("label " + std::to_string(labels[l]) + " out of range 1.." + std::to_string(K));
    }
    out[l] = labels[l] - 1;
    seen[static_cast<std::size_t>(out[l])] = true;
  }
  for (int k = 0; k < K; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) {
      throw ValidationError("class " + std::to_string(k + 1) + " has no training samples");
    }
  }
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& eta) {
  const double top = eta.maxCoeff();
  Eigen::VectorXd e = (eta.array() - top).exp().matrix();
  return e / e.sum();
}

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated model file");
  return value;
}

constexpr char kModelMagic[4] = {'N', 'D', 'K', 'M'};

}  // namespace

Eigen::VectorXd class_probabilities(const FitModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.feature_count()) {
    throw ValidationError("feature vector has length " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.feature_count()));
  }
  if (!x.allFinite()) throw ValidationError("non-finite feature value");
  const Eigen::VectorXd z = ((x - model.feature_means).array() / model.feature_sds.array()).matrix();
  return softmax(model.intercepts + model.coefficients * z);
}

double lambda_max(const Eigen::MatrixXd& x, std::span<const int> labels, int class_count, double alpha,
                  bool standardize) {
  auto y0 = zero_based_labels(labels, class_count);
  const auto s = standardize_columns(x, standardize);
  const Eigen::Index L = x.rows();
  Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(L, class_count);
  for (Eigen::Index l = 0; l < L; ++l) resid(l, y0[static_cast<std::size_t>(l)]) = 1.0;
  const Eigen::RowVectorXd share = resid.colwise().mean();
  resid.rowwise() -= share;
  const Eigen::MatrixXd g = s.x.transpose() * resid / static_cast<double>(L);
  return g.cwiseAbs().maxCoeff() / std::max(alpha, 1e-3);
}

std::vector<double> lambda_sequence(double lmax, int length, double ratio) {
  if (length < 1) throw ValidationError("lambda path length must be positive");
  std::vector<double> seq(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    seq[static_cast<std::size_t>(i)] =
        length == 1 ? lmax : lmax * std::pow(ratio, static_cast<double>(i) / (length - 1));
  }
  return seq;
}

std::vector<FitModel> fit_path(const Eigen::MatrixXd& x, std::span<const int> labels, int class_count,
                               double alpha, std::span<const double> lambdas, bool standardize,
                               const SolverOptions& options, FitTrace* trace) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (class_count < 2) throw ValidationError("need at least 2 classes");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ValidationError("feature rows and labels differ in count");
  }
  if (x.rows() < class_count) throw ValidationError("fewer samples than classes");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0)) throw ValidationError("lambda must be non-negative");
    if (i > 0 && lambdas[i] > lambdas[i - 1]) throw ValidationError("lambda sequence must be descending");
  }
  auto y0 = zero_based_labels(labels, class_count);
  const auto s = standardize_columns(x, standardize);

  MultinomialSolver solver(s, y0, class_count, alpha, options);
  std::vector<FitModel> models;
  models.reserve(lambdas.size());
  const double null_deviance = solver.deviance();
  double previous_ratio = 0.0;
  for (double lambda : lambdas) {
    try {
      solver.solve(lambda, trace);
    } catch (const NonConvergenceError& e) {
      FitModel best = e.best();
      best.feature_means = s.means;
      best.feature_sds = s.sds;
      best.config = {alpha, lambda, static_cast<int>(lambdas.size()), standardize};
      throw NonConvergenceError(e.what(), best);
    }
    FitModel model;
    model.intercepts = solver.intercepts();
    model.coefficients = solver.coefficients();
    model.feature_means = s.means;
    model.feature_sds = s.sds;
    model.config = {alpha, lambda, static_cast<int>(lambdas.size()), standardize};
    models.push_back(std::move(model));
    if (options.early_stop && null_deviance > 0.0) {
      const double ratio = 1.0 - solver.deviance() / null_deviance;
      if (ratio >= 0.999 || (models.size() >= 5 && ratio - previous_ratio < 1e-5 * ratio)) break;
      previous_ratio = ratio;
    }
  }
  return models;
}

FitModel fit(const FeatureMatrix& features, const ElasticNetConfig& config, const SolverOptions& options,
             FitTrace* trace) {
  features.validate();
  if (!(config.lambda >= 0.0)) throw ValidationError("lambda must be non-negative");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  for (std::size_t l = 0; l < features.labels.size(); ++l) {
    if (features.labels[l]) {
      rows.push_back(static_cast<Eigen::Index>(l));
      labels.push_back(*features.labels[l]);
    }
  }
  if (rows.size() < features.labels.size()) {
    warn("fit: ignoring " + std::to_string(features.labels.size() - rows.size()) + " unlabelled rows");
  }
  const int K = features.max_label();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = features.values.row(rows[r]);

  const auto s = standardize_columns(x, config.standardize);
  for (std::size_t v = 0; v < s.constant.size(); ++v) {
    if (s.constant[v]) warn("fit: dropping zero-variance feature " + features.column_names[v]);
  }

  const double lmax = lambda_max(x, labels, K, config.alpha, config.standardize);
  std::vector<double> path;
  if (config.lambda >= lmax) {
    path = {config.lambda};
  } else if (config.lambda > 0.0) {
    path = lambda_sequence(lmax, std::max(config.lambda_path_length, 2), config.lambda / lmax);
    path.back() = config.lambda;
  } else {
    path = lambda_sequence(lmax, std::max(config.lambda_path_length, 2), options.lambda_min_ratio);
    path.push_back(0.0);
  }
  auto models = fit_path(x, labels, K, config.alpha, path, config.standardize, options, trace);
  FitModel model = std::move(models.back());
  model.config = config;
  model.column_names = features.column_names;
  return model;
}

Eigen::MatrixXd predict_probabilities(const FitModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), model.class_count());
  for (Eigen::Index l = 0; l < x.rows(); ++l)
    out.row(l) = class_probabilities(model, x.row(l).transpose()).transpose();
  return out;
}

std::vector<int> predict_classes(const FitModel& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd prob = predict_probabilities(model, x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index l = 0; l < x.rows(); ++l) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < prob.cols(); ++k)
      if (prob(l, k) > prob(l, best)) best = k;
    out[static_cast<std::size_t>(l)] = static_cast<int>(best) + 1;
  }
  return out;
}

std::vector<int> predict(const FitModel& model, const FeatureMatrix& features) {
  if (features.column_names != model.column_names) {
    throw ValidationError("feature columns do not match the model's columns");
  }
  return predict_classes(model, features.values);
}

double penalized_objective(const FitModel& model, const Eigen::MatrixXd& x, std::span<const int> labels) {
  const Eigen::Index L = x.rows();
  double loss = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    const Eigen::VectorXd z =
        ((x.row(l).transpose() - model.feature_means).array() / model.feature_sds.array()).matrix();
    const Eigen::VectorXd eta = model.intercepts + model.coefficients * z;
    const double top = eta.maxCoeff();
    loss += top + std::log((eta.array() - top).exp().sum()) - eta(labels[static_cast<std::size_t>(l)] - 1);
  }
  const auto& c = model.config;
  const double pen = c.lambda * (c.alpha * model.coefficients.cwiseAbs().sum() +
                                 0.5 * (1.0 - c.alpha) * model.coefficients.squaredNorm());
  return loss / static_cast<double>(L) + pen;
}

void save_model(const FitModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write model file " + path.string());
  out.write(kModelMagic, 4);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(model.class_count()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(model.feature_count()));
  put<double>(out, model.config.alpha);
  put<double>(out, model.config.lambda);
  put<std::int64_t>(out, model.config.lambda_path_length);
  put<std::uint8_t>(out, model.config.standardize ? 1 : 0);
  auto write_block = [&](const double* data, Eigen::Index count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  };
  write_block(model.intercepts.data(), model.intercepts.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> coef = model.coefficients;
  write_block(coef.data(), coef.size());
  write_block(model.feature_means.data(), model.feature_means.size());
  write_block(model.feature_sds.data(), model.feature_sds.size());
  for (const auto& name : model.column_names) {
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

FitModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0) throw ValidationError(path.string() + ": not a model file");
  const auto K = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  const auto m = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  if (K > 100000 || m > (1 << 26)) throw ValidationError("implausible model dimensions");
  FitModel model;
  model.config.alpha = get<double>(in);
  model.config.lambda = get<double>(in);
  model.config.lambda_path_length = static_cast<int>(get<std::int64_t>(in));
  model.config.standardize = get<std::uint8_t>(in) != 0;
  auto read_block = [&](double* data, Eigen::Index count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ValidationError("truncated model file");
  };
  model.intercepts.resize(K);
  read_block(model.intercepts.data(), K);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> coef(K, m);
  read_block(coef.data(), K * m);
  model.coefficients = coef;
  model.feature_means.resize(m);
  model.feature_sds.resize(m);
  read_block(model.feature_means.data(), m);
  read_block(model.feature_sds.data(), m);
  for (Eigen::Index v = 0; v < m; ++v) {
    const auto len = get<std::uint64_t>(in);
    if (len > 4096) throw ValidationError("implausible column name length in model file");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    if (!in) throw ValidationError("truncated model file");
    model.column_names.push_back(std::move(name));
  }
  return model;
}

void write_model_csv(const FitModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "class,intercept";
  for (const auto& c : model.column_names) out << ',' << c;
  out << '\n';
  for (Eigen::Index k = 0; k < model.class_count(); ++k) {
    out << (k + 1) << ',' << format_double(model.intercepts(k));
    for (Eigen::Index v = 0; v < model.feature_count(); ++v) out << ',' << format_double(model.coefficients(k, v));
    out << '\n';
  }
}

}  // namespace ndk
