#include "ndk/detrend.hpp"

#include "ndk/error.hpp"

namespace ndk {

Eigen::MatrixXd linear_detrend(const Eigen::MatrixXd& signals) {
  const Eigen::Index T = signals.cols();
  if (T < 2) throw ValidationError("linear detrend needs at least 2 time points");
  // Centred regressor makes the intercept and slope fits decouple.
  const double tbar = 0.5 * static_cast<double>(T + 1);
  Eigen::RowVectorXd tc(T);
  for (Eigen::Index t = 0; t < T; ++t) tc(t) = static_cast<double>(t + 1) - tbar;
  const double stt = tc.squaredNorm();

  Eigen::MatrixXd resid = signals.colwise() - signals.rowwise().mean();
  Eigen::VectorXd slope = (resid * tc.transpose()) / stt;
  resid -= slope * tc;
  return resid;
}

Eigen::VectorXd detrended_variance(const Recording& rec) {
  const Eigen::Index T = rec.timepoints();
  if (T < 3) throw ValidationError("detrended variance needs at least 3 time points");
  Eigen::MatrixXd resid = linear_detrend(rec.signals);
  return resid.rowwise().squaredNorm() / static_cast<double>(T - 2);
}

FeatureMatrix variance_features(const Dataset& data) {
  FeatureMatrix fm = feature_rows(data);
  const auto L = static_cast<Eigen::Index>(data.size());
  fm.values.resize(L, data.sensors());
  for (Eigen::Index l = 0; l < L; ++l) {
    fm.values.row(l) = detrended_variance(data[static_cast<std::size_t>(l)]).transpose();
  }
  for (const auto& s : data.sensor_names()) fm.column_names.push_back("var[" + s + "]");
  return fm;
}

}  // namespace ndk
