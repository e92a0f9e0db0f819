#pragma once

#include "ndk/datamodel.hpp"

namespace ndk {

// Residuals of the least-squares fit y(t) ~ a + b t on t = 1..T, per row.
Eigen::MatrixXd linear_detrend(const Eigen::MatrixXd& signals);

// Per-sensor variance of the linear-detrend residuals with denominator T - 2.
// Requires T >= 3.
Eigen::VectorXd detrended_variance(const Recording& rec);

// L x n block with columns named var[sensor_name].
FeatureMatrix variance_features(const Dataset& data);

}  // namespace ndk
