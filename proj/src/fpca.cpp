#include "ndk/fpca.hpp"

#include "ndk/error.hpp"
#include "ndk/log.hpp"
#include "ndk/parallel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace ndk {
namespace {

SensorBasis fit_sensor(const Dataset& train, Eigen::Index sensor, double threshold) {
  const auto L = static_cast<Eigen::Index>(train.size());
  const Eigen::Index T = train.timepoints();

  Eigen::MatrixXd curves(L, T);
  for (Eigen::Index l = 0; l < L; ++l)
    curves.row(l) = train[static_cast<std::size_t>(l)].signals.row(sensor);

  SensorBasis out;
  out.mean = curves.colwise().mean().transpose();
  Eigen::MatrixXd centered = curves.rowwise() - out.mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(L - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("covariance eigendecomposition failed at sensor " +
                         train.sensor_names()[static_cast<std::size_t>(sensor)]);
  }
  // Eigen returns ascending order.
  Eigen::VectorXd values = eig.eigenvalues().reverse();
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  const double top = values.size() > 0 ? std::max(values(0), 0.0) : 0.0;
  const double floor = top * static_cast<double>(T) * std::numeric_limits<double>::epsilon();
  for (Eigen::Index m = 0; m < values.size(); ++m)
    if (values(m) <= floor) values(m) = 0.0;

  // Sequential sum so the cumulative FVE below reaches exactly 1 at full rank.
  double total = 0.0;
  for (Eigen::Index m = 0; m < values.size(); ++m) total += values(m);
  out.total_variance = total;
  if (!(total > 0.0)) {
    warn("fpca: sensor " + train.sensor_names()[static_cast<std::size_t>(sensor)] +
         " has zero variance across training curves; no components emitted");
    out.components.resize(0, T);
    out.variances.resize(0);
    out.fve = 1.0;
    return out;
  }

  Eigen::Index M = 0;
  double cumulative = 0.0;
  while (M < values.size()) {
    cumulative += values(M);
    ++M;
    if (cumulative >= threshold * total) break;
  }
  out.fve = cumulative / total;
  out.variances = values.head(M);
  out.components.resize(M, T);
  for (Eigen::Index m = 0; m < M; ++m) {
    Eigen::VectorXd v = vectors.col(m);
    Eigen::Index arg = 0;
    for (Eigen::Index t = 1; t < T; ++t)
      if (std::abs(v(t)) > std::abs(v(arg))) arg = t;
    if (v(arg) < 0) v = -v;
    out.components.row(m) = v.transpose();
  }
  return out;
}

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated FPCA basis file");
  return value;
}

constexpr char kBasisMagic[4] = {'N', 'D', 'K', 'F'};

}  // namespace

std::size_t FpcaBasis::feature_count() const {
  std::size_t total = 0;
  for (const auto& s : sensors) total += static_cast<std::size_t>(s.count());
  return total;
}

std::vector<std::string> FpcaBasis::column_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < sensors.size(); ++i)
    for (Eigen::Index m = 0; m < sensors[i].count(); ++m)
      names.push_back("fpc[" + sensor_names[i] + "][" + std::to_string(m + 1) + "]");
  return names;
}

FpcaBasis fit_fpca(const Dataset& train, double fve_threshold, std::size_t workers) {
  if (train.size() < 2) throw ValidationError("fpca needs at least 2 training recordings");
  if (!(fve_threshold > 0.0 && fve_threshold <= 1.0)) {
    throw ValidationError("fpca fve threshold must lie in (0, 1]");
  }
  FpcaBasis basis;
  basis.fve_threshold = fve_threshold;
  basis.sensor_names = train.sensor_names();
  basis.sensors.resize(static_cast<std::size_t>(train.sensors()));
  parallel_for(basis.sensors.size(), workers, [&](std::size_t i) {
    basis.sensors[i] = fit_sensor(train, static_cast<Eigen::Index>(i), fve_threshold);
  });
  return basis;
}

std::vector<Eigen::MatrixXd> fpc_scores(const FpcaBasis& basis, const Dataset& data) {
  if (static_cast<std::size_t>(data.sensors()) != basis.sensors.size()) {
    throw ValidationError("fpca basis has " + std::to_string(basis.sensors.size()) +
                          " sensors, data has " + std::to_string(data.sensors()));
  }
  std::vector<Eigen::MatrixXd> out(basis.sensors.size());
  const auto L = static_cast<Eigen::Index>(data.size());
  for (std::size_t i = 0; i < basis.sensors.size(); ++i) {
    const auto& sb = basis.sensors[i];
    if (!data.empty() && sb.mean.size() != data.timepoints()) {
      throw ValidationError("fpca basis has " + std::to_string(sb.mean.size()) +
                            " time points, data has " + std::to_string(data.timepoints()));
    }
    Eigen::MatrixXd centered(L, sb.mean.size());
    for (Eigen::Index l = 0; l < L; ++l)
      centered.row(l) = data[static_cast<std::size_t>(l)].signals.row(static_cast<Eigen::Index>(i)) -
                        sb.mean.transpose();
    out[i] = centered * sb.components.transpose();
  }
  return out;
}

FeatureMatrix fpca_features(const FpcaBasis& basis, const Dataset& data) {
  FeatureMatrix fm = feature_rows(data);
  auto blocks = fpc_scores(basis, data);
  fm.values.resize(static_cast<Eigen::Index>(data.size()),
                   static_cast<Eigen::Index>(basis.feature_count()));
  Eigen::Index col = 0;
  for (const auto& b : blocks) {
    fm.values.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  fm.column_names = basis.column_names();
  return fm;
}

void save_basis(const FpcaBasis& basis, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write basis file " + path.string());
  out.write(kBasisMagic, 4);
  put<double>(out, basis.fve_threshold);
  put<std::uint64_t>(out, basis.sensors.size());
  for (std::size_t i = 0; i < basis.sensors.size(); ++i) {
    const auto& name = basis.sensor_names[i];
    const auto& s = basis.sensors[i];
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(s.mean.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(s.count()));
    put<double>(out, s.fve);
    put<double>(out, s.total_variance);
    out.write(reinterpret_cast<const char*>(s.mean.data()),
              static_cast<std::streamsize>(s.mean.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.variances.data()),
              static_cast<std::streamsize>(s.variances.size() * sizeof(double)));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> c = s.components;
    out.write(reinterpret_cast<const char*>(c.data()),
              static_cast<std::streamsize>(c.size() * sizeof(double)));
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

FpcaBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open basis file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kBasisMagic, 4) != 0) {
    throw ValidationError(path.string() + ": not an FPCA basis file");
  }
  FpcaBasis basis;
  basis.fve_threshold = get<double>(in);
  const auto n = get<std::uint64_t>(in);
  if (n > (1u << 20)) throw ValidationError("implausible sensor count in basis file");
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = get<std::uint64_t>(in);
    if (len > 4096) throw ValidationError("implausible sensor name in basis file");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    const auto T = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    const auto M = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    if (T > (1 << 26) || M > T) throw ValidationError("implausible basis dimensions");
    SensorBasis s;
    s.fve = get<double>(in);
    s.total_variance = get<double>(in);
    s.mean.resize(T);
    s.variances.resize(M);
    in.read(reinterpret_cast<char*>(s.mean.data()), static_cast<std::streamsize>(T * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.variances.data()),
            static_cast<std::streamsize>(M * sizeof(double)));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> c(M, T);
    in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(M * T * sizeof(double)));
    if (!in) throw ValidationError("truncated FPCA basis file");
    s.components = c;
    basis.sensor_names.push_back(std::move(name));
    basis.sensors.push_back(std::move(s));
  }
  return basis;
}

}  // namespace ndk
