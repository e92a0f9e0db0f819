#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ndk {

// One multichannel recording: rows are sensors, columns are time points.
// Time is the integer grid 1..T; no formula in this library depends on the
// physical sampling rate.
struct Recording {
  Eigen::MatrixXd signals;
  std::string sample_id;
  std::optional<int> label;  // class index in 1..K
  int domain_tag = 1;        // recording session, e.g. day 1 / day 2

  Eigen::Index sensors() const { return signals.rows(); }
  Eigen::Index timepoints() const { return signals.cols(); }
};

// An immutable, validated collection of recordings sharing one sensor layout.
class Dataset {
 public:
  Dataset() = default;

  // Throws ValidationError when any invariant fails (shape, finiteness,
  // unique ids, label range).
  Dataset(std::vector<Recording> recordings, int class_count,
          std::vector<std::string> sensor_names);

  const std::vector<Recording>& recordings() const { return recordings_; }
  const Recording& operator[](std::size_t i) const { return recordings_[i]; }
  std::size_t size() const { return recordings_.size(); }
  bool empty() const { return recordings_.empty(); }

  int class_count() const { return class_count_; }
  const std::vector<std::string>& sensor_names() const { return sensor_names_; }
  Eigen::Index sensors() const { return static_cast<Eigen::Index>(sensor_names_.size()); }
  Eigen::Index timepoints() const { return timepoints_; }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset labelled() const;

 private:
  std::vector<Recording> recordings_;
  int class_count_ = 0;
  std::vector<std::string> sensor_names_;
  Eigen::Index timepoints_ = 0;
};

// L x m feature table with named columns. Rows follow the order of the
// recordings they were extracted from.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  std::vector<std::optional<int>> labels;
  std::vector<std::string> sample_ids;
  std::vector<int> domain_tags;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  // Throws ValidationError on duplicate column names, size mismatches or
  // non-finite entries.
  void validate() const;

  // Largest label present, 0 when nothing is labelled.
  int max_label() const;
};

// L x 0 feature table carrying the row metadata (ids, labels, domains) of
// `data`; feature blocks are built on top of it.
FeatureMatrix feature_rows(const Dataset& data);

// Column-wise concatenation; row metadata is taken from `left` and must match
// `right` when both carry it.
FeatureMatrix hconcat(const FeatureMatrix& left, const FeatureMatrix& right);

enum class DatasetFormat { CsvDir, PackedBinary };

// CsvDir when `path` is a directory, PackedBinary otherwise.
DatasetFormat detect_format(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  DatasetFormat format);

FeatureMatrix read_features_csv(const std::filesystem::path& path);
void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace ndk
