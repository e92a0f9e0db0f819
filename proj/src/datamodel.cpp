#include "ndk/datamodel.hpp"

#include "ndk/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace ndk {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "packed-binary I/O assumes a little-endian host");

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ValidationError("cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<int> parse_label(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  if (t.empty() || t == "-1" || t == "NA") return std::nullopt;
  int v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ValidationError(context + ": cannot parse label '" + t + "'");
  }
  return v;
}

int parse_int(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  int v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ValidationError(context + ": cannot parse integer '" + t + "'");
  }
  return v;
}

// ---- packed binary helpers ----

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError(std::string("truncated packed-binary file while reading ") + what);
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  auto size = get<std::uint64_t>(in, "string length");
  if (size > (1u << 20)) throw ValidationError("implausible string length in packed-binary file");
  std::string s(size, '\0');
  in.read(s.data(), static_cast<std::streamsize>(size));
  if (!in) throw ValidationError("truncated packed-binary file while reading string");
  return s;
}

constexpr char kMagic[4] = {'N', 'D', 'K', '1'};
constexpr char kTrailerMagic[4] = {'N', 'D', 'K', 'X'};

std::vector<std::string> default_sensor_names(Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("S" + std::to_string(i + 1));
  return names;
}

std::string default_sample_id(std::size_t l) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%04zu", l + 1);
  return buf;
}

Dataset load_packed(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError(path.string() + ": not a packed-binary dataset (bad magic)");
  }
  auto n = get<std::uint64_t>(in, "n");
  auto T = get<std::uint64_t>(in, "T");
  auto L = get<std::uint64_t>(in, "L");
  if (n > (1u << 20) || T > (1u << 26) || L > (1u << 26)) {
    throw ValidationError(path.string() + ": implausible dimensions in header");
  }
  std::vector<std::int64_t> labels(L);
  for (auto& v : labels) v = get<std::int64_t>(in, "labels");

  std::vector<Recording> recs(L);
  for (std::uint64_t l = 0; l < L; ++l) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(n, T);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(n * T * sizeof(double)));
    if (!in) throw ValidationError(path.string() + ": truncated signal block");
    recs[l].signals = m;
    recs[l].sample_id = default_sample_id(l);
    if (labels[l] >= 0) recs[l].label = static_cast<int>(labels[l]);
  }

  int K = 0;
  for (auto v : labels) K = std::max<int>(K, static_cast<int>(v));
  auto names = default_sensor_names(static_cast<Eigen::Index>(n));

  char tmagic[4];
  in.read(tmagic, 4);
  if (in && std::memcmp(tmagic, kTrailerMagic, 4) == 0) {
    K = static_cast<int>(get<std::int64_t>(in, "class count"));
    for (auto& r : recs) r.domain_tag = static_cast<int>(get<std::int64_t>(in, "domain tags"));
    for (auto& r : recs) r.sample_id = get_string(in);
    for (auto& s : names) s = get_string(in);
  }
  return Dataset(std::move(recs), K, std::move(names));
}

void save_packed(const Dataset& ds, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write dataset file " + path.string());
  out.write(kMagic, 4);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ds.sensors()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ds.timepoints()));
  put<std::uint64_t>(out, ds.size());
  for (const auto& r : ds.recordings()) put<std::int64_t>(out, r.label ? *r.label : -1);
  for (const auto& r : ds.recordings()) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m = r.signals;
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  // Metadata trailer; readers of the bare layout can stop before it.
  out.write(kTrailerMagic, 4);
  put<std::int64_t>(out, ds.class_count());
  for (const auto& r : ds.recordings()) put<std::int64_t>(out, r.domain_tag);
  for (const auto& r : ds.recordings()) put_string(out, r.sample_id);
  for (const auto& s : ds.sensor_names()) put_string(out, s);
  if (!out) throw ValidationError("write failed for " + path.string());
}

Dataset load_csv_dir(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.csv";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw ValidationError("missing manifest file " + manifest_path.string());

  std::string line;
  if (!std::getline(manifest, line)) throw ValidationError("empty manifest " + manifest_path.string());
  auto header = split_csv_line(line);
  if (header.size() < 3 || trim(header[0]) != "sample_id") {
    throw ValidationError(manifest_path.string() +
                          ": header must be sample_id,label,domain_tag");
  }

  std::vector<Recording> recs;
  std::vector<std::string> names;
  int K = 0;
  std::size_t manifest_row = 1;
  while (std::getline(manifest, line)) {
    ++manifest_row;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() < 3) {
      throw ValidationError(manifest_path.string() + " row " + std::to_string(manifest_row) +
                            ": expected 3 fields");
    }
    Recording rec;
    rec.sample_id = trim(cells[0]);
    const std::string ctx = "sample " + rec.sample_id;
    rec.label = parse_label(cells[1], ctx);
    rec.domain_tag = parse_int(cells[2], ctx + " domain_tag");
    if (rec.label) {
      if (*rec.label < 1) {
        throw ValidationError(ctx + ": label " + std::to_string(*rec.label) + " out of range");
      }
      K = std::max(K, *rec.label);
    }

    const fs::path file = dir / (rec.sample_id + ".csv");
    std::ifstream in(file);
    if (!in) throw ValidationError(ctx + ": missing file " + file.string());
    std::string row;
    if (!std::getline(in, row)) throw ValidationError(ctx + ": empty file " + file.string());
    auto head = split_csv_line(row);
    bool named = !head.empty() && trim(head[0]) == "sensor";
    const std::size_t T = head.size() - (named ? 1 : 0);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> row_names;
    std::size_t line_no = 1;
    while (std::getline(in, row)) {
      ++line_no;
      if (trim(row).empty()) continue;
      auto cells_row = split_csv_line(row);
      std::size_t offset = named ? 1 : 0;
      if (cells_row.size() != T + offset) {
        throw ValidationError(ctx + ": ragged matrix at line " + std::to_string(line_no) + " (" +
                              std::to_string(cells_row.size() - offset) + " values, expected " +
                              std::to_string(T) + ")");
      }
      if (named) row_names.push_back(trim(cells_row[0]));
      std::vector<double> values(T);
      for (std::size_t t = 0; t < T; ++t) {
        try {
          values[t] = parse_double(cells_row[t + offset]);
        } catch (const ValidationError&) {
          throw ValidationError(ctx + ": bad value at sensor " + std::to_string(rows.size() + 1) +
                                ", time " + std::to_string(t + 1));
        }
        if (!std::isfinite(values[t])) {
          throw ValidationError(ctx + ": non-finite value at sensor " +
                                std::to_string(rows.size() + 1) + ", time " + std::to_string(t + 1));
        }
      }
      rows.push_back(std::move(values));
    }
    rec.signals.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(T));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t t = 0; t < T; ++t)
        rec.signals(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[i][t];
    if (names.empty()) {
      names = named ? row_names : default_sensor_names(rec.signals.rows());
    }
    recs.push_back(std::move(rec));
  }
  return Dataset(std::move(recs), K, std::move(names));
}

void save_csv_dir(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw ValidationError("cannot write manifest in " + dir.string());
  manifest << "sample_id,label,domain_tag\n";
  for (const auto& r : ds.recordings()) {
    manifest << r.sample_id << ',' << (r.label ? std::to_string(*r.label) : std::string())
             << ',' << r.domain_tag << '\n';
    std::ofstream out(dir / (r.sample_id + ".csv"), std::ios::trunc);
    if (!out) throw ValidationError("cannot write recording " + r.sample_id);
    out << "sensor";
    for (Eigen::Index t = 0; t < r.timepoints(); ++t) out << ',' << (t + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < r.sensors(); ++i) {
      out << ds.sensor_names()[static_cast<std::size_t>(i)];
      for (Eigen::Index t = 0; t < r.timepoints(); ++t) out << ',' << format_double(r.signals(i, t));
      out << '\n';
    }
  }
}

}  // namespace

Dataset::Dataset(std::vector<Recording> recordings, int class_count,
                 std::vector<std::string> sensor_names)
    : recordings_(std::move(recordings)),
      class_count_(class_count),
      sensor_names_(std::move(sensor_names)) {
  if (recordings_.empty()) {
    if (class_count_ < 0) throw ValidationError("negative class count");
    return;
  }
  const Eigen::Index n = recordings_.front().sensors();
  timepoints_ = recordings_.front().timepoints();
  if (n < 2) throw ValidationError("a recording needs at least 2 sensors");
  if (timepoints_ < 4) throw ValidationError("a recording needs at least 4 time points");
  if (static_cast<Eigen::Index>(sensor_names_.size()) != n) {
    throw ValidationError("sensor name count " + std::to_string(sensor_names_.size()) +
                          " does not match " + std::to_string(n) + " sensors");
  }
  if (std::set<std::string>(sensor_names_.begin(), sensor_names_.end()).size() !=
      sensor_names_.size()) {
    throw ValidationError("sensor names are not unique");
  }
  std::unordered_set<std::string> ids;
  for (const auto& r : recordings_) {
    if (r.sensors() != n || r.timepoints() != timepoints_) {
      throw ValidationError("sample " + r.sample_id + ": shape " + std::to_string(r.sensors()) +
                            "x" + std::to_string(r.timepoints()) + " differs from " +
                            std::to_string(n) + "x" + std::to_string(timepoints_));
    }
    if (!ids.insert(r.sample_id).second) {
      throw ValidationError("duplicate sample_id " + r.sample_id);
    }
    if (r.label && (*r.label < 1 || *r.label > class_count_)) {
      throw ValidationError("sample " + r.sample_id + ": label " + std::to_string(*r.label) +
                            " out of range 1.." + std::to_string(class_count_));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index t = 0; t < timepoints_; ++t) {
        if (!std::isfinite(r.signals(i, t))) {
          throw ValidationError("sample " + r.sample_id + ": non-finite value at sensor " +
                                std::to_string(i + 1) + ", time " + std::to_string(t + 1));
        }
      }
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Recording> picked;
  picked.reserve(indices.size());
  for (auto i : indices) {
    if (i >= recordings_.size()) throw ValidationError("subset index out of range");
    picked.push_back(recordings_[i]);
  }
  return Dataset(std::move(picked), class_count_, sensor_names_);
}

Dataset Dataset::labelled() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < recordings_.size(); ++i)
    if (recordings_[i].label) idx.push_back(i);
  return subset(idx);
}

void FeatureMatrix::validate() const {
  const auto L = static_cast<std::size_t>(values.rows());
  if (column_names.size() != static_cast<std::size_t>(values.cols())) {
    throw ValidationError("feature matrix has " + std::to_string(values.cols()) + " columns but " +
                          std::to_string(column_names.size()) + " names");
  }
  if (sample_ids.size() != L || labels.size() != L || domain_tags.size() != L) {
    throw ValidationError("feature matrix row metadata does not match " + std::to_string(L) +
                          " rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : column_names) {
    if (!seen.insert(c).second) throw ValidationError("duplicate feature column " + c);
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!std::isfinite(values(r, c))) {
        throw ValidationError("non-finite feature " + column_names[static_cast<std::size_t>(c)] +
                              " for sample " + sample_ids[static_cast<std::size_t>(r)]);
      }
    }
  }
}

int FeatureMatrix::max_label() const {
  int k = 0;
  for (const auto& l : labels)
    if (l) k = std::max(k, *l);
  return k;
}

FeatureMatrix feature_rows(const Dataset& data) {
  FeatureMatrix fm;
  fm.values.resize(static_cast<Eigen::Index>(data.size()), 0);
  for (const auto& r : data.recordings()) {
    fm.sample_ids.push_back(r.sample_id);
    fm.labels.push_back(r.label);
    fm.domain_tags.push_back(r.domain_tag);
  }
  return fm;
}

FeatureMatrix hconcat(const FeatureMatrix& left, const FeatureMatrix& right) {
  if (left.cols() == 0 && left.sample_ids.empty()) return right;
  if (left.rows() != right.rows()) throw ValidationError("row count mismatch in feature concat");
  if (!right.sample_ids.empty() && right.sample_ids != left.sample_ids) {
    throw ValidationError("sample order mismatch in feature concat");
  }
  FeatureMatrix out = left;
  out.values.resize(left.rows(), left.cols() + right.cols());
  out.values << left.values, right.values;
  out.column_names.insert(out.column_names.end(), right.column_names.begin(),
                          right.column_names.end());
  return out;
}

DatasetFormat detect_format(const fs::path& path) {
  return fs::is_directory(path) ? DatasetFormat::CsvDir : DatasetFormat::PackedBinary;
}

Dataset load_dataset(const fs::path& path, DatasetFormat format) {
  if (!fs::exists(path)) throw ValidationError("dataset path does not exist: " + path.string());
  return format == DatasetFormat::CsvDir ? load_csv_dir(path) : load_packed(path);
}

void save_dataset(const Dataset& dataset, const fs::path& path, DatasetFormat format) {
  if (format == DatasetFormat::CsvDir) {
    save_csv_dir(dataset, path);
  } else {
    save_packed(dataset, path);
  }
}

FeatureMatrix read_features_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open feature file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty feature file " + path.string());
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label" ||
      header[2] != "domain_tag") {
    throw ValidationError(path.string() + ": header must start with sample_id,label,domain_tag");
  }
  FeatureMatrix fm;
  fm.column_names.assign(header.begin() + 3, header.end());
  const std::size_t m = fm.column_names.size();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != m + 3) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(m + 3) + " fields, got " + std::to_string(cells.size()));
    }
    fm.sample_ids.push_back(cells[0]);
    fm.labels.push_back(parse_label(cells[1], "sample " + cells[0]));
    fm.domain_tags.push_back(parse_int(cells[2], "sample " + cells[0]));
    std::vector<double> v(m);
    for (std::size_t c = 0; c < m; ++c) v[c] = parse_double(cells[c + 3]);
    rows.push_back(std::move(v));
  }
  fm.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < m; ++c)
      fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  fm.validate();
  return fm;
}

void write_features_csv(const FeatureMatrix& fm, const fs::path& path) {
  fm.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write feature file " + path.string());
  out << "sample_id,label,domain_tag";
  for (const auto& c : fm.column_names) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < fm.rows(); ++r) {
    const auto ur = static_cast<std::size_t>(r);
    out << fm.sample_ids[ur] << ',' << (fm.labels[ur] ? std::to_string(*fm.labels[ur]) : "")
        << ',' << fm.domain_tags[ur];
    for (Eigen::Index c = 0; c < fm.cols(); ++c) out << ',' << format_double(fm.values(r, c));
    out << '\n';
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace ndk
