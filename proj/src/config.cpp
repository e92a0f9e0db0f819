#include "ndk/config.hpp"

#include "ndk/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ndk {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ValidationError("config key " + key + ": expected true or false, got '" + v + "'");
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config key " + key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const ValidationError&) {
    throw ValidationError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"features.variance", [](auto& c, auto& k, auto& v) { c.features.variance = parse_bool(k, v); }},
      {"features.fpca", [](auto& c, auto& k, auto& v) { c.features.fpca = parse_bool(k, v); }},
      {"features.tda", [](auto& c, auto& k, auto& v) { c.features.tda = parse_bool(k, v); }},
      {"features.network", [](auto& c, auto& k, auto& v) { c.features.network = parse_bool(k, v); }},
      {"fpca.fve", [](auto& c, auto& k, auto& v) { c.fpca_fve = parse_real(k, v); }},
      {"tda.max_dim", [](auto& c, auto& k, auto& v) { c.tda.max_dim = parse_int<int>(k, v); }},
      {"tda.max_filtration", [](auto& c, auto& k, auto& v) { c.tda.max_filtration = parse_real(k, v); }},
      {"network.density", [](auto& c, auto& k, auto& v) { c.network.density = parse_real(k, v); }},
      {"network.halfwidth", [](auto& c, auto& k, auto& v) { c.network.halfwidth = parse_int<int>(k, v); }},
      {"network.band_low", [](auto& c, auto& k, auto& v) { c.network.band.low = parse_real(k, v); }},
      {"network.band_high", [](auto& c, auto& k, auto& v) { c.network.band.high = parse_real(k, v); }},
      {"cv.alpha_grid",
       [](auto& c, auto& k, auto& v) {
         c.cv.alpha_grid.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.cv.alpha_grid.push_back(parse_real(k, trim(item)));
       }},
      {"cv.outer_folds", [](auto& c, auto& k, auto& v) { c.cv.outer_folds = parse_int<int>(k, v); }},
      {"cv.holdout_per_fold", [](auto& c, auto& k, auto& v) { c.cv.holdout_per_fold = parse_int<int>(k, v); }},
      {"cv.inner_folds", [](auto& c, auto& k, auto& v) { c.cv.inner_folds = parse_int<int>(k, v); }},
      {"cv.seed", [](auto& c, auto& k, auto& v) { c.cv.seed = parse_int<std::uint64_t>(k, v); }},
      {"cv.emphasis_domain",
       [](auto& c, auto& k, auto& v) {
         if (v == "none") {
           c.cv.emphasis_domain.reset();
         } else {
           c.cv.emphasis_domain = parse_int<int>(k, v);
         }
       }},
      {"cv.lambda_path_length", [](auto& c, auto& k, auto& v) { c.cv.lambda_path_length = parse_int<int>(k, v); }},
      {"cv.lambda_min_ratio", [](auto& c, auto& k, auto& v) { c.cv.lambda_min_ratio = parse_real(k, v); }},
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!features.variance && !features.fpca && !features.tda && !features.network) {
    throw ValidationError("config enables no feature family");
  }
  if (!(fpca_fve > 0.0 && fpca_fve <= 1.0)) throw ValidationError("fpca.fve must lie in (0, 1]");
  if (tda.max_dim < 0 || tda.max_dim > 2) throw ValidationError("tda.max_dim must be 0, 1 or 2");
  if (!(tda.max_filtration > 0.0)) throw ValidationError("tda.max_filtration must be positive");
  if (!(network.density > 0.0 && network.density <= 1.0)) throw ValidationError("network.density must lie in (0, 1]");
  if (network.halfwidth < 1) throw ValidationError("network.halfwidth must be at least 1");
  if (!(network.band.low >= 0.0 && network.band.high <= 0.5 && network.band.low < network.band.high)) {
    throw ValidationError("network band must satisfy 0 <= band_low < band_high <= 0.5");
  }
  cv.validate();
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ValidationError("config line " + std::to_string(number) + ": unknown key " + key);
    }
    if (!seen.insert(key).second) {
      throw ValidationError("config line " + std::to_string(number) + ": duplicate key " + key);
    }
    it->second(config, key, value);
  }
  for (const auto& [key, setter] : setters()) {
    if (!seen.count(key)) throw ValidationError("config is missing key " + key);
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const PipelineConfig& c) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::ostringstream out;
  out << "features.variance = " << b(c.features.variance) << '\n'
      << "features.fpca = " << b(c.features.fpca) << '\n'
      << "features.tda = " << b(c.features.tda) << '\n'
      << "features.network = " << b(c.features.network) << '\n'
      << "fpca.fve = " << format_double(c.fpca_fve) << '\n'
      << "tda.max_dim = " << c.tda.max_dim << '\n'
      << "tda.max_filtration = " << format_double(c.tda.max_filtration) << '\n'
      << "network.density = " << format_double(c.network.density) << '\n'
      << "network.halfwidth = " << c.network.halfwidth << '\n'
      << "network.band_low = " << format_double(c.network.band.low) << '\n'
      << "network.band_high = " << format_double(c.network.band.high) << '\n'
      << "cv.alpha_grid = ";
  for (std::size_t i = 0; i < c.cv.alpha_grid.size(); ++i)
    out << (i ? ", " : "") << format_double(c.cv.alpha_grid[i]);
  out << '\n'
      << "cv.outer_folds = " << c.cv.outer_folds << '\n'
      << "cv.holdout_per_fold = " << c.cv.holdout_per_fold << '\n'
      << "cv.inner_folds = " << c.cv.inner_folds << '\n'
      << "cv.seed = " << c.cv.seed << '\n'
      << "cv.emphasis_domain = "
      << (c.cv.emphasis_domain ? std::to_string(*c.cv.emphasis_domain) : std::string("none")) << '\n'
      << "cv.lambda_path_length = " << c.cv.lambda_path_length << '\n'
      << "cv.lambda_min_ratio = " << format_double(c.cv.lambda_min_ratio) << '\n';
  return out.str();
}

}  // namespace ndk
