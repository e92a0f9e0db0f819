#include "helpers.hpp"

#include "ndk/config.hpp"
#include "ndk/error.hpp"

#include <doctest.h>

#include <regex>

namespace {

const std::string kBase = R"(features.variance = true
features.fpca = true
features.tda = false
features.network = true
fpca.fve = 0.9
tda.max_dim = 2
tda.max_filtration = 1
network.density = 0.2
network.halfwidth = 3
network.band_low = 0
network.band_high = 0.5
cv.alpha_grid = 0, 0.5, 1
cv.outer_folds = 20
cv.holdout_per_fold = 25
cv.inner_folds = 5
cv.seed = 7
cv.emphasis_domain = 2
cv.lambda_path_length = 50
cv.lambda_min_ratio = 0.001
)";

std::string without(const std::string& key) {
  return std::regex_replace(kBase, std::regex(key + " = [^\n]*\n"), "");
}

std::string error_of(const std::string& text) {
  try {
    (void)ndk::parse_config(text);
  } catch (const ndk::ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse a complete config") {
  const auto c = ndk::parse_config("# comment\n\n" + kBase);
  CHECK(c.features.fpca);
  CHECK_FALSE(c.features.tda);
  CHECK(c.cv.alpha_grid == std::vector<double>{0, 0.5, 1});
  CHECK(c.cv.emphasis_domain == 2);
  CHECK(c.cv.seed == 7);
  CHECK(c.network.band.high == 0.5);
}

TEST_CASE("format_config round-trips") {
  const auto c = ndk::parse_config(kBase);
  const auto again = ndk::parse_config(ndk::format_config(c));
  CHECK(ndk::format_config(again) == ndk::format_config(c));
  CHECK(again.cv.alpha_grid == c.cv.alpha_grid);
}

TEST_CASE("the shipped config parses") {
  const auto c = ndk::load_config(std::filesystem::path(NDK_SOURCE_DIR) / "docs" / "decoding.cfg");
  CHECK(c.cv.alpha_grid.size() == 11);
  CHECK(c.cv.outer_folds == 200);
}

TEST_CASE("missing key is named") {
  CHECK(error_of(without("network.density")).find("network.density") != std::string::npos);
  CHECK(error_of(without("cv.seed")).find("cv.seed") != std::string::npos);
}

TEST_CASE("unknown, duplicate and malformed lines") {
  CHECK(error_of(kBase + "cv.colour = blue\n").find("cv.colour") != std::string::npos);
  CHECK(error_of(kBase + "cv.seed = 3\n").find("duplicate") != std::string::npos);
  CHECK(error_of(kBase + "no equals sign\n").find("line 20") != std::string::npos);
  CHECK(error_of(std::regex_replace(kBase, std::regex("cv.seed = 7"), "cv.seed = seven")).find("cv.seed") !=
        std::string::npos);
}

TEST_CASE("range checks") {
  CHECK_FALSE(error_of(std::regex_replace(kBase, std::regex("fpca.fve = 0.9"), "fpca.fve = 1.5")).empty());
  CHECK_FALSE(error_of(std::regex_replace(kBase, std::regex("network.band_high = 0.5"), "network.band_high = 0.7")).empty());
  CHECK_FALSE(error_of(std::regex_replace(kBase, std::regex("cv.inner_folds = 5"), "cv.inner_folds = 1")).empty());
  const std::string none = std::regex_replace(
      std::regex_replace(std::regex_replace(kBase, std::regex("variance = true"), "variance = false"),
                         std::regex("fpca = true"), "fpca = false"),
      std::regex("network = true"), "network = false");
  CHECK(error_of(none).find("no feature family") != std::string::npos);
  const auto c = ndk::parse_config(std::regex_replace(kBase, std::regex("emphasis_domain = 2"), "emphasis_domain = none"));
  CHECK_FALSE(c.cv.emphasis_domain.has_value());
}
