#include "helpers.hpp"

#include "ndk/pipeline.hpp"
#include "ndk/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>

namespace {

ndk::PipelineConfig small_config() {
  ndk::PipelineConfig c;
  c.features = {true, true, true, true};
  c.cv.alpha_grid = {0.5, 1.0};
  c.cv.outer_folds = 3;
  c.cv.holdout_per_fold = 5;
  c.cv.inner_folds = 3;
  c.cv.lambda_path_length = 15;
  return c;
}

void write_config(const ndk::PipelineConfig& c, const std::filesystem::path& p) {
  testing::spit(p, ndk::format_config(c));
}

ndk::Dataset small_benchmark(int samples, std::uint64_t seed) {
  return ndk::synth_dataset(ndk::benchmark_spec(8, 32, samples, 3), seed);
}

}  // namespace

TEST_CASE("feature families add up") {
  const auto data = small_benchmark(24, 1);
  auto config = small_config();
  const auto all = ndk::extract_features(data, config);
  REQUIRE(all.basis);
  const auto fpcs = static_cast<Eigen::Index>(all.basis->feature_count());
  CHECK(all.features.cols() == 8 + fpcs + 12 + 7);
  CHECK(all.features.column_names[0] == "var[S1]");
  CHECK(all.features.column_names[static_cast<std::size_t>(8 + fpcs)] == "ph.PM0");
  CHECK(all.features.column_names.back() == "net.assort");
  all.features.validate();

  config.features = {true, false, false, false};
  const auto var_only = ndk::extract_features(data, config);
  CHECK(var_only.features.cols() == 8);
  CHECK_FALSE(var_only.basis);
}

TEST_CASE("a supplied basis is reused, not refit") {
  const auto train = small_benchmark(24, 2);
  const auto test = small_benchmark(9, 3);
  auto config = small_config();
  config.features = {false, true, false, false};
  const auto fitted = ndk::extract_features(train, config);
  const auto scored = ndk::extract_features(test, config, &*fitted.basis);
  CHECK(scored.features.column_names == fitted.features.column_names);
  CHECK(scored.features.values.isApprox(ndk::fpca_features(*fitted.basis, test).values));
}

TEST_CASE("extract is byte-reproducible and writes the basis") {
  testing::TempDir dir("extract");
  ndk::cmd_synth({8, 32, 18, 3, 6, 5, ndk::DatasetFormat::PackedBinary}, dir / "d.ndk");
  write_config(small_config(), dir / "c.cfg");
  ndk::cmd_extract(dir / "d.ndk", dir / "c.cfg", dir / "a.csv");
  ndk::cmd_extract(dir / "d.ndk", dir / "c.cfg", dir / "b.csv");
  CHECK(testing::slurp(dir / "a.csv") == testing::slurp(dir / "b.csv"));
  CHECK(std::filesystem::exists(dir / "a.basis"));
  ndk::cmd_extract(dir / "d.ndk", dir / "c.cfg", dir / "c.csv", dir / "a.basis");
  CHECK(testing::slurp(dir / "a.csv") == testing::slurp(dir / "c.csv"));
}

TEST_CASE("train, predict and evaluate on a separable toy set") {
  testing::TempDir dir("toy");
  ndk::FeatureMatrix fm;
  fm.values.resize(12, 1);
  fm.column_names = {"x"};
  for (int l = 0; l < 12; ++l) {
    fm.values(l, 0) = l < 6 ? -1.0 - l : 1.0 + l;
    fm.labels.push_back(l < 6 ? 1 : 2);
    fm.sample_ids.push_back("t" + std::to_string(l));
    fm.domain_tags.push_back(1);
  }
  ndk::write_features_csv(fm, dir / "f.csv");
  const auto model = ndk::cmd_train(dir / "f.csv", {0.5, 0.01, 20}, dir / "m.bin");
  CHECK(std::filesystem::exists(dir / "m.csv"));
  ndk::cmd_predict(dir / "m.bin", dir / "f.csv", dir / "p.csv");
  const auto e = ndk::cmd_evaluate(dir / "p.csv", dir / "f.csv", dir / "e.csv");
  CHECK(e.accuracy == 1.0);
  const auto direct = ndk::evaluate(model, fm);
  CHECK(direct.confusion == e.confusion);
  CHECK(testing::slurp(dir / "p.csv").rfind("sample_id,predicted_class,p1,p2\n", 0) == 0);
}

TEST_CASE("cv command writes its artifacts and the manifest drives training") {
  testing::TempDir dir("cv");
  ndk::cmd_synth({8, 32, 30, 3, 12, 2, ndk::DatasetFormat::PackedBinary}, dir / "d.ndk");
  auto config = small_config();
  config.features = {true, false, false, true};
  config.cv.emphasis_domain = 2;
  write_config(config, dir / "c.cfg");
  ndk::cmd_extract(dir / "d.ndk", dir / "c.cfg", dir / "f.csv");
  const auto result = ndk::cmd_cv(dir / "f.csv", dir / "c.cfg", dir / "out");
  CHECK(std::filesystem::exists(dir / "out" / "errors.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "folds.csv"));
  const auto choice = ndk::read_cv_choice(dir / "out" / "manifest.json");
  CHECK(choice.alpha == result.best_alpha);
  CHECK(choice.lambda == result.best_lambda);
  CHECK(choice.lambda_path_length == 15);
  const auto model = ndk::cmd_train(dir / "f.csv", choice, dir / "m.bin");
  CHECK(model.config.alpha == result.best_alpha);
}

TEST_CASE("diagram and network dumps") {
  testing::TempDir dir("dump");
  ndk::cmd_synth({6, 32, 4, 2, 0, 1, ndk::DatasetFormat::CsvDir}, dir / "d");
  write_config(small_config(), dir / "c.cfg");
  ndk::cmd_dump_diagrams(dir / "d", dir / "c.cfg", dir / "diag.csv", std::string("s0002"));
  std::ifstream in(dir / "diag.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "sample_id,dimension,birth,death,essential");
  while (std::getline(in, line)) CHECK(line.rfind("s0002,", 0) == 0);

  ndk::cmd_dump_network(dir / "d", dir / "c.cfg", dir / "net.csv");
  const auto text = testing::slurp(dir / "net.csv");
  CHECK(text.rfind("sample_id,sensor_a,sensor_b,mi,weight\n", 0) == 0);
  // floor(0.2 * 15) = 3 edges per recording
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 * 3);

  CHECK_THROWS_AS(ndk::cmd_dump_network(dir / "d", dir / "c.cfg", dir / "x.csv", std::string("nope")),
                  ndk::ValidationError);
}
