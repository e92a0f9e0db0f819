#include "helpers.hpp"

#include "ndk/cvharness.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace {

// Column 0 separates the classes, column 1 is pure noise. Rows from index
// `second_from` on are tagged domain 2.
ndk::FeatureMatrix informative_and_noise(int L, int second_from, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  ndk::FeatureMatrix fm;
  fm.values.resize(L, 2);
  fm.column_names = {"signal", "noise"};
  for (int l = 0; l < L; ++l) {
    const int y = l % 2 + 1;
    fm.values(l, 0) = (y == 1 ? -1.0 : 1.0) + 0.6 * z(rng);
    fm.values(l, 1) = z(rng);
    fm.labels.push_back(y);
    fm.sample_ids.push_back("x" + std::to_string(l));
    fm.domain_tags.push_back(l >= second_from ? 2 : 1);
  }
  return fm;
}

ndk::CvPlan small_plan() {
  ndk::CvPlan plan;
  plan.alpha_grid = {0.0, 1.0};
  plan.outer_folds = 4;
  plan.holdout_per_fold = 5;
  plan.inner_folds = 3;
  plan.seed = 9;
  plan.lambda_path_length = 15;
  return plan;
}

}  // namespace

TEST_CASE("emphasis-domain splits") {
  const auto fm = informative_and_noise(60, 40, 1);
  auto plan = small_plan();
  plan.emphasis_domain = 2;
  for (int fold = 0; fold < 4; ++fold) {
    const auto s = ndk::outer_split(fm, plan, 0, fold);
    CHECK(s.validation.size() == 15);
    CHECK(s.train.size() == 45);
    for (std::size_t r : s.validation) CHECK(fm.domain_tags[r] == 2);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (std::size_t r : s.validation) CHECK(all.insert(r).second);
    CHECK(all.size() == 60);
  }
  CHECK(ndk::outer_split(fm, plan, 0, 1).validation != ndk::outer_split(fm, plan, 0, 2).validation);
  CHECK(ndk::outer_split(fm, plan, 1, 3).validation == ndk::outer_split(fm, plan, 1, 3).validation);

  plan.holdout_per_fold = 11;
  CHECK_THROWS_AS((void)ndk::outer_split(fm, plan, 0, 0), ndk::ValidationError);
}

TEST_CASE("plain k-fold partitions the labelled rows") {
  auto fm = informative_and_noise(30, 30, 2);
  fm.labels[7] = std::nullopt;
  const auto plan = small_plan();
  std::multiset<std::size_t> seen;
  for (int fold = 0; fold < plan.outer_folds; ++fold) {
    const auto s = ndk::outer_split(fm, plan, 0, fold);
    CHECK(s.train.size() + s.validation.size() == 29);
    seen.insert(s.validation.begin(), s.validation.end());
  }
  CHECK(seen.size() == 29);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 29);
  CHECK(seen.count(7) == 0);
}

TEST_CASE("a single outer fold is one holdout split") {
  const auto fm = informative_and_noise(30, 30, 3);
  auto plan = small_plan();
  plan.outer_folds = 1;
  plan.alpha_grid = {0.5};
  const auto result = ndk::nested_cv(fm, plan);
  REQUIRE(result.folds.size() == 1);
  CHECK(result.folds[0].validation_rows.size() == 5);
  CHECK(result.best_alpha == 0.5);
  CHECK(result.best_lambda > 0);
}

TEST_CASE("informative feature wins and the noise feature is dropped by the lasso") {
  const auto fm = informative_and_noise(80, 60, 4);
  auto plan = small_plan();
  plan.emphasis_domain = 2;
  const auto result = ndk::nested_cv(fm, plan, 2);
  for (double e : result.alpha_error) {
    CHECK(e >= 0.0);
    CHECK(e <= 0.5);  // null rate for two balanced classes
  }
  CHECK(result.folds.size() == 8);

  // at alpha = 1 the lasso should leave the noise column out once lambda is
  // above its null score
  const auto model = ndk::fit(fm, {result.best_alpha, result.best_lambda, 15, true});
  if (result.best_alpha == 1.0 && result.best_lambda > 0.05) CHECK(model.coefficients.col(1).isZero());
  CAPTURE(result.best_alpha);
  CAPTURE(result.best_lambda);
  CHECK(ndk::evaluate(model, fm).accuracy > 0.8);
}

TEST_CASE("same seed, same result; worker count does not matter") {
  const auto fm = informative_and_noise(40, 40, 5);
  const auto plan = small_plan();
  const auto a = ndk::nested_cv(fm, plan, 1);
  const auto b = ndk::nested_cv(fm, plan, 3);
  CHECK(a.best_alpha == b.best_alpha);
  CHECK(a.best_lambda == b.best_lambda);
  CHECK(a.alpha_error == b.alpha_error);
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    CHECK(a.folds[i].validation_rows == b.folds[i].validation_rows);
    CHECK(a.folds[i].lambda == b.folds[i].lambda);
  }
}

TEST_CASE("fold audit only names samples of the feature matrix") {
  testing::TempDir dir("audit");
  const auto fm = informative_and_noise(30, 20, 6);
  auto plan = small_plan();
  plan.emphasis_domain = 2;
  const auto result = ndk::nested_cv(fm, plan);
  ndk::write_fold_audit(result, fm, dir / "folds.csv");
  ndk::write_error_table(result, dir / "errors.csv");
  std::ifstream in(dir / "folds.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "alpha,fold,role,sample_id");
  const std::set<std::string> known(fm.sample_ids.begin(), fm.sample_ids.end());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(known.count(line.substr(line.rfind(',') + 1)) == 1);
    ++rows;
  }
  CHECK(rows == 2 * 4 * 30);
  const auto errors = testing::slurp(dir / "errors.csv");
  CHECK(errors.rfind("alpha,fold,lambda,epsilon\n", 0) == 0);
  CHECK(std::count(errors.begin(), errors.end(), '\n') == 9);
}

TEST_CASE("evaluation tallies") {
  const std::vector<int> truth{1, 2, 3, 3, 2, 1, 1};
  auto perfect = ndk::evaluate_predictions(truth, truth, 3);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.confusion == Eigen::Matrix3i{{3, 0, 0}, {0, 2, 0}, {0, 0, 2}});

  const std::vector<int> constant(truth.size(), 3);
  auto flat = ndk::evaluate_predictions(constant, truth, 3);
  CHECK(flat.accuracy == doctest::Approx(2.0 / 7));
  CHECK(flat.confusion.row(2).sum() == 7);
  CHECK(flat.confusion.topRows(2).sum() == 0);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cls(1, 4);
  std::vector<int> p, t;
  for (int i = 0; i < 500; ++i) {
    p.push_back(cls(rng));
    t.push_back(cls(rng));
  }
  const auto e = ndk::evaluate_predictions(p, t, 4);
  int hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hits += p[i] == t[i];
  CHECK(e.accuracy == doctest::Approx(hits / 500.0));
  CHECK(e.confusion.sum() == 500);
  CHECK(e.confusion(p[0] - 1, t[0] - 1) > 0);

  testing::TempDir dir("confusion");
  ndk::write_confusion_csv(e, dir / "c.csv");
  std::istringstream text(testing::slurp(dir / "c.csv"));
  std::string first;
  std::getline(text, first);
  CHECK(first.rfind("accuracy,", 0) == 0);

  CHECK_THROWS_AS((void)ndk::evaluate_predictions(std::vector<int>{5}, std::vector<int>{1}, 4), ndk::ValidationError);
}

TEST_CASE("plan validation") {
  auto plan = small_plan();
  plan.alpha_grid = {};
  CHECK_THROWS_AS(plan.validate(), ndk::ValidationError);
  plan = small_plan();
  plan.alpha_grid = {1.2};
  CHECK_THROWS_AS(plan.validate(), ndk::ValidationError);
  plan = small_plan();
  plan.inner_folds = 1;
  CHECK_THROWS_AS(plan.validate(), ndk::ValidationError);
  plan = small_plan();
  plan.outer_folds = 0;
  CHECK_THROWS_AS(plan.validate(), ndk::ValidationError);
}
