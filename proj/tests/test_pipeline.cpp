#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "msdk/pipeline.hpp"

using namespace msdk;

namespace {

std::set<std::size_t> indices_with(const DetectionReport& report, PointClass cls) {
  std::set<std::size_t> out;
  for (const Verdict& v : report.verdicts) {
    if (v.cls == cls) out.insert(v.index);
  }
  return out;
}

Dataset random_dataset(Rng& rng, std::size_t n) {
  std::vector<double> values(n);
  for (double& v : values) v = rng.normal(20.0 * rng.unit(), 1.0 + 3.0 * rng.unit());
  return Dataset::univariate(std::move(values));
}

MsdKmeansParams default_params(std::uint64_t seed) {
  MsdKmeansParams params;
  params.msd.multiplier = 1.0;
  params.kmeans.k = 2;
  params.kmeans.seed = {seed};
  return params;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("ramp data loses its ends at stage one and nothing at stage two") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0, 5.0});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DetectionReport report = msd_kmeans_detect(data, default_params(seed));
    CHECK(indices_with(report, PointClass::global_outlier) ==
          std::set<std::size_t>{0, 4});
    CHECK(indices_with(report, PointClass::local_outlier).empty());
    CHECK(indices_with(report, PointClass::normal) == std::set<std::size_t>{1, 2, 3});
    CHECK(report.outlier_fraction == doctest::Approx(0.4));
    CHECK(report.detector == "msd-kmeans");

    // Stage tags: fence removals carry the fence stage, survivors the
    // clustering stage marker only when flagged there.
    CHECK(report.verdicts[0].stage == Stage::msd);
    CHECK(report.verdicts[4].stage == Stage::msd);
  }
}

TEST_CASE("constant data yields zero outliers at both stages") {
  Dataset data = Dataset::univariate({7.0, 7.0, 7.0, 7.0});
  DetectionReport report = msd_kmeans_detect(data, default_params(5));
  for (const Verdict& v : report.verdicts) CHECK(v.cls == PointClass::normal);
  CHECK(report.outlier_fraction == 0.0);
}

TEST_CASE("too few survivors raises with the removal count in the message") {
  // mu = 33.3, sigma = 47.1: at m = 0.5 the fence [9.8, 56.9] excludes all
  // three points, leaving no survivors for k = 2.
  Dataset data = Dataset::univariate({0.0, 0.0, 100.0});
  MsdKmeansParams params = default_params(1);
  params.msd.multiplier = 0.5;
  try {
    msd_kmeans_detect(data, params);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_survivors);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("stage one of the pipeline equals the standalone fence detector") {
  Rng rng(RngSeed{53});
  for (int trial = 0; trial < 50; ++trial) {
    Dataset data = random_dataset(rng, 40 + rng.below(160));
    MsdKmeansParams params = default_params(rng.next());
    params.msd.multiplier = 0.8 + 1.5 * rng.unit();

    DetectionReport solo = msd_detect(data, params.msd);
    std::set<std::size_t> solo_outliers;
    for (const Verdict& v : solo.verdicts) {
      if (v.is_outlier()) solo_outliers.insert(v.index);
    }
    if (data.size() - solo_outliers.size() < params.kmeans.k) continue;

    DetectionReport combined = msd_kmeans_detect(data, params);
    CHECK(indices_with(combined, PointClass::global_outlier) == solo_outliers);
  }
}

TEST_CASE("verdicts partition the index range with no class overlap") {
  Rng rng(RngSeed{59});
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 20 + rng.below(100);
    Dataset data = random_dataset(rng, n);
    DetectionReport report = msd_kmeans_detect(data, default_params(rng.next()));

    REQUIRE(report.verdicts.size() == n);
    std::set<std::size_t> seen;
    for (const Verdict& v : report.verdicts) seen.insert(v.index);
    CHECK(seen.size() == n);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == n - 1);

    auto globals = indices_with(report, PointClass::global_outlier);
    auto locals = indices_with(report, PointClass::local_outlier);
    std::vector<std::size_t> both;
    std::set_intersection(globals.begin(), globals.end(), locals.begin(), locals.end(),
                          std::back_inserter(both));
    CHECK(both.empty());
    CHECK(globals.size() + locals.size() ==
          count_classes(report).outliers());
  }
}

TEST_CASE("stage two equals the standalone cluster detector on survivors") {
  Rng rng(RngSeed{61});
  for (int trial = 0; trial < 20; ++trial) {
    Dataset data = random_dataset(rng, 120);
    MsdKmeansParams params = default_params(trial);

    MsdSplit split = msd_split(data, params.msd);
    if (split.normals.size() < params.kmeans.k) continue;
    DetectionReport survivors_only = kmeans_detect(split.normals, params.kmeans);
    std::set<std::size_t> expected;
    for (const Verdict& v : survivors_only.verdicts) {
      if (v.is_outlier()) expected.insert(v.index);
    }

    DetectionReport combined = msd_kmeans_detect(data, params);
    CHECK(indices_with(combined, PointClass::local_outlier) == expected);
  }
}

TEST_CASE("local flags carry the clustering stage and its scores") {
  // Stage one: mu = 11.6, sigma ~19.3, fence [-7.7, 30.9] removes the 50.
  // Stage two on {1, 1.1, 0.9, 5}: k=1 threshold ~2.803 flags the 5.
  Dataset data = Dataset::univariate({1.0, 1.1, 0.9, 5.0, 50.0});
  MsdKmeansParams params;
  params.msd.multiplier = 1.0;
  params.kmeans.k = 1;
  params.kmeans.seed = {4};
  DetectionReport report = msd_kmeans_detect(data, params);
  CHECK(indices_with(report, PointClass::global_outlier) == std::set<std::size_t>{4});
  CHECK(indices_with(report, PointClass::local_outlier) == std::set<std::size_t>{3});
  CHECK(report.verdicts[3].stage == Stage::kmeans);
  CHECK(report.verdicts[3].score > 1.0);
  CHECK(report.verdicts[4].stage == Stage::msd);
}

TEST_CASE("same seed gives a deterministically equal report") {
  Rng rng(RngSeed{67});
  Dataset data = random_dataset(rng, 200);
  DetectionReport a = msd_kmeans_detect(data, default_params(99));
  DetectionReport b = msd_kmeans_detect(data, default_params(99));
  CHECK(deterministic_equal(a, b));
}

TEST_CASE("breakdown counts the two stages separately") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0, 5.0});
  DetectionReport report = msd_kmeans_detect(data, default_params(0));
  StageBreakdown breakdown = stage_breakdown(report);
  CHECK(breakdown.global_outliers == 2);
  CHECK(breakdown.local_outliers == 0);
  CHECK(breakdown.total() == 2);
  CHECK_FALSE(breakdown.empty());
}

TEST_CASE("breakdown of an all-normal run is empty") {
  Dataset data = Dataset::univariate({7.0, 7.0, 7.0, 7.0});
  DetectionReport report = msd_kmeans_detect(data, default_params(0));
  CHECK(stage_breakdown(report).empty());
}

TEST_CASE("breakdown rejects single-stage reports") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0, 5.0});
  DetectionReport solo = msd_detect(data, MsdParams{1.0});
  try {
    stage_breakdown(solo);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_stage_report);
  }
}

TEST_CASE("params echo records both stages and the split sizes") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0, 5.0});
  DetectionReport report = msd_kmeans_detect(data, default_params(21));
  CHECK(report.params["pipeline"] == true);
  CHECK(report.params["msd_multiplier"] == 1.0);
  CHECK(report.params["k"] == 2);
  CHECK(report.params["seed"] == 21);
  CHECK(report.params["stage_one_removed"] == 2);
  CHECK(report.params["stage_two_points"] == 3);
}

}  // TEST_SUITE("pipeline")
