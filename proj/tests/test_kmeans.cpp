#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "msdk/core.hpp"
#include "msdk/kmeans.hpp"

using namespace msdk;

namespace {

std::vector<double> sorted_centroids_1d(const ClusterModel& model) {
  std::vector<double> out(model.centroids);
  std::sort(out.begin(), out.end());
  return out;
}

std::set<std::size_t> outlier_indices(const DetectionReport& report) {
  std::set<std::size_t> out;
  for (const Verdict& v : report.verdicts) {
    if (v.is_outlier()) out.insert(v.index);
  }
  return out;
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d) {
  Dataset data(d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : row) v = rng.normal(5.0 * rng.unit(), 1.0 + 2.0 * rng.unit());
    data.add(row);
  }
  return data;
}

bool models_identical(const ClusterModel& a, const ClusterModel& b) {
  if (a.k != b.k || a.dimension != b.dimension) return false;
  if (a.centroids != b.centroids) return false;
  if (a.assignments != b.assignments) return false;
  if (a.wcss_history != b.wcss_history) return false;
  if (a.iterations_run != b.iterations_run) return false;
  if (a.per_cluster.size() != b.per_cluster.size()) return false;
  for (std::size_t c = 0; c < a.per_cluster.size(); ++c) {
    const ClusterStats& x = a.per_cluster[c];
    const ClusterStats& y = b.per_cluster[c];
    if (x.mean_distance != y.mean_distance || x.sigma_distance != y.sigma_distance ||
        x.threshold != y.threshold || x.count != y.count) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("kmeans") {

TEST_CASE("two well-separated pairs split cleanly under any seed") {
  Dataset data = Dataset::univariate({1.0, 2.0, 10.0, 11.0});
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    ClusterModel model = fit(data, KMeansParams{.k = 2, .seed = {seed}});
    auto centroids = sorted_centroids_1d(model);
    REQUIRE(centroids.size() == 2);
    CHECK(centroids[0] == doctest::Approx(1.5));
    CHECK(centroids[1] == doctest::Approx(10.5));
    CHECK(model.assignments[0] == model.assignments[1]);
    CHECK(model.assignments[2] == model.assignments[3]);
    CHECK(model.assignments[0] != model.assignments[2]);
  }
}

TEST_CASE("k equal to one lands on the global mean") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0});
  ClusterModel model = fit(data, KMeansParams{.k = 1, .seed = {5}});
  CHECK(model.centroid(0)[0] == doctest::Approx(2.5));
  for (std::uint32_t a : model.assignments) CHECK(a == 0);
}

TEST_CASE("k equal to n puts every distinct point on its own centroid") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0});
  ClusterModel model = fit(data, KMeansParams{.k = 3, .seed = {2}});
  auto centroids = sorted_centroids_1d(model);
  CHECK(centroids == std::vector<double>{1.0, 2.0, 3.0});
  auto distances = intra_distances(model, data);
  for (double dist : distances) CHECK(dist == doctest::Approx(0.0));
  CHECK(model.wcss_history.back() == doctest::Approx(0.0));
}

TEST_CASE("intra distances measure to the assigned centroid") {
  Dataset data = Dataset::univariate({2.0, 3.0, 4.0});
  ClusterModel model = fit(data, KMeansParams{.k = 1, .seed = {0}});
  auto distances = intra_distances(model, data);
  REQUIRE(distances.size() == 3);
  CHECK(distances[0] == doctest::Approx(1.0));
  CHECK(distances[1] == doctest::Approx(0.0));
  CHECK(distances[2] == doctest::Approx(1.0));
}

TEST_CASE("cluster threshold is mean plus multiplied sigma of distances") {
  Dataset data = Dataset::univariate({2.0, 3.0, 4.0});
  ClusterModel model = fit(data, KMeansParams{.k = 1, .seed = {0}});
  auto thresholds = cluster_thresholds(model);
  REQUIRE(thresholds.size() == 1);
  // Distances {1,0,1}: mean 2/3, population sigma sqrt(2/9).
  CHECK(thresholds[0] == doctest::Approx(2.0 / 3.0 + 1.5 * std::sqrt(2.0 / 9.0)));
  CHECK(model.per_cluster[0].mean_distance == doctest::Approx(2.0 / 3.0));
  CHECK(model.per_cluster[0].sigma_distance == doctest::Approx(std::sqrt(2.0 / 9.0)));
  CHECK(model.per_cluster[0].count == 3);
}

TEST_CASE("members all at the centroid give a zero threshold") {
  Dataset data = Dataset::univariate({6.0, 6.0, 6.0});
  ClusterModel model = fit(data, KMeansParams{.k = 1, .seed = {0}});
  CHECK(cluster_thresholds(model)[0] == 0.0);
}

TEST_CASE("detect keeps a tight cluster clean") {
  Dataset data = Dataset::univariate({2.0, 3.0, 4.0});
  DetectionReport report = kmeans_detect(data, KMeansParams{.k = 1, .seed = {0}});
  CHECK(outlier_indices(report).empty());
  CHECK(report.detector == "kmeans");
  CHECK(report.params["k"] == 1);
  CHECK(report.params["seed"] == 0);
}

TEST_CASE("detect flags the member far beyond its cluster threshold") {
  // One cluster (k=1), centroid 2.0, distances {1.0, 0.9, 1.1, 3.0}:
  // mean 1.5, sigma sqrt(0.755), threshold ~2.803 < 3.0.
  Dataset data = Dataset::univariate({1.0, 1.1, 0.9, 5.0});
  DetectionReport report = kmeans_detect(data, KMeansParams{.k = 1, .seed = {3}});
  CHECK(outlier_indices(report) == std::set<std::size_t>{3});
  CHECK(report.verdicts[3].cls == PointClass::local_outlier);
  CHECK(report.verdicts[3].stage == Stage::single);
  double theta = 1.5 + 1.5 * std::sqrt(0.755);
  CHECK(report.verdicts[3].score == doctest::Approx(3.0 / theta));
}

TEST_CASE("a singleton cluster has zero threshold and cannot flag itself") {
  // The far point lands alone in its cluster: distance 0, threshold 0, and
  // the strict comparison keeps it normal. The tight cluster stays within
  // its own threshold, so the report is empty.
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0, 5.0, 100.0});
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    DetectionReport report = kmeans_detect(data, KMeansParams{.k = 2, .seed = {seed}});
    CHECK(outlier_indices(report).empty());
  }
}

TEST_CASE("flagging matches a recomputed threshold oracle") {
  Rng rng(RngSeed{17});
  for (int trial = 0; trial < 10; ++trial) {
    Dataset data = random_dataset(rng, 80, 1);
    KMeansParams params{.k = 2, .seed = {static_cast<std::uint64_t>(trial)}};
    ClusterModel model = fit(data, params);
    auto distances = intra_distances(model, data);
    DetectionReport report = kmeans_detect(data, params);
    for (std::size_t row = 0; row < data.size(); ++row) {
      bool expect = distances[row] > model.per_cluster[model.assignments[row]].threshold;
      CHECK(report.verdicts[row].is_outlier() == expect);
    }
  }
}

TEST_CASE("wcss never increases across assignment passes") {
  Rng rng(RngSeed{23});
  for (std::size_t k : {1UL, 2UL, 5UL}) {
    for (int trial = 0; trial < 8; ++trial) {
      Dataset data = random_dataset(rng, 200, 2);
      ClusterModel model = fit(data, KMeansParams{.k = k, .seed = {rng.next()}});
      REQUIRE(!model.wcss_history.empty());
      for (std::size_t i = 1; i < model.wcss_history.size(); ++i) {
        CHECK(model.wcss_history[i] <= model.wcss_history[i - 1]);
      }
      CHECK(model.iterations_run <= 300);
    }
  }
}

TEST_CASE("converged centroids are their members' means") {
  Rng rng(RngSeed{29});
  Dataset data = random_dataset(rng, 150, 2);
  ClusterModel model = fit(data, KMeansParams{.k = 3, .seed = {7}});
  std::vector<double> sums(model.k * 2, 0.0);
  std::vector<std::size_t> counts(model.k, 0);
  for (std::size_t row = 0; row < data.size(); ++row) {
    auto p = data.point(row);
    std::uint32_t c = model.assignments[row];
    sums[c * 2] += p[0];
    sums[c * 2 + 1] += p[1];
    ++counts[c];
  }
  for (std::size_t c = 0; c < model.k; ++c) {
    if (counts[c] == 0) continue;
    CHECK(model.centroid(c)[0] ==
          doctest::Approx(sums[c * 2] / counts[c]).epsilon(1e-9));
    CHECK(model.centroid(c)[1] ==
          doctest::Approx(sums[c * 2 + 1] / counts[c]).epsilon(1e-9));
  }
}

TEST_CASE("every point is at least as close to its own centroid") {
  Rng rng(RngSeed{31});
  Dataset data = random_dataset(rng, 120, 2);
  ClusterModel model = fit(data, KMeansParams{.k = 4, .seed = {11}});
  for (std::size_t row = 0; row < data.size(); ++row) {
    auto p = data.point(row);
    auto sq_to = [&](std::size_t c) {
      auto ctr = model.centroid(c);
      double sq = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        double delta = p[j] - ctr[j];
        sq += delta * delta;
      }
      return sq;
    };
    double own = sq_to(model.assignments[row]);
    for (std::size_t c = 0; c < model.k; ++c) CHECK(own <= sq_to(c) + 1e-12);
  }
}

TEST_CASE("stored cluster stats match a brute-force recomputation") {
  Rng rng(RngSeed{37});
  Dataset data = random_dataset(rng, 90, 1);
  ClusterModel model = fit(data, KMeansParams{.k = 2, .seed = {13}});
  auto distances = intra_distances(model, data);
  for (std::size_t c = 0; c < model.k; ++c) {
    std::vector<double> members;
    for (std::size_t row = 0; row < data.size(); ++row) {
      if (model.assignments[row] == c) members.push_back(distances[row]);
    }
    REQUIRE(members.size() == model.per_cluster[c].count);
    if (members.empty()) continue;
    double mu = 0.0;
    for (double v : members) mu += v;
    mu /= static_cast<double>(members.size());
    double var = 0.0;
    for (double v : members) var += (v - mu) * (v - mu);
    var /= static_cast<double>(members.size());
    CHECK(model.per_cluster[c].mean_distance == doctest::Approx(mu).epsilon(1e-9));
    CHECK(model.per_cluster[c].sigma_distance ==
          doctest::Approx(std::sqrt(var)).epsilon(1e-9));
    CHECK(model.per_cluster[c].threshold ==
          doctest::Approx(mu + 1.5 * std::sqrt(var)).epsilon(1e-9));
  }
}

TEST_CASE("duplicate initial centroids trigger repair, not an empty result") {
  // Rows 0 and 1 coincide; a seed picking both as centroids empties cluster
  // one on the first pass and repair must hand it the far point.
  Dataset data = Dataset::univariate({0.0, 0.0, 10.0});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ClusterModel model = fit(data, KMeansParams{.k = 2, .seed = {seed}});
    auto centroids = sorted_centroids_1d(model);
    CHECK(centroids[0] == doctest::Approx(0.0));
    CHECK(centroids[1] == doctest::Approx(10.0));
    std::size_t nonempty = 0;
    for (const ClusterStats& stats : model.per_cluster) nonempty += stats.count > 0;
    CHECK(nonempty == 2);
    CHECK(model.assignments[0] == model.assignments[1]);
    CHECK(model.assignments[0] != model.assignments[2]);
  }
}

TEST_CASE("more clusters than distinct values still terminates consistently") {
  // Only two distinct values for k=3: one cluster may legitimately end empty
  // (WCSS is already zero), but assignments stay in range and WCSS hits 0.
  Dataset data = Dataset::univariate({0.0, 0.0, 0.0, 10.0});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ClusterModel model = fit(data, KMeansParams{.k = 3, .seed = {seed}});
    for (std::uint32_t a : model.assignments) CHECK(a < 3);
    CHECK(model.wcss_history.back() == doctest::Approx(0.0));
    CHECK(model.iterations_run <= 300);
  }
}

TEST_CASE("parallel fit is bit-identical to serial fit") {
  Rng rng(RngSeed{43});
  // Three reduction blocks, so the strided block schedule actually differs
  // between worker counts.
  Dataset data = random_dataset(rng, 20000, 2);
  KMeansParams serial{.k = 3, .seed = {19}};
  ClusterModel base = fit(data, serial);
  for (std::size_t workers : {1UL, 2UL, 4UL}) {
    KMeansParams par = serial;
    par.parallel = true;
    par.workers = workers;
    ClusterModel pmodel = fit_parallel(data, par);
    CHECK(models_identical(base, pmodel));
  }
}

TEST_CASE("parameter validation") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0});
  auto code_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;  // sentinel: no throw observed
  };
  CHECK(code_of([&] { fit(data, KMeansParams{.k = 0}); }) == ErrorCode::invalid_params);
  CHECK(code_of([&] { fit(data, KMeansParams{.k = 4}); }) == ErrorCode::insufficient_data);
  CHECK(code_of([&] { fit(Dataset::univariate({}), KMeansParams{.k = 1}); }) ==
        ErrorCode::empty_dataset);
  CHECK(code_of([&] {
          fit(data, KMeansParams{.k = 1, .seed = {0}, .max_iterations = 0});
        }) == ErrorCode::invalid_params);
  CHECK(code_of([&] {
          KMeansParams p{.k = 1};
          p.workers = 0;
          return fit_parallel(data, p);
        }) == ErrorCode::invalid_params);
}

TEST_CASE("intra_distances validates the dataset against the model") {
  Dataset data = Dataset::univariate({1.0, 2.0, 3.0, 4.0});
  ClusterModel model = fit(data, KMeansParams{.k = 2, .seed = {1}});
  Dataset wrong_rows = Dataset::univariate({1.0, 2.0});
  CHECK_THROWS_AS(intra_distances(model, wrong_rows), Error);
  Dataset wrong_dim(2);
  wrong_dim.add({1.0, 1.0});
  wrong_dim.add({2.0, 2.0});
  wrong_dim.add({3.0, 3.0});
  wrong_dim.add({4.0, 4.0});
  CHECK_THROWS_AS(intra_distances(model, wrong_dim), Error);
}

TEST_CASE("equal seeds give bit-identical models") {
  Rng rng(RngSeed{47});
  Dataset data = random_dataset(rng, 300, 1);
  ClusterModel a = fit(data, KMeansParams{.k = 3, .seed = {123}});
  ClusterModel b = fit(data, KMeansParams{.k = 3, .seed = {123}});
  CHECK(models_identical(a, b));
}

}  // TEST_SUITE("kmeans")
