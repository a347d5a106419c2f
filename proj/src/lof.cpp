#include "msdk/lof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msdk {

namespace {

constexpr double kReachFloor = 1e-12;

struct NeighborTable {
  // Per row: neighbor row ids in ascending order plus matching distances.
  // Both paths below emit this exact canonical form, so every downstream
  // sum runs in the same order regardless of which path built the table.
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::vector<std::vector<double>> distances;
  std::vector<double> k_distance;
};

double point_distance(const Dataset& data, std::size_t a, std::size_t b) {
  const double* pa = data.raw().data() + a * data.dimension();
  const double* pb = data.raw().data() + b * data.dimension();
  double sq = 0.0;
  for (std::size_t j = 0; j < data.dimension(); ++j) {
    double delta = pa[j] - pb[j];
    sq += delta * delta;
  }
  return std::sqrt(sq);
}

// Exact O(n^2) neighbor search for any dimension.
NeighborTable build_neighbors_generic(const Dataset& data, std::size_t k) {
  std::size_t n = data.size();
  NeighborTable table;
  table.neighbors.resize(n);
  table.distances.resize(n);
  table.k_distance.resize(n);
  std::vector<double> dist(n);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    scratch.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[j] = point_distance(data, i, j);
      scratch.push_back(dist[j]);
    }
    std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
    double kdist = scratch[k - 1];
    table.k_distance[i] = kdist;
    auto& ids = table.neighbors[i];
    auto& ds = table.distances[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (dist[j] <= kdist) {
        ids.push_back(static_cast<std::uint32_t>(j));
        ds.push_back(dist[j]);
      }
    }
  }
  return table;
}

// 1-D path: after sorting by value, each row's neighborhood is a contiguous
// window around it; the window is grown greedily to k members and then
// widened to take every point tied with the k-distance. Selects the same
// neighbor sets and k-distances as the generic path.
NeighborTable build_neighbors_sorted_1d(const Dataset& data, std::size_t k) {
  std::size_t n = data.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  const auto& values = data.raw();
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });

  NeighborTable table;
  table.neighbors.resize(n);
  table.distances.resize(n);
  table.k_distance.resize(n);

  for (std::size_t pos = 0; pos < n; ++pos) {
    std::size_t row = order[pos];
    double x = values[row];
    // Greedy two-pointer pick of the k smallest gaps.
    std::size_t left = pos;   // next candidate is order[left - 1]
    std::size_t right = pos;  // next candidate is order[right + 1]
    double kdist = 0.0;
    for (std::size_t taken = 0; taken < k; ++taken) {
      double left_gap = left > 0 ? std::abs(x - values[order[left - 1]])
                                 : std::numeric_limits<double>::infinity();
      double right_gap = right + 1 < n ? std::abs(x - values[order[right + 1]])
                                       : std::numeric_limits<double>::infinity();
      if (left_gap <= right_gap) {
        kdist = std::max(kdist, left_gap);
        --left;
      } else {
        kdist = std::max(kdist, right_gap);
        ++right;
      }
    }
    // Take every remaining point at exactly the k-distance.
    while (left > 0 && std::abs(x - values[order[left - 1]]) <= kdist) --left;
    while (right + 1 < n && std::abs(x - values[order[right + 1]]) <= kdist) ++right;

    table.k_distance[row] = kdist;
    auto& ids = table.neighbors[row];
    auto& ds = table.distances[row];
    for (std::size_t w = left; w <= right; ++w) {
      if (w == pos) continue;
      ids.push_back(order[w]);
    }
    std::sort(ids.begin(), ids.end());
    ds.reserve(ids.size());
    for (std::uint32_t j : ids) ds.push_back(std::abs(x - values[j]));
  }
  return table;
}

}  // namespace

std::vector<double> lof_scores(const Dataset& data, const LofParams& params) {
  std::size_t n = data.size();
  if (n == 0) {
    throw Error(ErrorCode::empty_dataset, "lof: dataset is empty");
  }
  if (params.k_neighbors < 1) {
    throw Error(ErrorCode::invalid_params, "lof: k_neighbors must be >= 1");
  }
  if (n <= params.k_neighbors) {
    throw Error(ErrorCode::insufficient_data,
                "lof: needs more than k_neighbors=" + std::to_string(params.k_neighbors) +
                    " points, got " + std::to_string(n));
  }
  std::size_t k = params.k_neighbors;
  NeighborTable table = data.dimension() == 1 ? build_neighbors_sorted_1d(data, k)
                                              : build_neighbors_generic(data, k);

  // Local reachability density: inverse mean reachability distance over the
  // neighborhood. The floor keeps coincident points finite.
  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ids = table.neighbors[i];
    const auto& ds = table.distances[i];
    double sum = 0.0;
    for (std::size_t m = 0; m < ids.size(); ++m) {
      double reach = std::max(table.k_distance[ids[m]], ds[m]);
      sum += std::max(reach, kReachFloor);
    }
    lrd[i] = static_cast<double>(ids.size()) / sum;
  }

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ids = table.neighbors[i];
    double sum = 0.0;
    for (std::uint32_t j : ids) sum += lrd[j] / lrd[i];
    scores[i] = sum / static_cast<double>(ids.size());
  }
  return scores;
}

DetectionReport lof_detect(const Dataset& data, const LofParams& params) {
  Stopwatch timer;
  std::size_t n = data.size();
  bool subsampled = params.sample_size.has_value() && *params.sample_size < n;

  std::vector<Verdict> verdicts;
  verdicts.reserve(n);
  std::size_t scored = n;
  if (subsampled) {
    scored = *params.sample_size;
    Rng rng(params.seed);
    auto rows = rng.sample_indices(n, scored);
    std::sort(rows.begin(), rows.end());
    Dataset sample = data.subset_rows(rows);
    auto scores = lof_scores(sample, params);
    std::vector<bool> in_sample(n, false);
    for (std::size_t row : rows) in_sample[row] = true;
    for (std::size_t s = 0; s < sample.size(); ++s) {
      verdicts.push_back({sample.index_of(s),
                          scores[s] > params.lof_threshold ? PointClass::local_outlier
                                                           : PointClass::normal,
                          Stage::single, scores[s]});
    }
    for (std::size_t row = 0; row < n; ++row) {
      if (in_sample[row]) continue;
      verdicts.push_back({data.index_of(row), PointClass::normal, Stage::single, 0.0});
    }
  } else {
    auto scores = lof_scores(data, params);
    for (std::size_t row = 0; row < n; ++row) {
      verdicts.push_back({data.index_of(row),
                          scores[row] > params.lof_threshold ? PointClass::local_outlier
                                                             : PointClass::normal,
                          Stage::single, scores[row]});
    }
  }

  json params_echo = {{"detector", "lof"},
                      {"k_neighbors", params.k_neighbors},
                      {"lof_threshold", params.lof_threshold},
                      {"seed", params.seed.value},
                      {"sampled", scored},
                      {"unsampled", n - scored}};
  if (params.sample_size) params_echo["sample_size"] = *params.sample_size;
  return finish_report("lof", std::move(verdicts), timer.elapsed_ms(), std::move(params_echo));
}

}  // namespace msdk
