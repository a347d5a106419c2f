#include "msdk/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace msdk {

namespace {

// Reduction block: centroid sums are accumulated per contiguous block of
// rows and the blocks are merged in index order, so the summation tree is a
// function of n alone. Serial and parallel runs therefore produce the same
// floats no matter how blocks are spread over workers.
constexpr std::size_t kBlockRows = 8192;
constexpr double kCentroidMoveEps = 1e-9;

struct AssignBuffers {
  std::vector<std::uint32_t> labels;
  std::vector<double> best_sq;      // squared distance to the chosen centroid
  std::vector<double> block_sums;   // blocks x k x d
  std::vector<double> block_wcss;   // blocks
  std::vector<std::size_t> block_counts;  // blocks x k
};

double squared_distance(const double* a, const double* b, std::size_t d) {
  double sq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double delta = a[j] - b[j];
    sq += delta * delta;
  }
  return sq;
}

void assign_block(const double* points, std::size_t d, std::size_t k,
                  const std::vector<double>& centroids, std::size_t row_begin,
                  std::size_t row_end, std::size_t block, AssignBuffers& buf) {
  double* sums = buf.block_sums.data() + block * k * d;
  std::size_t* counts = buf.block_counts.data() + block * k;
  double wcss = 0.0;
  for (std::size_t row = row_begin; row < row_end; ++row) {
    const double* p = points + row * d;
    std::uint32_t best = 0;
    double best_sq = squared_distance(p, centroids.data(), d);
    for (std::size_t c = 1; c < k; ++c) {
      double sq = squared_distance(p, centroids.data() + c * d, d);
      if (sq < best_sq) {  // strict: equidistant rows stay on the lowest index
        best_sq = sq;
        best = static_cast<std::uint32_t>(c);
      }
    }
    buf.labels[row] = best;
    buf.best_sq[row] = best_sq;
    wcss += best_sq;
    double* sum = sums + best * d;
    for (std::size_t j = 0; j < d; ++j) sum[j] += p[j];
    ++counts[best];
  }
  buf.block_wcss[block] = wcss;
}

// One full assignment pass; fills labels, per-point distances, and
// block-partial sums. Returns total WCSS merged in block order.
double assign_pass(const double* points, std::size_t n, std::size_t d, std::size_t k,
                   const std::vector<double>& centroids, std::size_t workers,
                   AssignBuffers& buf) {
  std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  std::fill(buf.block_sums.begin(), buf.block_sums.end(), 0.0);
  std::fill(buf.block_counts.begin(), buf.block_counts.end(), std::size_t{0});
  std::fill(buf.block_wcss.begin(), buf.block_wcss.end(), 0.0);

  auto run_blocks = [&](std::size_t worker) {
    for (std::size_t block = worker; block < blocks; block += workers) {
      std::size_t begin = block * kBlockRows;
      std::size_t end = std::min(begin + kBlockRows, n);
      assign_block(points, d, k, centroids, begin, end, block, buf);
    }
  };

  if (workers <= 1 || blocks <= 1) {
    run_blocks(0);
  } else {
    std::size_t spawned = std::min(workers, blocks) - 1;
    std::vector<std::thread> pool;
    pool.reserve(spawned);
    for (std::size_t w = 1; w <= spawned; ++w) pool.emplace_back(run_blocks, w);
    run_blocks(0);
    for (auto& t : pool) t.join();
  }

  double wcss = 0.0;
  for (std::size_t block = 0; block < blocks; ++block) wcss += buf.block_wcss[block];
  return wcss;
}

// Merges block partials (in block order) into per-cluster sums and counts.
void merge_partials(const AssignBuffers& buf, std::size_t blocks, std::size_t k, std::size_t d,
                    std::vector<double>& sums, std::vector<std::size_t>& counts) {
  std::fill(sums.begin(), sums.end(), 0.0);
  std::fill(counts.begin(), counts.end(), std::size_t{0});
  for (std::size_t block = 0; block < blocks; ++block) {
    const double* bs = buf.block_sums.data() + block * k * d;
    const std::size_t* bc = buf.block_counts.data() + block * k;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += bs[c * d + j];
      counts[c] += bc[c];
    }
  }
}

// Moves each empty cluster's centroid onto the farthest-from-centroid member
// of the currently largest cluster. Returns true when any centroid moved.
// Ties: lowest cluster index, then lowest row. A zero max distance means all
// candidate rows already sit on a centroid, so repair would not change the
// model and is skipped. Claimed rows are relabeled in buf so a second empty
// cluster in the same pass cannot pick the same donor row; the next
// assignment pass recomputes labels from scratch anyway.
bool repair_empty_clusters(const double* points, std::size_t n, std::size_t d,
                           AssignBuffers& buf, std::vector<double>& centroids,
                           std::vector<std::size_t>& counts) {
  std::size_t k = counts.size();
  bool repaired = false;
  for (std::size_t empty = 0; empty < k; ++empty) {
    if (counts[empty] != 0) continue;
    std::size_t donor = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (counts[c] > counts[donor]) donor = c;
    }
    if (counts[donor] == 0) continue;
    std::size_t far_row = n;
    double far_sq = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
      if (buf.labels[row] != donor) continue;
      if (buf.best_sq[row] > far_sq) {
        far_sq = buf.best_sq[row];
        far_row = row;
      }
    }
    if (far_row == n || far_sq == 0.0) continue;
    const double* p = points + far_row * d;
    std::copy(p, p + d, centroids.begin() + empty * d);
    buf.labels[far_row] = static_cast<std::uint32_t>(empty);
    buf.best_sq[far_row] = 0.0;
    counts[empty] = 1;
    counts[donor] -= 1;
    repaired = true;
  }
  return repaired;
}

ClusterModel fit_impl(const Dataset& data, const KMeansParams& params, std::size_t workers) {
  if (params.k == 0) {
    throw Error(ErrorCode::invalid_params, "kmeans: k must be >= 1");
  }
  if (params.max_iterations == 0) {
    throw Error(ErrorCode::invalid_params, "kmeans: max_iterations must be >= 1");
  }
  if (data.empty()) {
    throw Error(ErrorCode::empty_dataset, "kmeans: dataset is empty");
  }
  if (data.size() < params.k) {
    throw Error(ErrorCode::insufficient_data,
                "kmeans: k=" + std::to_string(params.k) + " exceeds point count " +
                    std::to_string(data.size()));
  }
  std::size_t n = data.size();
  std::size_t d = data.dimension();
  std::size_t k = params.k;
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::invalid_params, "kmeans: dataset exceeds 2^32 rows");
  }
  const double* points = data.raw().data();

  ClusterModel model;
  model.k = k;
  model.dimension = d;
  model.centroids.resize(k * d);

  Rng rng(params.seed);
  auto picks = rng.sample_indices(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    auto p = data.point(picks[c]);
    std::copy(p.begin(), p.end(), model.centroids.begin() + c * d);
  }

  std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  AssignBuffers buf;
  buf.labels.resize(n);
  buf.best_sq.resize(n);
  buf.block_sums.resize(blocks * k * d);
  buf.block_wcss.resize(blocks);
  buf.block_counts.resize(blocks * k);

  std::vector<std::uint32_t> prev_labels(n);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);

  model.wcss_history.push_back(
      assign_pass(points, n, d, k, model.centroids, workers, buf));
  prev_labels = buf.labels;

  while (model.iterations_run < params.max_iterations) {
    merge_partials(buf, blocks, k, d, sums, counts);
    std::vector<double> next_centroids = model.centroids;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto count = static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < d; ++j) next_centroids[c * d + j] = sums[c * d + j] / count;
    }
    bool repaired = repair_empty_clusters(points, n, d, buf, next_centroids, counts);

    double move = 0.0;
    for (std::size_t i = 0; i < k * d; ++i) {
      move = std::max(move, std::abs(next_centroids[i] - model.centroids[i]));
    }
    if (!repaired && move < kCentroidMoveEps) break;  // converged; keep current labels

    model.centroids = std::move(next_centroids);
    model.wcss_history.push_back(assign_pass(points, n, d, k, model.centroids, workers, buf));
    ++model.iterations_run;
    bool changed = buf.labels != prev_labels;
    prev_labels = buf.labels;
    if (!changed && !repaired) break;
  }

  model.assignments = std::move(prev_labels);

  // Per-cluster distance statistics over the final assignment.
  std::vector<double> dist_sum(k, 0.0);
  std::vector<std::size_t> dist_count(k, 0);
  std::vector<double> distances(n);
  for (std::size_t row = 0; row < n; ++row) {
    double dist = std::sqrt(buf.best_sq[row]);
    distances[row] = dist;
    dist_sum[model.assignments[row]] += dist;
    ++dist_count[model.assignments[row]];
  }
  std::vector<double> ssd(k, 0.0);
  std::vector<double> mean(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (dist_count[c] > 0) mean[c] = dist_sum[c] / static_cast<double>(dist_count[c]);
  }
  for (std::size_t row = 0; row < n; ++row) {
    double delta = distances[row] - mean[model.assignments[row]];
    ssd[model.assignments[row]] += delta * delta;
  }
  model.per_cluster.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClusterStats& stats = model.per_cluster[c];
    stats.count = dist_count[c];
    if (dist_count[c] == 0) continue;
    stats.mean_distance = mean[c];
    stats.sigma_distance = std::sqrt(ssd[c] / static_cast<double>(dist_count[c]));
    stats.threshold = stats.mean_distance + params.threshold_multiplier * stats.sigma_distance;
  }
  return model;
}

}  // namespace

ClusterModel fit(const Dataset& data, const KMeansParams& params) {
  std::size_t workers = params.parallel ? std::max<std::size_t>(params.workers, 1) : 1;
  return fit_impl(data, params, workers);
}

ClusterModel fit_parallel(const Dataset& data, const KMeansParams& params) {
  if (params.workers == 0) {
    throw Error(ErrorCode::invalid_params, "kmeans: workers must be >= 1");
  }
  return fit_impl(data, params, params.workers);
}

std::vector<double> intra_distances(const ClusterModel& model, const Dataset& data) {
  if (data.dimension() != model.dimension) {
    throw Error(ErrorCode::dimension_mismatch, "intra_distances: dimension mismatch");
  }
  if (data.size() != model.assignments.size()) {
    throw Error(ErrorCode::length_mismatch,
                "intra_distances: model was fit on a different row count");
  }
  std::vector<double> out(data.size());
  for (std::size_t row = 0; row < data.size(); ++row) {
    const double* p = data.raw().data() + row * model.dimension;
    const double* c = model.centroids.data() + model.assignments[row] * model.dimension;
    out[row] = std::sqrt(squared_distance(p, c, model.dimension));
  }
  return out;
}

std::vector<double> cluster_thresholds(const ClusterModel& model) {
  std::vector<double> out;
  out.reserve(model.per_cluster.size());
  for (const ClusterStats& stats : model.per_cluster) out.push_back(stats.threshold);
  return out;
}

DetectionReport kmeans_detect(const Dataset& data, const KMeansParams& params) {
  Stopwatch timer;
  ClusterModel model = fit(data, params);
  auto distances = intra_distances(model, data);
  std::vector<Verdict> verdicts;
  verdicts.reserve(data.size());
  for (std::size_t row = 0; row < data.size(); ++row) {
    double theta = model.per_cluster[model.assignments[row]].threshold;
    bool flagged = distances[row] > theta;
    double score = theta > 0.0 ? distances[row] / theta : distances[row];
    verdicts.push_back({data.index_of(row),
                        flagged ? PointClass::local_outlier : PointClass::normal, Stage::single,
                        score});
  }
  json params_echo = {{"detector", "kmeans"},
                      {"k", params.k},
                      {"seed", params.seed.value},
                      {"max_iterations", params.max_iterations},
                      {"threshold_multiplier", params.threshold_multiplier},
                      {"parallel", params.parallel},
                      {"workers", params.workers}};
  return finish_report("kmeans", std::move(verdicts), timer.elapsed_ms(), std::move(params_echo));
}

}  // namespace msdk
