#pragma once

#include <cstdint>
#include <span>

#include "msdk/core.hpp"

namespace msdk {

struct KMeansParams {
  std::size_t k = 2;
  RngSeed seed{};
  std::size_t max_iterations = 300;
  double threshold_multiplier = 1.5;  // t in theta_c = mu_c + t * sigma_c
  bool parallel = false;
  std::size_t workers = 1;
};

// Distance statistics of one cluster's members around their centroid.
// sigma is population stddev; theta = mean + t * sigma is the local-outlier
// cut. Empty and singleton clusters carry all-zero stats.
struct ClusterStats {
  double mean_distance = 0.0;
  double sigma_distance = 0.0;
  double threshold = 0.0;
  std::size_t count = 0;
};

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dimension = 0;
  std::vector<double> centroids;            // k x dimension, row-major
  std::vector<std::uint32_t> assignments;   // one cluster id per input row
  std::vector<ClusterStats> per_cluster;    // k entries
  std::vector<double> wcss_history;         // per assignment pass, non-increasing
  std::size_t iterations_run = 0;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dimension, dimension};
  }
};

// Lloyd's algorithm. Init: k distinct row indices sampled uniformly without
// replacement from the seeded generator. Ties in assignment go to the lowest
// cluster index. An emptied cluster is repaired by moving its centroid onto
// the farthest member of the largest cluster. Stops on label stability, on
// centroid movement under 1e-9, or at max_iterations.
ClusterModel fit(const Dataset& data, const KMeansParams& params);

// Same contract and bit-identical output, assignment pass partitioned over
// params.workers threads. Equality holds because both paths accumulate
// centroid sums per fixed-size block and merge blocks in index order; the
// float-addition order never depends on the worker count.
ClusterModel fit_parallel(const Dataset& data, const KMeansParams& params);

// Euclidean distance from each row to its assigned centroid.
std::vector<double> intra_distances(const ClusterModel& model, const Dataset& data);

std::vector<double> cluster_thresholds(const ClusterModel& model);

// Single-stage detector: fit, then flag rows whose intra-cluster distance
// strictly exceeds their cluster's threshold. Score: distance / threshold
// when the threshold is positive, otherwise the raw distance.
DetectionReport kmeans_detect(const Dataset& data, const KMeansParams& params = {});

}  // namespace msdk
