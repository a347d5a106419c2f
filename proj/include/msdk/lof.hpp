#pragma once

#include <optional>

#include "msdk/core.hpp"

namespace msdk {

struct LofParams {
  std::size_t k_neighbors = 20;
  double lof_threshold = 1.5;
  // When set and smaller than n, score a uniform subsample of this size and
  // report every unsampled point as normal.
  std::optional<std::size_t> sample_size;
  RngSeed seed{};  // drives the subsample draw only
};

// Local outlier factor per row. Neighborhoods hold every point within the
// k-distance, so ties can push them past k_neighbors members. Reachability
// distances are floored at 1e-12 so coincident duplicates keep densities
// finite; a run of identical points scores exactly 1. Requires
// n > k_neighbors >= 1. sample_size is ignored here; it belongs to
// lof_detect.
std::vector<double> lof_scores(const Dataset& data, const LofParams& params = {});

// Flags rows whose score strictly exceeds lof_threshold. With sample_size
// set, scores are computed within the subsample (densities included) and the
// unsampled remainder is reported normal with score 0; the params echo
// carries the sampled/unsampled counts.
DetectionReport lof_detect(const Dataset& data, const LofParams& params = {});

}  // namespace msdk
