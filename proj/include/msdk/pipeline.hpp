#pragma once

#include "msdk/kmeans.hpp"
#include "msdk/stats.hpp"

namespace msdk {

struct MsdKmeansParams {
  MsdParams msd;
  KMeansParams kmeans;
};

// Two-stage detector. Stage one removes points outside the mean/stddev fence
// (GlobalOutlier). Stage two clusters the survivors and flags members whose
// intra-cluster distance strictly exceeds their cluster's threshold
// (LocalOutlier); cluster statistics are computed over survivors only.
// Survivors fewer than k raise insufficient_survivors, reporting how many
// points stage one removed.
DetectionReport msd_kmeans_detect(const Dataset& data, const MsdKmeansParams& params = {});

struct StageBreakdown {
  std::size_t global_outliers = 0;  // flagged by the fence stage
  std::size_t local_outliers = 0;   // flagged by the clustering stage

  std::size_t total() const { return global_outliers + local_outliers; }
  bool empty() const { return total() == 0; }
};

// Per-stage outlier counts of a two-stage report. Reports produced by
// single-stage detectors raise single_stage_report.
StageBreakdown stage_breakdown(const DetectionReport& report);

}  // namespace msdk
