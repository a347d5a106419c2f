#pragma once

#include <span>

#include "msdk/core.hpp"

namespace msdk {

// Population statistics (sigma uses divisor n, not n-1).
struct UnivariateStats {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
};

UnivariateStats compute_stats(std::span<const double> values);

// p in [0, 1], linear interpolation at rank h = (n-1)*p over sorted values.
double percentile(std::span<const double> sorted_values, double p);

struct MsdParams {
  double multiplier = 1.0;  // fence half-width in sigmas
};

struct ZScoreParams {
  double threshold = 3.0;
};

struct IqrParams {
  double multiplier = 1.5;  // fence extension in IQRs
};

// Mean/stddev fence: a point is an outlier when it falls strictly outside
// [mu - m*sigma, mu + m*sigma] in any dimension. Boundary values are normal.
// Score: max per-dimension |x - mu| / sigma (0 where sigma is 0).
DetectionReport msd_detect(const Dataset& data, const MsdParams& params = {});

struct MsdSplit {
  Dataset normals;
  Dataset outliers;
};

// Same fence as msd_detect, returning both sides with original indices kept.
MsdSplit msd_split(const Dataset& data, const MsdParams& params = {});

// Internal fence evaluation shared by msd_detect, msd_split, and the
// two-stage pipeline, so all three flag bit-identical point sets.
std::vector<bool> msd_flags(const Dataset& data, const MsdParams& params);

// Max per-dimension |x - mu| / sigma per row (0 where sigma is 0); the score
// both mean/stddev detectors attach to their verdicts.
std::vector<double> deviation_scores(const Dataset& data);

// |x - mu| / sigma > threshold in any dimension. sigma == 0 flags nothing.
DetectionReport zscore_detect(const Dataset& data, const ZScoreParams& params = {});

// Quartile fence [Q1 - k*IQR, Q3 + k*IQR], strict outside in any dimension.
// Score: distance beyond the nearer fence edge, 0 inside.
DetectionReport miqr_detect(const Dataset& data, const IqrParams& params = {});

}  // namespace msdk
