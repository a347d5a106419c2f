#include "msdk/stats.hpp"

#include <algorithm>
#include <cmath>

namespace msdk {

namespace {

void require_points(const Dataset& data, std::size_t minimum, const char* what) {
  if (data.empty()) {
    throw Error(ErrorCode::empty_dataset, std::string(what) + ": dataset is empty");
  }
  if (data.size() < minimum) {
    throw Error(ErrorCode::insufficient_data,
                std::string(what) + ": needs at least " + std::to_string(minimum) +
                    " points, got " + std::to_string(data.size()));
  }
}

std::vector<UnivariateStats> per_dimension_stats(const Dataset& data) {
  std::vector<UnivariateStats> stats;
  stats.reserve(data.dimension());
  for (std::size_t dim = 0; dim < data.dimension(); ++dim) {
    auto column = data.column(dim);
    stats.push_back(compute_stats(column));
  }
  return stats;
}

}  // namespace

UnivariateStats compute_stats(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::empty_dataset, "compute_stats: no values");
  }
  auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  double mu = sum / n;
  double ssd = 0.0;
  for (double v : values) ssd += (v - mu) * (v - mu);
  return {mu, std::sqrt(ssd / n), values.size()};
}

double percentile(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) {
    throw Error(ErrorCode::empty_dataset, "percentile: no values");
  }
  if (p < 0.0 || p > 1.0) {
    throw Error(ErrorCode::invalid_params, "percentile: p outside [0, 1]");
  }
  double h = static_cast<double>(sorted_values.size() - 1) * p;
  auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted_values.size()) return sorted_values.back();
  double frac = h - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<bool> msd_flags(const Dataset& data, const MsdParams& params) {
  require_points(data, 2, "msd");
  if (!(params.multiplier > 0.0)) {
    throw Error(ErrorCode::invalid_params, "msd: multiplier must be positive");
  }
  auto stats = per_dimension_stats(data);
  std::vector<bool> flags(data.size(), false);
  for (std::size_t dim = 0; dim < data.dimension(); ++dim) {
    double lo = stats[dim].mu - params.multiplier * stats[dim].sigma;
    double hi = stats[dim].mu + params.multiplier * stats[dim].sigma;
    for (std::size_t row = 0; row < data.size(); ++row) {
      double v = data.value(row, dim);
      if (v < lo || v > hi) flags[row] = true;
    }
  }
  return flags;
}

std::vector<double> deviation_scores(const Dataset& data) {
  require_points(data, 1, "deviation_scores");
  auto stats = per_dimension_stats(data);
  std::vector<double> scores(data.size(), 0.0);
  for (std::size_t dim = 0; dim < data.dimension(); ++dim) {
    if (stats[dim].sigma == 0.0) continue;
    for (std::size_t row = 0; row < data.size(); ++row) {
      double z = std::abs(data.value(row, dim) - stats[dim].mu) / stats[dim].sigma;
      scores[row] = std::max(scores[row], z);
    }
  }
  return scores;
}

DetectionReport msd_detect(const Dataset& data, const MsdParams& params) {
  Stopwatch timer;
  auto flags = msd_flags(data, params);
  auto scores = deviation_scores(data);
  std::vector<Verdict> verdicts;
  verdicts.reserve(data.size());
  for (std::size_t row = 0; row < data.size(); ++row) {
    verdicts.push_back({data.index_of(row),
                        flags[row] ? PointClass::global_outlier : PointClass::normal,
                        Stage::single, scores[row]});
  }
  json params_echo = {{"detector", "msd"}, {"multiplier", params.multiplier}};
  return finish_report("msd", std::move(verdicts), timer.elapsed_ms(), std::move(params_echo));
}

MsdSplit msd_split(const Dataset& data, const MsdParams& params) {
  auto flags = msd_flags(data, params);
  std::vector<bool> keep(flags.size());
  for (std::size_t row = 0; row < flags.size(); ++row) keep[row] = !flags[row];
  MsdSplit split{data.subset(keep), data.subset(flags)};
  return split;
}

DetectionReport zscore_detect(const Dataset& data, const ZScoreParams& params) {
  Stopwatch timer;
  require_points(data, 2, "zscore");
  if (!(params.threshold > 0.0)) {
    throw Error(ErrorCode::invalid_params, "zscore: threshold must be positive");
  }
  auto scores = deviation_scores(data);
  std::vector<Verdict> verdicts;
  verdicts.reserve(data.size());
  for (std::size_t row = 0; row < data.size(); ++row) {
    verdicts.push_back({data.index_of(row),
                        scores[row] > params.threshold ? PointClass::global_outlier
                                                       : PointClass::normal,
                        Stage::single, scores[row]});
  }
  json params_echo = {{"detector", "zscore"}, {"threshold", params.threshold}};
  return finish_report("zscore", std::move(verdicts), timer.elapsed_ms(), std::move(params_echo));
}

DetectionReport miqr_detect(const Dataset& data, const IqrParams& params) {
  Stopwatch timer;
  require_points(data, 4, "miqr");
  if (!(params.multiplier > 0.0)) {
    throw Error(ErrorCode::invalid_params, "miqr: multiplier must be positive");
  }
  std::vector<double> lo_fence(data.dimension());
  std::vector<double> hi_fence(data.dimension());
  for (std::size_t dim = 0; dim < data.dimension(); ++dim) {
    auto column = data.column(dim);
    std::sort(column.begin(), column.end());
    double q1 = percentile(column, 0.25);
    double q3 = percentile(column, 0.75);
    double iqr = q3 - q1;
    lo_fence[dim] = q1 - params.multiplier * iqr;
    hi_fence[dim] = q3 + params.multiplier * iqr;
  }
  std::vector<Verdict> verdicts;
  verdicts.reserve(data.size());
  for (std::size_t row = 0; row < data.size(); ++row) {
    bool flagged = false;
    double score = 0.0;
    for (std::size_t dim = 0; dim < data.dimension(); ++dim) {
      double v = data.value(row, dim);
      if (v < lo_fence[dim] || v > hi_fence[dim]) flagged = true;
      double beyond = std::max({0.0, lo_fence[dim] - v, v - hi_fence[dim]});
      score = std::max(score, beyond);
    }
    verdicts.push_back({data.index_of(row),
                        flagged ? PointClass::global_outlier : PointClass::normal, Stage::single,
                        score});
  }
  json params_echo = {{"detector", "miqr"}, {"multiplier", params.multiplier}};
  return finish_report("miqr", std::move(verdicts), timer.elapsed_ms(), std::move(params_echo));
}

}  // namespace msdk
