#include "msdk/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace msdk {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::empty_dataset: return "empty_dataset";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::insufficient_survivors: return "insufficient_survivors";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::single_stage_report: return "single_stage_report";
    case ErrorCode::invalid_params: return "invalid_params";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::schema_error: return "schema_error";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) {
    throw Error(ErrorCode::invalid_params, "dataset dimension must be >= 1");
  }
}

Dataset Dataset::univariate(std::vector<double> values) {
  Dataset data(1);
  data.values_.reserve(values.size());
  data.indices_.reserve(values.size());
  for (double v : values) data.add({&v, 1});
  return data;
}

void Dataset::add(std::span<const double> point) {
  if (point.size() != dimension_) {
    throw Error(ErrorCode::dimension_mismatch,
                "point has " + std::to_string(point.size()) + " values, dataset holds " +
                    std::to_string(dimension_) + "-dimensional points");
  }
  for (double v : point) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::invalid_params, "non-finite value rejected at ingestion");
    }
  }
  if (!labels_.empty()) {
    throw Error(ErrorCode::invalid_params, "cannot add points after labels are set");
  }
  values_.insert(values_.end(), point.begin(), point.end());
  indices_.push_back(indices_.size());
}

std::vector<double> Dataset::column(std::size_t dim) const {
  if (dim >= dimension_) {
    throw Error(ErrorCode::dimension_mismatch, "column index out of range");
  }
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t row = 0; row < size(); ++row) out.push_back(value(row, dim));
  return out;
}

void Dataset::set_labels(std::vector<Label> labels) {
  if (labels.size() != size()) {
    throw Error(ErrorCode::length_mismatch,
                "label count " + std::to_string(labels.size()) + " does not match point count " +
                    std::to_string(size()));
  }
  labels_ = std::move(labels);
}

Dataset Dataset::subset(const std::vector<bool>& keep) const {
  if (keep.size() != size()) {
    throw Error(ErrorCode::length_mismatch, "mask length does not match point count");
  }
  Dataset out(dimension_);
  for (std::size_t row = 0; row < size(); ++row) {
    if (!keep[row]) continue;
    auto p = point(row);
    out.values_.insert(out.values_.end(), p.begin(), p.end());
    out.indices_.push_back(indices_[row]);
    if (!labels_.empty()) out.labels_.push_back(labels_[row]);
  }
  return out;
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows) const {
  Dataset out(dimension_);
  for (std::size_t row : rows) {
    if (row >= size()) {
      throw Error(ErrorCode::invalid_params, "subset row out of range");
    }
    auto p = point(row);
    out.values_.insert(out.values_.end(), p.begin(), p.end());
    out.indices_.push_back(indices_[row]);
    if (!labels_.empty()) out.labels_.push_back(labels_[row]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verdicts and reports

const char* to_string(PointClass cls) {
  switch (cls) {
    case PointClass::normal: return "normal";
    case PointClass::global_outlier: return "global_outlier";
    case PointClass::local_outlier: return "local_outlier";
  }
  return "unknown";
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::msd: return "msd";
    case Stage::kmeans: return "kmeans";
    case Stage::single: return "single";
  }
  return "unknown";
}

PointClass point_class_from_string(const std::string& text) {
  if (text == "normal") return PointClass::normal;
  if (text == "global_outlier") return PointClass::global_outlier;
  if (text == "local_outlier") return PointClass::local_outlier;
  throw Error(ErrorCode::schema_error, "unknown point class: " + text);
}

Stage stage_from_string(const std::string& text) {
  if (text == "msd") return Stage::msd;
  if (text == "kmeans") return Stage::kmeans;
  if (text == "single") return Stage::single;
  throw Error(ErrorCode::schema_error, "unknown stage: " + text);
}

DetectionReport finish_report(std::string detector, std::vector<Verdict> verdicts,
                              double elapsed_ms, json params) {
  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.index < b.index; });
  DetectionReport report;
  report.detector = std::move(detector);
  std::size_t outliers = 0;
  for (const Verdict& v : verdicts) outliers += v.is_outlier() ? 1 : 0;
  report.outlier_fraction =
      verdicts.empty() ? 0.0 : static_cast<double>(outliers) / static_cast<double>(verdicts.size());
  report.verdicts = std::move(verdicts);
  report.elapsed_ms = elapsed_ms;
  report.params = std::move(params);
  return report;
}

ClassCounts count_classes(const DetectionReport& report) {
  ClassCounts counts;
  for (const Verdict& v : report.verdicts) {
    switch (v.cls) {
      case PointClass::normal: ++counts.normal; break;
      case PointClass::global_outlier: ++counts.global_outliers; break;
      case PointClass::local_outlier: ++counts.local_outliers; break;
    }
  }
  return counts;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string summarize(const DetectionReport& report) {
  ClassCounts counts = count_classes(report);
  std::string out = report.detector + ": " + std::to_string(counts.total()) + " points, " +
                    std::to_string(counts.outliers()) + " outliers (" +
                    format_fixed(report.outlier_fraction * 100.0, 2) + "%), normal=" +
                    std::to_string(counts.normal) + " global=" +
                    std::to_string(counts.global_outliers) + " local=" +
                    std::to_string(counts.local_outliers) + ", " +
                    format_fixed(report.elapsed_ms, 2) + " ms";
  return out;
}

bool deterministic_equal(const DetectionReport& a, const DetectionReport& b) {
  return a.detector == b.detector && a.verdicts == b.verdicts &&
         a.outlier_fraction == b.outlier_fraction && a.params == b.params;
}

// ---------------------------------------------------------------------------
// Randomness

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorCode::invalid_params, "bound must be positive");
  }
  if (bound == 1) return 0;
  std::uint64_t mask = std::bit_ceil(bound) - 1;
  for (;;) {
    std::uint64_t v = next() & mask;
    if (v < bound) return v;
  }
}

double Rng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  do {
    u1 = unit();
  } while (u1 <= 0.0);
  double u2 = unit();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
  if (k > n) {
    throw Error(ErrorCode::invalid_params, "cannot sample more indices than available");
  }
  std::vector<std::size_t> out;
  out.reserve(k);
  // Floyd's method: each j is included with the right marginal probability
  // and the pass stays O(k) regardless of n.
  for (std::size_t j = n - k; j < n; ++j) {
    auto candidate = static_cast<std::size_t>(below(j + 1));
    if (std::find(out.begin(), out.end(), candidate) != out.end()) {
      out.push_back(j);
    } else {
      out.push_back(candidate);
    }
  }
  return out;
}

}  // namespace msdk
