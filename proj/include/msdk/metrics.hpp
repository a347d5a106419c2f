#pragma once

#include <optional>
#include <span>

#include "msdk/core.hpp"

namespace msdk {

// Positive class is "outlier": a predicted positive is any non-normal
// verdict, an actual positive is a ground-truth outlier label.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Ratios are absent (nullopt) when their denominator is zero; rendering
// spells out which denominator, so an undefined rate never reads as 0.
struct MetricsSummary {
  ConfusionCounts counts;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> precision;
  std::optional<double> accuracy;
  std::optional<double> recall;  // same quantity as tpr, kept for table parity
  std::optional<double> f_measure;
  double elapsed_ms = 0.0;
};

ConfusionCounts confusion(const DetectionReport& report, std::span<const Label> truth,
                          bool positive_is_outlier = true);

MetricsSummary from_counts(const ConfusionCounts& counts, double elapsed_ms);

// Scores a report against per-index ground truth (truth[i] labels index i).
// Truth length must equal the verdict count.
MetricsSummary evaluate(const DetectionReport& report, std::span<const Label> truth);

struct RankedEntry {
  std::string name;
  MetricsSummary summary;
};

// Rows sorted by F-measure descending, ties by precision descending,
// remaining ties in input order. Undefined values sort below defined ones.
std::vector<RankedEntry> compare(std::vector<RankedEntry> entries);

// Plain-text comparison table; percentages to one decimal, absent values
// shown as "undef".
std::string render_table(std::span<const RankedEntry> entries);

// Reason string for an absent ratio, empty when the ratio is defined.
std::string undefined_reason(const MetricsSummary& summary, const std::string& metric);

json to_json(const MetricsSummary& summary);

}  // namespace msdk
