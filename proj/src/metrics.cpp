#include "msdk/metrics.hpp"

#include <algorithm>
#include <cstdio>

namespace msdk {

ConfusionCounts confusion(const DetectionReport& report, std::span<const Label> truth,
                          bool positive_is_outlier) {
  if (truth.size() != report.verdicts.size()) {
    throw Error(ErrorCode::length_mismatch,
                "evaluate: " + std::to_string(truth.size()) + " labels for " +
                    std::to_string(report.verdicts.size()) + " verdicts");
  }
  ConfusionCounts counts;
  for (const Verdict& v : report.verdicts) {
    if (v.index >= truth.size()) {
      throw Error(ErrorCode::length_mismatch,
                  "evaluate: verdict index " + std::to_string(v.index) +
                      " outside truth range");
    }
    bool predicted = v.is_outlier();
    bool actual = truth[v.index] == Label::outlier;
    if (!positive_is_outlier) {
      predicted = !predicted;
      actual = !actual;
    }
    if (predicted && actual) ++counts.tp;
    else if (predicted && !actual) ++counts.fp;
    else if (!predicted && actual) ++counts.fn;
    else ++counts.tn;
  }
  return counts;
}

MetricsSummary from_counts(const ConfusionCounts& counts, double elapsed_ms) {
  MetricsSummary s;
  s.counts = counts;
  s.elapsed_ms = elapsed_ms;
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  s.tpr = ratio(counts.tp, counts.tp + counts.fn);
  s.fpr = ratio(counts.fp, counts.fp + counts.tn);
  s.precision = ratio(counts.tp, counts.tp + counts.fp);
  s.accuracy = ratio(counts.tp + counts.tn, counts.total());
  s.recall = s.tpr;
  if (s.precision && s.recall && (*s.precision + *s.recall) > 0.0) {
    s.f_measure = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
  }
  return s;
}

MetricsSummary evaluate(const DetectionReport& report, std::span<const Label> truth) {
  return from_counts(confusion(report, truth), report.elapsed_ms);
}

std::vector<RankedEntry> compare(std::vector<RankedEntry> entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    double fa = a.summary.f_measure.value_or(-1.0);
    double fb = b.summary.f_measure.value_or(-1.0);
    if (fa != fb) return fa > fb;
    double pa = a.summary.precision.value_or(-1.0);
    double pb = b.summary.precision.value_or(-1.0);
    return pa > pb;
  });
  return entries;
}

std::string undefined_reason(const MetricsSummary& summary, const std::string& metric) {
  const ConfusionCounts& c = summary.counts;
  if (metric == "tpr" || metric == "recall") {
    return summary.tpr ? "" : "undefined: no actual positives (tp+fn = 0)";
  }
  if (metric == "fpr") {
    return summary.fpr ? "" : "undefined: no actual negatives (fp+tn = 0)";
  }
  if (metric == "precision") {
    return summary.precision ? "" : "undefined: no predicted positives (tp+fp = 0)";
  }
  if (metric == "accuracy") {
    return summary.accuracy ? "" : "undefined: empty evaluation (n = 0)";
  }
  if (metric == "f_measure") {
    if (summary.f_measure) return "";
    if (!summary.precision) return "undefined: precision undefined (tp+fp = 0)";
    if (!summary.recall) return "undefined: recall undefined (tp+fn = 0)";
    return "undefined: precision and recall both zero";
  }
  (void)c;
  throw Error(ErrorCode::invalid_params, "unknown metric: " + metric);
}

namespace {

std::string percent_cell(const std::optional<double>& value) {
  if (!value) return "undef";
  return format_fixed(*value * 100.0, 1);
}

}  // namespace

std::string render_table(std::span<const RankedEntry> entries) {
  constexpr const char* kHeaders[] = {"Detector",     "TPR (%)",    "FPR (%)",
                                      "Precision (%)", "Accuracy (%)", "Recall (%)",
                                      "F-measure (%)", "Time (ms)"};
  std::vector<std::vector<std::string>> rows;
  for (const RankedEntry& e : entries) {
    rows.push_back({e.name, percent_cell(e.summary.tpr), percent_cell(e.summary.fpr),
                    percent_cell(e.summary.precision), percent_cell(e.summary.accuracy),
                    percent_cell(e.summary.recall), percent_cell(e.summary.f_measure),
                    format_fixed(e.summary.elapsed_ms, 2)});
  }
  constexpr std::size_t kColumns = std::size(kHeaders);
  std::vector<std::size_t> width(kColumns);
  for (std::size_t c = 0; c < kColumns; ++c) width[c] = std::string(kHeaders[c]).size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < kColumns; ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto emit_row = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < kColumns; ++c) {
      line += cells[c];
      line.append(width[c] - cells[c].size(), ' ');
      if (c + 1 < kColumns) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };
  std::vector<std::string> header(kHeaders, kHeaders + kColumns);
  std::string out = emit_row(header);
  std::string rule;
  for (std::size_t c = 0; c < kColumns; ++c) {
    rule.append(width[c], '-');
    if (c + 1 < kColumns) rule += "  ";
  }
  out += rule + "\n";
  for (const auto& row : rows) out += emit_row(row);
  return out;
}

json to_json(const MetricsSummary& summary) {
  json j;
  j["counts"] = {{"tp", summary.counts.tp},
                 {"fp", summary.counts.fp},
                 {"tn", summary.counts.tn},
                 {"fn", summary.counts.fn}};
  auto put = [&](const char* key, const std::optional<double>& value) {
    if (value) {
      j[key] = *value;
    } else {
      j[key] = nullptr;
      j[std::string(key) + "_reason"] = undefined_reason(summary, key);
    }
  };
  put("tpr", summary.tpr);
  put("fpr", summary.fpr);
  put("precision", summary.precision);
  put("accuracy", summary.accuracy);
  put("recall", summary.recall);
  put("f_measure", summary.f_measure);
  j["elapsed_ms"] = summary.elapsed_ms;
  return j;
}

}  // namespace msdk
