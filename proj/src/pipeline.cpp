#include "msdk/pipeline.hpp"

#include <cmath>

namespace msdk {

DetectionReport msd_kmeans_detect(const Dataset& data, const MsdKmeansParams& params) {
  Stopwatch timer;
  auto flags = msd_flags(data, params.msd);

  std::vector<bool> keep(flags.size());
  std::size_t removed = 0;
  for (std::size_t row = 0; row < flags.size(); ++row) {
    keep[row] = !flags[row];
    removed += flags[row] ? 1 : 0;
  }
  Dataset survivors = data.subset(keep);
  if (survivors.size() < params.kmeans.k) {
    throw Error(ErrorCode::insufficient_survivors,
                "msd-kmeans: stage one removed " + std::to_string(removed) + " of " +
                    std::to_string(data.size()) + " points; " +
                    std::to_string(survivors.size()) + " survivors cannot seed k=" +
                    std::to_string(params.kmeans.k) + " clusters");
  }

  ClusterModel model = fit(survivors, params.kmeans);
  auto distances = intra_distances(model, survivors);

  std::vector<Verdict> verdicts;
  verdicts.reserve(data.size());
  for (std::size_t row = 0; row < survivors.size(); ++row) {
    double theta = model.per_cluster[model.assignments[row]].threshold;
    bool flagged = distances[row] > theta;
    double score = theta > 0.0 ? distances[row] / theta : distances[row];
    verdicts.push_back({survivors.index_of(row),
                        flagged ? PointClass::local_outlier : PointClass::normal, Stage::kmeans,
                        score});
  }

  // Stage-one scores reuse the fence detector's deviation measure so the two
  // views of the same point agree.
  auto scores = deviation_scores(data);
  for (std::size_t row = 0; row < data.size(); ++row) {
    if (!flags[row]) continue;
    verdicts.push_back(
        {data.index_of(row), PointClass::global_outlier, Stage::msd, scores[row]});
  }

  json params_echo = {{"detector", "msd-kmeans"},
                      {"pipeline", true},
                      {"msd_multiplier", params.msd.multiplier},
                      {"k", params.kmeans.k},
                      {"seed", params.kmeans.seed.value},
                      {"max_iterations", params.kmeans.max_iterations},
                      {"threshold_multiplier", params.kmeans.threshold_multiplier},
                      {"parallel", params.kmeans.parallel},
                      {"workers", params.kmeans.workers},
                      {"stage_one_removed", removed},
                      {"stage_two_points", survivors.size()}};
  return finish_report("msd-kmeans", std::move(verdicts), timer.elapsed_ms(),
                       std::move(params_echo));
}

StageBreakdown stage_breakdown(const DetectionReport& report) {
  if (!report.params.is_object() || !report.params.value("pipeline", false)) {
    throw Error(ErrorCode::single_stage_report,
                "stage_breakdown: report from detector '" + report.detector +
                    "' has no stage structure");
  }
  StageBreakdown breakdown;
  for (const Verdict& v : report.verdicts) {
    if (v.cls == PointClass::global_outlier && v.stage == Stage::msd) {
      ++breakdown.global_outliers;
    } else if (v.cls == PointClass::local_outlier && v.stage == Stage::kmeans) {
      ++breakdown.local_outliers;
    }
  }
  return breakdown;
}

}  // namespace msdk
