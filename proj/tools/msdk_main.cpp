// msdk: single-binary front end for the outlier-detection library.
//
// Subcommands:
//   detect   run one detector over an interchange CSV, write verdicts
//   eval     score detectors against the label column, print a ranking table
//   synth    generate a labeled synthetic dataset from a spec config
//   bench    median-of-5 timings per detector, serial vs parallel rows
//   report   split a verdict file into per-class plot series
//   extract  filter a taxi-trip CSV through source/destination geo boxes
//
// Exit codes: 0 success, 1 file IO failure, 2 usage or validation failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msdk/ingest.hpp"
#include "msdk/lof.hpp"
#include "msdk/metrics.hpp"
#include "msdk/pipeline.hpp"

namespace {

using namespace msdk;

const std::vector<std::string> kAllDetectors = {"msd",    "zscore", "miqr",
                                                "kmeans", "lof",    "msd-kmeans"};

struct Options {
  std::string detector;
  std::vector<std::string> detectors;  // eval/bench, empty = all
  std::string input;
  std::string output;
  std::string spec_path;
  std::string boxes_path;
  std::string verdicts_path;
  std::string output_dir = ".";
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::size_t k = 2;
  double msd_multiplier = 1.0;
  double threshold_multiplier = 1.5;
  double z = 3.0;
  double iqr_k = 1.5;
  std::size_t lof_k = 20;
  double lof_threshold = 1.5;
  std::size_t sample_size = 0;  // 0 = unset; flag validates positive
  bool parallel = false;
  std::size_t workers = 4;
  std::string format = "text";
};

bool structured(const Options& opt) { return opt.format == "structured"; }

void print_doc(const json& doc) { std::cout << doc.dump(2) << "\n"; }

std::string seed_line(const Options& opt) {
  return "seed: " + std::to_string(opt.seed) + (opt.seed_given ? "" : " (default)");
}

KMeansParams kmeans_params(const Options& opt) {
  KMeansParams params;
  params.k = opt.k;
  params.seed = {opt.seed};
  params.threshold_multiplier = opt.threshold_multiplier;
  params.parallel = opt.parallel;
  params.workers = opt.workers;
  return params;
}

DetectionReport run_detector(const std::string& name, const Dataset& data,
                             const Options& opt) {
  if (name == "msd") return msd_detect(data, MsdParams{opt.msd_multiplier});
  if (name == "zscore") return zscore_detect(data, ZScoreParams{opt.z});
  if (name == "miqr") return miqr_detect(data, IqrParams{opt.iqr_k});
  if (name == "kmeans") return kmeans_detect(data, kmeans_params(opt));
  if (name == "lof") {
    LofParams params;
    params.k_neighbors = opt.lof_k;
    params.lof_threshold = opt.lof_threshold;
    if (opt.sample_size > 0) params.sample_size = opt.sample_size;
    params.seed = {opt.seed};
    return lof_detect(data, params);
  }
  if (name == "msd-kmeans") {
    MsdKmeansParams params;
    params.msd.multiplier = opt.msd_multiplier;
    params.kmeans = kmeans_params(opt);
    return msd_kmeans_detect(data, params);
  }
  throw Error(ErrorCode::invalid_params, "unknown detector '" + name + "'");
}

json report_doc(const DetectionReport& report) {
  ClassCounts counts = count_classes(report);
  return json{{"detector", report.detector},
              {"n", report.verdicts.size()},
              {"counts",
               {{"normal", counts.normal},
                {"global_outliers", counts.global_outliers},
                {"local_outliers", counts.local_outliers}}},
              {"outliers", counts.outliers()},
              {"outlier_fraction", report.outlier_fraction},
              {"elapsed_ms", report.elapsed_ms},
              {"params", report.params}};
}

int cmd_detect(const Options& opt) {
  Dataset data = load_interchange_csv(opt.input);
  DetectionReport report = run_detector(opt.detector, data, opt);
  if (!opt.output.empty()) write_verdict_csv(report, opt.output);

  if (structured(opt)) {
    json doc = report_doc(report);
    doc["command"] = "detect";
    doc["input"] = opt.input;
    doc["seed"] = opt.seed;
    if (!opt.output.empty()) doc["output"] = opt.output;
    print_doc(doc);
  } else {
    std::cout << seed_line(opt) << "\n" << summarize(report) << "\n";
    if (!opt.output.empty()) std::cout << "verdicts: " << opt.output << "\n";
  }
  return 0;
}

int cmd_eval(const Options& opt) {
  Dataset data = load_interchange_csv(opt.input);
  if (!data.has_labels()) {
    throw Error(ErrorCode::invalid_params,
                "eval: labels required; " + opt.input + " has no label column");
  }
  std::vector<std::string> names = opt.detectors.empty() ? kAllDetectors : opt.detectors;

  std::vector<RankedEntry> entries;
  std::vector<json> params_echo;
  for (const std::string& name : names) {
    DetectionReport report = run_detector(name, data, opt);
    entries.push_back({name, evaluate(report, data.labels())});
    params_echo.push_back(report.params);
  }
  auto ranked = compare(std::move(entries));

  if (structured(opt)) {
    json rows = json::array();
    for (const RankedEntry& entry : ranked) {
      json row = to_json(entry.summary);
      row["name"] = entry.name;
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == entry.name) row["params"] = params_echo[i];
      }
      rows.push_back(std::move(row));
    }
    print_doc(json{{"command", "eval"},
                   {"input", opt.input},
                   {"seed", opt.seed},
                   {"n", data.size()},
                   {"entries", rows}});
  } else {
    std::cout << seed_line(opt) << "\n" << render_table(ranked);
  }
  return 0;
}

int cmd_synth(const Options& opt) {
  SynthSpec spec = load_synth_spec(opt.spec_path);
  if (opt.seed_given) spec.seed = {opt.seed};
  Dataset data = generate(spec);
  write_interchange_csv(data, opt.output);

  std::size_t outliers = spec.n_global + spec.n_local;
  if (structured(opt)) {
    print_doc(json{{"command", "synth"},
                   {"spec", opt.spec_path},
                   {"output", opt.output},
                   {"rows", data.size()},
                   {"outliers", outliers},
                   {"seed", spec.seed.value}});
  } else {
    std::cout << "seed: " << spec.seed.value << (opt.seed_given ? "" : " (from spec)")
              << "\n"
              << "wrote " << data.size() << " rows (" << outliers << " outliers) to "
              << opt.output << "\n";
  }
  return 0;
}

// Median of five runs; each entry is the detector's own elapsed_ms, so file
// IO and table rendering stay out of the measurement.
double median_of_five(const std::string& name, const Dataset& data, const Options& opt) {
  std::vector<double> times;
  for (int run = 0; run < 5; ++run) {
    times.push_back(run_detector(name, data, opt).elapsed_ms);
  }
  std::sort(times.begin(), times.end());
  return times[2];
}

int cmd_bench(const Options& opt) {
  Dataset data = load_interchange_csv(opt.input);
  std::vector<std::string> names = opt.detectors.empty() ? kAllDetectors : opt.detectors;

  struct Row {
    std::string label;
    double median_ms;
    std::optional<double> speedup;
  };
  std::vector<Row> rows;
  for (const std::string& name : names) {
    if (name == "kmeans" || name == "msd-kmeans") {
      Options serial = opt;
      serial.parallel = false;
      double serial_ms = median_of_five(name, data, serial);
      Options par = opt;
      par.parallel = true;
      double par_ms = median_of_five(name, data, par);
      rows.push_back({name + " serial", serial_ms, std::nullopt});
      rows.push_back({name + " parallel x" + std::to_string(opt.workers), par_ms,
                      par_ms > 0.0 ? std::optional<double>(serial_ms / par_ms)
                                   : std::nullopt});
    } else {
      rows.push_back({name, median_of_five(name, data, opt), std::nullopt});
    }
  }

  if (structured(opt)) {
    json entries = json::array();
    for (const Row& row : rows) {
      json entry{{"name", row.label}, {"median_ms", row.median_ms}};
      if (row.speedup) entry["speedup"] = *row.speedup;
      entries.push_back(std::move(entry));
    }
    print_doc(json{{"command", "bench"},
                   {"input", opt.input},
                   {"n", data.size()},
                   {"seed", opt.seed},
                   {"workers", opt.workers},
                   {"entries", entries}});
  } else {
    const std::string median_header = "Median (ms)";
    std::size_t width = 8;
    for (const Row& row : rows) width = std::max(width, row.label.size());
    std::cout << seed_line(opt) << "\n";
    std::cout << "Detector" << std::string(width - 8, ' ') << "  " << median_header
              << "  Speedup\n";
    for (const Row& row : rows) {
      std::string median = format_fixed(row.median_ms, 2);
      std::string pad(median_header.size() > median.size()
                          ? median_header.size() - median.size()
                          : 0,
                      ' ');
      std::string speedup = row.speedup ? format_fixed(*row.speedup, 2) + "x" : "-";
      std::cout << row.label << std::string(width - row.label.size(), ' ') << "  " << pad
                << median << "  " << speedup << "\n";
    }
  }
  return 0;
}

int cmd_report(const Options& opt) {
  Dataset features = load_interchange_csv(opt.input);
  std::vector<Verdict> verdicts = load_verdict_csv(opt.verdicts_path);
  if (verdicts.size() != features.size()) {
    throw Error(ErrorCode::schema_error,
                "report: " + std::to_string(verdicts.size()) + " verdicts for " +
                    std::to_string(features.size()) + " feature rows");
  }
  std::vector<bool> seen(features.size(), false);
  for (const Verdict& v : verdicts) {
    if (v.index >= features.size() || seen[v.index]) {
      throw Error(ErrorCode::schema_error,
                  "report: verdict indices do not match the feature file");
    }
    seen[v.index] = true;
  }

  namespace fs = std::filesystem;
  auto series_path = [&](const char* name) {
    return (fs::path(opt.output_dir) / name).string();
  };
  auto write_series = [&](const char* name, PointClass cls) {
    std::string path = series_path(name);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
    out << "index";
    for (std::size_t dim = 0; dim < features.dimension(); ++dim) out << ",feature_" << dim;
    out << ",score\n";
    std::size_t rows = 0;
    for (const Verdict& v : verdicts) {
      if (v.cls != cls) continue;
      out << v.index;
      for (std::size_t dim = 0; dim < features.dimension(); ++dim) {
        out << ',' << format_double(features.value(v.index, dim));
      }
      out << ',' << format_double(v.score) << "\n";
      ++rows;
    }
    if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
    return rows;
  };

  std::size_t normal_rows = write_series("normal.csv", PointClass::normal);
  std::size_t global_rows = write_series("global_outliers.csv", PointClass::global_outlier);
  std::size_t local_rows = write_series("local_outliers.csv", PointClass::local_outlier);

  if (structured(opt)) {
    print_doc(json{{"command", "report"},
                   {"input", opt.input},
                   {"verdicts", opt.verdicts_path},
                   {"series",
                    {{"normal", {{"path", series_path("normal.csv")}, {"rows", normal_rows}}},
                     {"global_outliers",
                      {{"path", series_path("global_outliers.csv")}, {"rows", global_rows}}},
                     {"local_outliers",
                      {{"path", series_path("local_outliers.csv")}, {"rows", local_rows}}}}}});
  } else {
    std::cout << "normal.csv: " << normal_rows << " rows\n"
              << "global_outliers.csv: " << global_rows << " rows\n"
              << "local_outliers.csv: " << local_rows << " rows\n";
  }
  return 0;
}

int cmd_extract(const Options& opt) {
  PairBoxes boxes = load_pair_boxes(opt.boxes_path);
  LoadResult loaded = load_csv(opt.input);
  PairExtraction pair = filter_pair(loaded.records, boxes.source, boxes.destination);
  write_interchange_csv(pair.dataset, opt.output);

  if (structured(opt)) {
    print_doc(json{{"command", "extract"},
                   {"input", opt.input},
                   {"boxes", opt.boxes_path},
                   {"output", opt.output},
                   {"parsed", loaded.records.size()},
                   {"dropped", loaded.dropped},
                   {"kept", pair.dataset.size()}});
  } else {
    std::cout << "parsed " << loaded.records.size() << " records (" << loaded.dropped
              << " dropped), kept " << pair.dataset.size() << ", wrote " << opt.output
              << "\n";
  }
  return 0;
}

void add_format_flag(CLI::App* cmd, Options& opt) {
  cmd->add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"text", "structured"}))
      ->capture_default_str();
}

CLI::Option* add_seed_flag(CLI::App* cmd, Options& opt) {
  return cmd->add_option("--seed", opt.seed, "Random seed for centroid init and sampling")
      ->capture_default_str();
}

void add_detector_params(CLI::App* cmd, Options& opt) {
  cmd->add_option("--k", opt.k, "Cluster count for the k-means stage")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--msd-multiplier", opt.msd_multiplier,
                  "Fence half-width in standard deviations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threshold-multiplier", opt.threshold_multiplier,
                  "Cluster threshold multiplier over distance sigma")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--z", opt.z, "Z-score cutoff")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--iqr-k", opt.iqr_k, "Quartile fence multiplier")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--lof-k", opt.lof_k, "Neighborhood size for LOF")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--lof-threshold", opt.lof_threshold, "LOF outlier cutoff")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sample-size", opt.sample_size,
                  "Subsample size for LOF scoring (scores only the sample)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--parallel", opt.parallel, "Run the k-means assignment step in parallel");
  cmd->add_option("--workers", opt.workers, "Worker threads for the parallel mode")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage and baseline outlier detection over indexed CSV data"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* detect = app.add_subcommand("detect", "Run one detector and write verdicts");
  detect->add_option("--detector", opt.detector, "Detector to run")
      ->required()
      ->check(CLI::IsMember(kAllDetectors));
  detect->add_option("--input", opt.input, "Interchange CSV to score")->required();
  detect->add_option("--output", opt.output, "Verdict CSV to write");
  CLI::Option* detect_seed = add_seed_flag(detect, opt);
  add_detector_params(detect, opt);
  add_format_flag(detect, opt);

  CLI::App* eval = app.add_subcommand("eval", "Score detectors against the label column");
  eval->add_option("--detector", opt.detectors,
                   "Detector to evaluate (repeatable; default: all)")
      ->check(CLI::IsMember(kAllDetectors));
  eval->add_option("--input", opt.input, "Labeled interchange CSV")->required();
  CLI::Option* eval_seed = add_seed_flag(eval, opt);
  add_detector_params(eval, opt);
  add_format_flag(eval, opt);

  CLI::App* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
  synth->add_option("--spec", opt.spec_path, "Synthetic spec config (key = value)")
      ->required();
  synth->add_option("--output", opt.output, "Interchange CSV to write")->required();
  CLI::Option* synth_seed = add_seed_flag(synth, opt);
  add_format_flag(synth, opt);

  CLI::App* bench = app.add_subcommand("bench", "Median-of-5 timings per detector");
  bench->add_option("--detector", opt.detectors,
                    "Detector to time (repeatable; default: all)")
      ->check(CLI::IsMember(kAllDetectors));
  bench->add_option("--input", opt.input, "Interchange CSV to time against")->required();
  CLI::Option* bench_seed = add_seed_flag(bench, opt);
  add_detector_params(bench, opt);
  add_format_flag(bench, opt);

  CLI::App* report = app.add_subcommand("report", "Split verdicts into per-class series");
  report->add_option("--input", opt.input, "Feature interchange CSV")->required();
  report->add_option("--verdicts", opt.verdicts_path, "Verdict CSV from detect")
      ->required();
  report->add_option("--output-dir", opt.output_dir, "Directory for the series files")
      ->capture_default_str();
  add_format_flag(report, opt);

  CLI::App* extract = app.add_subcommand("extract", "Geo-filter a taxi-trip CSV to fares");
  extract->add_option("--input", opt.input, "Raw trip CSV")->required();
  extract->add_option("--boxes", opt.boxes_path, "Source/destination box config")
      ->required();
  extract->add_option("--output", opt.output, "Interchange CSV to write")->required();
  add_format_flag(extract, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // help exits clean, usage mistakes exit 2
  }

  opt.seed_given = (detect_seed->count() > 0) || (eval_seed->count() > 0) ||
                   (synth_seed->count() > 0) || (bench_seed->count() > 0);

  try {
    if (detect->parsed()) return cmd_detect(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (synth->parsed()) return cmd_synth(opt);
    if (bench->parsed()) return cmd_bench(opt);
    if (report->parsed()) return cmd_report(opt);
    if (extract->parsed()) return cmd_extract(opt);
  } catch (const msdk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == msdk::ErrorCode::io_error ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;  // unreachable with require_subcommand(1)
}
