#pragma once

#include <cstdint>
#include <chrono>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace msdk {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  empty_dataset,
  insufficient_data,
  insufficient_survivors,
  dimension_mismatch,
  length_mismatch,
  single_stage_report,
  invalid_params,
  io_error,
  schema_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Dataset

using FeatureVector = std::vector<double>;

enum class Label : std::uint8_t { normal, outlier };

// Fixed-dimension point store. Rows keep the index they were created with,
// so subsets produced by filtering still report verdicts against the
// original indexing. All values are finite; add() rejects NaN/inf so the
// detectors never have to re-check.
class Dataset {
 public:
  explicit Dataset(std::size_t dimension);

  static Dataset univariate(std::vector<double> values);

  void add(std::span<const double> point);
  void add(std::initializer_list<double> point) {
    add(std::span<const double>(point.begin(), point.size()));
  }

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t dimension() const { return dimension_; }

  std::span<const double> point(std::size_t row) const {
    return {values_.data() + row * dimension_, dimension_};
  }
  double value(std::size_t row, std::size_t dim = 0) const {
    return values_[row * dimension_ + dim];
  }
  std::size_t index_of(std::size_t row) const { return indices_[row]; }

  // Flat row-major storage, for the clustering hot loops.
  const std::vector<double>& raw() const { return values_; }

  std::vector<double> column(std::size_t dim) const;

  bool has_labels() const { return !labels_.empty(); }
  Label label(std::size_t row) const { return labels_[row]; }
  const std::vector<Label>& labels() const { return labels_; }
  void set_labels(std::vector<Label> labels);

  // Rows where keep[row] is true, original indices (and labels) retained.
  Dataset subset(const std::vector<bool>& keep) const;
  Dataset subset_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t dimension_;
  std::vector<double> values_;
  std::vector<std::size_t> indices_;
  std::vector<Label> labels_;
};

// ---------------------------------------------------------------------------
// Verdicts and reports

enum class PointClass : std::uint8_t { normal, global_outlier, local_outlier };
enum class Stage : std::uint8_t { msd, kmeans, single };

const char* to_string(PointClass cls);
const char* to_string(Stage stage);
PointClass point_class_from_string(const std::string& text);
Stage stage_from_string(const std::string& text);

struct Verdict {
  std::size_t index = 0;
  PointClass cls = PointClass::normal;
  Stage stage = Stage::single;
  double score = 0.0;

  bool is_outlier() const { return cls != PointClass::normal; }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct ClassCounts {
  std::size_t normal = 0;
  std::size_t global_outliers = 0;
  std::size_t local_outliers = 0;

  std::size_t outliers() const { return global_outliers + local_outliers; }
  std::size_t total() const { return normal + outliers(); }
};

struct DetectionReport {
  std::string detector;
  std::vector<Verdict> verdicts;  // ascending by index
  double outlier_fraction = 0.0;  // exact ratio outliers / verdicts.size()
  double elapsed_ms = 0.0;
  json params;  // echo of every parameter that shaped the run, seed included
};

// Sorts verdicts by index and fills in the outlier fraction.
DetectionReport finish_report(std::string detector, std::vector<Verdict> verdicts,
                              double elapsed_ms, json params);

ClassCounts count_classes(const DetectionReport& report);

// One-line human summary: counts per class, outlier percentage, timing.
std::string summarize(const DetectionReport& report);

// Equality modulo elapsed_ms. Wall-clock time is the one field two otherwise
// identical runs legitimately disagree on.
bool deterministic_equal(const DetectionReport& a, const DetectionReport& b);

// ---------------------------------------------------------------------------
// Randomness

// 64-bit seed; equal seeds on equal input give bit-identical results.
struct RngSeed {
  std::uint64_t value = 0;
};

// Deterministic generator: mt19937_64 is fully pinned by the standard, and
// the derived draws below avoid std distributions (whose algorithms are
// implementation-defined) so outputs are stable across toolchains.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  std::uint64_t next() { return engine_(); }

  // Unbiased uniform in [0, bound) via power-of-two mask rejection.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [0, 1), 53-bit resolution.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller, spare cached.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // k distinct values from [0, n), Floyd's sampling. Requires k <= n.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// ---------------------------------------------------------------------------
// Timing

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

// snprintf-backed "%.*f" (the toolchain lacks <format>).
std::string format_fixed(double value, int decimals);

}  // namespace msdk
