#pragma once

#include <string>

#include "msdk/core.hpp"

namespace msdk {

// ---------------------------------------------------------------------------
// Taxi-trip CSV ingestion

struct TripRecord {
  double pickup_longitude = 0.0;
  double pickup_latitude = 0.0;
  double dropoff_longitude = 0.0;
  double dropoff_latitude = 0.0;
  double trip_distance = 0.0;
  double fare_amount = 0.0;
  int passenger_count = 0;
  std::string pickup_datetime;
  std::string dropoff_datetime;
};

// CSV header names for the fields above. Defaults match the 2016-era
// yellow-taxi layout.
struct ColumnMapping {
  std::string pickup_longitude = "pickup_longitude";
  std::string pickup_latitude = "pickup_latitude";
  std::string dropoff_longitude = "dropoff_longitude";
  std::string dropoff_latitude = "dropoff_latitude";
  std::string trip_distance = "trip_distance";
  std::string fare_amount = "fare_amount";
  std::string passenger_count = "passenger_count";     // optional column
  std::string pickup_datetime = "tpep_pickup_datetime";    // optional column
  std::string dropoff_datetime = "tpep_dropoff_datetime";  // optional column
};

struct LoadResult {
  std::vector<TripRecord> records;
  std::size_t dropped = 0;  // rows with unparsable or non-finite mapped fields
};

// Streams the file; never loads it whole. Missing file: io_error. Mapped
// coordinate/distance/fare columns absent from the header: schema_error.
// Bad rows are dropped and counted, never patched.
LoadResult load_csv(const std::string& path, const ColumnMapping& mapping = {});

// Inclusive longitude/latitude box.
struct GeoBox {
  double min_longitude = 0.0;
  double max_longitude = 0.0;
  double min_latitude = 0.0;
  double max_latitude = 0.0;

  bool contains(double longitude, double latitude) const {
    return longitude >= min_longitude && longitude <= max_longitude &&
           latitude >= min_latitude && latitude <= max_latitude;
  }
};

struct PairBoxes {
  GeoBox source;
  GeoBox destination;
};

struct PairExtraction {
  Dataset dataset;                       // univariate fares, indices 0..m-1
  std::vector<double> distances;         // trip distance per kept row, for plots
  std::vector<std::size_t> source_rows;  // position in the input record span
};

// Keeps trips that pick up inside source and drop off inside destination.
PairExtraction filter_pair(std::span<const TripRecord> records, const GeoBox& source,
                           const GeoBox& destination);

// ---------------------------------------------------------------------------
// Labeled synthetic data

struct SynthSpec {
  std::size_t n_normal = 0;
  double normal_mean = 0.0;
  double normal_sigma = 1.0;
  std::size_t n_global = 0;
  double global_offset = 0.0;  // added to a mode center, beyond the fence band
  std::size_t n_local = 0;
  double local_offset = 0.0;   // added to a mode center, in the 2-3 sigma band
  std::size_t n_clusters = 1;
  RngSeed seed{};
};

// Univariate labeled generator. Mode j is centered at
// normal_mean + j * 10 * normal_sigma. Normal draws are rejected back inside
// center +/- 2 sigma so the offset bands stay free of normal mass and the
// labels remain learnable. Outliers sit exactly at center + offset. Row
// order: normals (modes round-robin), then globals, then locals.
Dataset generate(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Plain key = value config files ('#' comments, blank lines ignored)

SynthSpec load_synth_spec(const std::string& path);
PairBoxes load_pair_boxes(const std::string& path);

// ---------------------------------------------------------------------------
// Interchange CSV: header "index,feature_0[,feature_1,...][,label]",
// index ascending from 0, label 1 = outlier / 0 = normal, features written
// with shortest round-trip formatting so read(write(x)) == x bit-exactly.

Dataset load_interchange_csv(const std::string& path);
void write_interchange_csv(const Dataset& data, const std::string& path);

// Verdict CSV: header "index,class,stage,score", one row per point,
// ascending by index.

void write_verdict_csv(const DetectionReport& report, const std::string& path);
std::vector<Verdict> load_verdict_csv(const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace msdk
