#include "msdk/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>

namespace msdk {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current += ch;
    }
  }
  fields.push_back(current);
  return fields;
}

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(out);
}

bool parse_size(const std::string& text, std::size_t& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::io_error, "cannot open " + path);
  }
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

// ---------------------------------------------------------------------------
// Taxi-trip CSV

LoadResult load_csv(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::schema_error, path + ": empty file, expected a header row");
  }
  auto header = split_csv_line(line);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position[trim(header[i])] = i;

  auto required = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) {
      throw Error(ErrorCode::schema_error, path + ": missing required column '" + name + "'");
    }
    return it->second;
  };
  auto optional = [&](const std::string& name) -> std::size_t {
    auto it = position.find(name);
    return it == position.end() ? header.size() : it->second;
  };

  std::size_t col_plon = required(mapping.pickup_longitude);
  std::size_t col_plat = required(mapping.pickup_latitude);
  std::size_t col_dlon = required(mapping.dropoff_longitude);
  std::size_t col_dlat = required(mapping.dropoff_latitude);
  std::size_t col_dist = required(mapping.trip_distance);
  std::size_t col_fare = required(mapping.fare_amount);
  std::size_t col_pass = optional(mapping.passenger_count);
  std::size_t col_ptime = optional(mapping.pickup_datetime);
  std::size_t col_dtime = optional(mapping.dropoff_datetime);

  LoadResult result;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      ++result.dropped;
      continue;
    }
    TripRecord rec;
    bool ok = parse_double(fields[col_plon], rec.pickup_longitude) &&
              parse_double(fields[col_plat], rec.pickup_latitude) &&
              parse_double(fields[col_dlon], rec.dropoff_longitude) &&
              parse_double(fields[col_dlat], rec.dropoff_latitude) &&
              parse_double(fields[col_dist], rec.trip_distance) &&
              parse_double(fields[col_fare], rec.fare_amount);
    if (!ok) {
      ++result.dropped;
      continue;
    }
    if (col_pass < header.size()) {
      double passengers = 0.0;
      if (parse_double(fields[col_pass], passengers)) {
        rec.passenger_count = static_cast<int>(passengers);
      }
    }
    if (col_ptime < header.size()) rec.pickup_datetime = fields[col_ptime];
    if (col_dtime < header.size()) rec.dropoff_datetime = fields[col_dtime];
    result.records.push_back(std::move(rec));
  }
  return result;
}

PairExtraction filter_pair(std::span<const TripRecord> records, const GeoBox& source,
                           const GeoBox& destination) {
  PairExtraction out{Dataset(1), {}, {}};
  for (std::size_t row = 0; row < records.size(); ++row) {
    const TripRecord& rec = records[row];
    if (!source.contains(rec.pickup_longitude, rec.pickup_latitude)) continue;
    if (!destination.contains(rec.dropoff_longitude, rec.dropoff_latitude)) continue;
    out.dataset.add({&rec.fare_amount, 1});
    out.distances.push_back(rec.trip_distance);
    out.source_rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset generate(const SynthSpec& spec) {
  if (spec.n_clusters == 0) {
    throw Error(ErrorCode::invalid_params, "generate: n_clusters must be >= 1");
  }
  if (spec.normal_sigma < 0.0) {
    throw Error(ErrorCode::invalid_params, "generate: normal_sigma must be >= 0");
  }
  if (spec.n_global > 0 && !(spec.global_offset > 0.0)) {
    throw Error(ErrorCode::invalid_params, "generate: global_offset must be positive");
  }
  if (spec.n_local > 0 && !(spec.local_offset > 0.0)) {
    throw Error(ErrorCode::invalid_params, "generate: local_offset must be positive");
  }

  auto center_of = [&](std::size_t mode) {
    return spec.normal_mean + static_cast<double>(mode) * 10.0 * spec.normal_sigma;
  };

  Rng rng(spec.seed);
  Dataset data(1);
  std::vector<Label> labels;
  labels.reserve(spec.n_normal + spec.n_global + spec.n_local);

  for (std::size_t i = 0; i < spec.n_normal; ++i) {
    double center = center_of(i % spec.n_clusters);
    double value = center;
    if (spec.normal_sigma > 0.0) {
      double z = 0.0;
      do {
        z = rng.normal();
      } while (std::abs(z) > 2.0);
      value = center + z * spec.normal_sigma;
    }
    data.add({&value, 1});
    labels.push_back(Label::normal);
  }
  for (std::size_t i = 0; i < spec.n_global; ++i) {
    double value = center_of(i % spec.n_clusters) + spec.global_offset;
    data.add({&value, 1});
    labels.push_back(Label::outlier);
  }
  for (std::size_t i = 0; i < spec.n_local; ++i) {
    double value = center_of(i % spec.n_clusters) + spec.local_offset;
    data.add({&value, 1});
    labels.push_back(Label::outlier);
  }
  data.set_labels(std::move(labels));
  return data;
}

// ---------------------------------------------------------------------------
// key = value configs

namespace {

std::map<std::string, std::string> load_key_values(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::schema_error,
                  path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw Error(ErrorCode::schema_error,
                  path + ":" + std::to_string(line_no) + ": empty key or value");
    }
    entries[key] = value;
  }
  return entries;
}

class KeyValueReader {
 public:
  KeyValueReader(std::string path, std::map<std::string, std::string> entries)
      : path_(std::move(path)), entries_(std::move(entries)) {}

  double get_double(const std::string& key, std::optional<double> fallback = {}) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (fallback) return *fallback;
      throw Error(ErrorCode::schema_error, path_ + ": missing key '" + key + "'");
    }
    used_.push_back(key);
    double value = 0.0;
    if (!parse_double(it->second, value)) {
      throw Error(ErrorCode::schema_error,
                  path_ + ": key '" + key + "' has non-numeric value '" + it->second + "'");
    }
    return value;
  }

  std::size_t get_size(const std::string& key, std::optional<std::size_t> fallback = {}) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (fallback) return *fallback;
      throw Error(ErrorCode::schema_error, path_ + ": missing key '" + key + "'");
    }
    used_.push_back(key);
    std::size_t value = 0;
    if (!parse_size(it->second, value)) {
      throw Error(ErrorCode::schema_error,
                  path_ + ": key '" + key + "' has non-integer value '" + it->second + "'");
    }
    return value;
  }

  void reject_unknown_keys() const {
    for (const auto& [key, value] : entries_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw Error(ErrorCode::schema_error, path_ + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  std::string path_;
  std::map<std::string, std::string> entries_;
  std::vector<std::string> used_;
};

}  // namespace

SynthSpec load_synth_spec(const std::string& path) {
  KeyValueReader reader(path, load_key_values(path));
  SynthSpec spec;
  spec.n_normal = reader.get_size("n_normal");
  spec.normal_mean = reader.get_double("normal_mean");
  spec.normal_sigma = reader.get_double("normal_sigma");
  spec.n_global = reader.get_size("n_global", std::size_t{0});
  spec.global_offset = reader.get_double("global_offset", 0.0);
  spec.n_local = reader.get_size("n_local", std::size_t{0});
  spec.local_offset = reader.get_double("local_offset", 0.0);
  spec.n_clusters = reader.get_size("n_clusters", std::size_t{1});
  spec.seed.value = reader.get_size("seed", std::size_t{0});
  reader.reject_unknown_keys();
  return spec;
}

PairBoxes load_pair_boxes(const std::string& path) {
  KeyValueReader reader(path, load_key_values(path));
  PairBoxes boxes;
  boxes.source.min_longitude = reader.get_double("source_min_longitude");
  boxes.source.max_longitude = reader.get_double("source_max_longitude");
  boxes.source.min_latitude = reader.get_double("source_min_latitude");
  boxes.source.max_latitude = reader.get_double("source_max_latitude");
  boxes.destination.min_longitude = reader.get_double("destination_min_longitude");
  boxes.destination.max_longitude = reader.get_double("destination_max_longitude");
  boxes.destination.min_latitude = reader.get_double("destination_min_latitude");
  boxes.destination.max_latitude = reader.get_double("destination_max_latitude");
  reader.reject_unknown_keys();
  return boxes;
}

// ---------------------------------------------------------------------------
// Interchange CSV

Dataset load_interchange_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::schema_error, path + ": empty file, expected a header row");
  }
  auto header = split_csv_line(line);
  if (header.empty() || trim(header[0]) != "index") {
    throw Error(ErrorCode::schema_error, path + ": first column must be 'index'");
  }
  bool labeled = header.size() > 1 && trim(header.back()) == "label";
  std::size_t dimension = header.size() - 1 - (labeled ? 1 : 0);
  if (dimension == 0) {
    throw Error(ErrorCode::schema_error, path + ": no feature columns");
  }
  for (std::size_t dim = 0; dim < dimension; ++dim) {
    std::string expected = "feature_" + std::to_string(dim);
    if (trim(header[1 + dim]) != expected) {
      throw Error(ErrorCode::schema_error,
                  path + ": column " + std::to_string(1 + dim) + " must be '" + expected + "'");
    }
  }

  Dataset data(dimension);
  std::vector<Label> labels;
  std::vector<double> point(dimension);
  std::size_t expected_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::schema_error,
                  path + ": row " + std::to_string(expected_index) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    std::size_t index = 0;
    if (!parse_size(fields[0], index) || index != expected_index) {
      throw Error(ErrorCode::schema_error,
                  path + ": expected index " + std::to_string(expected_index) + ", got '" +
                      fields[0] + "'");
    }
    for (std::size_t dim = 0; dim < dimension; ++dim) {
      if (!parse_double(fields[1 + dim], point[dim])) {
        throw Error(ErrorCode::schema_error,
                    path + ": row " + std::to_string(index) + " has non-numeric feature '" +
                        fields[1 + dim] + "'");
      }
    }
    data.add(point);
    if (labeled) {
      const std::string& raw = fields.back();
      if (raw == "1") {
        labels.push_back(Label::outlier);
      } else if (raw == "0") {
        labels.push_back(Label::normal);
      } else {
        throw Error(ErrorCode::schema_error,
                    path + ": row " + std::to_string(index) + " has label '" + raw +
                        "', expected 0 or 1");
      }
    }
    ++expected_index;
  }
  if (data.empty()) {
    throw Error(ErrorCode::schema_error, path + ": no data rows");
  }
  if (labeled) data.set_labels(std::move(labels));
  return data;
}

void write_interchange_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::io_error, "cannot write " + path);
  }
  out << "index";
  for (std::size_t dim = 0; dim < data.dimension(); ++dim) out << ",feature_" << dim;
  if (data.has_labels()) out << ",label";
  out << "\n";
  for (std::size_t row = 0; row < data.size(); ++row) {
    out << data.index_of(row);
    for (std::size_t dim = 0; dim < data.dimension(); ++dim) {
      out << ',' << format_double(data.value(row, dim));
    }
    if (data.has_labels()) out << ',' << (data.label(row) == Label::outlier ? '1' : '0');
    out << "\n";
  }
  if (!out) {
    throw Error(ErrorCode::io_error, "write failed: " + path);
  }
}

// ---------------------------------------------------------------------------
// Verdict CSV

void write_verdict_csv(const DetectionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::io_error, "cannot write " + path);
  }
  out << "index,class,stage,score\n";
  for (const Verdict& v : report.verdicts) {
    out << v.index << ',' << to_string(v.cls) << ',' << to_string(v.stage) << ','
        << format_double(v.score) << "\n";
  }
  if (!out) {
    throw Error(ErrorCode::io_error, "write failed: " + path);
  }
}

std::vector<Verdict> load_verdict_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::schema_error, path + ": empty file, expected a header row");
  }
  auto header = split_csv_line(line);
  if (header.size() != 4 || trim(header[0]) != "index" || trim(header[1]) != "class" ||
      trim(header[2]) != "stage" || trim(header[3]) != "score") {
    throw Error(ErrorCode::schema_error, path + ": header must be index,class,stage,score");
  }
  std::vector<Verdict> verdicts;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw Error(ErrorCode::schema_error, path + ": malformed verdict row '" + line + "'");
    }
    Verdict v;
    if (!parse_size(fields[0], v.index)) {
      throw Error(ErrorCode::schema_error, path + ": bad index '" + fields[0] + "'");
    }
    v.cls = point_class_from_string(trim(fields[1]));
    v.stage = stage_from_string(trim(fields[2]));
    if (!parse_double(fields[3], v.score)) {
      throw Error(ErrorCode::schema_error, path + ": bad score '" + fields[3] + "'");
    }
    verdicts.push_back(v);
  }
  return verdicts;
}

}  // namespace msdk
