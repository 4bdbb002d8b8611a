#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace driftlab {

struct StreamRecord {
  std::vector<double> features;
  double target = 0.0;
  int concept_id = 0;  // -1 when the source does not carry concept labels
};

enum class Transition { Abrupt, Gradual };

struct DriftSchedule {
  std::vector<std::int64_t> change_points;  // strictly increasing, first sample of each new concept
  Transition transition = Transition::Abrupt;
  std::int64_t gradual_width = 0;  // ramp length in samples (Gradual only)
  std::vector<int> concept_sequence;  // length = change_points.size() + 1

  void validate(std::int64_t n_samples) const;  // throws BadSpec
};

enum class StreamFamily {
  Friedman,           // regression, 3 drifts, returns to the initial concept
  FriedmanNoReturn,   // regression, 6 drifts, never revisits a concept
  Brieman,            // regression (2dplanes), 6 drifts
  Mixed,              // classification, 3 drifts, rule inversion
  Agrawal32,          // classification, function 3 -> 2
  Agrawal3213,        // classification, functions 3 -> 2 -> 1 -> 3 -> 2
};

bool is_classification(StreamFamily family);
int feature_count(StreamFamily family);
std::string family_name(StreamFamily family);
StreamFamily family_from_name(const std::string& name);  // throws BadSpec

// Family default: equally spaced change points with the family's canonical
// concept sequence.
DriftSchedule default_schedule(StreamFamily family, std::int64_t n_samples);

struct GeneratorSpec {
  StreamFamily family = StreamFamily::Friedman;
  std::int64_t n_samples = 20000;
  double noise_sigma = 1.0;  // target noise, regression families only
  std::uint64_t seed = 1;
  DriftSchedule schedule;  // empty change_points + empty sequence -> default_schedule

  void validate() const;  // throws BadSpec
};

struct GeneratedStream {
  std::vector<StreamRecord> records;
  DriftSchedule schedule;  // the manifest actually used
};

// Deterministic in the spec: identical specs give byte-identical records.
GeneratedStream generate(const GeneratorSpec& spec);

// CSV with header f0..f{k-1},target,concept_id; doubles in shortest
// round-trip form.
void write_stream_csv(const std::string& path, const std::vector<StreamRecord>& records);
std::string schedule_to_json(const DriftSchedule& schedule);
DriftSchedule schedule_from_json(const std::string& text);
void write_manifest_json(const std::string& path, const DriftSchedule& schedule);
DriftSchedule read_manifest_json(const std::string& path);

struct IngestOptions {
  std::string target_column = "target";
  std::vector<std::string> feature_columns;  // empty: every column except target/concept_id
  enum class Normalization { None, MinMax, ZScore };
  Normalization normalization = Normalization::None;
  // Rows used for normalization statistics; required (> 0) when normalization
  // is enabled so no statistic ever looks ahead of the declared prefix.
  std::size_t normalization_prefix = 0;
};

std::vector<StreamRecord> ingest_csv(const std::string& path, const IngestOptions& opts);

}  // namespace driftlab
