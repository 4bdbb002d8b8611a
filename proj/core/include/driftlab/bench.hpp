#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "driftlab/adaptation.hpp"
#include "driftlab/addm.hpp"
#include "driftlab/baselines.hpp"
#include "driftlab/events.hpp"
#include "driftlab/streams.hpp"

namespace driftlab {

// One detector entry in a benchmark run.  kind selects the implementation:
// "addm", a baseline kind name, or two harness self-test detectors: "oracle"
// (fires exactly at the true change points) and "periodic" (fires every
// `period` samples, from params).
struct BenchDetectorSpec {
  std::string id;
  std::string kind = "addm";
  AddmConfig addm{};           // used when kind == "addm"
  BaselineConfig baseline{};   // used for baseline kinds; params also feeds "periodic"
};

struct BenchConfig {
  // Stream source: the generator spec, or an ingested CSV when ingest_path is
  // set (schedule then comes from manifest_path, or is empty).
  GeneratorSpec stream{};
  std::string ingest_path;
  IngestOptions ingest{};
  std::string manifest_path;
  bool classification = false;  // ingested streams only; synthetic infer from family

  std::vector<std::uint64_t> seeds = {1};
  std::vector<BenchDetectorSpec> detectors;
  std::int64_t match_tolerance = 500;

  // Learner: linear for regression families, logistic for classification.
  double learning_rate = 0.05;
  int train_epochs = 5;

  // Loss protocol.
  CombineMode combine_mode = CombineMode::WeightAverage;
  int adapt_epochs = 5;
  std::size_t min_recent = 200;     // post-drift samples to wait for before retraining
  std::int64_t eval_window = 1000;  // post-retrain samples scored by the loss metric

  void validate() const;  // throws BadConfig
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  int tp = 0;
  int fa = 0;
  double mean_delay = 0.0;   // mean stream_index - true drift over matched events
  double mtd_seconds = 0.0;  // mean detector compute time per matched event
  double loss = 0.0;         // loss protocol only
  int nb_retrain = 0;        // loss protocol only
  std::vector<DriftEvent> events;
};

struct DetectorSummary {
  std::string id;
  double tp = 0.0;  // per-seed means
  double fa = 0.0;
  double mean_delay = 0.0;
  double mtd_seconds = 0.0;
  double loss = 0.0;
  double nb_retrain = 0.0;
  std::vector<SeedOutcome> per_seed;
};

struct BenchReport {
  std::string protocol;  // "synthetic" or "loss"
  GeneratorSpec stream{};
  std::int64_t match_tolerance = 500;
  std::vector<std::int64_t> true_change_points;
  std::vector<DetectorSummary> detectors;
};

// Greedy in stream order: each event matches the earliest unmatched true
// drift c with c <= stream_index <= c + tolerance; unmatched events are false
// alarms.  Returns (tp, fa, matched (event, drift) pairs).
struct MatchResult {
  int tp = 0;
  int fa = 0;
  std::vector<std::pair<DriftEvent, std::int64_t>> matched;
};
MatchResult match_events(const std::vector<DriftEvent>& events,
                         const std::vector<std::int64_t>& true_drifts, std::int64_t tolerance);

// Detection protocol: per seed, train a model on the pre-drift prefix, stream
// its losses through every detector, and score events against the manifest.
BenchReport run_synthetic(const BenchConfig& cfg);

// Adaptation protocol: like run_synthetic, but each detection triggers a
// model update (severity-weighted aggregation for ADDM entries, retrain from
// scratch for baselines) and the tracked metric is the mean streamed loss.
BenchReport run_loss_protocol(const BenchConfig& cfg);

// Exhaustive grid search for one detector: score = TP - FA summed over seeds,
// ties broken by smaller mean delay, then by grid order.
struct TuneResult {
  std::map<std::string, double> best;
  double score = 0.0;
  double tp = 0.0;
  double fa = 0.0;
  double mean_delay = 0.0;
};
TuneResult tune_detector(const BenchConfig& base, const BenchDetectorSpec& detector,
                         const std::map<std::string, std::vector<double>>& grid);

// report.json (full, machine-readable), report.csv (one summary row per
// detector), plotdata.csv (true drifts + event rasters).
void emit_report(const BenchReport& report, const std::string& out_dir);

std::string report_to_json(const BenchReport& report);

// JSON config parsers; malformed input throws BadConfig.
BenchConfig parse_bench_config(const std::string& json_text);
AddmConfig parse_addm_config(const std::string& json_text);
BaselineConfig parse_baseline_config(const std::string& json_text);

}  // namespace driftlab
