// driftlab CLI: generate synthetic drift streams, run detectors over recorded
// loss series, and drive the benchmark protocols.
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftlab/addm.hpp"
#include "driftlab/baselines.hpp"
#include "driftlab/bench.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/events.hpp"
#include "driftlab/streams.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw driftlab::IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// One value per line; a single leading non-numeric line is accepted as a
// header.  Blank lines are skipped.
std::vector<double> read_value_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw driftlab::IoError("cannot open '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b + 1, v);
    if (ec != std::errc() || ptr != line.data() + b + 1) {
      if (row == 1 && values.empty()) continue;  // header line
      throw driftlab::ParseError("row " + std::to_string(row) + ": not a number: " + line);
    }
    values.push_back(v);
  }
  return values;
}

void write_events(const std::vector<driftlab::DriftEvent>& events, const std::string& path) {
  if (path == "-") {
    for (const auto& ev : events) std::cout << driftlab::event_json_line(ev) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw driftlab::IoError("cannot open '" + path + "'");
  for (const auto& ev : events) f << driftlab::event_json_line(ev) << '\n';
  if (!f) throw driftlab::IoError("short write to '" + path + "'");
}

void run_generate(const std::string& family, std::int64_t n, double sigma, std::uint64_t seed,
                  const std::string& schedule_path, const std::string& out) {
  driftlab::GeneratorSpec spec;
  spec.family = driftlab::family_from_name(family);
  spec.n_samples = n;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  if (!schedule_path.empty()) spec.schedule = driftlab::read_manifest_json(schedule_path);
  const auto stream = driftlab::generate(spec);
  driftlab::write_stream_csv(out, stream.records);
  driftlab::write_manifest_json(out + ".manifest.json", stream.schedule);
  std::cout << stream.records.size() << " records -> " << out << '\n';
}

void run_detect(const std::string& detector, const std::string& config_path,
                const std::string& input, const std::string& events_out) {
  nlohmann::json cfg_json = nlohmann::json::object();
  if (!config_path.empty()) {
    try {
      cfg_json = nlohmann::json::parse(read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw driftlab::BadConfig(std::string("detector config: ") + e.what());
    }
    if (!cfg_json.is_object()) {
      throw driftlab::BadConfig("detector config must be a JSON object");
    }
  }

  const std::vector<double> values = read_value_file(input);
  std::vector<driftlab::DriftEvent> events;

  if (detector == "addm") {
    std::size_t validation_len = 0;
    if (cfg_json.contains("validation_len")) {
      validation_len = cfg_json["validation_len"].get<std::size_t>();
      cfg_json.erase("validation_len");
    }
    const auto cfg = driftlab::parse_addm_config(cfg_json.dump());
    events = driftlab::detect_offline(driftlab::make_series(values, 0), cfg, validation_len);
  } else {
    cfg_json["kind"] = detector;
    const auto cfg = driftlab::parse_baseline_config(cfg_json.dump());
    auto det = driftlab::make_baseline(cfg);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (det->observe(values[i]) == driftlab::Signal::Drift) {
        driftlab::DriftEvent ev;
        ev.detector_id = detector;
        ev.stream_index = static_cast<std::int64_t>(i);
        ev.detected_at_index = static_cast<std::int64_t>(i);
        events.push_back(std::move(ev));
      }
    }
  }
  write_events(events, events_out);
  if (events_out != "-") {
    std::cout << events.size() << " events -> " << events_out << '\n';
  }
}

void run_bench(bool loss_protocol, const std::string& config_path, const std::string& out_dir) {
  const auto cfg = driftlab::parse_bench_config(read_file(config_path));
  const auto report =
      loss_protocol ? driftlab::run_loss_protocol(cfg) : driftlab::run_synthetic(cfg);
  driftlab::emit_report(report, out_dir);
  std::cout << "report -> " << out_dir << "/report.json\n";
}

void run_tune(const std::string& detector, const std::string& grid_path,
              const std::string& input) {
  const auto cfg = driftlab::parse_bench_config(read_file(input));

  driftlab::BenchDetectorSpec spec;
  bool found = false;
  for (const auto& d : cfg.detectors) {
    if (d.id == detector) {
      spec = d;
      found = true;
      break;
    }
  }
  if (!found) {  // bare kind name: tune that detector with its defaults
    spec.id = detector;
    spec.kind = detector;
    if (detector != "addm") spec.baseline.kind = driftlab::baseline_kind_from_name(detector);
  }

  std::map<std::string, std::vector<double>> grid;
  try {
    const auto gj = nlohmann::json::parse(read_file(grid_path));
    for (const auto& [k, v] : gj.items()) grid[k] = v.get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw driftlab::BadConfig(std::string("grid: ") + e.what());
  }

  const auto best = driftlab::tune_detector(cfg, spec, grid);
  nlohmann::ordered_json j;
  j["detector"] = spec.id;
  j["best"] = best.best;
  j["score"] = best.score;
  j["tp"] = best.tp;
  j["fa"] = best.fa;
  j["mean_delay_samples"] = best.mean_delay;
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftlab: streaming concept-drift detection and adaptation"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic drift stream as CSV + manifest");
  std::string gen_family;
  std::int64_t gen_n = 20000;
  double gen_sigma = 1.0;
  std::uint64_t gen_seed = 1;
  std::string gen_schedule, gen_out;
  gen->add_option("--family", gen_family,
                  "friedman|friedman_noreturn|brieman|mixed|agrawal32|agrawal3213")
      ->required();
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--sigma", gen_sigma, "target noise sigma (regression families)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--schedule", gen_schedule, "drift schedule JSON (default: family schedule)");
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->callback([&] { run_generate(gen_family, gen_n, gen_sigma, gen_seed, gen_schedule, gen_out); });

  auto* det = app.add_subcommand("detect", "Run one detector over a recorded value series");
  std::string det_kind, det_config, det_input, det_out = "-";
  det->add_option("--detector", det_kind, "addm|ddm|eddm|adwin|ph|kswin|hddm_a|hddm_w")
      ->required();
  det->add_option("--config", det_config, "detector config JSON");
  det->add_option("--input", det_input, "value series, one number per line")->required();
  det->add_option("--events-out", det_out, "events JSONL path ('-' = stdout)");
  det->callback([&] { run_detect(det_kind, det_config, det_input, det_out); });

  auto* bench = app.add_subcommand("bench", "Run a benchmark protocol from a config file");
  bench->require_subcommand(1);
  std::string bench_config, bench_out;
  auto add_bench = [&](const char* name, const char* help, bool loss) {
    auto* sub = bench->add_subcommand(name, help);
    sub->add_option("--config", bench_config, "bench config JSON")->required();
    sub->add_option("--out", bench_out, "output directory")->required();
    sub->callback([&, loss] { run_bench(loss, bench_config, bench_out); });
  };
  add_bench("synthetic", "Detection scoring against the stream manifest", false);
  add_bench("loss", "Adaptation protocol tracking the post-retrain loss", true);

  auto* tune = app.add_subcommand("tune", "Grid-search one detector's parameters");
  std::string tune_detector, tune_grid, tune_input;
  tune->add_option("--detector", tune_detector, "detector id from the config, or a kind name")
      ->required();
  tune->add_option("--grid", tune_grid, "JSON object: parameter -> list of values")->required();
  tune->add_option("--input", tune_input, "bench config JSON describing the experimental set")
      ->required();
  tune->callback([&] { run_tune(tune_detector, tune_grid, tune_input); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const driftlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const driftlab::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
