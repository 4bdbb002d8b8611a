#include <doctest.h>

#ifdef DRIFTLAB_CLI_PATH

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "driftlab/events.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(DRIFTLAB_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "driftlab_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_losses(const fs::path& path, const std::vector<double>& values) {
  std::ofstream f(path);
  for (double v : values) f << v << '\n';
}

}  // namespace

TEST_CASE("cli: generate writes the stream and its manifest") {
  const auto dir = work_dir();
  const auto csv = dir / "gen.csv";
  CHECK(run_cli("generate --family mixed --n 500 --seed 3 --out " + csv.string()) == 0);
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(dir / "gen.csv.manifest.json"));
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  CHECK(header == "f0,f1,f2,f3,f4,f5,target,concept_id");

  CHECK(run_cli("generate --family nope --n 500 --out " + csv.string()) == 2);
  CHECK(run_cli("generate --family mixed") == 2);  // --out is required
  CHECK(run_cli("wat") == 2);                      // unknown subcommand
}

TEST_CASE("cli: detect runs a baseline over a loss file") {
  const auto dir = work_dir();
  const auto input = dir / "losses.txt";
  std::vector<double> values(500, 0.0);
  values.insert(values.end(), 300, 1.0);
  write_losses(input, values);

  const auto out = dir / "events.jsonl";
  CHECK(run_cli("detect --detector ddm --input " + input.string() + " --events-out " +
                out.string()) == 0);
  const auto lines = read_lines(out);
  REQUIRE(!lines.empty());
  for (const auto& line : lines) {
    const auto ev = driftlab::event_from_json_line(line);
    CHECK(ev.detector_id == "ddm");
    CHECK(ev.stream_index >= 500);
    CHECK(!ev.severity.has_value());  // baselines do not score severity
  }

  CHECK(run_cli("detect --detector ddm --input " + dir.string() + "/missing.txt") == 3);
  CHECK(run_cli("detect --detector mystery --input " + input.string()) == 2);

  // Config JSON must be an object.
  const auto cfg = dir / "det.json";
  std::ofstream(cfg) << "[1,2]";
  CHECK(run_cli("detect --detector ddm --config " + cfg.string() + " --input " +
                input.string()) == 2);

  // Values outside [0, 1] are a data error for ddm.
  const auto bad = dir / "bad.txt";
  write_losses(bad, {0.0, 0.5, 1.5});
  CHECK(run_cli("detect --detector ddm --input " + bad.string()) == 3);
  // Non-numeric rows are parse errors.
  std::ofstream(bad) << "0.1\noops\n";
  CHECK(run_cli("detect --detector ddm --input " + bad.string()) == 3);
}

TEST_CASE("cli: detect runs the threshold detector offline") {
  const auto dir = work_dir();
  const auto input = dir / "addm_losses.txt";
  write_losses(input, testsupport::step_values(2000, 1200, 0.2, 0.6, 0.03, 17));

  const auto cfg = dir / "addm.json";
  std::ofstream(cfg) << R"({"window": 400, "validation_len": 200, "seed": 5})";
  const auto out = dir / "addm_events.jsonl";
  CHECK(run_cli("detect --detector addm --config " + cfg.string() + " --input " +
                input.string() + " --events-out " + out.string()) == 0);
  const auto lines = read_lines(out);
  REQUIRE(!lines.empty());
  const auto ev = driftlab::event_from_json_line(lines[0]);
  CHECK(ev.detector_id == "addm");
  CHECK(ev.stream_index >= 1150);
  CHECK(ev.stream_index <= 1260);
  CHECK(ev.severity.has_value());
}

TEST_CASE("cli: bench synthetic emits a report directory") {
  const auto dir = work_dir();
  const auto cfg = dir / "bench.json";
  std::ofstream(cfg) << R"({
    "stream": {"family": "friedman", "n": 2000, "seed": 2},
    "seeds": [1],
    "detectors": [{"kind": "oracle"}]
  })";
  const auto out = dir / "bench_out";
  fs::remove_all(out);
  CHECK(run_cli("bench synthetic --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "report.csv"));
  CHECK(fs::exists(out / "plotdata.csv"));

  CHECK(run_cli("bench synthetic --config " + dir.string() + "/none.json --out " +
                out.string()) == 3);
  std::ofstream(cfg) << "{broken";
  CHECK(run_cli("bench synthetic --config " + cfg.string() + " --out " + out.string()) == 2);
  CHECK(run_cli("bench sideways --config " + cfg.string() + " --out " + out.string()) == 2);
}

TEST_CASE("cli: tune prints the winning parameters") {
  const auto dir = work_dir();
  const auto cfg = dir / "tune.json";
  std::ofstream(cfg) << R"({
    "stream": {"family": "friedman", "n": 2000, "seed": 2},
    "seeds": [1],
    "detectors": [{"kind": "adwin", "id": "adwin", "params": {"delta": 0.5}}]
  })";
  const auto grid = dir / "grid.json";
  std::ofstream(grid) << R"({"delta": [0.01]})";
  const auto out = dir / "tune_out.json";
  const std::string cmd = std::string(DRIFTLAB_CLI_PATH) + " tune --detector adwin --grid " +
                          grid.string() + " --input " + cfg.string() + " > " + out.string() +
                          " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CHECK(WEXITSTATUS(status) == 0);
  std::stringstream buf;
  buf << std::ifstream(out).rdbuf();
  CHECK(buf.str().find("\"best\"") != std::string::npos);
  CHECK(buf.str().find("\"delta\": 0.01") != std::string::npos);

  std::ofstream(grid) << R"({"delta": []})";
  CHECK(run_cli("tune --detector adwin --grid " + grid.string() + " --input " + cfg.string()) ==
        2);
}

#endif  // DRIFTLAB_CLI_PATH
