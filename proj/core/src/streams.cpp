#include "driftlab/streams.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/random.hpp"

namespace driftlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("formatting a double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& field, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("row " + std::to_string(row) + " column " + std::to_string(col) + ": '" +
                     field + "'");
  }
  if (!std::isfinite(v)) {
    throw NonFiniteValue("row " + std::to_string(row) + " column " + std::to_string(col));
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// --- family mechanics -------------------------------------------------------

// Friedman concepts permute which features fill the five functional roles and
// shift the distribution of the strongest linear-role feature, so successive
// concepts change both the response surface and the target mean.
struct FriedmanConcept {
  int role[5];
  double shift;
};

FriedmanConcept friedman_concept(int c) {
  FriedmanConcept fc;
  for (int j = 0; j < 5; ++j) fc.role[j] = (3 * c + j) % 10;
  fc.shift = 0.225 * static_cast<double>(c % 3);
  return fc;
}

double friedman_target(const std::vector<double>& x, int concept_id, double noise) {
  const auto fc = friedman_concept(concept_id);
  const double a = x[fc.role[0]];
  const double b = x[fc.role[1]];
  const double c2 = x[fc.role[2]];
  const double d = x[fc.role[3]];
  const double e = x[fc.role[4]];
  return 10.0 * std::sin(kPi * a * b) + 20.0 * (c2 - 0.5) * (c2 - 0.5) + 10.0 * d + 5.0 * e +
         noise;
}

// 2dplanes with a sign flip of the x1<0 plane on odd concepts: both the
// response surface and the target mean move at every drift.
double brieman_target(const std::vector<double>& x, int concept_id, double noise) {
  double y;
  if (x[0] > 0.0) {
    y = 3.0 + 3.0 * x[1] + 2.0 * x[2] + x[3];
  } else {
    const double s = concept_id % 2 == 0 ? 1.0 : -1.0;
    y = s * (-3.0 + 3.0 * x[4] + 2.0 * x[5] + x[6]);
  }
  return y + noise;
}

// Mixed: class 1 iff at least two of {b1, b2, y2 below the sine boundary};
// odd concepts invert the rule.  The booleans are Bernoulli(0.65) so the
// inversion moves the class prior, not only the decision boundary.
double mixed_target(const std::vector<double>& x, int concept_id) {
  const bool c1 = x[0] > 0.5;
  const bool c2 = x[1] > 0.5;
  const bool c3 = x[3] < 0.5 + 0.3 * std::sin(3.0 * kPi * x[2]);
  const int votes = static_cast<int>(c1) + static_cast<int>(c2) + static_cast<int>(c3);
  bool cls = votes >= 2;
  if (concept_id % 2 == 1) cls = !cls;
  return cls ? 1.0 : 0.0;
}

// Agrawal attribute order: salary, commission, age, elevel, car, zipcode,
// hvalue, hyears, loan.
double agrawal_target(const std::vector<double>& x, int function_id) {
  const double salary = x[0];
  const double age = x[2];
  const double elevel = x[3];
  bool group_a = false;
  switch (function_id) {
    case 1:
      group_a = age < 40.0 || age >= 60.0;
      break;
    case 2:
      group_a = (age < 40.0 && salary >= 50000.0 && salary <= 100000.0) ||
                (age >= 40.0 && age < 60.0 && salary >= 75000.0 && salary <= 125000.0) ||
                (age >= 60.0 && salary >= 25000.0 && salary <= 75000.0);
      break;
    case 3:
      group_a = (age < 40.0 && elevel >= 0.0 && elevel <= 1.0) ||
                (age >= 40.0 && age < 60.0 && elevel >= 1.0 && elevel <= 3.0) ||
                (age >= 60.0 && elevel >= 2.0 && elevel <= 4.0);
      break;
    default:
      throw BadSpec("agrawal function must be 1, 2, or 3, got " + std::to_string(function_id));
  }
  return group_a ? 1.0 : 0.0;
}

std::vector<double> draw_features(StreamFamily family, int concept_id, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (family) {
    case StreamFamily::Friedman:
    case StreamFamily::FriedmanNoReturn: {
      std::vector<double> x(10);
      for (auto& v : x) v = unit(rng);
      const auto fc = friedman_concept(concept_id);
      x[fc.role[3]] += fc.shift;  // concept-shifted linear-role feature
      return x;
    }
    case StreamFamily::Brieman: {
      std::vector<double> x(10);
      std::bernoulli_distribution sign(0.5);
      x[0] = sign(rng) ? 1.0 : -1.0;
      std::uniform_real_distribution<double> sym(-1.0, 1.0);
      for (int i = 1; i < 10; ++i) x[static_cast<std::size_t>(i)] = sym(rng);
      return x;
    }
    case StreamFamily::Mixed: {
      std::vector<double> x(6);
      std::bernoulli_distribution boolean(0.65);
      x[0] = boolean(rng) ? 1.0 : 0.0;
      x[1] = boolean(rng) ? 1.0 : 0.0;
      x[2] = unit(rng);  // y1
      x[3] = unit(rng);  // y2
      x[4] = unit(rng);
      x[5] = unit(rng);
      return x;
    }
    case StreamFamily::Agrawal32:
    case StreamFamily::Agrawal3213: {
      std::vector<double> x(9);
      x[0] = std::uniform_real_distribution<double>(20000.0, 150000.0)(rng);  // salary
      x[1] = x[0] >= 75000.0
                 ? 0.0
                 : std::uniform_real_distribution<double>(10000.0, 75000.0)(rng);  // commission
      x[2] = static_cast<double>(std::uniform_int_distribution<int>(20, 80)(rng));  // age
      x[3] = static_cast<double>(std::uniform_int_distribution<int>(0, 4)(rng));    // elevel
      x[4] = static_cast<double>(std::uniform_int_distribution<int>(1, 20)(rng));   // car
      x[5] = static_cast<double>(std::uniform_int_distribution<int>(0, 8)(rng));    // zipcode
      x[6] = (9.0 - x[5]) * 100000.0 *
             std::uniform_real_distribution<double>(0.5, 1.5)(rng);                   // hvalue
      x[7] = static_cast<double>(std::uniform_int_distribution<int>(1, 30)(rng));     // hyears
      x[8] = std::uniform_real_distribution<double>(0.0, 500000.0)(rng);              // loan
      return x;
    }
  }
  throw BadSpec("unknown stream family");
}

}  // namespace

bool is_classification(StreamFamily family) {
  switch (family) {
    case StreamFamily::Mixed:
    case StreamFamily::Agrawal32:
    case StreamFamily::Agrawal3213:
      return true;
    default:
      return false;
  }
}

int feature_count(StreamFamily family) {
  switch (family) {
    case StreamFamily::Friedman:
    case StreamFamily::FriedmanNoReturn:
    case StreamFamily::Brieman:
      return 10;
    case StreamFamily::Mixed:
      return 6;
    case StreamFamily::Agrawal32:
    case StreamFamily::Agrawal3213:
      return 9;
  }
  throw BadSpec("unknown stream family");
}

std::string family_name(StreamFamily family) {
  switch (family) {
    case StreamFamily::Friedman:
      return "friedman";
    case StreamFamily::FriedmanNoReturn:
      return "friedman_noreturn";
    case StreamFamily::Brieman:
      return "brieman";
    case StreamFamily::Mixed:
      return "mixed";
    case StreamFamily::Agrawal32:
      return "agrawal32";
    case StreamFamily::Agrawal3213:
      return "agrawal3213";
  }
  throw BadSpec("unknown stream family");
}

StreamFamily family_from_name(const std::string& name) {
  if (name == "friedman") return StreamFamily::Friedman;
  if (name == "friedman_noreturn") return StreamFamily::FriedmanNoReturn;
  if (name == "brieman") return StreamFamily::Brieman;
  if (name == "mixed") return StreamFamily::Mixed;
  if (name == "agrawal32") return StreamFamily::Agrawal32;
  if (name == "agrawal3213") return StreamFamily::Agrawal3213;
  throw BadSpec("unknown stream family '" + name + "'");
}

void DriftSchedule::validate(std::int64_t n_samples) const {
  for (std::size_t i = 0; i < change_points.size(); ++i) {
    if (change_points[i] <= 0 || change_points[i] >= n_samples) {
      throw BadSpec("change point " + std::to_string(change_points[i]) +
                    " outside (0, n_samples)");
    }
    if (i > 0 && change_points[i] <= change_points[i - 1]) {
      throw BadSpec("change points must be strictly increasing");
    }
  }
  if (concept_sequence.size() != change_points.size() + 1) {
    throw BadSpec("concept_sequence length must be change_points length + 1");
  }
  for (std::size_t i = 1; i < concept_sequence.size(); ++i) {
    if (concept_sequence[i] == concept_sequence[i - 1]) {
      throw BadSpec("adjacent concepts must differ");
    }
  }
  if (transition == Transition::Gradual) {
    if (gradual_width < 1) throw BadSpec("gradual transition needs gradual_width >= 1");
    for (std::size_t i = 0; i < change_points.size(); ++i) {
      const std::int64_t end = change_points[i] + gradual_width;
      const std::int64_t next = i + 1 < change_points.size() ? change_points[i + 1] : n_samples;
      if (end > next) throw BadSpec("gradual ramps must not overlap");
    }
  }
}

DriftSchedule default_schedule(StreamFamily family, std::int64_t n_samples) {
  DriftSchedule s;
  std::vector<int> seq;
  switch (family) {
    case StreamFamily::Friedman:
      seq = {0, 1, 2, 0};
      break;
    case StreamFamily::FriedmanNoReturn:
      seq = {0, 1, 2, 3, 4, 5, 6};
      break;
    case StreamFamily::Brieman:
      seq = {0, 1, 2, 3, 4, 5, 6};
      break;
    case StreamFamily::Mixed:
      seq = {0, 1, 0, 1};
      break;
    case StreamFamily::Agrawal32:
      seq = {3, 2};
      break;
    case StreamFamily::Agrawal3213:
      seq = {3, 2, 1, 3, 2};
      break;
  }
  const auto k = static_cast<std::int64_t>(seq.size()) - 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    s.change_points.push_back(n_samples * i / (k + 1));
  }
  s.concept_sequence = std::move(seq);
  return s;
}

void GeneratorSpec::validate() const {
  if (n_samples < 1) throw BadSpec("n_samples must be >= 1");
  if (!(noise_sigma >= 0.0)) throw BadSpec("noise_sigma must be >= 0");
  const DriftSchedule& s =
      schedule.concept_sequence.empty() ? default_schedule(family, n_samples) : schedule;
  s.validate(n_samples);
  if (family == StreamFamily::Agrawal32 || family == StreamFamily::Agrawal3213) {
    for (int c : s.concept_sequence) {
      if (c < 1 || c > 3) throw BadSpec("agrawal concepts are function ids 1..3");
    }
  } else {
    for (int c : s.concept_sequence) {
      if (c < 0) throw BadSpec("concept ids must be >= 0");
    }
  }
}

GeneratedStream generate(const GeneratorSpec& spec) {
  spec.validate();
  DriftSchedule schedule = spec.schedule.concept_sequence.empty()
                               ? default_schedule(spec.family, spec.n_samples)
                               : spec.schedule;

  GeneratedStream out;
  out.schedule = schedule;
  out.records.reserve(static_cast<std::size_t>(spec.n_samples));

  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::size_t seg = 0;  // index of the last change point at or before t
  for (std::int64_t t = 0; t < spec.n_samples; ++t) {
    while (seg < schedule.change_points.size() && schedule.change_points[seg] <= t) ++seg;
    int concept_id = schedule.concept_sequence[seg];
    if (schedule.transition == Transition::Gradual && seg > 0) {
      const std::int64_t since = t - schedule.change_points[seg - 1];
      if (since < schedule.gradual_width) {
        // Linear ramp: probability of drawing from the incoming concept.
        const double p_new = static_cast<double>(since + 1) /
                             static_cast<double>(schedule.gradual_width + 1);
        if (!std::bernoulli_distribution(p_new)(rng)) {
          concept_id = schedule.concept_sequence[seg - 1];
        }
      }
    }

    StreamRecord rec;
    rec.concept_id = concept_id;
    rec.features = draw_features(spec.family, concept_id, rng);
    switch (spec.family) {
      case StreamFamily::Friedman:
      case StreamFamily::FriedmanNoReturn:
        rec.target = friedman_target(rec.features, concept_id, spec.noise_sigma * gauss(rng));
        break;
      case StreamFamily::Brieman:
        rec.target = brieman_target(rec.features, concept_id, spec.noise_sigma * gauss(rng));
        break;
      case StreamFamily::Mixed:
        rec.target = mixed_target(rec.features, concept_id);
        break;
      case StreamFamily::Agrawal32:
      case StreamFamily::Agrawal3213:
        rec.target = agrawal_target(rec.features, concept_id);
        break;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_stream_csv(const std::string& path, const std::vector<StreamRecord>& records) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  const std::size_t k = records.empty() ? 0 : records[0].features.size();
  for (std::size_t i = 0; i < k; ++i) f << 'f' << i << ',';
  f << "target,concept_id\n";
  for (const auto& r : records) {
    if (r.features.size() != k) throw DimensionMismatch("ragged feature rows in stream");
    for (const auto& v : r.features) f << format_double(v) << ',';
    f << format_double(r.target) << ',' << r.concept_id << '\n';
  }
  if (!f) throw IoError("short write to '" + path + "'");
}

std::string schedule_to_json(const DriftSchedule& schedule) {
  nlohmann::ordered_json j;
  j["change_points"] = schedule.change_points;
  j["transition"] = schedule.transition == Transition::Abrupt ? "abrupt" : "gradual";
  j["concept_sequence"] = schedule.concept_sequence;
  if (schedule.transition == Transition::Gradual) j["gradual_width"] = schedule.gradual_width;
  return j.dump();
}

DriftSchedule schedule_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    DriftSchedule s;
    s.change_points = j.at("change_points").get<std::vector<std::int64_t>>();
    const auto tr = j.at("transition").get<std::string>();
    if (tr == "abrupt") {
      s.transition = Transition::Abrupt;
    } else if (tr == "gradual") {
      s.transition = Transition::Gradual;
      s.gradual_width = j.at("gradual_width").get<std::int64_t>();
    } else {
      throw ParseError("unknown transition '" + tr + "'");
    }
    s.concept_sequence = j.at("concept_sequence").get<std::vector<int>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schedule: ") + e.what());
  }
}

void write_manifest_json(const std::string& path, const DriftSchedule& schedule) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << schedule_to_json(schedule) << '\n';
  if (!f) throw IoError("short write to '" + path + "'");
}

DriftSchedule read_manifest_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return schedule_from_json(ss.str());
}

std::vector<StreamRecord> ingest_csv(const std::string& path, const IngestOptions& opts) {
  if (opts.normalization != IngestOptions::Normalization::None &&
      opts.normalization_prefix == 0) {
    throw BadConfig("normalization requires a positive normalization_prefix");
  }
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(f, line)) throw ParseError("empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t target_col = find_col(opts.target_column);
  if (target_col < 0) throw MissingColumn("target column '" + opts.target_column + "'");
  const std::ptrdiff_t concept_col = find_col("concept_id");

  std::vector<std::size_t> feat_cols;
  if (opts.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) != target_col &&
          static_cast<std::ptrdiff_t>(c) != concept_col) {
        feat_cols.push_back(c);
      }
    }
  } else {
    for (const auto& name : opts.feature_columns) {
      const auto c = find_col(name);
      if (c < 0) throw MissingColumn("feature column '" + name + "'");
      feat_cols.push_back(static_cast<std::size_t>(c));
    }
  }

  std::vector<StreamRecord> records;
  std::size_t row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(header.size()));
    }
    StreamRecord rec;
    rec.features.reserve(feat_cols.size());
    for (auto c : feat_cols) rec.features.push_back(parse_double(fields[c], row, c));
    rec.target = parse_double(fields[static_cast<std::size_t>(target_col)], row,
                              static_cast<std::size_t>(target_col));
    if (concept_col >= 0) {
      rec.concept_id = static_cast<int>(parse_double(
          fields[static_cast<std::size_t>(concept_col)], row,
          static_cast<std::size_t>(concept_col)));
    } else {
      rec.concept_id = -1;
    }
    records.push_back(std::move(rec));
  }

  if (opts.normalization == IngestOptions::Normalization::None || records.empty()) {
    return records;
  }

  // Normalization statistics come from the declared prefix only, so applying
  // them to the rest of the stream involves no lookahead.
  const std::size_t prefix = std::min(opts.normalization_prefix, records.size());
  const std::size_t k = records[0].features.size();
  std::vector<double> lo(k, std::numeric_limits<double>::infinity());
  std::vector<double> hi(k, -std::numeric_limits<double>::infinity());
  std::vector<double> mean(k, 0.0), m2(k, 0.0);
  for (std::size_t i = 0; i < prefix; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const double v = records[i].features[c];
      lo[c] = std::min(lo[c], v);
      hi[c] = std::max(hi[c], v);
      const double delta = v - mean[c];
      mean[c] += delta / static_cast<double>(i + 1);
      m2[c] += delta * (v - mean[c]);
    }
  }
  for (auto& rec : records) {
    for (std::size_t c = 0; c < k; ++c) {
      double& v = rec.features[c];
      if (opts.normalization == IngestOptions::Normalization::MinMax) {
        const double span = hi[c] - lo[c];
        v = span > 0.0 ? (v - lo[c]) / span : 0.0;
      } else {
        const double sd = prefix > 1 ? std::sqrt(m2[c] / static_cast<double>(prefix - 1)) : 0.0;
        v = sd > 0.0 ? (v - mean[c]) / sd : 0.0;
      }
    }
  }
  return records;
}

}  // namespace driftlab
