#include "driftlab/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stats.hpp"

namespace driftlab {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double raw_score(const OnlineModel& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.n_features()) {
    throw DimensionMismatch("model expects " + std::to_string(m.n_features()) +
                            " features, got " + std::to_string(x.size()));
  }
  double z = m.weights(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    z += m.weights(static_cast<Eigen::Index>(i) + 1) * x[i];
  }
  return z;
}

std::string kind_name(ModelKind k) { return k == ModelKind::Linear ? "linear" : "logistic"; }

ModelKind kind_from_name(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "logistic") return ModelKind::Logistic;
  throw ParseError("unknown model kind '" + s + "'");
}

std::string mode_name(CombineMode m) {
  return m == CombineMode::WeightAverage ? "weight_average" : "output_average";
}

CombineMode mode_from_name(const std::string& s) {
  if (s == "weight_average") return CombineMode::WeightAverage;
  if (s == "output_average") return CombineMode::OutputAverage;
  throw ParseError("unknown combine mode '" + s + "'");
}

}  // namespace

double OnlineModel::predict(const std::vector<double>& features) const {
  const double z = raw_score(*this, features);
  return kind == ModelKind::Logistic ? sigmoid(z) : z;
}

OnlineModel make_model(ModelKind kind, int n_features, double learning_rate) {
  if (n_features < 1) throw BadParam("model needs at least one feature");
  if (!(learning_rate > 0.0)) throw BadParam("learning_rate must be positive");
  OnlineModel m;
  m.kind = kind;
  m.weights = Eigen::VectorXd::Zero(n_features + 1);
  m.learning_rate = learning_rate;
  return m;
}

void train(OnlineModel& model, std::span<const StreamRecord> batch, int epochs,
           std::uint64_t seed) {
  if (epochs < 0) throw BadParam("epochs must be >= 0");
  if (batch.empty()) throw EmptyBatch("train");
  const int nf = model.n_features();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& r = batch[i];
    if (static_cast<int>(r.features.size()) != nf) {
      throw DimensionMismatch("record " + std::to_string(i) + " has " +
                              std::to_string(r.features.size()) + " features, model expects " +
                              std::to_string(nf));
    }
    for (double f : r.features) {
      if (!std::isfinite(f)) throw NonFiniteValue("feature in record " + std::to_string(i));
    }
    if (!std::isfinite(r.target)) throw NonFiniteValue("target in record " + std::to_string(i));
    if (model.kind == ModelKind::Logistic && r.target != 0.0 && r.target != 1.0) {
      throw DomainError("logistic targets must be 0 or 1, record " + std::to_string(i));
    }
  }

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < epochs; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& r = batch[i];
      // err * [1, x] is the gradient of half squared error (Linear) and of
      // cross-entropy (Logistic).
      const double err = model.predict(r.features) - r.target;
      const double step = model.learning_rate * err;
      model.weights(0) -= step;
      for (std::size_t f = 0; f < r.features.size(); ++f) {
        model.weights(static_cast<Eigen::Index>(f) + 1) -= step * r.features[f];
      }
    }
  }
  model.steps += static_cast<std::int64_t>(epochs) * static_cast<std::int64_t>(batch.size());
}

double model_loss(const OnlineModel& model, const StreamRecord& record, LossKind kind) {
  return point_loss(kind, model.predict(record.features), record.target);
}

double severity(const ErrorSeries& old_errors, const ErrorSeries& new_errors) {
  if (old_errors.empty()) throw EmptySegment("severity: old segment");
  if (new_errors.empty()) throw EmptySegment("severity: new segment");
  old_errors.validate();
  new_errors.validate();
  for (double v : old_errors.values) {
    if (v < 0.0) throw DomainError("severity expects non-negative errors");
  }
  for (double v : new_errors.values) {
    if (v < 0.0) throw DomainError("severity expects non-negative errors");
  }
  const double q_old = quantile_of(old_errors.values, 0.75);
  const double q_new = quantile_of(new_errors.values, 0.75);
  const double denom = q_old + q_new;
  if (denom <= 0.0) throw DegenerateZero("severity: both upper quartiles are zero");
  return std::max(q_old, q_new) / denom;
}

double EnsembleModel::predict(const std::vector<double>& features) const {
  if (mode == CombineMode::OutputAverage) {
    return (1.0 - w) * old_model.predict(features) + w * new_model.predict(features);
  }
  OnlineModel mixed = old_model;
  mixed.weights = (1.0 - w) * old_model.weights + w * new_model.weights;
  return mixed.predict(features);
}

EnsembleModel aggregate(const OnlineModel& old_model, const OnlineModel& new_model, double w,
                        CombineMode mode) {
  if (old_model.kind != new_model.kind) {
    throw KindMismatch("aggregate: " + kind_name(old_model.kind) + " vs " +
                       kind_name(new_model.kind));
  }
  if (old_model.weights.size() != new_model.weights.size()) {
    throw DimensionMismatch("aggregate: weight lengths " +
                            std::to_string(old_model.weights.size()) + " vs " +
                            std::to_string(new_model.weights.size()));
  }
  if (!(w >= 0.0) || !(w <= 1.0)) throw BadParam("aggregate weight must lie in [0, 1]");
  EnsembleModel e;
  e.old_model = old_model;
  e.new_model = new_model;
  e.w = w;
  e.mode = mode;
  return e;
}

OnlineModel flatten(const EnsembleModel& ensemble) {
  if (ensemble.old_model.kind == ensemble.new_model.kind &&
      ensemble.old_model.weights.size() == ensemble.new_model.weights.size()) {
    OnlineModel m = ensemble.new_model;
    m.weights = (1.0 - ensemble.w) * ensemble.old_model.weights +
                ensemble.w * ensemble.new_model.weights;
    m.steps = ensemble.old_model.steps + ensemble.new_model.steps;
    return m;
  }
  return ensemble.new_model;
}

EnsembleModel adapt_on_drift(const OnlineModel& deployed, const DriftEvent& event,
                             std::span<const StreamRecord> recent,
                             const ErrorSeries& pre_drift_errors, const AdaptConfig& cfg) {
  (void)event;  // location/severity metadata; segments are passed explicitly
  if (recent.empty()) throw EmptyBatch("adapt_on_drift: no post-drift records");

  ErrorSeries new_errors;
  new_errors.values.reserve(recent.size());
  for (const auto& r : recent) {
    new_errors.values.push_back(model_loss(deployed, r, cfg.loss_kind));
  }
  const double w = severity(pre_drift_errors, new_errors);

  OnlineModel fresh = make_model(deployed.kind, deployed.n_features(), deployed.learning_rate);
  train(fresh, recent, cfg.epochs, cfg.seed);
  return aggregate(deployed, fresh, w, cfg.mode);
}

std::string OnlineModel::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(kind);
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  j["learning_rate"] = learning_rate;
  j["steps"] = steps;
  return j.dump();
}

OnlineModel OnlineModel::from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    OnlineModel m;
    m.kind = kind_from_name(j.at("kind").get<std::string>());
    auto w = j.at("weights").get<std::vector<double>>();
    if (w.empty()) throw ParseError("model weights must not be empty");
    m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.learning_rate = j.at("learning_rate").get<double>();
    m.steps = j.at("steps").get<std::int64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model checkpoint: ") + e.what());
  }
}

std::string EnsembleModel::to_json() const {
  nlohmann::ordered_json j;
  j["old"] = nlohmann::ordered_json::parse(old_model.to_json());
  j["new"] = nlohmann::ordered_json::parse(new_model.to_json());
  j["w"] = w;
  j["combine_mode"] = mode_name(mode);
  return j.dump();
}

EnsembleModel EnsembleModel::from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    EnsembleModel e;
    e.old_model = OnlineModel::from_json(j.at("old").dump());
    e.new_model = OnlineModel::from_json(j.at("new").dump());
    e.w = j.at("w").get<double>();
    e.mode = mode_from_name(j.at("combine_mode").get<std::string>());
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ensemble checkpoint: ") + e.what());
  }
}

}  // namespace driftlab
