#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlab/events.hpp"
#include "driftlab/losses.hpp"
#include "driftlab/series.hpp"
#include "driftlab/streams.hpp"

namespace driftlab {

enum class ModelKind { Linear, Logistic };

// SGD-trained generalized linear model.  weights[0] is the bias; predictions
// are w0 + w.x for Linear and sigmoid of that for Logistic.
struct OnlineModel {
  ModelKind kind = ModelKind::Linear;
  Eigen::VectorXd weights;  // length = n_features + 1
  double learning_rate = 0.01;
  std::int64_t steps = 0;

  int n_features() const { return static_cast<int>(weights.size()) - 1; }
  double predict(const std::vector<double>& features) const;

  std::string to_json() const;
  static OnlineModel from_json(const std::string& text);
};

OnlineModel make_model(ModelKind kind, int n_features, double learning_rate);

// In-place SGD over `epochs` full passes; sample order is reshuffled each
// epoch from a seed derived per epoch, so training is reproducible.
void train(OnlineModel& model, std::span<const StreamRecord> batch, int epochs,
           std::uint64_t seed);

double model_loss(const OnlineModel& model, const StreamRecord& record, LossKind kind);

// Drift severity from the upper quartiles of the pre- and post-drift error
// segments: max(Q3_old, Q3_new) / (Q3_old + Q3_new), in [0.5, 1).
double severity(const ErrorSeries& old_errors, const ErrorSeries& new_errors);

enum class CombineMode { WeightAverage, OutputAverage };

// Severity-weighted pair of models.  WeightAverage mixes parameters
// (1 - w) * old + w * new before predicting; OutputAverage mixes the two
// predictions (probabilities, for Logistic).
struct EnsembleModel {
  OnlineModel old_model;
  OnlineModel new_model;
  double w = 0.5;
  CombineMode mode = CombineMode::WeightAverage;

  double predict(const std::vector<double>& features) const;

  std::string to_json() const;
  static EnsembleModel from_json(const std::string& text);
};

EnsembleModel aggregate(const OnlineModel& old_model, const OnlineModel& new_model, double w,
                        CombineMode mode);

// Collapses an ensemble back to a single model: the weight-space mix when the
// two members share kind and dimension, otherwise a copy of the new member.
OnlineModel flatten(const EnsembleModel& ensemble);

struct AdaptConfig {
  CombineMode mode = CombineMode::WeightAverage;
  int epochs = 5;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::Squared;
};

// Severity-weighted reaction to a detected drift: scores the deployed model
// on the post-drift records to get the new error segment, trains a fresh
// model of the same shape on those records, and aggregates the two with the
// severity weight.  `recent` must hold samples at or after
// event.stream_index.
EnsembleModel adapt_on_drift(const OnlineModel& deployed, const DriftEvent& event,
                             std::span<const StreamRecord> recent,
                             const ErrorSeries& pre_drift_errors, const AdaptConfig& cfg);

}  // namespace driftlab
