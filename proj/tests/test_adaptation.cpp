#include <doctest.h>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "driftlab/adaptation.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/random.hpp"
#include "driftlab/series.hpp"

using namespace driftlab;

namespace {

std::vector<StreamRecord> linear_batch(int n, double b0, double b1, double sigma,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> x_dist(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<StreamRecord> batch;
  for (int i = 0; i < n; ++i) {
    const double x = x_dist(rng);
    batch.push_back(StreamRecord{{x}, b0 + b1 * x + noise(rng), -1});
  }
  return batch;
}

std::vector<StreamRecord> separable_batch(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> x_dist(-2.0, 2.0);
  std::vector<StreamRecord> batch;
  for (int i = 0; i < n; ++i) {
    const double x = x_dist(rng);
    if (std::abs(x) < 0.4) continue;  // margin keeps the classes separable
    batch.push_back(StreamRecord{{x}, x > 0.0 ? 1.0 : 0.0, -1});
  }
  return batch;
}

}  // namespace

TEST_CASE("severity: pinned examples and invariances") {
  CHECK(severity(make_series({1.0}), make_series({1.0})) == 0.5);
  CHECK(severity(make_series({1.0, 1.0, 1.0, 1.0}), make_series({3.0, 3.0, 3.0, 3.0})) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(severity(make_series({3.0}), make_series({1.0})) ==
        doctest::Approx(0.75).epsilon(1e-12));  // symmetric in the segments
  CHECK(severity(make_series({1.0}), make_series({1.1})) ==
        doctest::Approx(1.1 / 2.1).epsilon(1e-12));

  // Scale invariance: only the ratio of the quartiles matters.
  const auto a = make_series({0.2, 0.4, 0.9, 0.5});
  const auto b = make_series({1.0, 2.2, 1.7, 0.8});
  const auto scaled_a = make_series({2.0, 4.0, 9.0, 5.0});
  const auto scaled_b = make_series({10.0, 22.0, 17.0, 8.0});
  CHECK(severity(a, b) == doctest::Approx(severity(scaled_a, scaled_b)).epsilon(1e-12));

  CHECK_THROWS_AS(severity(make_series({}), make_series({1.0})), EmptySegment);
  CHECK_THROWS_AS(severity(make_series({0.0, 0.0}), make_series({0.0})), DegenerateZero);
  CHECK_THROWS_AS(severity(make_series({-1.0, 2.0}), make_series({1.0})), DomainError);
}

TEST_CASE("aggregate: weight-space and output-space mixing") {
  auto m1 = make_model(ModelKind::Linear, 2, 0.01);
  m1.weights << 1.0, 2.0, 3.0;
  auto m2 = m1;

  // Identical members: any weight reproduces either one.
  const auto same = aggregate(m1, m2, 0.5, CombineMode::WeightAverage);
  CHECK(same.predict({0.5, -1.0}) == doctest::Approx(m1.predict({0.5, -1.0})).epsilon(1e-12));

  auto zero = make_model(ModelKind::Linear, 1, 0.01);
  zero.weights << 0.0, 0.0;
  auto four = make_model(ModelKind::Linear, 1, 0.01);
  four.weights << 4.0, 8.0;
  const auto mixed = aggregate(zero, four, 0.75, CombineMode::WeightAverage);
  const auto collapsed = flatten(mixed);
  CHECK(collapsed.weights(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(collapsed.weights(1) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(mixed.predict({1.0}) == doctest::Approx(9.0).epsilon(1e-12));

  // Output averaging mixes predictions, not parameters.
  const auto out = aggregate(zero, four, 0.75, CombineMode::OutputAverage);
  // old predicts 0, new predicts 4 + 8 = 12 at x = 1: 0.25 * 0 + 0.75 * 12.
  CHECK(out.predict({1.0}) == doctest::Approx(9.0).epsilon(1e-12));
  auto one = make_model(ModelKind::Linear, 1, 0.01);
  one.weights << 1.0, 0.0;
  auto three = make_model(ModelKind::Linear, 1, 0.01);
  three.weights << 3.0, 0.0;
  CHECK(aggregate(one, three, 0.75, CombineMode::OutputAverage).predict({0.0}) ==
        doctest::Approx(2.5).epsilon(1e-12));

  // Boundary weights reproduce one member exactly.
  CHECK(aggregate(zero, four, 1.0, CombineMode::WeightAverage).predict({1.0}) ==
        doctest::Approx(12.0).epsilon(1e-12));
  CHECK(aggregate(zero, four, 0.0, CombineMode::WeightAverage).predict({1.0}) ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(aggregate(zero, four, 1.5, CombineMode::WeightAverage), BadParam);
  CHECK_THROWS_AS(aggregate(zero, four, -0.1, CombineMode::OutputAverage), BadParam);

  auto logit = make_model(ModelKind::Logistic, 1, 0.01);
  logit.weights << 0.0, 5.0;
  CHECK_THROWS_AS(aggregate(zero, logit, 0.5, CombineMode::WeightAverage), KindMismatch);
  auto wide = make_model(ModelKind::Linear, 2, 0.01);
  CHECK_THROWS_AS(aggregate(zero, wide, 0.5, CombineMode::WeightAverage), DimensionMismatch);

  // Logistic output averaging stays a probability.
  auto logit2 = make_model(ModelKind::Logistic, 1, 0.01);
  logit2.weights << 1.0, -3.0;
  const auto blend = aggregate(logit, logit2, 0.3, CombineMode::OutputAverage);
  for (const double x : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    const double p = blend.predict({x});
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("flatten: weight mix or fallback to the new member") {
  auto lin = make_model(ModelKind::Linear, 1, 0.01);
  lin.weights << 1.0, 1.0;
  auto logit = make_model(ModelKind::Logistic, 1, 0.02);
  logit.weights << 2.0, -1.0;
  EnsembleModel mismatched{lin, logit, 0.7, CombineMode::OutputAverage};
  const auto flat = flatten(mismatched);
  CHECK(flat.kind == ModelKind::Logistic);
  CHECK(flat.weights == logit.weights);
}

TEST_CASE("train: recovers a noiseless linear rule") {
  const auto batch = linear_batch(1000, 1.0, 2.0, 0.0, 7);
  auto model = make_model(ModelKind::Linear, 1, 0.05);
  train(model, batch, 50, 99);
  CHECK(std::abs(model.weights(0) - 1.0) < 0.05);
  CHECK(std::abs(model.weights(1) - 2.0) < 0.05);
  CHECK(model.steps == 1000 * 50);

  auto untouched = make_model(ModelKind::Linear, 1, 0.05);
  const auto before = untouched.weights;
  train(untouched, batch, 0, 99);
  CHECK(untouched.weights == before);
  CHECK(untouched.steps == 0);

  CHECK_THROWS_AS(train(model, std::span<const StreamRecord>{}, 5, 1), EmptyBatch);
  const std::vector<StreamRecord> wrong{{{1.0, 2.0}, 0.5, -1}};
  CHECK_THROWS_AS(train(model, wrong, 1, 1), DimensionMismatch);
}

TEST_CASE("train: reproducible given the seed") {
  const auto batch = linear_batch(300, -0.5, 1.5, 0.2, 8);
  auto a = make_model(ModelKind::Linear, 1, 0.05);
  auto b = make_model(ModelKind::Linear, 1, 0.05);
  train(a, batch, 5, 1234);
  train(b, batch, 5, 1234);
  CHECK(a.weights == b.weights);
  auto c = make_model(ModelKind::Linear, 1, 0.05);
  train(c, batch, 5, 1235);
  CHECK(a.weights != c.weights);
}

TEST_CASE("train: separable logistic problem reaches high accuracy") {
  const auto batch = separable_batch(1200, 9);
  auto model = make_model(ModelKind::Logistic, 1, 0.5);
  train(model, batch, 30, 17);
  int correct = 0;
  for (const auto& rec : batch) {
    const double p = model.predict(rec.features);
    correct += ((p > 0.5) == (rec.target > 0.5)) ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(batch.size()) >= 0.99);

  std::vector<StreamRecord> bad{{{0.3}, 0.4, -1}};
  auto logit = make_model(ModelKind::Logistic, 1, 0.1);
  CHECK_THROWS_AS(train(logit, bad, 1, 1), DomainError);
}

TEST_CASE("model_loss matches the loss definitions") {
  auto lin = make_model(ModelKind::Linear, 1, 0.01);
  lin.weights << 0.0, 1.0;
  const StreamRecord rec{{2.0}, 1.0, -1};
  CHECK(model_loss(lin, rec, LossKind::Squared) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model_loss(lin, rec, LossKind::ZeroOne) == 0.0);  // both above 0.5

  auto logit = make_model(ModelKind::Logistic, 1, 0.01);
  logit.weights << 0.0, 0.0;  // predicts exactly 0.5
  const StreamRecord pos{{1.0}, 1.0, -1};
  CHECK(model_loss(logit, pos, LossKind::CrossEntropy) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("JSON round trips preserve models and ensembles") {
  auto lin = make_model(ModelKind::Linear, 2, 0.03);
  lin.weights << 0.25, -1.5, 2.75;
  lin.steps = 42;
  const auto back = OnlineModel::from_json(lin.to_json());
  CHECK(back.kind == lin.kind);
  CHECK(back.weights == lin.weights);
  CHECK(back.learning_rate == lin.learning_rate);
  CHECK(back.steps == lin.steps);

  auto other = make_model(ModelKind::Linear, 2, 0.07);
  other.weights << 1.0, 0.0, -1.0;
  const auto ens = aggregate(lin, other, 0.6, CombineMode::OutputAverage);
  const auto ens_back = EnsembleModel::from_json(ens.to_json());
  CHECK(ens_back.w == ens.w);
  CHECK(ens_back.mode == ens.mode);
  CHECK(ens_back.old_model.weights == ens.old_model.weights);
  CHECK(ens_back.new_model.weights == ens.new_model.weights);
  CHECK(ens_back.predict({0.1, 0.2}) == ens.predict({0.1, 0.2}));

  CHECK_THROWS_AS(OnlineModel::from_json("{not json"), ParseError);
}

TEST_CASE("adapt_on_drift: wires severity, retraining, and aggregation") {
  // Deployed model learned y = x; after the drift the rule is y = -x + 2.
  auto deployed = make_model(ModelKind::Linear, 1, 0.05);
  deployed.weights << 0.0, 1.0;

  const auto recent = linear_batch(400, 2.0, -1.0, 0.0, 21);
  DriftEvent ev;
  ev.detector_id = "addm";
  ev.stream_index = 5000;
  ev.detected_at_index = 5200;

  // Pre-drift errors small, post-drift errors large: severity near 1.
  const auto pre = make_series(std::vector<double>(200, 0.01), 4800);
  AdaptConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 3;
  const auto ens = adapt_on_drift(deployed, ev, recent, pre, cfg);
  CHECK(ens.w > 0.5);
  CHECK(ens.w < 1.0);
  CHECK(ens.old_model.weights == deployed.weights);
  // The new member should have learned the post-drift rule.
  CHECK(std::abs(ens.new_model.weights(0) - 2.0) < 0.1);
  CHECK(std::abs(ens.new_model.weights(1) + 1.0) < 0.1);
  // With severity ~1 the ensemble leans to the new member.
  CHECK(std::abs(ens.predict({1.0}) - 1.0) < 0.35);

  CHECK_THROWS_AS(
      adapt_on_drift(deployed, ev, std::span<const StreamRecord>{}, pre, cfg), EmptyBatch);
}
