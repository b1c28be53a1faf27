#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "perceptlab/train.hpp"

using namespace perceptlab;
using namespace perceptlab::train;
using autodiff::Scalar;
using autodiff::Tape;

TEST_CASE("collocation sampling") {
  SUBCASE("grid includes both endpoints") {
    const auto pts = sample_collocation({3, 0.0, 2.0, CollocationStrategy::kUniformGrid}, 0);
    CHECK(pts == std::vector<double>{0.0, 1.0, 2.0});
  }
  SUBCASE("grid spacing") {
    const auto pts = sample_collocation({101, 0.0, 3.0, CollocationStrategy::kUniformGrid}, 0);
    CHECK(pts.size() == 101);
    CHECK(pts.front() == 0.0);
    CHECK(pts.back() == 3.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      CHECK(pts[i + 1] - pts[i] == doctest::Approx(0.03).epsilon(1e-13));
  }
  SUBCASE("random draws are inside the domain and seed-deterministic") {
    const CollocationConfig cfg{50, -1.0, 4.0, CollocationStrategy::kUniformRandom};
    const auto a = sample_collocation(cfg, 9);
    const auto b = sample_collocation(cfg, 9);
    const auto c = sample_collocation(cfg, 10);
    CHECK(a == b);
    CHECK(a != c);
    for (double t : a) {
      CHECK(t >= -1.0);
      CHECK(t < 4.0);
    }
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(sample_collocation({0, 0.0, 1.0, CollocationStrategy::kUniformGrid}, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_collocation({5, 2.0, 1.0, CollocationStrategy::kUniformGrid}, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("adam walks down a quadratic bowl") {
  Tape tape;
  const Scalar w = tape.leaf(0.0);
  const std::size_t mark = tape.mark();
  losses::CompositeLoss loss;
  loss.add("bowl", 1.0, [&] {
    const Scalar e = tape.at(w.node()) - 3.0;
    return e * e;
  });
  const Scalar params[] = {w};
  Adam opt({.learning_rate = 0.1}, 1);
  double total = 0.0;
  for (int i = 0; i < 500; ++i) total = step(tape, mark, loss, params, opt).total;
  CHECK(std::fabs(tape.leaf_value(w.node()) - 3.0) < 1e-3);
  CHECK(total < 1e-4);
}

TEST_CASE("zero gradient leaves weights unchanged") {
  Tape tape;
  const Scalar w = tape.leaf(1.25);
  const std::size_t mark = tape.mark();
  losses::CompositeLoss loss;
  loss.add("flat", 1.0, [&] { return Scalar(2.0) + 0.0 * tape.at(w.node()); });
  const Scalar params[] = {w};
  Adam opt({}, 1);
  for (int i = 0; i < 3; ++i) step(tape, mark, loss, params, opt);
  CHECK(tape.leaf_value(w.node()) == 1.25);
}

TEST_CASE("non-finite gradients abort the run") {
  Tape tape;
  const Scalar w = tape.leaf(2.005);
  const std::size_t mark = tape.mark();
  losses::CompositeLoss loss;
  // the value stays finite (~9e306) but its derivative 1014 x^1013 overflows
  loss.add("overflow", 1.0, [&] {
    const Scalar x = tape.at(w.node());
    return pow(x, 338.0) * pow(x, 338.0) * pow(x, 338.0);
  });
  const Scalar params[] = {w};
  Adam opt({}, 1);
  CHECK_THROWS_AS(step(tape, mark, loss, params, opt), TrainingError);
}

TEST_CASE("fit telemetry") {
  Tape tape;
  const Scalar w = tape.leaf(0.0);
  const std::size_t mark = tape.mark();
  losses::CompositeLoss loss;
  loss.add("bowl", 1.0, [&] {
    const Scalar e = tape.at(w.node()) - 1.0;
    return e * e;
  });
  loss.add("anchor", 0.5, [&] { return tape.at(w.node()) * tape.at(w.node()); });
  const Scalar params[] = {w};
  const Probe probes[] = {{"w", [&] { return tape.leaf_value(w.node()); }}};

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.adam.learning_rate = 0.05;
  cfg.early_stop_tolerance = 0.0;

  const auto run1 = fit(tape, mark, loss, params, cfg, probes);
  CHECK(run1.epochs_run == 50);
  CHECK(run1.telemetry.records.size() == 50);
  CHECK(run1.telemetry.term_names == std::vector<std::string>{"bowl", "anchor"});
  CHECK(run1.telemetry.probe_names == std::vector<std::string>{"w"});
  for (const auto& rec : run1.telemetry.records) {
    double sum = 0;
    for (double v : rec.term_values) sum += v;
    CHECK(rec.total == doctest::Approx(sum).epsilon(1e-10));
  }

  // identical config and seed reproduce the telemetry bitwise
  tape.rewind(mark);
  tape.set_leaf(w.node(), 0.0);
  const auto run2 = fit(tape, mark, loss, params, cfg, probes);
  REQUIRE(run2.telemetry.records.size() == run1.telemetry.records.size());
  for (std::size_t i = 0; i < run1.telemetry.records.size(); ++i) {
    CHECK(run1.telemetry.records[i].total == run2.telemetry.records[i].total);
    CHECK(run1.telemetry.records[i].probe_values == run2.telemetry.records[i].probe_values);
  }
}

TEST_CASE("fit keeps partial telemetry when a term blows up mid-run") {
  Tape tape;
  const Scalar w = tape.leaf(1.9);
  const std::size_t mark = tape.mark();
  losses::CompositeLoss loss;
  // the quadratic drags w below zero, where the ln leaves its domain
  loss.add("edge", 1.0, [&] {
    const Scalar x = tape.at(w.node());
    const Scalar pull = (x + 1.0) * (x + 1.0);
    return pull + ln(x) * 1e-12;
  });
  const Scalar params[] = {w};
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.adam.learning_rate = 0.01;
  cfg.early_stop_tolerance = 0.0;
  const auto result = fit(tape, mark, loss, params, cfg);
  REQUIRE(result.abort_reason.has_value());
  CHECK(result.abort_reason->find("loss term 'edge'") != std::string::npos);
  CHECK(result.epochs_run > 0);  // rows up to the abort are retained
  CHECK(static_cast<int>(result.telemetry.records.size()) == result.epochs_run);
  CHECK(result.epochs_run < 500);
}

TEST_CASE("early stop") {
  Tape tape;
  const Scalar w = tape.leaf(1.0);
  const std::size_t mark = tape.mark();
  losses::CompositeLoss loss;
  loss.add("tiny", 1.0, [&] {
    const Scalar e = tape.at(w.node()) - 1.0;
    return e * e;
  });
  const Scalar params[] = {w};
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.early_stop_tolerance = 1e-6;
  const auto result = fit(tape, mark, loss, params, cfg);
  CHECK(result.stopped_early);
  CHECK(result.epochs_run == 1);
  CHECK(result.final_total == 0.0);
}
