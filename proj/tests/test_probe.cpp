#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "fakes.hpp"
#include "oracles.hpp"
#include "snapfit/probe.hpp"

using namespace snapfit;

namespace {

constexpr int kGridT = 4;
constexpr double kDt = 0.01;

// Assembly tree predicting S7 with a pinned path probability; probe trees
// predicting S2 (+x) and S3 (-x) with pinned node accuracies.
PhaseTrees fake_trees(double assembly_probability, double plus_accuracy, double minus_accuracy) {
  PhaseTrees trees;
  trees.assembly = fakes::single_split_tree(PhaseTag::assembly, StateLabel::S7,
                                            StateLabel::S1_success, assembly_probability, true,
                                            0.93, kGridT, kDt);
  trees.probe_plus_x = fakes::single_split_tree(PhaseTag::probe_plus_x, StateLabel::S2,
                                                StateLabel::S4, 0.9, true, plus_accuracy,
                                                kGridT, kDt);
  trees.probe_minus_x = fakes::single_split_tree(PhaseTag::probe_minus_x, StateLabel::S3,
                                                 StateLabel::S5, 0.9, true, minus_accuracy,
                                                 kGridT, kDt);
  return trees;
}

struct CountingSupplier {
  int calls = 0;
  std::vector<ProbeDirection> order;

  ForceTorqueProfile operator()(ProbeDirection direction) {
    ++calls;
    order.push_back(direction);
    return fakes::flat_profile(kGridT, kDt,
                               direction == ProbeDirection::plus_x ? PhaseTag::probe_plus_x
                                                                   : PhaseTag::probe_minus_x);
  }
};

}  // namespace

TEST_CASE("confident assembly outcomes never probe") {
  const PhaseTrees trees = fake_trees(0.85, 0.9, 0.8);
  IdentificationPolicyConfig config;
  CountingSupplier supplier;
  const IdentificationResult result =
      identify(fakes::flat_profile(kGridT, kDt, PhaseTag::assembly), trees,
               std::ref(supplier), config);
  CHECK(supplier.calls == 0);
  CHECK(!result.used_probing);
  CHECK(result.chosen_source == ChosenSource::assembly);
  CHECK(result.predicted == StateLabel::S7);
  CHECK(!result.probe_outcomes.has_value());
}

TEST_CASE("a probability exactly at the threshold still passes") {
  const PhaseTrees trees = fake_trees(0.2, 0.9, 0.8);
  // Pin the threshold to the exact probability the tree produces, so the
  // comparison sits precisely on the boundary (>= must pass).
  const ClassificationOutcome outcome =
      classify_profile(trees.assembly, fakes::flat_profile(kGridT, kDt, PhaseTag::assembly));
  IdentificationPolicyConfig config;
  config.probability_threshold = outcome.min_class_probability;
  CountingSupplier supplier;
  const IdentificationResult result =
      identify(fakes::flat_profile(kGridT, kDt, PhaseTag::assembly), trees,
               std::ref(supplier), config);
  CHECK(supplier.calls == 0);
  CHECK(!result.used_probing);
  CHECK(result.assembly_outcome.min_class_probability == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("a low-confidence outcome triggers both probes in order") {
  const PhaseTrees trees = fake_trees(0.1, 0.95, 0.88);
  IdentificationPolicyConfig config;
  CountingSupplier supplier;
  const IdentificationResult result =
      identify(fakes::flat_profile(kGridT, kDt, PhaseTag::assembly), trees,
               std::ref(supplier), config);
  CHECK(supplier.calls == 2);
  REQUIRE(supplier.order.size() == 2);
  CHECK(supplier.order[0] == ProbeDirection::plus_x);
  CHECK(supplier.order[1] == ProbeDirection::minus_x);
  CHECK(result.used_probing);
  REQUIRE(result.probe_outcomes.has_value());

  // The fused outcome equals fuse_probe_results of the two probe outcomes.
  const auto [label, source] =
      fuse_probe_results(result.probe_outcomes->first, result.probe_outcomes->second);
  CHECK(result.predicted == label);
  CHECK(result.chosen_source == source);
  CHECK(result.predicted == StateLabel::S2);  // +x accuracy 0.95 beats 0.88
  CHECK(result.chosen_source == ChosenSource::probe_plus_x);
}

TEST_CASE("the lower-accuracy probe loses the fusion") {
  const PhaseTrees trees = fake_trees(0.1, 0.82, 0.91);
  IdentificationPolicyConfig config;
  CountingSupplier supplier;
  const IdentificationResult result =
      identify(fakes::flat_profile(kGridT, kDt, PhaseTag::assembly), trees,
               std::ref(supplier), config);
  CHECK(result.predicted == StateLabel::S3);
  CHECK(result.chosen_source == ChosenSource::probe_minus_x);
}

TEST_CASE("a failing probe supplier surfaces as a data error") {
  const PhaseTrees trees = fake_trees(0.1, 0.9, 0.9);
  IdentificationPolicyConfig config;
  const auto broken = [](ProbeDirection) -> ForceTorqueProfile {
    throw std::runtime_error("sensor offline");
  };
  CHECK_THROWS_AS(identify(fakes::flat_profile(kGridT, kDt, PhaseTag::assembly), trees,
                           broken, config),
                  DataError);
}

TEST_CASE("fusion picks the higher path-minimum accuracy, ties to +x") {
  ClassificationOutcome plus;
  plus.predicted = StateLabel::S6;
  plus.min_node_accuracy = 0.95;
  ClassificationOutcome minus;
  minus.predicted = StateLabel::S8;
  minus.min_node_accuracy = 0.88;
  CHECK(fuse_probe_results(plus, minus).first == StateLabel::S6);
  CHECK(fuse_probe_results(plus, minus).second == ChosenSource::probe_plus_x);
  // Swapped arguments: the higher accuracy (now in the -x slot) still wins.
  CHECK(fuse_probe_results(minus, plus).first == StateLabel::S6);
  CHECK(fuse_probe_results(minus, plus).second == ChosenSource::probe_minus_x);

  minus.min_node_accuracy = 0.95;  // tie: +x wins
  const auto [label, source] = fuse_probe_results(plus, minus);
  CHECK(label == StateLabel::S6);
  CHECK(source == ChosenSource::probe_plus_x);

  oracle::TestRng rng(99);
  for (int rep = 0; rep < 1000; ++rep) {
    plus.min_node_accuracy = rng.range(0.0, 1.0);
    minus.min_node_accuracy = rng.range(0.0, 1.0);
    const auto fused = fuse_probe_results(plus, minus);
    const StateLabel expected =
        plus.min_node_accuracy >= minus.min_node_accuracy ? plus.predicted : minus.predicted;
    CHECK(fused.first == expected);
    CHECK((fused.first == plus.predicted || fused.first == minus.predicted));
  }
}

TEST_CASE("recovery actions oppose the identified error signs") {
  IdentificationPolicyConfig config;  // steps 1 mm, 1 deg

  const RecoveryAction none = recovery_action(StateLabel::S1_success, config);
  CHECK(none.delta_x == 0.0);
  CHECK(none.delta_theta == 0.0);
  CHECK(!none.retract_first);

  const RecoveryAction s7 = recovery_action(StateLabel::S7, config);
  CHECK(s7.delta_x == doctest::Approx(-1.0));
  CHECK(s7.delta_theta == doctest::Approx(1.0));
  CHECK(s7.retract_first);

  struct Expected {
    StateLabel label;
    double dx;
    double dtheta;
  };
  const Expected table[] = {
      {StateLabel::S2, -1.0, 0.0}, {StateLabel::S3, 1.0, 0.0},  {StateLabel::S4, 0.0, -1.0},
      {StateLabel::S5, 0.0, 1.0},  {StateLabel::S6, -1.0, -1.0}, {StateLabel::S7, -1.0, 1.0},
      {StateLabel::S8, 1.0, -1.0}, {StateLabel::S9, 1.0, 1.0}};
  for (const Expected& e : table) {
    const RecoveryAction action = recovery_action(e.label, config);
    CHECK(action.delta_x == doctest::Approx(e.dx));
    CHECK(action.delta_theta == doctest::Approx(e.dtheta));
    CHECK(action.retract_first);
  }

  // Sign symmetry across mirrored states.
  const auto opposite = [&](StateLabel a, StateLabel b) {
    const RecoveryAction ra = recovery_action(a, config);
    const RecoveryAction rb = recovery_action(b, config);
    CHECK(ra.delta_x == -rb.delta_x);
    CHECK(ra.delta_theta == -rb.delta_theta);
  };
  opposite(StateLabel::S2, StateLabel::S3);
  opposite(StateLabel::S4, StateLabel::S5);
  opposite(StateLabel::S6, StateLabel::S9);
  opposite(StateLabel::S7, StateLabel::S8);
}

TEST_CASE("policy configuration is validated") {
  IdentificationPolicyConfig config;
  config.probability_threshold = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.probability_threshold = 1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.recovery_step_x = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.max_retries = -1;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  CHECK_NOTHROW(config.validate());
}
