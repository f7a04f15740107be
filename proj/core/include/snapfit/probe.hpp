#pragma once

#include <functional>
#include <optional>

#include "snapfit/profile.hpp"
#include "snapfit/tree.hpp"

namespace snapfit {

enum class ProbeDirection { plus_x, minus_x };

struct IdentificationPolicyConfig {
  double probability_threshold = 0.2;  // probing triggers strictly below this
  double t_span = 2.0;                 // seconds
  double probe_distance = 2.0;         // millimeters
  double recovery_step_x = 1.0;        // millimeters
  double recovery_step_theta = 1.0;    // degrees
  int max_retries = 3;

  void validate() const;
};

enum class ChosenSource { assembly, probe_plus_x, probe_minus_x };

const char* chosen_source_name(ChosenSource source);

struct IdentificationResult {
  StateLabel predicted = StateLabel::S1_success;
  bool used_probing = false;
  ClassificationOutcome assembly_outcome;
  std::optional<std::pair<ClassificationOutcome, ClassificationOutcome>> probe_outcomes;
  ChosenSource chosen_source = ChosenSource::assembly;
};

struct RecoveryAction {
  double delta_x = 0.0;      // millimeters
  double delta_theta = 0.0;  // degrees
  bool retract_first = false;
};

// The three per-phase classifiers an identification run needs.
struct PhaseTrees {
  DecisionTree assembly;
  DecisionTree probe_plus_x;
  DecisionTree probe_minus_x;

  const DecisionTree& for_phase(PhaseTag phase) const;
};

using ProbeSupplier = std::function<ForceTorqueProfile(ProbeDirection)>;

// Two-stage identification: classify the truncated assembly profile; when the
// smallest class probability along the path clears the threshold (>= passes),
// that is the answer. Otherwise collect the +x then -x probe profiles through
// the supplier, classify each with its own tree, and keep the prediction of
// the probe whose path minimum of node accuracies is larger.
IdentificationResult identify(const ForceTorqueProfile& assembly_profile, const PhaseTrees& trees,
                              const ProbeSupplier& probe_supplier,
                              const IdentificationPolicyConfig& config);

// Pure selection between the two probe outcomes; ties go to +x.
std::pair<StateLabel, ChosenSource> fuse_probe_results(const ClassificationOutcome& plus,
                                                       const ClassificationOutcome& minus);

// Fixed-step correction opposite to the identified error's sign pattern.
// S1 maps to a no-op with no retract.
RecoveryAction recovery_action(StateLabel predicted, const IdentificationPolicyConfig& config);

}  // namespace snapfit
