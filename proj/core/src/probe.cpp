#include "snapfit/probe.hpp"

namespace snapfit {

void IdentificationPolicyConfig::validate() const {
  if (!(probability_threshold > 0.0) || !(probability_threshold < 1.0)) {
    throw ConfigError("probability_threshold must lie in (0, 1)");
  }
  if (!(t_span > 0.0) || !(probe_distance > 0.0) || !(recovery_step_x > 0.0) ||
      !(recovery_step_theta > 0.0)) {
    throw ConfigError("policy distances and steps must be positive");
  }
  if (max_retries < 0) throw ConfigError("max_retries must be nonnegative");
}

const char* chosen_source_name(ChosenSource source) {
  switch (source) {
    case ChosenSource::assembly: return "assembly";
    case ChosenSource::probe_plus_x: return "probe_plus_x";
    case ChosenSource::probe_minus_x: return "probe_minus_x";
  }
  throw ConfigError("unknown chosen source");
}

const DecisionTree& PhaseTrees::for_phase(PhaseTag phase) const {
  switch (phase) {
    case PhaseTag::assembly: return assembly;
    case PhaseTag::probe_plus_x: return probe_plus_x;
    case PhaseTag::probe_minus_x: return probe_minus_x;
  }
  throw ConfigError("unknown phase tag");
}

IdentificationResult identify(const ForceTorqueProfile& assembly_profile, const PhaseTrees& trees,
                              const ProbeSupplier& probe_supplier,
                              const IdentificationPolicyConfig& config) {
  config.validate();
  IdentificationResult result;
  result.assembly_outcome = classify_profile(trees.assembly, assembly_profile);

  if (result.assembly_outcome.min_class_probability >= config.probability_threshold) {
    result.predicted = result.assembly_outcome.predicted;
    result.used_probing = false;
    result.chosen_source = ChosenSource::assembly;
    return result;
  }

  ForceTorqueProfile plus_profile;
  ForceTorqueProfile minus_profile;
  try {
    plus_profile = probe_supplier(ProbeDirection::plus_x);
    minus_profile = probe_supplier(ProbeDirection::minus_x);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("probe profile unavailable: ") + e.what());
  }

  const ClassificationOutcome plus = classify_profile(trees.probe_plus_x, plus_profile);
  const ClassificationOutcome minus = classify_profile(trees.probe_minus_x, minus_profile);
  const auto [label, source] = fuse_probe_results(plus, minus);

  result.predicted = label;
  result.used_probing = true;
  result.probe_outcomes = {plus, minus};
  result.chosen_source = source;
  return result;
}

std::pair<StateLabel, ChosenSource> fuse_probe_results(const ClassificationOutcome& plus,
                                                       const ClassificationOutcome& minus) {
  if (plus.min_node_accuracy >= minus.min_node_accuracy) {
    return {plus.predicted, ChosenSource::probe_plus_x};
  }
  return {minus.predicted, ChosenSource::probe_minus_x};
}

RecoveryAction recovery_action(StateLabel predicted, const IdentificationPolicyConfig& config) {
  const double sx = config.recovery_step_x;
  const double st = config.recovery_step_theta;
  switch (predicted) {
    case StateLabel::S1_success: return {0.0, 0.0, false};
    case StateLabel::S2: return {-sx, 0.0, true};
    case StateLabel::S3: return {+sx, 0.0, true};
    case StateLabel::S4: return {0.0, -st, true};
    case StateLabel::S5: return {0.0, +st, true};
    case StateLabel::S6: return {-sx, -st, true};
    case StateLabel::S7: return {-sx, +st, true};
    case StateLabel::S8: return {+sx, -st, true};
    case StateLabel::S9: return {+sx, +st, true};
  }
  throw ConfigError("unknown state label");
}

}  // namespace snapfit
