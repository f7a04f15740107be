#include "snapfit/sim.hpp"

#include <algorithm>
#include <cmath>

#include "snapfit/rng.hpp"

namespace snapfit {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Algebraic step centered at 0 with unit width; sqrt keeps the clean signal
// bit-identical across IEEE-754 platforms.
double smooth_step(double u) { return 0.5 * (1.0 + u / std::sqrt(1.0 + u * u)); }

std::uint64_t noise_stream(PhaseTag phase, int channel) {
  return static_cast<std::uint64_t>(phase) * 8 + channel;
}

void add_noise(ForceTorqueProfile& profile, const PlantConfig& config, std::uint64_t seed) {
  const int n = profile.length();
  for (int c = 0; c < kChannelCount; ++c) {
    const double sigma = config.noise_sigma[c];
    if (sigma == 0.0) continue;
    const std::uint64_t stream = noise_stream(profile.phase, c);
    for (int k = 0; k < n; ++k) {
      profile.channels[c][k] += sigma * rng::standard_normal(seed, stream, k);
    }
  }
}

void check_offset(const OffsetPattern& offset, const PlantConfig& config) {
  if (std::abs(offset.dx) > config.max_offset ||
      std::abs(offset.dtheta_z) > config.max_offset) {
    throw DataError("offset outside the plant's admissible range of +-" +
                    std::to_string(config.max_offset));
  }
}

}  // namespace

void PlantConfig::validate() const {
  if (!(tol_x > 0.0) || !(tol_theta > 0.0)) throw ConfigError("plant tolerances must be positive");
  if (!(snap_time < insertion_duration)) {
    throw ConfigError("snap_time must precede insertion_duration");
  }
  if (!(sample_rate > 0.0) || !(insertion_duration > 0.0) || !(probe_duration > 0.0)) {
    throw ConfigError("plant durations and sample_rate must be positive");
  }
  const double gains[] = {contact_stiffness_z, lateral_gain, torque_gain_x, torque_gain_y,
                          snap_drop, probe_stiffness, probe_torque_gain, probe_force_cap};
  for (double g : gains) {
    if (g < 0.0) throw ConfigError("plant gains must be nonnegative");
  }
  if (noise_sigma.size() != kChannelCount) throw ConfigError("noise_sigma needs 6 entries");
  for (double s : noise_sigma) {
    if (s < 0.0) throw ConfigError("noise sigma must be nonnegative");
  }
}

std::pair<ForceTorqueProfile, bool> simulate_assembly(const OffsetPattern& offset,
                                                      const PlantConfig& config,
                                                      std::uint64_t seed) {
  config.validate();
  check_offset(offset, config);
  const bool success =
      std::abs(offset.dx) <= config.tol_x && std::abs(offset.dtheta_z) <= config.tol_theta;

  const int n = static_cast<int>(std::lround(config.insertion_duration * config.sample_rate)) + 1;
  const double dt = 1.0 / config.sample_rate;

  ForceTorqueProfile profile;
  profile.sample_period = dt;
  profile.phase = PhaseTag::assembly;
  for (auto& ch : profile.channels) ch.resize(n);

  const double dx = offset.dx;
  const double dth = offset.dtheta_z;
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const double depth = config.insertion_depth * t / config.insertion_duration;
    const double ramp_x = clamp01((t - config.x_onset) / config.x_rise);
    const double ramp_h = clamp01((t - config.theta_onset) / config.theta_rise);

    double fz = config.contact_stiffness_z * depth;
    if (success) {
      fz -= config.snap_drop * smooth_step((t - config.snap_time) / config.snap_width);
    }
    profile.channels[0][k] = config.lateral_gain * (dx + config.lateral_coupling * dth) * ramp_x;
    profile.channels[1][k] = config.cross_coupling * config.lateral_gain * dx * ramp_x;
    profile.channels[2][k] = fz;
    profile.channels[3][k] = config.torque_gain_x * dth * ramp_h;
    profile.channels[4][k] = config.torque_gain_y * dx * ramp_x;
    profile.channels[5][k] = config.cross_coupling * config.torque_gain_x * dth * ramp_h;
  }
  add_noise(profile, config, seed);
  return {std::move(profile), success};
}

ForceTorqueProfile simulate_probe(const OffsetPattern& offset, ProbeDirection direction,
                                  const PlantConfig& config, std::uint64_t seed) {
  config.validate();
  check_offset(offset, config);
  const double d = direction == ProbeDirection::plus_x ? 1.0 : -1.0;

  const int n = static_cast<int>(std::lround(config.probe_duration * config.sample_rate)) + 1;
  const double dt = 1.0 / config.sample_rate;

  ForceTorqueProfile profile;
  profile.sample_period = dt;
  profile.phase =
      direction == ProbeDirection::plus_x ? PhaseTag::probe_plus_x : PhaseTag::probe_minus_x;
  for (auto& ch : profile.channels) ch.resize(n);

  // The part sits offset by dx, so probing toward it contacts sooner.
  const double contact_travel = std::max(0.0, config.probe_clearance - d * offset.dx);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const double travel = config.probe_distance * t / config.probe_duration;
    const double contact = std::min(
        config.probe_stiffness * std::max(0.0, travel - contact_travel), config.probe_force_cap);
    const double tx =
        config.probe_torque_gain * offset.dtheta_z * (t / config.probe_duration);

    profile.channels[0][k] = d * contact;
    profile.channels[1][k] = config.cross_coupling * contact;
    profile.channels[2][k] = config.probe_retract_force;
    profile.channels[3][k] = tx;
    profile.channels[4][k] = config.probe_moment_coupling * contact;
    profile.channels[5][k] = config.cross_coupling * tx;
  }
  add_noise(profile, config, seed);
  return profile;
}

OffsetPattern apply_recovery(const OffsetPattern& offset, const RecoveryAction& action) {
  return {offset.dx + action.delta_x, offset.dtheta_z + action.delta_theta};
}

EpisodeLog run_episode(const OffsetPattern& true_offset, const PhaseTrees& trees,
                       const IdentificationPolicyConfig& policy, const PlantConfig& plant,
                       std::uint64_t seed) {
  policy.validate();
  EpisodeLog log;
  OffsetPattern offset = true_offset;

  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    auto [profile, _] = simulate_assembly(offset, plant, rng::derive_seed(seed, attempt, 0));
    const ForceTorqueProfile truncated = truncate(profile, policy.t_span);
    const OffsetPattern current = offset;
    const auto supplier = [&](ProbeDirection dir) {
      const std::uint64_t probe_seed =
          rng::derive_seed(seed, attempt, dir == ProbeDirection::plus_x ? 1 : 2);
      return simulate_probe(current, dir, plant, probe_seed);
    };
    const IdentificationResult id = identify(truncated, trees, supplier, policy);

    if (id.predicted == StateLabel::S1_success) {
      // Predicted success: finish the insertion and record the ground truth.
      const bool succeeded =
          label_from_offset(offset, plant.tol_x, plant.tol_theta) == StateLabel::S1_success;
      log.steps.push_back({offset, id, RecoveryAction{0.0, 0.0, false}, succeeded});
      log.final_success = succeeded;
      return log;
    }

    const RecoveryAction action = recovery_action(id.predicted, policy);
    log.steps.push_back({offset, id, action, false});
    if (attempt == policy.max_retries) break;  // retry budget spent
    offset = apply_recovery(offset, action);
    ++log.retries_used;
  }
  log.final_success = false;
  return log;
}

}  // namespace snapfit
