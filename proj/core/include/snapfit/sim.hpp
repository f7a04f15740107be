#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "snapfit/probe.hpp"
#include "snapfit/profile.hpp"

namespace snapfit {

// Deterministic phenomenological snap-assembly plant. Closed-form profile
// model (all channels, t in seconds):
//
//   depth(t)  = insertion_depth * t / insertion_duration
//   ramp_x(t) = clamp((t - x_onset) / x_rise, 0, 1)       lateral-contact ramp
//   ramp_h(t) = clamp((t - theta_onset) / theta_rise, 0, 1)
//   snap(t)   = 0.5 * (1 + u / sqrt(1 + u^2)),  u = (t - snap_time) / snap_width
//
//   Fz = contact_stiffness_z * depth(t) - [success] * snap_drop * snap(t)
//   Fx = lateral_gain * (dx + lateral_coupling * dth) * ramp_x(t)
//   Fy = cross_coupling * lateral_gain * dx * ramp_x(t)
//   Tx = torque_gain_x * dth * ramp_h(t)
//   Ty = torque_gain_y * dx * ramp_x(t)
//   Tz = cross_coupling * torque_gain_x * dth * ramp_h(t)
//
// On failure the snap term is absent and Fz keeps rising past snap_time (jam).
// Additive noise per channel comes from the counter generator keyed by
// (seed, phase, channel, sample), so profiles are bit-reproducible.
//
// Probe phase (direction d = +-1, travel u(t) = probe_distance * t / probe_duration):
//   contact onset  u_c = max(0, probe_clearance - d * dx)
//   contact force  Fc(t) = min(probe_stiffness * max(0, u(t) - u_c), probe_force_cap)
//   Fx = d * Fc,  Fy = cross_coupling * Fc,  Fz = probe_retract_force
//   Tx = probe_torque_gain * dth * t / probe_duration
//   Ty = probe_moment_coupling * Fc,  Tz = cross_coupling * Tx
struct PlantConfig {
  double tol_x = 1.0;        // mm
  double tol_theta = 1.0;    // deg
  double insertion_depth = 6.0;     // mm
  double insertion_duration = 3.0;  // s
  double snap_time = 2.1;           // s
  double snap_width = 0.12;         // s
  double sample_rate = 100.0;       // Hz
  double contact_stiffness_z = 2.0; // N/mm
  double lateral_gain = 1.5;        // N/mm
  double torque_gain_x = 0.4;       // N*m/deg
  double torque_gain_y = 0.3;       // N*m/mm
  double snap_drop = 8.0;           // N
  double lateral_coupling = 0.2;
  double cross_coupling = 0.1;
  double x_onset = 1.72;     // s; lateral force channels are quiet before this
  double x_rise = 0.40;      // s
  double theta_onset = 1.60; // s
  double theta_rise = 0.50;  // s
  // 2% of each channel's clean peak over the studied offset range.
  std::vector<double> noise_sigma{0.072, 0.0072, 0.24, 0.016, 0.012, 0.0016};
  std::uint64_t rng_seed = 12345;

  double probe_distance = 2.0;      // mm
  double probe_duration = 1.0;      // s
  double probe_clearance = 0.5;     // mm
  double probe_stiffness = 3.0;     // N/mm
  double probe_force_cap = 5.0;     // N
  double probe_torque_gain = 0.8;   // N*m/deg
  double probe_moment_coupling = 0.25;
  double probe_retract_force = 1.0; // N

  double max_offset = 2.0;  // admissible |dx| [mm] and |dtheta_z| [deg]

  void validate() const;
};

struct EpisodeStep {
  OffsetPattern offset;
  IdentificationResult identification;
  RecoveryAction action;
  bool succeeded = false;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  bool final_success = false;
  int retries_used = 0;
};

// Full-duration assembly profile plus the ground-truth success flag
// (success iff the offset is inside both tolerances).
std::pair<ForceTorqueProfile, bool> simulate_assembly(const OffsetPattern& offset,
                                                      const PlantConfig& config,
                                                      std::uint64_t seed);

ForceTorqueProfile simulate_probe(const OffsetPattern& offset, ProbeDirection direction,
                                  const PlantConfig& config, std::uint64_t seed);

// Componentwise offset update after a recovery motion.
OffsetPattern apply_recovery(const OffsetPattern& offset, const RecoveryAction& action);

// Closed loop: simulate, truncate at the policy horizon, identify (probing on
// demand through simulate_probe), recover and retry until predicted success
// or max_retries recoveries are spent.
EpisodeLog run_episode(const OffsetPattern& true_offset, const PhaseTrees& trees,
                       const IdentificationPolicyConfig& policy, const PlantConfig& plant,
                       std::uint64_t seed);

}  // namespace snapfit
