#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "snapfit/errors.hpp"

namespace snapfit {

inline constexpr int kChannelCount = 6;

// Channel order is fixed everywhere: Fx, Fy, Fz, Tx, Ty, Tz.
enum class Channel : int { fx = 0, fy, fz, tx, ty, tz };

const char* channel_name(int index);  // "fx" .. "tz"

enum class PhaseTag { assembly, probe_plus_x, probe_minus_x };

const char* phase_name(PhaseTag phase);
PhaseTag phase_from_name(const std::string& name);

// S1 is success; S2..S9 are the eight directional error states:
//   S2: dx > 0            S3: dx < 0
//   S4: dtheta_z > 0      S5: dtheta_z < 0
//   S6: dx > 0, dth > 0   S7: dx > 0, dth < 0
//   S8: dx < 0, dth > 0   S9: dx < 0, dth < 0
enum class StateLabel : int {
  S1_success = 1,
  S2 = 2,
  S3 = 3,
  S4 = 4,
  S5 = 5,
  S6 = 6,
  S7 = 7,
  S8 = 8,
  S9 = 9,
};

inline constexpr int kStateCount = 9;

std::string state_name(StateLabel label);               // "S1" .. "S9"
StateLabel state_from_name(const std::string& name);
inline bool is_error_state(StateLabel label) { return label != StateLabel::S1_success; }

// 6 synchronized force/torque series on a uniform grid.
struct ForceTorqueProfile {
  double sample_period = 0.0;  // seconds between samples, > 0
  std::array<std::vector<double>, kChannelCount> channels;
  PhaseTag phase = PhaseTag::assembly;

  int length() const { return static_cast<int>(channels[0].size()); }
  double duration() const { return sample_period * (length() - 1); }

  // Throws DataError unless all channels share a length >= 2, the grid step
  // is positive, and every sample is finite.
  void validate() const;
};

// Initial placement error of the held part: x translation and z rotation.
struct OffsetPattern {
  double dx = 0.0;        // millimeters
  double dtheta_z = 0.0;  // degrees
};

struct LabeledSample {
  std::map<PhaseTag, ForceTorqueProfile> profiles;
  OffsetPattern offset;
  StateLabel label = StateLabel::S1_success;
  bool assembly_succeeded = false;
};

// Prefix of the profile containing every sample with timestamp <= t_span.
// Throws ConfigError when t_span <= 0 or exceeds the profile duration.
ForceTorqueProfile truncate(const ForceTorqueProfile& profile, double t_span);

// Ground-truth labeling rule: success takes precedence (an offset exactly on
// a tolerance boundary is S1), then strict sign tests on the violating
// components. Throws ConfigError on nonpositive tolerances.
StateLabel label_from_offset(const OffsetPattern& offset, double tol_x, double tol_theta);

// Linear interpolation of each channel onto a uniform grid of target_T
// points spanning the same duration; endpoints are preserved exactly.
ForceTorqueProfile resample_to_grid(const ForceTorqueProfile& profile, int target_T);

// CSV format: header "t,fx,fy,fz,tx,ty,tz", one row per sample.
void write_profile_csv(const std::string& path, const ForceTorqueProfile& profile);
ForceTorqueProfile read_profile_csv(const std::string& path, PhaseTag phase = PhaseTag::assembly);

}  // namespace snapfit
