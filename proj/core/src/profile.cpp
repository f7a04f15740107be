#include "snapfit/profile.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace snapfit {

namespace {

const char* kChannelNames[kChannelCount] = {"fx", "fy", "fz", "tx", "ty", "tz"};

}  // namespace

const char* channel_name(int index) {
  if (index < 0 || index >= kChannelCount) throw ConfigError("channel index out of range");
  return kChannelNames[index];
}

const char* phase_name(PhaseTag phase) {
  switch (phase) {
    case PhaseTag::assembly: return "assembly";
    case PhaseTag::probe_plus_x: return "probe_plus_x";
    case PhaseTag::probe_minus_x: return "probe_minus_x";
  }
  throw ConfigError("unknown phase tag");
}

PhaseTag phase_from_name(const std::string& name) {
  if (name == "assembly") return PhaseTag::assembly;
  if (name == "probe_plus_x") return PhaseTag::probe_plus_x;
  if (name == "probe_minus_x") return PhaseTag::probe_minus_x;
  throw DataError("unknown phase name: " + name);
}

std::string state_name(StateLabel label) {
  return "S" + std::to_string(static_cast<int>(label));
}

StateLabel state_from_name(const std::string& name) {
  if (name.size() == 2 && name[0] == 'S' && name[1] >= '1' && name[1] <= '9') {
    return static_cast<StateLabel>(name[1] - '0');
  }
  throw DataError("unknown state label: " + name);
}

void ForceTorqueProfile::validate() const {
  if (!(sample_period > 0.0)) throw DataError("sample_period must be positive");
  const std::size_t n = channels[0].size();
  if (n < 2) throw DataError("profile needs at least 2 samples");
  for (int c = 0; c < kChannelCount; ++c) {
    if (channels[c].size() != n) throw DataError("channel length mismatch");
    for (double v : channels[c]) {
      if (!std::isfinite(v)) throw DataError("non-finite sample value");
    }
  }
}

ForceTorqueProfile truncate(const ForceTorqueProfile& profile, double t_span) {
  profile.validate();
  const double duration = profile.duration();
  if (!(t_span > 0.0) || t_span > duration + 1e-9) {
    throw ConfigError("t_span out of range (0, " + std::to_string(duration) + "]");
  }
  // Keep samples with k * dt <= t_span; the epsilon absorbs representation
  // error in t_span / dt (e.g. 1.9 / 0.01).
  const int keep = static_cast<int>(std::floor(t_span / profile.sample_period + 1e-9)) + 1;
  ForceTorqueProfile out;
  out.sample_period = profile.sample_period;
  out.phase = profile.phase;
  for (int c = 0; c < kChannelCount; ++c) {
    out.channels[c].assign(profile.channels[c].begin(), profile.channels[c].begin() + keep);
  }
  return out;
}

StateLabel label_from_offset(const OffsetPattern& offset, double tol_x, double tol_theta) {
  if (!(tol_x > 0.0) || !(tol_theta > 0.0)) throw ConfigError("tolerances must be positive");
  const bool x_bad = std::abs(offset.dx) > tol_x;
  const bool t_bad = std::abs(offset.dtheta_z) > tol_theta;
  if (!x_bad && !t_bad) return StateLabel::S1_success;
  if (x_bad && !t_bad) return offset.dx > 0 ? StateLabel::S2 : StateLabel::S3;
  if (!x_bad && t_bad) return offset.dtheta_z > 0 ? StateLabel::S4 : StateLabel::S5;
  if (offset.dx > 0) {
    return offset.dtheta_z > 0 ? StateLabel::S6 : StateLabel::S7;
  }
  return offset.dtheta_z > 0 ? StateLabel::S8 : StateLabel::S9;
}

ForceTorqueProfile resample_to_grid(const ForceTorqueProfile& profile, int target_T) {
  profile.validate();
  if (target_T < 2) throw ConfigError("target grid needs at least 2 points");
  const int n = profile.length();
  const double duration = profile.duration();
  ForceTorqueProfile out;
  out.phase = profile.phase;
  out.sample_period = duration / (target_T - 1);
  for (int c = 0; c < kChannelCount; ++c) {
    const auto& src = profile.channels[c];
    auto& dst = out.channels[c];
    dst.resize(target_T);
    dst.front() = src.front();
    dst.back() = src.back();
    for (int k = 1; k + 1 < target_T; ++k) {
      const double t = out.sample_period * k;
      const double pos = t / profile.sample_period;
      int i = static_cast<int>(pos);
      if (i >= n - 1) i = n - 2;
      const double w = pos - i;
      dst[k] = src[i] * (1.0 - w) + src[i + 1] * w;
    }
  }
  return out;
}

void write_profile_csv(const std::string& path, const ForceTorqueProfile& profile) {
  profile.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "t,fx,fy,fz,tx,ty,tz\n";
  char buf[64];
  const int n = profile.length();
  for (int k = 0; k < n; ++k) {
    std::snprintf(buf, sizeof(buf), "%.9g", profile.sample_period * k);
    out << buf;
    for (int c = 0; c < kChannelCount; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", profile.channels[c][k]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

ForceTorqueProfile read_profile_csv(const std::string& path, PhaseTag phase) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profile CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,fx,fy,fz,tx,ty,tz") {
    throw DataError("bad or missing CSV header in " + path);
  }
  ForceTorqueProfile profile;
  profile.phase = phase;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double values[1 + kChannelCount];
    for (int c = 0; c < 1 + kChannelCount; ++c) {
      if (!std::getline(row, cell, ',')) throw DataError("short CSV row in " + path);
      try {
        values[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw DataError("non-numeric CSV cell in " + path);
      }
    }
    times.push_back(values[0]);
    for (int c = 0; c < kChannelCount; ++c) profile.channels[c].push_back(values[1 + c]);
  }
  if (times.size() < 2) throw DataError("profile CSV has fewer than 2 samples: " + path);
  profile.sample_period = times[1] - times[0];
  profile.validate();
  return profile;
}

}  // namespace snapfit
