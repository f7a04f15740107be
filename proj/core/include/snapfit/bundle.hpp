#pragma once

#include <cstdint>
#include <string>

#include "snapfit/probe.hpp"
#include "snapfit/tree.hpp"

namespace snapfit {

inline constexpr int kBundleFormatVersion = 1;

// Everything an identification run needs at one prediction horizon: the three
// per-phase trees (each carrying its six fPCA models) plus an echo of the
// training configuration.
struct ModelBundle {
  int format_version = kBundleFormatVersion;
  double t_span = 0.0;
  PhaseTrees trees;
  // training config echo
  int fpca_components = 2;
  double svm_c = 10.0;
  KernelSpec kernel{KernelKind::rbf, 0.0};
  bool eq1_corrected = false;
};

// JSON persistence. Serialization is canonical (sorted keys, shortest
// round-trip float representation), so save -> load -> save is byte-stable.
void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

// FNV-1a 64-bit hex digest, used to stamp reports with a config fingerprint.
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

}  // namespace snapfit
