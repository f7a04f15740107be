#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snapfit/sim.hpp"

namespace snapfit {

struct DatasetEntry {
  OffsetPattern offset;
  StateLabel label = StateLabel::S1_success;
  // Relative CSV path per phase; empty string = not recorded.
  std::string assembly_file;
  std::string probe_plus_x_file;
  std::string probe_minus_x_file;
};

// The 131-offset training grid: an 11x11 lattice with 0.4 mm/deg spacing over
// [-2, 2]^2, plus 10 supplementary in-tolerance points (the ring of 8 at 0.2
// and the diagonal pair at +-0.6). With the default 1.0/1.0 tolerances this
// yields 35 success samples and 9..15 per error state.
std::vector<OffsetPattern> training_offsets();

// Validation anchors: nine in-tolerance offsets plus one offset per error
// state; each is recorded `trials` times under distinct noise seeds.
std::vector<OffsetPattern> validation_success_offsets();
std::vector<OffsetPattern> validation_error_offsets();

// All three phase recordings for one offset. Phases share the seed but draw
// from distinct noise streams.
LabeledSample synthesize_sample(const OffsetPattern& offset, const PlantConfig& plant,
                                std::uint64_t seed);

void write_manifest(const std::string& path, const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> read_manifest(const std::string& path);

// Writes the sample's CSVs next to the manifest and returns its entry.
DatasetEntry write_sample(const std::string& dir, const std::string& basename,
                          const LabeledSample& sample);

struct DatasetSplit {
  std::vector<DatasetEntry> entries;
  std::vector<LabeledSample> samples;  // profiles loaded per entry
};

// Loads manifest.json from `dir` plus every referenced CSV.
DatasetSplit load_split(const std::string& dir);

}  // namespace snapfit
