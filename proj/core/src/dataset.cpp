#include "snapfit/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace snapfit {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<OffsetPattern> training_offsets() {
  std::vector<OffsetPattern> grid;
  grid.reserve(131);
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      grid.push_back({(i - 5) * 0.4, (j - 5) * 0.4});
    }
  }
  const double ring[8][2] = {{0.2, 0.0},  {-0.2, 0.0}, {0.0, 0.2},  {0.0, -0.2},
                             {0.2, 0.2},  {0.2, -0.2}, {-0.2, 0.2}, {-0.2, -0.2}};
  for (const auto& p : ring) grid.push_back({p[0], p[1]});
  grid.push_back({0.6, 0.6});
  grid.push_back({-0.6, -0.6});
  return grid;
}

std::vector<OffsetPattern> validation_success_offsets() {
  return {{-0.25, -0.25}, {-0.5, 0.5}, {-0.5, 0.0}, {0.25, -0.25}, {0.5, 0.5},
          {0.5, 0.0},     {0.0, -0.5}, {0.0, 0.5},  {0.0, 0.0}};
}

std::vector<OffsetPattern> validation_error_offsets() {
  return {{2.0, 0.0},  {-2.0, 0.0}, {0.0, 2.0},   {0.0, -2.0},
          {1.5, 1.5},  {1.5, -1.5}, {-1.5, 1.5},  {-1.5, -1.5}};
}

LabeledSample synthesize_sample(const OffsetPattern& offset, const PlantConfig& plant,
                                std::uint64_t seed) {
  LabeledSample sample;
  sample.offset = offset;
  sample.label = label_from_offset(offset, plant.tol_x, plant.tol_theta);
  auto [assembly, success] = simulate_assembly(offset, plant, seed);
  sample.assembly_succeeded = success;
  sample.profiles[PhaseTag::assembly] = std::move(assembly);
  sample.profiles[PhaseTag::probe_plus_x] =
      simulate_probe(offset, ProbeDirection::plus_x, plant, seed);
  sample.profiles[PhaseTag::probe_minus_x] =
      simulate_probe(offset, ProbeDirection::minus_x, plant, seed);
  return sample;
}

void write_manifest(const std::string& path, const std::vector<DatasetEntry>& entries) {
  json array = json::array();
  for (const DatasetEntry& e : entries) {
    json files = json::object();
    if (!e.assembly_file.empty()) files["assembly"] = e.assembly_file;
    if (!e.probe_plus_x_file.empty()) files["probe_plus_x"] = e.probe_plus_x_file;
    if (!e.probe_minus_x_file.empty()) files["probe_minus_x"] = e.probe_minus_x_file;
    array.push_back({{"offset", {{"dx", e.offset.dx}, {"dtheta_z", e.offset.dtheta_z}}},
                     {"label", state_name(e.label)},
                     {"files", files}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << array.dump(2) << '\n';
}

std::vector<DatasetEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json array;
  try {
    in >> array;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path + ": " + e.what());
  }
  if (!array.is_array()) throw DataError("manifest must be a JSON array: " + path);
  std::vector<DatasetEntry> entries;
  entries.reserve(array.size());
  try {
    for (const json& item : array) {
      DatasetEntry e;
      e.offset.dx = item.at("offset").at("dx").get<double>();
      e.offset.dtheta_z = item.at("offset").at("dtheta_z").get<double>();
      e.label = state_from_name(item.at("label").get<std::string>());
      const json& files = item.at("files");
      if (files.contains("assembly")) e.assembly_file = files["assembly"].get<std::string>();
      if (files.contains("probe_plus_x")) {
        e.probe_plus_x_file = files["probe_plus_x"].get<std::string>();
      }
      if (files.contains("probe_minus_x")) {
        e.probe_minus_x_file = files["probe_minus_x"].get<std::string>();
      }
      entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path + ": " + e.what());
  }
  return entries;
}

DatasetEntry write_sample(const std::string& dir, const std::string& basename,
                          const LabeledSample& sample) {
  DatasetEntry entry;
  entry.offset = sample.offset;
  entry.label = sample.label;
  for (const auto& [phase, profile] : sample.profiles) {
    const std::string file = basename + "_" + phase_name(phase) + ".csv";
    write_profile_csv((fs::path(dir) / file).string(), profile);
    switch (phase) {
      case PhaseTag::assembly: entry.assembly_file = file; break;
      case PhaseTag::probe_plus_x: entry.probe_plus_x_file = file; break;
      case PhaseTag::probe_minus_x: entry.probe_minus_x_file = file; break;
    }
  }
  return entry;
}

DatasetSplit load_split(const std::string& dir) {
  DatasetSplit split;
  split.entries = read_manifest((fs::path(dir) / "manifest.json").string());
  split.samples.reserve(split.entries.size());
  for (const DatasetEntry& e : split.entries) {
    LabeledSample sample;
    sample.offset = e.offset;
    sample.label = e.label;
    sample.assembly_succeeded = e.label == StateLabel::S1_success;
    if (!e.assembly_file.empty()) {
      sample.profiles[PhaseTag::assembly] =
          read_profile_csv((fs::path(dir) / e.assembly_file).string(), PhaseTag::assembly);
    }
    if (!e.probe_plus_x_file.empty()) {
      sample.profiles[PhaseTag::probe_plus_x] =
          read_profile_csv((fs::path(dir) / e.probe_plus_x_file).string(),
                           PhaseTag::probe_plus_x);
    }
    if (!e.probe_minus_x_file.empty()) {
      sample.profiles[PhaseTag::probe_minus_x] =
          read_profile_csv((fs::path(dir) / e.probe_minus_x_file).string(),
                           PhaseTag::probe_minus_x);
    }
    split.samples.push_back(std::move(sample));
  }
  return split;
}

}  // namespace snapfit
