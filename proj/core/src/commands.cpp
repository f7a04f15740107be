#include "snapfit/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "snapfit/rng.hpp"

namespace snapfit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json plant_to_json(const PlantConfig& c) {
  return {{"tol_x", c.tol_x},
          {"tol_theta", c.tol_theta},
          {"insertion_depth", c.insertion_depth},
          {"insertion_duration", c.insertion_duration},
          {"snap_time", c.snap_time},
          {"snap_width", c.snap_width},
          {"sample_rate", c.sample_rate},
          {"contact_stiffness_z", c.contact_stiffness_z},
          {"lateral_gain", c.lateral_gain},
          {"torque_gain_x", c.torque_gain_x},
          {"torque_gain_y", c.torque_gain_y},
          {"snap_drop", c.snap_drop},
          {"lateral_coupling", c.lateral_coupling},
          {"cross_coupling", c.cross_coupling},
          {"x_onset", c.x_onset},
          {"x_rise", c.x_rise},
          {"theta_onset", c.theta_onset},
          {"theta_rise", c.theta_rise},
          {"noise_sigma", c.noise_sigma},
          {"rng_seed", c.rng_seed},
          {"probe_distance", c.probe_distance},
          {"probe_duration", c.probe_duration},
          {"probe_clearance", c.probe_clearance},
          {"probe_stiffness", c.probe_stiffness},
          {"probe_force_cap", c.probe_force_cap},
          {"probe_torque_gain", c.probe_torque_gain},
          {"probe_moment_coupling", c.probe_moment_coupling},
          {"probe_retract_force", c.probe_retract_force},
          {"max_offset", c.max_offset}};
}

PlantConfig plant_from_json(const json& j) {
  PlantConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("tol_x", c.tol_x);
  get("tol_theta", c.tol_theta);
  get("insertion_depth", c.insertion_depth);
  get("insertion_duration", c.insertion_duration);
  get("snap_time", c.snap_time);
  get("snap_width", c.snap_width);
  get("sample_rate", c.sample_rate);
  get("contact_stiffness_z", c.contact_stiffness_z);
  get("lateral_gain", c.lateral_gain);
  get("torque_gain_x", c.torque_gain_x);
  get("torque_gain_y", c.torque_gain_y);
  get("snap_drop", c.snap_drop);
  get("lateral_coupling", c.lateral_coupling);
  get("cross_coupling", c.cross_coupling);
  get("x_onset", c.x_onset);
  get("x_rise", c.x_rise);
  get("theta_onset", c.theta_onset);
  get("theta_rise", c.theta_rise);
  get("noise_sigma", c.noise_sigma);
  get("rng_seed", c.rng_seed);
  get("probe_distance", c.probe_distance);
  get("probe_duration", c.probe_duration);
  get("probe_clearance", c.probe_clearance);
  get("probe_stiffness", c.probe_stiffness);
  get("probe_force_cap", c.probe_force_cap);
  get("probe_torque_gain", c.probe_torque_gain);
  get("probe_moment_coupling", c.probe_moment_coupling);
  get("probe_retract_force", c.probe_retract_force);
  get("max_offset", c.max_offset);
  c.validate();
  return c;
}

json outcome_to_json(const ClassificationOutcome& outcome) {
  json path = json::array();
  for (const PathStep& step : outcome.node_path) {
    path.push_back({{"node", step.node_id},
                    {"side", step.positive_side ? "positive" : "negative"},
                    {"probability", step.class_probability}});
  }
  return {{"predicted", state_name(outcome.predicted)},
          {"path", path},
          {"min_class_probability", outcome.min_class_probability},
          {"min_node_accuracy", outcome.min_node_accuracy}};
}

json identification_to_json(const IdentificationResult& id) {
  json out = {{"predicted", state_name(id.predicted)},
              {"used_probing", id.used_probing},
              {"chosen_source", chosen_source_name(id.chosen_source)},
              {"assembly", outcome_to_json(id.assembly_outcome)}};
  if (id.probe_outcomes) {
    out["probe_plus_x"] = outcome_to_json(id.probe_outcomes->first);
    out["probe_minus_x"] = outcome_to_json(id.probe_outcomes->second);
  }
  return out;
}

Eigen::MatrixXd channel_curves(const std::vector<const ForceTorqueProfile*>& profiles,
                               int channel) {
  const int n = static_cast<int>(profiles.size());
  const int t = profiles[0]->length();
  Eigen::MatrixXd curves(n, t);
  for (int i = 0; i < n; ++i) {
    if (profiles[i]->length() != t) throw DataError("profiles disagree on grid length");
    curves.row(i) =
        Eigen::Map<const Eigen::VectorXd>(profiles[i]->channels[channel].data(), t).transpose();
  }
  return curves;
}

void print_tree_table(const DecisionTree& tree) {
  std::printf("phase %-14s t_span %.2f s\n", phase_name(tree.phase), tree.t_span);
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) continue;
    std::printf("  node %-2d  channel %-2s  %s | %s  accuracy %.3f\n", node.node_id,
                channel_name(node.component - 1), node.partition.to_string().c_str(),
                node.pattern_ids.minus(node.partition).to_string().c_str(), node.accuracy);
  }
}

const ForceTorqueProfile& sample_phase(const LabeledSample& sample, PhaseTag phase) {
  const auto it = sample.profiles.find(phase);
  if (it == sample.profiles.end()) {
    throw EvalError(std::string("dataset sample lacks a ") + phase_name(phase) + " profile");
  }
  return it->second;
}

std::uint64_t read_dataset_seed(const std::string& dataset_dir) {
  const fs::path meta = fs::path(dataset_dir) / "generation.json";
  if (!fs::exists(meta)) return 0;
  std::ifstream in(meta);
  json doc;
  in >> doc;
  return doc.value("seed", std::uint64_t{0});
}

}  // namespace

PlantConfig load_plant_config(const std::string& path) {
  if (path.empty()) return PlantConfig{};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plant config: " + path);
  json doc;
  try {
    in >> doc;
    return plant_from_json(doc);
  } catch (const json::exception& e) {
    throw ConfigError("malformed plant config " + path + ": " + e.what());
  }
}

void save_plant_config(const std::string& path, const PlantConfig& config) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write plant config: " + path);
  out << plant_to_json(config).dump(2) << '\n';
}

std::vector<OffsetPattern> GridSpec::offsets() const {
  if (lattice_points_per_axis < 2) throw ConfigError("grid needs at least 2 points per axis");
  if (lattice_points_per_axis == 11 && lattice_extent == 2.0 && supplementary_points) {
    return training_offsets();
  }
  std::vector<OffsetPattern> grid;
  const int n = lattice_points_per_axis;
  const double step = 2.0 * lattice_extent / (n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      grid.push_back({-lattice_extent + i * step, -lattice_extent + j * step});
    }
  }
  return grid;
}

void cmd_generate(const GenerateOptions& options) {
  const PlantConfig plant = load_plant_config(options.plant_config_path);
  if (options.grid.validation_trials < 1) throw ConfigError("validation_trials must be >= 1");

  const fs::path out_dir(options.out_dir);
  const fs::path train_dir = out_dir / "train";
  const fs::path valid_dir = out_dir / "validation";
  std::error_code ec;
  fs::create_directories(train_dir, ec);
  fs::create_directories(valid_dir, ec);
  if (!fs::is_directory(train_dir) || !fs::is_directory(valid_dir)) {
    throw DataError("cannot create dataset directories under " + options.out_dir);
  }

  char name[32];
  std::vector<DatasetEntry> train_entries;
  const std::vector<OffsetPattern> grid = options.grid.offsets();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const LabeledSample sample =
        synthesize_sample(grid[i], plant, rng::derive_seed(options.seed, 1, i));
    std::snprintf(name, sizeof(name), "s%03zu", i);
    train_entries.push_back(write_sample(train_dir.string(), name, sample));
  }
  write_manifest((train_dir / "manifest.json").string(), train_entries);

  std::vector<OffsetPattern> validation;
  for (const OffsetPattern& o : validation_success_offsets()) {
    for (int r = 0; r < options.grid.validation_trials; ++r) validation.push_back(o);
  }
  for (const OffsetPattern& o : validation_error_offsets()) {
    for (int r = 0; r < options.grid.validation_trials; ++r) validation.push_back(o);
  }
  std::vector<DatasetEntry> valid_entries;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const LabeledSample sample =
        synthesize_sample(validation[i], plant, rng::derive_seed(options.seed, 2, i));
    std::snprintf(name, sizeof(name), "v%03zu", i);
    valid_entries.push_back(write_sample(valid_dir.string(), name, sample));
  }
  write_manifest((valid_dir / "manifest.json").string(), valid_entries);

  save_plant_config((out_dir / "plant_config.json").string(), plant);
  {
    const json meta = {{"format_version", 1},
                       {"seed", options.seed},
                       {"grid",
                        {{"lattice_points_per_axis", options.grid.lattice_points_per_axis},
                         {"lattice_extent", options.grid.lattice_extent},
                         {"supplementary_points", options.grid.supplementary_points},
                         {"validation_trials", options.grid.validation_trials}}},
                       {"train_samples", train_entries.size()},
                       {"validation_samples", valid_entries.size()}};
    std::ofstream out(out_dir / "generation.json");
    out << meta.dump(2) << '\n';
  }
  if (!options.quiet) {
    std::printf("generated %zu training and %zu validation samples under %s\n",
                train_entries.size(), valid_entries.size(), options.out_dir.c_str());
  }
}

DecisionTree train_phase_tree(const DatasetSplit& split, PhaseTag phase, double t_span,
                              const TrainOptions& options) {
  const int n = static_cast<int>(split.samples.size());
  if (n < 4) throw TrainingError("training split too small");

  std::vector<StateLabel> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = split.entries[i].label;

  // Assembly trees see the profile truncated at the prediction horizon;
  // probe trees consume the full probe recordings.
  std::vector<ForceTorqueProfile> truncated;
  std::vector<const ForceTorqueProfile*> profiles(n);
  if (phase == PhaseTag::assembly) {
    truncated.resize(n);
    for (int i = 0; i < n; ++i) {
      truncated[i] = truncate(sample_phase(split.samples[i], phase), t_span);
      profiles[i] = &truncated[i];
    }
  } else {
    for (int i = 0; i < n; ++i) profiles[i] = &sample_phase(split.samples[i], phase);
  }

  DecisionTree tree;
  tree.phase = phase;
  tree.t_span = t_span;
  for (int c = 0; c < kChannelCount; ++c) {
    tree.fpca_models[c] = fit_fpca(channel_curves(profiles, c), options.fpca_components,
                                   profiles[0]->sample_period);
  }
  std::vector<FeatureVector> features(n);
  for (int i = 0; i < n; ++i) features[i] = extract_features(tree.fpca_models, *profiles[i]);

  TreeBuildConfig config;
  config.svm_c = options.svm_c;
  config.kernel = options.kernel;
  config.eq1_corrected = options.eq1_corrected;
  config.num_threads = options.num_threads;
  DecisionTree built = build_tree(features, labels, config);
  built.phase = tree.phase;
  built.t_span = tree.t_span;
  built.fpca_models = std::move(tree.fpca_models);
  return built;
}

ModelBundle cmd_train(const TrainOptions& options) {
  const DatasetSplit split = load_split((fs::path(options.dataset_dir) / "train").string());

  ModelBundle bundle;
  bundle.t_span = options.t_span;
  bundle.fpca_components = options.fpca_components;
  bundle.svm_c = options.svm_c;
  bundle.kernel = options.kernel;
  bundle.eq1_corrected = options.eq1_corrected;
  bundle.trees.assembly = train_phase_tree(split, PhaseTag::assembly, options.t_span, options);
  bundle.trees.probe_plus_x =
      train_phase_tree(split, PhaseTag::probe_plus_x, options.t_span, options);
  bundle.trees.probe_minus_x =
      train_phase_tree(split, PhaseTag::probe_minus_x, options.t_span, options);

  if (!options.quiet) {
    print_tree_table(bundle.trees.assembly);
    print_tree_table(bundle.trees.probe_plus_x);
    print_tree_table(bundle.trees.probe_minus_x);
  }
  if (!options.out_model_path.empty()) save_bundle(options.out_model_path, bundle);
  return bundle;
}

EvalMode eval_mode_from_name(const std::string& name) {
  if (name == "assembly_only") return EvalMode::assembly_only;
  if (name == "probe_only") return EvalMode::probe_only;
  if (name == "probe_after_assembly") return EvalMode::probe_after_assembly;
  throw ConfigError("unknown eval mode: " + name);
}

const char* eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::assembly_only: return "assembly_only";
    case EvalMode::probe_only: return "probe_only";
    case EvalMode::probe_after_assembly: return "probe_after_assembly";
  }
  throw ConfigError("unknown eval mode");
}

EvalReport cmd_eval(const EvalOptions& options) {
  const ModelBundle bundle = load_bundle(options.model_path);
  const std::string valid_dir = (fs::path(options.dataset_dir) / "validation").string();
  const DatasetSplit split = load_split(valid_dir);
  if (split.samples.empty()) throw EvalError("validation split is empty");

  const bool needs_probes = options.mode != EvalMode::assembly_only;
  for (std::size_t i = 0; i < split.samples.size(); ++i) {
    const LabeledSample& sample = split.samples[i];
    if (options.mode != EvalMode::probe_only) {
      const auto it = sample.profiles.find(PhaseTag::assembly);
      if (it == sample.profiles.end()) {
        throw EvalError("validation sample " + std::to_string(i) + " lacks an assembly profile");
      }
      if (it->second.duration() + 1e-9 < bundle.t_span) {
        throw EvalError("model t_span " + std::to_string(bundle.t_span) +
                        " exceeds validation profile duration; incompatible dataset");
      }
    }
    if (needs_probes && (sample.profiles.find(PhaseTag::probe_plus_x) == sample.profiles.end() ||
                         sample.profiles.find(PhaseTag::probe_minus_x) == sample.profiles.end())) {
      throw EvalError("mode " + std::string(eval_mode_name(options.mode)) +
                      " requires probe profiles, validation sample " + std::to_string(i) +
                      " has none");
    }
  }

  IdentificationPolicyConfig policy;
  policy.probability_threshold = options.probability_threshold;
  policy.t_span = bundle.t_span;

  EvalReport report;
  report.mode = eval_mode_name(options.mode);
  report.t_span = bundle.t_span;
  report.dataset_seed = read_dataset_seed(options.dataset_dir);
  report.config_hash = fnv1a_hex(file_digest(options.model_path) +
                                 file_digest((fs::path(valid_dir) / "manifest.json").string()));

  std::array<StateRate, kStateCount> per_state;
  for (int k = 0; k < kStateCount; ++k) per_state[k].label = static_cast<StateLabel>(k + 1);

  for (const LabeledSample& sample : split.samples) {
    StateLabel predicted = StateLabel::S1_success;
    switch (options.mode) {
      case EvalMode::assembly_only: {
        const ForceTorqueProfile cut =
            truncate(sample.profiles.at(PhaseTag::assembly), bundle.t_span);
        predicted = classify_profile(bundle.trees.assembly, cut).predicted;
        break;
      }
      case EvalMode::probe_only: {
        const auto plus = classify_profile(bundle.trees.probe_plus_x,
                                           sample.profiles.at(PhaseTag::probe_plus_x));
        const auto minus = classify_profile(bundle.trees.probe_minus_x,
                                            sample.profiles.at(PhaseTag::probe_minus_x));
        predicted = fuse_probe_results(plus, minus).first;
        break;
      }
      case EvalMode::probe_after_assembly: {
        const ForceTorqueProfile cut =
            truncate(sample.profiles.at(PhaseTag::assembly), bundle.t_span);
        const auto supplier = [&sample](ProbeDirection dir) {
          return sample.profiles.at(dir == ProbeDirection::plus_x ? PhaseTag::probe_plus_x
                                                                  : PhaseTag::probe_minus_x);
        };
        const IdentificationResult id = identify(cut, bundle.trees, supplier, policy);
        predicted = id.predicted;
        if (id.used_probing) {
          ++report.probing_triggered;
          const bool assembly_right = id.assembly_outcome.predicted == sample.label;
          const bool final_right = predicted == sample.label;
          if (!assembly_right && final_right) ++report.improved;
          if (assembly_right && !final_right) ++report.deteriorated;
        }
        break;
      }
    }
    StateRate& rate = per_state[static_cast<int>(sample.label) - 1];
    ++rate.samples;
    ++report.samples;
    if (predicted == sample.label) {
      ++rate.correct;
      ++report.correct;
    }
  }
  report.success_rate = static_cast<double>(report.correct) / report.samples;
  for (const StateRate& rate : per_state) {
    if (rate.samples > 0) report.per_state.push_back(rate);
  }

  if (!options.out_report_path.empty()) {
    json states = json::array();
    for (const StateRate& rate : report.per_state) {
      states.push_back({{"label", state_name(rate.label)},
                        {"samples", rate.samples},
                        {"correct", rate.correct},
                        {"rate", static_cast<double>(rate.correct) / rate.samples}});
    }
    json doc = {{"format_version", 1},
                {"mode", report.mode},
                {"t_span", report.t_span},
                {"dataset_seed", report.dataset_seed},
                {"config_hash", report.config_hash},
                {"samples", report.samples},
                {"correct", report.correct},
                {"success_rate", report.success_rate},
                {"per_state", states}};
    if (options.mode == EvalMode::probe_after_assembly) {
      doc["probing"] = {{"triggered", report.probing_triggered},
                        {"improved", report.improved},
                        {"deteriorated", report.deteriorated}};
    }
    std::ofstream out(options.out_report_path);
    if (!out) throw DataError("cannot write report: " + options.out_report_path);
    out << doc.dump(2) << '\n';
  }

  if (!options.quiet) {
    std::printf("mode %-21s t_span %.2f  %d/%d correct  rate %.3f\n", report.mode.c_str(),
                report.t_span, report.correct, report.samples, report.success_rate);
    for (const StateRate& rate : report.per_state) {
      std::printf("  %-3s %2d/%2d\n", state_name(rate.label).c_str(), rate.correct, rate.samples);
    }
    if (options.mode == EvalMode::probe_after_assembly) {
      std::printf("  probing triggered %d (improved %d, deteriorated %d)\n",
                  report.probing_triggered, report.improved, report.deteriorated);
    }
  }
  return report;
}

EpisodeLog cmd_episode(const EpisodeOptions& options) {
  const ModelBundle bundle = load_bundle(options.model_path);
  const PlantConfig plant = load_plant_config(options.plant_config_path);

  IdentificationPolicyConfig policy;
  policy.probability_threshold = options.probability_threshold;
  policy.t_span = bundle.t_span;
  policy.probe_distance = plant.probe_distance;
  policy.max_retries = options.max_retries;

  const OffsetPattern offset{options.offset_dx, options.offset_dtheta};
  const EpisodeLog log = run_episode(offset, bundle.trees, policy, plant, options.seed);

  if (!options.out_path.empty()) {
    json steps = json::array();
    for (const EpisodeStep& step : log.steps) {
      steps.push_back({{"offset", {{"dx", step.offset.dx}, {"dtheta_z", step.offset.dtheta_z}}},
                       {"identification", identification_to_json(step.identification)},
                       {"action",
                        {{"delta_x", step.action.delta_x},
                         {"delta_theta", step.action.delta_theta},
                         {"retract_first", step.action.retract_first}}},
                       {"succeeded", step.succeeded}});
    }
    const json doc = {{"format_version", 1},
                      {"seed", options.seed},
                      {"config_hash", file_digest(options.model_path)},
                      {"true_offset", {{"dx", offset.dx}, {"dtheta_z", offset.dtheta_z}}},
                      {"final_success", log.final_success},
                      {"retries_used", log.retries_used},
                      {"steps", steps}};
    std::ofstream out(options.out_path);
    if (!out) throw DataError("cannot write episode log: " + options.out_path);
    out << doc.dump(2) << '\n';
  }

  if (!options.quiet) {
    std::printf("episode offset (%.2f mm, %.2f deg) seed %llu: %s after %d retries\n",
                offset.dx, offset.dtheta_z, static_cast<unsigned long long>(options.seed),
                log.final_success ? "success" : "failure", log.retries_used);
    for (const EpisodeStep& step : log.steps) {
      std::printf("  at (%.2f, %.2f): predicted %s via %s%s\n", step.offset.dx,
                  step.offset.dtheta_z, state_name(step.identification.predicted).c_str(),
                  chosen_source_name(step.identification.chosen_source),
                  step.identification.used_probing ? " (probed)" : "");
    }
  }
  return log;
}

}  // namespace snapfit
