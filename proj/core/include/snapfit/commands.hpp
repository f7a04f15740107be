#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snapfit/bundle.hpp"
#include "snapfit/dataset.hpp"

namespace snapfit {

PlantConfig load_plant_config(const std::string& path);  // empty path = defaults
void save_plant_config(const std::string& path, const PlantConfig& config);

struct GridSpec {
  int lattice_points_per_axis = 11;
  double lattice_extent = 2.0;     // mm/deg half-range
  bool supplementary_points = true;  // the 10 extra in-tolerance offsets
  int validation_trials = 5;       // per validation anchor

  std::vector<OffsetPattern> offsets() const;
};

struct GenerateOptions {
  std::string plant_config_path;  // empty = built-in defaults
  std::string out_dir;
  GridSpec grid;
  std::uint64_t seed = 12345;
  bool quiet = false;
};

// Emits train/ and validation/ splits (CSV profiles + manifest.json) plus
// plant_config.json and generation.json under out_dir.
void cmd_generate(const GenerateOptions& options);

struct TrainOptions {
  std::string dataset_dir;
  double t_span = 2.0;
  std::string out_model_path;  // empty = do not persist
  int fpca_components = 2;
  double svm_c = 10.0;
  KernelSpec kernel{KernelKind::rbf, 0.0};
  bool eq1_corrected = false;
  int num_threads = 0;
  bool quiet = false;
};

// Fits the six per-channel fPCA models and builds the decision tree for each
// phase, printing the per-node split accuracies.
ModelBundle cmd_train(const TrainOptions& options);

// One phase of cmd_train: assembly profiles are truncated at t_span, probe
// phases consume the full recordings. Probe trees do not depend on t_span, so
// callers sweeping horizons can reuse them.
DecisionTree train_phase_tree(const DatasetSplit& split, PhaseTag phase, double t_span,
                              const TrainOptions& options);

enum class EvalMode { assembly_only, probe_only, probe_after_assembly };

EvalMode eval_mode_from_name(const std::string& name);
const char* eval_mode_name(EvalMode mode);

struct EvalOptions {
  std::string model_path;
  std::string dataset_dir;
  EvalMode mode = EvalMode::assembly_only;
  double probability_threshold = 0.2;
  std::string out_report_path;  // empty = stdout summary only
  bool quiet = false;
};

struct StateRate {
  StateLabel label = StateLabel::S1_success;
  int samples = 0;
  int correct = 0;
};

struct EvalReport {
  std::string mode;
  double t_span = 0.0;
  std::uint64_t dataset_seed = 0;
  std::string config_hash;
  int samples = 0;
  int correct = 0;
  double success_rate = 0.0;
  std::vector<StateRate> per_state;
  // probe_after_assembly bookkeeping
  int probing_triggered = 0;
  int improved = 0;
  int deteriorated = 0;
};

EvalReport cmd_eval(const EvalOptions& options);

struct EpisodeOptions {
  std::string model_path;
  std::string plant_config_path;  // empty = built-in defaults
  double offset_dx = 0.0;
  double offset_dtheta = 0.0;
  std::uint64_t seed = 0;
  double probability_threshold = 0.2;
  int max_retries = 3;
  std::string out_path;  // empty = stdout summary only
  bool quiet = false;
};

EpisodeLog cmd_episode(const EpisodeOptions& options);

}  // namespace snapfit
