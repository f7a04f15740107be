#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snapfit/fpca.hpp"
#include "snapfit/profile.hpp"
#include "snapfit/svm.hpp"

namespace snapfit {

// Small set of StateLabel values, bit k-1 standing for Sk.
struct StateSet {
  std::uint16_t bits = 0;

  static StateSet of(std::initializer_list<StateLabel> labels) {
    StateSet s;
    for (StateLabel l : labels) s.insert(l);
    return s;
  }
  void insert(StateLabel l) { bits |= static_cast<std::uint16_t>(1u << (static_cast<int>(l) - 1)); }
  bool contains(StateLabel l) const { return bits & (1u << (static_cast<int>(l) - 1)); }
  int size() const { return std::popcount(bits); }
  bool empty() const { return bits == 0; }
  StateSet minus(StateSet other) const { return StateSet{static_cast<std::uint16_t>(bits & ~other.bits)}; }
  std::vector<StateLabel> labels() const;
  std::string to_string() const;  // "S1+S4+S6"
  bool operator==(const StateSet&) const = default;
};

// Every proper nonempty subset, deduplicated by complement (C and its
// complement describe the same split): the representative is the subset
// containing the smallest label. 2^(k-1) - 1 candidates for k states,
// ordered by size then lexicographic label order.
std::vector<StateSet> enumerate_bipartitions(StateSet pattern_ids);

// One cross-validated sample of a node split evaluation.
struct SplitSample {
  bool true_in_c = false;
  bool predicted_in_c = false;
  double prob_of_predicted_side = 0.0;
};

// The split-quality score, as printed:
//   [ (sum P_TP + sum P_FP)/(TP+FN) + (sum P_FN + sum P_TN)/(FP+TN) ] / 2
// where membership in C is the positive class and P_* sums the probability
// of the predicted side over the samples in that category. The corrected
// variant groups numerators by true class instead.
double node_accuracy(std::span<const SplitSample> samples, bool eq1_corrected = false);

struct TreeNode {
  int node_id = 0;
  StateSet pattern_ids;
  // Internal nodes only:
  int component = 0;          // channel index 1..6
  StateSet partition;         // labels routed to the positive child
  std::optional<SvmModel> svm;
  double accuracy = 0.0;      // cross-validated score of the chosen split
  int child_pos = -1;
  int child_neg = -1;

  bool is_leaf() const { return child_pos < 0; }
  StateLabel leaf_label() const { return pattern_ids.labels().front(); }
};

struct DecisionTree {
  PhaseTag phase = PhaseTag::assembly;
  double t_span = 0.0;
  std::array<FpcaModel, kChannelCount> fpca_models;
  std::vector<TreeNode> nodes;  // rooted at node_id 0, ids in creation order
};

struct PathStep {
  int node_id = 0;
  bool positive_side = false;
  double class_probability = 0.0;  // probability of the side actually taken
};

struct ClassificationOutcome {
  StateLabel predicted = StateLabel::S1_success;
  std::vector<PathStep> node_path;
  double min_class_probability = 1.0;
  double min_node_accuracy = 1.0;  // smallest training accuracy on the path
};

struct TreeBuildConfig {
  double svm_c = 10.0;
  KernelSpec kernel{KernelKind::rbf, 0.0};  // gamma 0 = auto
  bool eq1_corrected = false;
  int num_threads = 0;  // 0 = hardware concurrency
  std::function<void(const std::string&)> warn;  // default: stderr
};

// Grows the tree breadth-first. At each impure node every (channel,
// bipartition) candidate trains an SVM per leave-one-out fold; the candidate
// with the highest node_accuracy wins (ties: smaller channel, then earlier
// bipartition). Children split by true label membership. The per-node SVM is
// retrained on all node samples.
//
// Requires >= 2 distinct labels and >= 2 samples per label. A node whose
// samples share identical features but different labels is unsplittable and
// raises TrainingError naming the colliding samples.
DecisionTree build_tree(const std::vector<FeatureVector>& features,
                        const std::vector<StateLabel>& labels,
                        const TreeBuildConfig& config = {});

// Descends from the root, routing by decision-function sign on the node's
// channel sub-vector and recording the calibrated probability of each taken
// side.
ClassificationOutcome classify(const DecisionTree& tree, const FeatureVector& feature);

// extract_features through the tree's own fPCA models, then classify.
ClassificationOutcome classify_profile(const DecisionTree& tree, const ForceTorqueProfile& profile);

}  // namespace snapfit
