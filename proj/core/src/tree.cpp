#include "snapfit/tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <thread>

namespace snapfit {

std::vector<StateLabel> StateSet::labels() const {
  std::vector<StateLabel> out;
  for (int k = 1; k <= kStateCount; ++k) {
    const auto l = static_cast<StateLabel>(k);
    if (contains(l)) out.push_back(l);
  }
  return out;
}

std::string StateSet::to_string() const {
  std::string out;
  for (StateLabel l : labels()) {
    if (!out.empty()) out += '+';
    out += state_name(l);
  }
  return out.empty() ? "{}" : out;
}

std::vector<StateSet> enumerate_bipartitions(StateSet pattern_ids) {
  const int k = pattern_ids.size();
  if (k < 2) throw ConfigError("enumerate_bipartitions: need at least 2 states");
  const std::uint16_t low = pattern_ids.bits & static_cast<std::uint16_t>(-pattern_ids.bits);

  std::vector<StateSet> out;
  out.reserve((1u << (k - 1)) - 1);
  // Walk all submasks of the pattern set; the complement-class representative
  // is the subset containing the smallest label.
  for (std::uint16_t sub = pattern_ids.bits; sub != 0;
       sub = static_cast<std::uint16_t>((sub - 1) & pattern_ids.bits)) {
    if (sub == pattern_ids.bits || !(sub & low)) continue;
    out.push_back(StateSet{sub});
  }
  std::sort(out.begin(), out.end(), [](StateSet a, StateSet b) {
    const int sa = a.size();
    const int sb = b.size();
    if (sa != sb) return sa < sb;
    // Lexicographic order of the sorted label lists: at the lowest differing
    // bit, the set containing it comes first.
    const std::uint16_t diff = a.bits ^ b.bits;
    return (a.bits & (diff & static_cast<std::uint16_t>(-diff))) != 0;
  });
  return out;
}

double node_accuracy(std::span<const SplitSample> samples, bool eq1_corrected) {
  if (samples.empty()) throw DataError("node_accuracy: empty sample list");
  int tp = 0, fp = 0, tn = 0, fn = 0;
  double p_tp = 0.0, p_fp = 0.0, p_tn = 0.0, p_fn = 0.0;
  for (const SplitSample& s : samples) {
    if (s.true_in_c && s.predicted_in_c) {
      ++tp;
      p_tp += s.prob_of_predicted_side;
    } else if (!s.true_in_c && s.predicted_in_c) {
      ++fp;
      p_fp += s.prob_of_predicted_side;
    } else if (s.true_in_c && !s.predicted_in_c) {
      ++fn;
      p_fn += s.prob_of_predicted_side;
    } else {
      ++tn;
      p_tn += s.prob_of_predicted_side;
    }
  }
  const int pos = tp + fn;
  const int neg = fp + tn;
  if (pos == 0 || neg == 0) throw DataError("node_accuracy: single-class truth");
  if (eq1_corrected) {
    return 0.5 * ((p_tp + p_fn) / pos + (p_fp + p_tn) / neg);
  }
  return 0.5 * ((p_tp + p_fp) / pos + (p_fn + p_tn) / neg);
}

namespace {

void parallel_for(int tasks, int num_threads, const std::function<void(int)>& body) {
  if (num_threads <= 0) {
    num_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (num_threads <= 0) num_threads = 1;
  }
  num_threads = std::min(num_threads, tasks);
  if (num_threads <= 1) {
    for (int i = 0; i < tasks; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= tasks) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(num_threads);
  for (int t = 0; t < num_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Kernel over the node's samples in standardized coordinates, with the auto
// gamma rule resolved on the same data.
Eigen::MatrixXd standardized_kernel(const Eigen::MatrixXd& x, const KernelSpec& spec) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());

  const Eigen::VectorXd mean = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - mean.transpose();
  double var_mean = 0.0;
  for (int d = 0; d < p; ++d) {
    const double var = z.col(d).squaredNorm() / n;
    if (var > 0.0) {
      z.col(d) /= std::sqrt(var);
      var_mean += 1.0;  // standardized dimension has unit variance
    }
  }
  var_mean /= p;

  KernelSpec resolved = spec;
  if (spec.kind == KernelKind::rbf && !(spec.gamma > 0.0)) {
    resolved.gamma = var_mean > 0.0 ? 1.0 / (p * var_mean) : 1.0;
  }

  Eigen::MatrixXd k(n, n);
  if (resolved.kind == KernelKind::linear) {
    k.noalias() = z * z.transpose();
  } else {
    const Eigen::VectorXd sq = z.rowwise().squaredNorm();
    k.noalias() = -2.0 * z * z.transpose();
    k.colwise() += sq;
    k.rowwise() += sq.transpose();
    k = (-resolved.gamma * k.array()).exp();
  }
  return k;
}

// Per-channel score matrix and kernel, shared by every bipartition candidate
// at a node. The split search standardizes once per node and channel; each
// leave-one-out fold still optimizes without the held-out point.
struct ChannelKernels {
  Eigen::MatrixXd x;  // n x p channel scores
  Eigen::MatrixXd kernel;
};

ChannelKernels make_channel_kernels(const std::vector<FeatureVector>& features,
                                    const std::vector<int>& sample_ids, int channel,
                                    const KernelSpec& spec) {
  ChannelKernels ck;
  const int n = static_cast<int>(sample_ids.size());
  const int p = static_cast<int>(features[sample_ids[0]].channel_scores[channel].size());
  ck.x.resize(n, p);
  for (int i = 0; i < n; ++i) {
    ck.x.row(i) = features[sample_ids[i]].channel_scores[channel].transpose();
  }
  ck.kernel = standardized_kernel(ck.x, spec);
  return ck;
}

// Leave-one-out evaluation of one (channel, bipartition) candidate.
double evaluate_candidate(const ChannelKernels& ck, const std::vector<StateLabel>& node_labels,
                          StateSet partition, const TreeBuildConfig& config) {
  const int n = static_cast<int>(node_labels.size());
  std::vector<std::int8_t> targets(n);
  for (int i = 0; i < n; ++i) targets[i] = partition.contains(node_labels[i]) ? 1 : -1;

  SvmTrainOptions smo_opt;

  // Full-data solution seeds every fold: SMO alphas via warm start, the Platt
  // fit via its Newton starting point.
  SmoSolver solver(ck.kernel, targets);
  const SmoResult full = solver.solve(-1, config.svm_c, smo_opt);
  std::vector<double> full_decisions(full.f_plus_b.data(), full.f_plus_b.data() + n);
  int n_pos = 0;
  for (std::int8_t t : targets) n_pos += t > 0;
  const double b_init = std::log((n - n_pos + 1.0) / (n_pos + 1.0));
  const auto [a0, b0] = detail::fit_platt_warm(full_decisions, targets, 0.0, b_init);

  std::vector<SplitSample> samples(n);
  std::vector<double> fold_decisions(n - 1);
  std::vector<std::int8_t> fold_targets(n - 1);
  for (int i = 0; i < n; ++i) {
    const SmoResult fold = solver.solve(i, config.svm_c, smo_opt, &full.alpha);

    for (int k = 0, s = 0; k < n; ++k) {
      if (k == i) continue;
      fold_decisions[s] = fold.f_plus_b(k);
      fold_targets[s] = targets[k];
      ++s;
    }
    const auto [a, b] = detail::fit_platt_warm(fold_decisions, fold_targets, a0, b0);

    const double f = fold.f_plus_b(i);
    const bool predicted_in_c = f >= 0.0;
    const double z = a * f + b;
    const double p_pos = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    samples[i] = SplitSample{targets[i] > 0, predicted_in_c, predicted_in_c ? p_pos : 1.0 - p_pos};
  }
  return node_accuracy(samples, config.eq1_corrected);
}

struct PendingNode {
  std::vector<int> sample_ids;
};

}  // namespace

DecisionTree build_tree(const std::vector<FeatureVector>& features,
                        const std::vector<StateLabel>& labels, const TreeBuildConfig& config) {
  const int n = static_cast<int>(features.size());
  if (n == 0 || labels.size() != features.size()) {
    throw DataError("build_tree: feature/label count mismatch");
  }
  StateSet all_states;
  std::array<int, kStateCount + 1> per_label_count{};
  for (StateLabel l : labels) {
    all_states.insert(l);
    ++per_label_count[static_cast<int>(l)];
  }
  if (all_states.size() < 2) throw TrainingError("build_tree: need at least 2 distinct labels");
  for (StateLabel l : all_states.labels()) {
    if (per_label_count[static_cast<int>(l)] < 2) {
      throw TrainingError("build_tree: need at least 2 samples per label, " + state_name(l) +
                          " has " + std::to_string(per_label_count[static_cast<int>(l)]));
    }
  }
  const auto warn = config.warn ? config.warn : [](const std::string& message) {
    std::cerr << "[build_tree] " << message << "\n";
  };

  DecisionTree tree;
  std::vector<PendingNode> pending;
  {
    TreeNode root;
    root.node_id = 0;
    root.pattern_ids = all_states;
    tree.nodes.push_back(root);
    PendingNode root_samples;
    root_samples.sample_ids.resize(n);
    for (int i = 0; i < n; ++i) root_samples.sample_ids[i] = i;
    pending.push_back(std::move(root_samples));
  }

  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    if (tree.nodes[id].pattern_ids.size() == 1) continue;  // pure leaf
    const std::vector<int>& sample_ids = pending[id].sample_ids;
    const int m = static_cast<int>(sample_ids.size());

    std::vector<StateLabel> node_labels(m);
    for (int i = 0; i < m; ++i) node_labels[i] = labels[sample_ids[i]];

    // Identical features with mixed labels cannot be split by any SVM.
    bool all_identical = true;
    for (int i = 1; i < m && all_identical; ++i) {
      for (int c = 0; c < kChannelCount && all_identical; ++c) {
        all_identical = features[sample_ids[i]].channel_scores[c] ==
                        features[sample_ids[0]].channel_scores[c];
      }
    }
    if (all_identical) {
      std::string who;
      for (int i = 0; i < m; ++i) {
        if (!who.empty()) who += ", ";
        who += std::to_string(sample_ids[i]);
      }
      throw TrainingError("build_tree: node " + std::to_string(id) +
                          " is unsplittable, samples {" + who + "} share identical features");
    }

    const std::vector<StateSet> partitions = enumerate_bipartitions(tree.nodes[id].pattern_ids);
    struct Candidate {
      int channel;  // 0-based
      StateSet partition;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(kChannelCount * partitions.size());
    for (int c = 0; c < kChannelCount; ++c) {
      for (StateSet part : partitions) candidates.push_back({c, part});
    }

    std::array<ChannelKernels, kChannelCount> kernels;
    parallel_for(kChannelCount, config.num_threads, [&](int c) {
      kernels[c] = make_channel_kernels(features, sample_ids, c, config.kernel);
    });

    std::vector<double> accuracies(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), config.num_threads, [&](int idx) {
      accuracies[idx] =
          evaluate_candidate(kernels[candidates[idx].channel], node_labels,
                             candidates[idx].partition, config);
    });

    // Strict > keeps the first maximum: ties resolve to the smaller channel,
    // then the earlier bipartition in enumeration order.
    int best = 0;
    for (int idx = 1; idx < static_cast<int>(candidates.size()); ++idx) {
      if (accuracies[idx] > accuracies[best]) best = idx;
    }
    if (accuracies[best] <= 0.5) {
      warn("node " + std::to_string(id) + " best split accuracy " +
           std::to_string(accuracies[best]) + " does not beat chance; taking argmax anyway");
    }

    const Candidate chosen = candidates[best];
    std::vector<int> svm_labels(m);
    for (int i = 0; i < m; ++i) svm_labels[i] = chosen.partition.contains(node_labels[i]) ? 1 : -1;
    TreeNode& node = tree.nodes[id];
    node.component = chosen.channel + 1;
    node.partition = chosen.partition;
    node.accuracy = accuracies[best];
    node.svm = train_svm(kernels[chosen.channel].x, svm_labels, config.svm_c, config.kernel);

    TreeNode pos_child;
    TreeNode neg_child;
    pos_child.pattern_ids = chosen.partition;
    neg_child.pattern_ids = node.pattern_ids.minus(chosen.partition);
    PendingNode pos_samples;
    PendingNode neg_samples;
    for (int i = 0; i < m; ++i) {
      (svm_labels[i] > 0 ? pos_samples : neg_samples).sample_ids.push_back(sample_ids[i]);
    }
    node.child_pos = static_cast<int>(tree.nodes.size());
    node.child_neg = node.child_pos + 1;
    pos_child.node_id = node.child_pos;
    neg_child.node_id = node.child_neg;
    tree.nodes.push_back(std::move(pos_child));
    tree.nodes.push_back(std::move(neg_child));
    pending.push_back(std::move(pos_samples));
    pending.push_back(std::move(neg_samples));
  }
  return tree;
}

ClassificationOutcome classify(const DecisionTree& tree, const FeatureVector& feature) {
  if (tree.nodes.empty()) throw StateError("classify: empty tree");
  ClassificationOutcome outcome;
  int id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const TreeNode& node = tree.nodes[id];
    const Eigen::VectorXd& sub = feature.channel_scores[node.component - 1];
    const double f = decision_value(*node.svm, sub);
    const bool positive = f >= 0.0;
    const double p_pos = platt_probability(*node.svm, f);
    const double p_taken = positive ? p_pos : 1.0 - p_pos;
    outcome.node_path.push_back({node.node_id, positive, p_taken});
    outcome.min_class_probability = std::min(outcome.min_class_probability, p_taken);
    outcome.min_node_accuracy = std::min(outcome.min_node_accuracy, node.accuracy);
    id = positive ? node.child_pos : node.child_neg;
  }
  outcome.predicted = tree.nodes[id].leaf_label();
  return outcome;
}

ClassificationOutcome classify_profile(const DecisionTree& tree,
                                       const ForceTorqueProfile& profile) {
  return classify(tree, extract_features(tree.fpca_models, profile));
}

}  // namespace snapfit
