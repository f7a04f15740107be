#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "snapfit/errors.hpp"

namespace snapfit {

enum class KernelKind { rbf, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  // For rbf: gamma <= 0 requests the default rule gamma = 1 / (p * var(features)),
  // resolved on the standardized training data at fit time. The trained model
  // always stores the resolved positive value.
  double gamma = 0.0;
};

// Binary kernel SVM with Platt-calibrated probabilities.
//
// Decision function: f(x) = sum_i dual_coefs_i * K(sv_i, z) + bias where
// z = (x - feature_mean) / feature_scale. Calibrated probability of the
// positive class: p = 1 / (1 + exp(platt_a * f + platt_b)).
struct SvmModel {
  KernelSpec kernel;
  Eigen::MatrixXd support_vectors;  // M x p, stored in standardized space
  Eigen::VectorXd dual_coefs;       // alpha_i * y_i for each support vector
  double bias = 0.0;
  double platt_a = 0.0;
  double platt_b = 0.0;
  bool calibrated = false;
  double regularization_c = 0.0;
  Eigen::VectorXd feature_mean;   // p
  Eigen::VectorXd feature_scale;  // p, 1.0 where a dimension is constant
};

// Optional diagnostics from SMO, used by the oracle tests.
struct SmoStats {
  Eigen::VectorXd alpha;       // per training point
  double dual_objective = 0.0; // sum(alpha) - 0.5 alpha^T Q alpha
  int iterations = 0;
};

struct SvmTrainOptions {
  double kkt_tolerance = 1e-3;
  int max_iterations = 100000;  // exceeding this is a convergence error
  bool standardize = true;
  bool fit_platt = true;
  const Eigen::VectorXd* warm_start_alpha = nullptr;  // optional initial point
};

// Trains by sequential minimal optimization (maximal-violating-pair working
// set). Requires both labels present; labels are -1/+1. Also fits the Platt
// sigmoid on the training decision values unless disabled.
SvmModel train_svm(const Eigen::MatrixXd& points, const std::vector<int>& labels, double c,
                   const KernelSpec& kernel, SmoStats* stats = nullptr,
                   const SvmTrainOptions& options = {});

double decision_value(const SvmModel& model, const Eigen::VectorXd& x);

// Sigmoid parameters (A, B) minimizing the regularized negative log-likelihood
// of p_i = 1 / (1 + exp(A f_i + B)) with Platt's smoothed targets
// t+ = (N+ + 1)/(N+ + 2), t- = 1/(N- + 2). Newton iterations with
// backtracking line search, max 100 iterations, gradient tolerance 1e-10.
std::pair<double, double> fit_platt(const std::vector<double>& decision_values,
                                    const std::vector<int>& labels);

// Calibrated probability of the positive side of the model's bipartition.
double class_probability(const SvmModel& model, const Eigen::VectorXd& x);

inline double platt_probability(const SvmModel& model, double decision) {
  if (!model.calibrated) throw StateError("SVM model is not probability-calibrated");
  const double z = model.platt_a * decision + model.platt_b;
  // Numerically safe logistic in the libsvm orientation.
  return z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

// Median-heuristic bandwidth: gamma = 1 / (2 * median(pairwise squared dist)).
// Offered as an alternative to the default variance rule.
double median_heuristic_gamma(const Eigen::MatrixXd& points);

namespace detail {

// fit_platt with an explicit Newton starting point. The problem is convex, so
// a warm start changes iteration count, not the optimum; the split search
// seeds fold fits from the full-data fit.
std::pair<double, double> fit_platt_warm(const std::vector<double>& decision_values,
                                         const std::vector<std::int8_t>& labels, double a0,
                                         double b0);

}  // namespace detail

// --- shared-kernel SMO entry point -----------------------------------------
//
// The tree split search trains thousands of SVMs on subsets of the same
// sample set; this interface lets them share one precomputed kernel matrix.

struct SmoResult {
  Eigen::VectorXd alpha;      // full-size, zero at inactive indices
  double bias = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  Eigen::VectorXd f_plus_b;   // decision value for every kernel row, active or not
};

class SmoSolver {
 public:
  // kernel: full N x N Gram matrix; labels: -1/+1 per row.
  SmoSolver(const Eigen::MatrixXd& kernel, const std::vector<std::int8_t>& labels);

  // Optimizes over every row except `exclude` (-1 = all rows), but tracks
  // decision values for all rows, so the held-out prediction comes for free.
  // warm, when given, is clamped and repaired to a feasible starting point.
  SmoResult solve(int exclude, double c, const SvmTrainOptions& options,
                  const Eigen::VectorXd* warm = nullptr) const;

 private:
  const Eigen::MatrixXd& kernel_;
  Eigen::VectorXd labels_;  // -1.0 / +1.0
  Eigen::VectorXd diag_;
};

}  // namespace snapfit
