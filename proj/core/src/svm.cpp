#include "snapfit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snapfit {

namespace {

constexpr double kAlphaEps = 1e-12;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& z, const KernelSpec& spec) {
  const int n = static_cast<int>(z.rows());
  Eigen::MatrixXd k(n, n);
  if (spec.kind == KernelKind::linear) {
    k.noalias() = z * z.transpose();
    return k;
  }
  const Eigen::VectorXd sq = z.rowwise().squaredNorm();
  k.noalias() = -2.0 * z * z.transpose();
  k.colwise() += sq;
  k.rowwise() += sq.transpose();
  k = (-spec.gamma * k.array()).exp();
  return k;
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (spec.kind == KernelKind::linear) return a.dot(b);
  return std::exp(-spec.gamma * (a - b).squaredNorm());
}

}  // namespace

SmoSolver::SmoSolver(const Eigen::MatrixXd& kernel, const std::vector<std::int8_t>& labels)
    : kernel_(kernel), labels_(labels.size()), diag_(kernel.diagonal()) {
  if (kernel.rows() != kernel.cols() ||
      kernel.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw DataError("SmoSolver: kernel/label size mismatch");
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    labels_(static_cast<Eigen::Index>(k)) = labels[k] > 0 ? 1.0 : -1.0;
  }
}

SmoResult SmoSolver::solve(int exclude, double c, const SvmTrainOptions& options,
                           const Eigen::VectorXd* warm) const {
  const int n = static_cast<int>(kernel_.rows());
  if (n - (exclude >= 0 ? 1 : 0) < 2) throw TrainingError("SMO needs at least 2 training points");

  bool has_pos = false;
  bool has_neg = false;
  for (int k = 0; k < n; ++k) {
    if (k == exclude) continue;
    (labels_(k) > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw TrainingError("SMO: single-class training set");

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  if (warm != nullptr && warm->size() == n) {
    // Clamp into the box, then repair the equality constraint sum(alpha*y)=0,
    // spreading the correction over free points first so the start stays
    // close to the warm solution.
    for (int k = 0; k < n; ++k) {
      if (k != exclude) alpha(k) = std::clamp((*warm)(k), 0.0, c);
    }
    double s = alpha.dot(labels_);
    for (int pass = 0; pass < 2 && std::abs(s) > 1e-15; ++pass) {
      // Shrinking |s| means reducing alpha on the majority side or growing it
      // on the other; free points absorb the correction first (pass 0).
      double room_total = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k == exclude) continue;
        const bool reduce = s > 0.0 ? labels_(k) > 0 : labels_(k) < 0;
        const double room = reduce ? alpha(k) : c - alpha(k);
        const bool free = alpha(k) > 0.0 && alpha(k) < c;
        if ((pass == 1 || free) && room > 0.0) room_total += room;
      }
      if (room_total <= 0.0) continue;
      const double need = std::min(std::abs(s), room_total);
      for (int k = 0; k < n; ++k) {
        if (k == exclude) continue;
        const bool reduce = s > 0.0 ? labels_(k) > 0 : labels_(k) < 0;
        const double room = reduce ? alpha(k) : c - alpha(k);
        const bool free = alpha(k) > 0.0 && alpha(k) < c;
        if ((pass == 1 || free) && room > 0.0) {
          alpha(k) += (reduce ? -1.0 : 1.0) * need * room / room_total;
        }
      }
      s = alpha.dot(labels_);  // proportional rounding leaves dust
    }
  }

  // F_k = sum_j alpha_j y_j K_jk, maintained for every row of the kernel.
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double coef = alpha(j) * labels_(j);
    if (coef != 0.0) f.noalias() += coef * kernel_.col(j);
  }

  const double tol = options.kkt_tolerance;
  // Treat alphas this close to a bound as at the bound; keeps the working
  // pair making real progress instead of sub-epsilon steps.
  const double bound_eps = kAlphaEps * std::max(1.0, c);
  const double* y_ptr = labels_.data();
  const double* f_ptr = f.data();
  const double* a_ptr = alpha.data();
  const Eigen::VectorXd& diag = diag_;
  int iter = 0;
  double gmax = 0.0;
  double gmin = 0.0;
  while (true) {
    // First index: maximal violator on the up side. gmin tracks the low-side
    // extreme for the stopping test.
    int i = -1;
    gmax = -std::numeric_limits<double>::infinity();
    gmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == exclude) continue;
      const double y = y_ptr[k];
      const double a = a_ptr[k];
      const double g = y - f_ptr[k];  // y_k * gradient of the dual at k
      const bool positive = y > 0;
      const bool below_c = a < c - bound_eps;
      const bool above_0 = a > bound_eps;
      if ((positive ? below_c : above_0) && g > gmax) {
        gmax = g;
        i = k;
      }
      if ((positive ? above_0 : below_c) && g < gmin) gmin = std::min(gmin, g);
    }
    if (i < 0 || gmax - gmin <= tol) break;
    if (++iter > options.max_iterations) {
      throw TrainingError("SMO did not converge within " +
                          std::to_string(options.max_iterations) + " iterations");
    }

    // Second index: the low-side violator with the largest second-order gain
    // (gmax - g)^2 / curvature along the (i, k) direction.
    const double* ki = kernel_.col(i).data();
    const double kii = diag(i);
    int j = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == exclude) continue;
      const double y = y_ptr[k];
      const double a = a_ptr[k];
      const bool in_low = y > 0 ? a > bound_eps : a < c - bound_eps;
      if (!in_low) continue;
      const double g = y - f_ptr[k];
      const double diff = gmax - g;
      if (diff <= 0.0) continue;
      double curv = kii + diag(k) - 2.0 * ki[k];
      if (curv <= 1e-12) curv = 1e-12;
      const double gain = diff * diff / curv;
      if (gain > best_gain) {
        best_gain = gain;
        j = k;
      }
    }
    if (j < 0) break;

    const double yi = labels_(i);
    const double yj = labels_(j);
    const double room_i = yi > 0 ? c - alpha(i) : alpha(i);
    const double room_j = yj > 0 ? alpha(j) : c - alpha(j);
    double lambda = std::min(room_i, room_j);
    const double curvature = kii + diag(j) - 2.0 * ki[j];
    if (curvature > 1e-12) lambda = std::min(lambda, (gmax - (labels_(j) - f(j))) / curvature);

    alpha(i) = std::clamp(alpha(i) + yi * lambda, 0.0, c);
    alpha(j) = std::clamp(alpha(j) - yj * lambda, 0.0, c);
    f.noalias() += lambda * (kernel_.col(i) - kernel_.col(j));
  }

  SmoResult result;
  result.iterations = iter;

  // Bias from free support vectors; midpoint of the violation bounds if none.
  double bias_sum = 0.0;
  int bias_count = 0;
  for (int k = 0; k < n; ++k) {
    if (k == exclude) continue;
    if (alpha(k) > bound_eps && alpha(k) < c - bound_eps) {
      bias_sum += labels_(k) - f(k);
      ++bias_count;
    }
  }
  if (bias_count > 0) {
    result.bias = bias_sum / bias_count;
  } else if (std::isfinite(gmax) && std::isfinite(gmin)) {
    result.bias = 0.5 * (gmax + gmin);
  }

  double quad = 0.0;
  double lin = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k == exclude) continue;
    lin += alpha(k);
    quad += alpha(k) * labels_(k) * f(k);
  }
  result.dual_objective = lin - 0.5 * quad;
  result.alpha = std::move(alpha);
  result.f_plus_b = f.array() + result.bias;
  return result;
}

SvmModel train_svm(const Eigen::MatrixXd& points, const std::vector<int>& labels, double c,
                   const KernelSpec& kernel, SmoStats* stats, const SvmTrainOptions& options) {
  const int n = static_cast<int>(points.rows());
  const int p = static_cast<int>(points.cols());
  if (n < 2 || p < 1) throw TrainingError("train_svm needs at least 2 points");
  if (static_cast<int>(labels.size()) != n) throw DataError("train_svm: label count mismatch");
  if (!points.allFinite()) throw DataError("train_svm: non-finite feature values");
  if (!(c > 0.0)) throw ConfigError("train_svm: regularization c must be positive");

  std::vector<std::int8_t> y(n);
  bool has_pos = false;
  bool has_neg = false;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw DataError("train_svm: labels must be -1/+1");
    y[i] = static_cast<std::int8_t>(labels[i]);
    (labels[i] > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw TrainingError("train_svm: single-class training set");

  SvmModel model;
  model.regularization_c = c;
  model.feature_mean = Eigen::VectorXd::Zero(p);
  model.feature_scale = Eigen::VectorXd::Ones(p);
  Eigen::MatrixXd z = points;
  if (options.standardize) {
    model.feature_mean = points.colwise().mean();
    z = points.rowwise() - model.feature_mean.transpose();
    for (int d = 0; d < p; ++d) {
      const double sd = std::sqrt(z.col(d).squaredNorm() / n);
      model.feature_scale(d) = sd > 0.0 ? sd : 1.0;
      z.col(d) /= model.feature_scale(d);
    }
  }

  model.kernel = kernel;
  if (kernel.kind == KernelKind::rbf && !(kernel.gamma > 0.0)) {
    // Default bandwidth rule: gamma = 1 / (p * var), computed on the data the
    // kernel actually sees. After standardization this is exactly 1/p.
    double var = 0.0;
    const Eigen::VectorXd col_mean = z.colwise().mean();
    for (int d = 0; d < p; ++d) {
      var += (z.col(d).array() - col_mean(d)).square().sum() / n;
    }
    var /= p;
    model.kernel.gamma = var > 0.0 ? 1.0 / (p * var) : 1.0;
  }

  const Eigen::MatrixXd k = kernel_matrix(z, model.kernel);
  SmoSolver solver(k, y);
  const SmoResult result = solver.solve(-1, c, options, options.warm_start_alpha);

  model.bias = result.bias;
  const double keep = kAlphaEps * std::max(1.0, c);
  int m = 0;
  for (int i = 0; i < n; ++i) {
    if (result.alpha(i) > keep) ++m;
  }
  model.support_vectors.resize(m, p);
  model.dual_coefs.resize(m);
  for (int i = 0, s = 0; i < n; ++i) {
    if (result.alpha(i) > keep) {
      model.support_vectors.row(s) = z.row(i);
      model.dual_coefs(s) = result.alpha(i) * y[i];
      ++s;
    }
  }

  if (options.fit_platt) {
    std::vector<double> decisions(result.f_plus_b.data(), result.f_plus_b.data() + n);
    const auto [a, b] = snapfit::fit_platt(decisions, labels);
    model.platt_a = a;
    model.platt_b = b;
    model.calibrated = true;
  }

  if (stats != nullptr) {
    stats->alpha = result.alpha;
    stats->dual_objective = result.dual_objective;
    stats->iterations = result.iterations;
  }
  return model;
}

double decision_value(const SvmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.feature_mean.size()) {
    throw DataError("decision_value: feature dimension mismatch");
  }
  const Eigen::VectorXd z =
      (x - model.feature_mean).cwiseQuotient(model.feature_scale);
  double f = model.bias;
  for (Eigen::Index i = 0; i < model.dual_coefs.size(); ++i) {
    f += model.dual_coefs(i) * kernel_eval(model.kernel, model.support_vectors.row(i), z);
  }
  return f;
}

double class_probability(const SvmModel& model, const Eigen::VectorXd& x) {
  return platt_probability(model, decision_value(model, x));
}

namespace {

std::pair<double, double> fit_platt_impl(const std::vector<double>& decision_values,
                                         const std::vector<std::int8_t>& labels,
                                         const double* init_a, const double* init_b) {
  const std::size_t n = decision_values.size();
  if (n == 0 || labels.size() != n) throw DataError("fit_platt: empty or mismatched input");
  double prior1 = 0.0;
  double prior0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(decision_values[i])) throw DataError("fit_platt: non-finite decision value");
    (labels[i] > 0 ? prior1 : prior0) += 1.0;
  }
  if (prior1 == 0.0 || prior0 == 0.0) throw TrainingError("fit_platt: both classes required");

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;  // keeps the Hessian strictly PD
  constexpr double kEps = 1e-10;    // gradient tolerance
  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);

  const Eigen::Map<const Eigen::ArrayXd> fv(decision_values.data(), n);
  Eigen::ArrayXd t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t(static_cast<Eigen::Index>(i)) = labels[i] > 0 ? hi_target : lo_target;
  }

  double a = init_a != nullptr ? *init_a : 0.0;
  double b = init_b != nullptr ? *init_b : std::log((prior0 + 1.0) / (prior1 + 1.0));
  Eigen::ArrayXd z(n), e(n), pr(n);
  // NLL of p = sigma(-z): t*z + log(1 + exp(-z)), evaluated stably.
  auto loss = [&](double av, double bv) {
    z = fv * av + bv;
    return (t * z + (-z.abs()).exp().log1p() + (-z).cwiseMax(0.0)).sum();
  };
  double fval = loss(a, b);

  for (int iter = 0; iter < kMaxIter; ++iter) {
    z = fv * a + b;
    e = (-z.abs()).exp();
    pr = (z >= 0.0).select(e / (1.0 + e), 1.0 / (1.0 + e));  // sigma(-z)
    e = pr * (1.0 - pr);                                     // reuse as d2
    const double h11 = kSigma + (fv.square() * e).sum();
    const double h22 = kSigma + e.sum();
    const double h21 = (fv * e).sum();
    const double g1 = (fv * (t - pr)).sum();
    const double g2 = (t - pr).sum();
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    while (step >= kMinStep) {
      const double new_a = a + step * da;
      const double new_b = b + step * db;
      const double new_f = loss(new_a, new_b);
      if (new_f < fval + 1e-4 * step * gd) {
        a = new_a;
        b = new_b;
        fval = new_f;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;  // line search failed; accept current point
  }
  return {a, b};
}

}  // namespace

std::pair<double, double> fit_platt(const std::vector<double>& decision_values,
                                    const std::vector<int>& labels) {
  std::vector<std::int8_t> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] > 0 ? 1 : -1;
  return fit_platt_impl(decision_values, y, nullptr, nullptr);
}

namespace detail {

std::pair<double, double> fit_platt_warm(const std::vector<double>& decision_values,
                                         const std::vector<std::int8_t>& labels, double a0,
                                         double b0) {
  return fit_platt_impl(decision_values, labels, &a0, &b0);
}

}  // namespace detail

double median_heuristic_gamma(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) return 1.0;
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      d2.push_back((points.row(i) - points.row(j)).squaredNorm());
    }
  }
  auto mid = d2.begin() + d2.size() / 2;
  std::nth_element(d2.begin(), mid, d2.end());
  return *mid > 0.0 ? 1.0 / (2.0 * *mid) : 1.0;
}

}  // namespace snapfit
