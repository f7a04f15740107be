#include "snapfit/fpca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "snapfit/errors.hpp"

namespace snapfit {

FpcaModel fit_fpca(const Eigen::MatrixXd& curves, int p, double sample_period) {
  const int n = static_cast<int>(curves.rows());
  const int t = static_cast<int>(curves.cols());
  if (n < 2 || t < 2) throw DataError("fit_fpca needs at least 2 curves and 2 grid points");
  if (!(sample_period > 0.0)) throw DataError("sample_period must be positive");
  if (!curves.allFinite()) throw DataError("fit_fpca: non-finite input values");
  const int max_rank = std::min(n - 1, t);
  if (p < 1 || p > max_rank) {
    throw ConfigError("fpca rank p must be in [1, " + std::to_string(max_rank) + "]");
  }

  FpcaModel model;
  model.grid_T = t;
  model.sample_period = sample_period;
  model.mean_curve = curves.colwise().mean();

  Eigen::MatrixXd centered = curves.rowwise() - model.mean_curve.transpose();
  // Discretized covariance operator: (1/N) X^T X * dt.
  Eigen::MatrixXd cov = (centered.transpose() * centered) * (sample_period / n);
  model.total_variance = cov.trace();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw TrainingError("fpca eigendecomposition failed");

  // Solver returns ascending eigenvalues; take the top p in descending order.
  model.eigenvalues.resize(p);
  model.eigenfunctions.resize(t, p);
  const double inv_sqrt_dt = 1.0 / std::sqrt(sample_period);
  for (int a = 0; a < p; ++a) {
    const int src = t - 1 - a;
    model.eigenvalues(a) = solver.eigenvalues()(src);
    Eigen::VectorXd xi = solver.eigenvectors().col(src) * inv_sqrt_dt;
    // Deterministic sign: largest-magnitude element positive (first on ties).
    int arg = 0;
    xi.cwiseAbs().maxCoeff(&arg);
    if (xi(arg) < 0.0) xi = -xi;
    model.eigenfunctions.col(a) = xi;
  }
  return model;
}

Eigen::VectorXd score(const FpcaModel& model, const Eigen::VectorXd& curve) {
  if (curve.size() != model.grid_T) {
    throw DataError("score: curve length " + std::to_string(curve.size()) +
                    " does not match model grid " + std::to_string(model.grid_T));
  }
  return model.eigenfunctions.transpose() * (curve - model.mean_curve) * model.sample_period;
}

double contribution_rate(const FpcaModel& model, int q) {
  if (q < 1 || q > model.rank()) throw ConfigError("contribution_rate: q out of range");
  // A zero-variance dataset is fully explained by any number of components.
  if (model.total_variance <= 0.0) return 1.0;
  return model.eigenvalues.head(q).sum() / model.total_variance;
}

FeatureVector extract_features(const std::array<FpcaModel, kChannelCount>& models,
                               const ForceTorqueProfile& profile) {
  FeatureVector features;
  for (int c = 0; c < kChannelCount; ++c) {
    const auto& samples = profile.channels[c];
    Eigen::VectorXd curve = Eigen::Map<const Eigen::VectorXd>(samples.data(), samples.size());
    features.channel_scores[c] = score(models[c], curve);
  }
  return features;
}

}  // namespace snapfit
