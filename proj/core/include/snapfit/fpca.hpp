#pragma once

#include <Eigen/Core>
#include <array>

#include "snapfit/profile.hpp"

namespace snapfit {

// Functional PCA of one force/torque channel over a sample set.
//
// The covariance surface v(s,t) = (1/N) sum_i (f_i(s) - mean(s))(f_i(t) - mean(t))
// is discretized on the uniform grid and scaled by dt, so the symmetric
// eigenproblem approximates the integral equation
//   integral v(s,t) xi(s) ds = rho xi(t).
// Eigenfunctions are orthonormal under the discrete L2 inner product
// sum_k xi_a(t_k) xi_b(t_k) dt.
struct FpcaModel {
  int grid_T = 0;
  double sample_period = 0.0;
  Eigen::VectorXd mean_curve;       // T
  Eigen::MatrixXd eigenfunctions;   // T x p, column a holds xi_{a+1}
  Eigen::VectorXd eigenvalues;      // p, descending
  double total_variance = 0.0;      // trace of the discretized covariance

  int rank() const { return static_cast<int>(eigenvalues.size()); }
};

// Six per-channel score vectors, fixed order Fx,Fy,Fz,Tx,Ty,Tz.
struct FeatureVector {
  std::array<Eigen::VectorXd, kChannelCount> channel_scores;

  int components() const { return static_cast<int>(channel_scores[0].size()); }
};

// Fits the top-p eigenpairs of the discretized covariance of `curves`
// (one curve per row, all on the same uniform grid with step sample_period).
// Sign convention: each eigenfunction is scaled so its element of largest
// magnitude is positive. Requires N >= 2, T >= 2, 1 <= p <= min(N-1, T).
FpcaModel fit_fpca(const Eigen::MatrixXd& curves, int p, double sample_period);

// Principal component scores s_a = sum_k (curve(t_k) - mean(t_k)) xi_a(t_k) dt.
Eigen::VectorXd score(const FpcaModel& model, const Eigen::VectorXd& curve);

// Cumulative variance fraction captured by the leading q components.
double contribution_rate(const FpcaModel& model, int q);

// Applies score() channel by channel. The profile must live on each model's grid.
FeatureVector extract_features(const std::array<FpcaModel, kChannelCount>& models,
                               const ForceTorqueProfile& profile);

}  // namespace snapfit
