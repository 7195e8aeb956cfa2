#pragma once

#include <cstdint>
#include <vector>

#include "lodom/depth_pano.hpp"
#include "lodom/feature_grid.hpp"
#include "lodom/geometry.hpp"
#include "lodom/trajectory.hpp"

namespace lodom {

class ThreadPool;

struct IcpParams {
  double assoc_tol = 0.1;    // relative depth gate for association
  int win_rows = 3;          // pano window, set from the cell scale
  int win_cols = 3;
  double huber_delta = 1.0;  // on the Mahalanobis residual norm
  double cov_eps = 1e-6;     // m^2, regularization of the combined covariance
  int max_outer = 5;         // association rounds
  int max_inner = 3;         // damped Gauss-Newton steps per round
  double lm_lambda = 1e-4;   // initial additive damping factor
  double step_tol = 1e-6;
  int min_matches = 10;
  double cond_warn = 1e6;
  double chi2_gate = 0.0;    // 0 disables the chi-squared test
};

/// One accepted sweep-cell / pano-window correspondence.
struct Match {
  Gaussian3 src;  // sweep frame
  Gaussian3 dst;  // pano frame
  int pano_row = 0;
  int pano_col = 0;
  std::int64_t fence = 0;  // trajectory state transforming src
  int grid_row = 0;
  int grid_col = 0;
};

struct SolveReport {
  enum class Status { kOk, kDegenerate };
  Status status = Status::kOk;
  int iterations = 0;  // accepted Gauss-Newton steps
  double final_cost = 0.0;
  Pose correction;  // accumulated left-multiplied error state
  int match_count = 0;
  int candidate_count = 0;
  double condition = 0.0;
  bool condition_warning = false;
  int dropped = 0;  // matches lost to a non-invertible combined covariance
  bool converged = false;
  double associate_seconds = 0.0;
  std::vector<double> cost_history;  // accepted-step costs, starting value first

  bool ok() const { return status == Status::kOk; }
};

/// GICP residual of one match at a given state pose: value = dst - T*src,
/// weight = (dst_cov + R src_cov R^T + eps I)^-1. Returns false (and counts
/// as dropped upstream) when the combined covariance is not positive
/// definite even after regularization.
bool gicp_residual(const Match& match, const Pose& state_pose, double cov_eps,
                   Eigen::Vector3d* value, Eigen::Matrix3d* weight);

/// Projective association of the grid's candidate cells against the pano.
/// fences_by_gc maps each revolution grid column to the trajectory fence
/// that transforms it. Deterministic for any worker count.
std::vector<Match> associate(const FeatureGrid& grid,
                             const std::vector<std::int64_t>& fences_by_gc,
                             const LocalTrajectory& traj, const DepthPano& pano,
                             const IcpParams& params,
                             ThreadPool* pool = nullptr);

/// Damped Gauss-Newton steps over a fixed match set. Accepted steps are
/// applied to the trajectory (left-multiplied, Eq-5-style velocity update)
/// and accumulated into report.correction.
void lm_steps(const std::vector<Match>& matches, LocalTrajectory& traj,
              const IcpParams& params, double dt_span, ThreadPool* pool,
              SolveReport* report);

/// Full projective ICP: associate, optimize, repropagate, re-associate.
/// Marks the cells of the final match set kMatched.
SolveReport solve(FeatureGrid& grid,
                  const std::vector<std::int64_t>& fences_by_gc,
                  LocalTrajectory& traj, const DepthPano& pano,
                  const IcpParams& params, double dt_span,
                  int candidate_count, ThreadPool* pool = nullptr);

}  // namespace lodom
