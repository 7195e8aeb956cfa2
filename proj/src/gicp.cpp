#include "lodom/gicp.hpp"

#include <chrono>
#include <cmath>

#include "lodom/thread_pool.hpp"

namespace lodom {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

struct ChunkAccum {
  Matrix6d h = Matrix6d::Zero();
  Vector6d b = Vector6d::Zero();
  double cost = 0.0;
  int dropped = 0;
};

// Residual, cost and (optionally) normal-equation contributions of all
// matches at the current trajectory, optionally pre-multiplied by a trial
// correction. Partials are combined in chunk order, so the result is
// bit-identical for any worker count.
ChunkAccum assemble(const std::vector<Match>& matches,
                    const LocalTrajectory& traj, const Pose* trial,
                    const IcpParams& p, bool want_grad, ThreadPool* pool) {
  const int n = static_cast<int>(matches.size());
  constexpr int kChunk = 256;
  const int chunks = ThreadPool::chunk_count(0, n, kChunk);
  std::vector<ChunkAccum> partial(chunks);

  auto work = [&](int ci, int b, int e) {
    ChunkAccum& acc = partial[ci];
    for (int i = b; i < e; ++i) {
      const Match& m = matches[i];
      Pose state = traj.at_fence(m.fence).pose();
      if (trial != nullptr) state = compose(*trial, state);

      Eigen::Vector3d r;
      Eigen::Matrix3d w;
      if (!gicp_residual(m, state, p.cov_eps, &r, &w)) {
        ++acc.dropped;
        continue;
      }
      const double m2 = r.dot(w * r);
      if (p.chi2_gate > 0.0 && m2 > p.chi2_gate) continue;
      const double mn = std::sqrt(m2);
      double w_rob = 1.0;
      if (mn <= p.huber_delta) {
        acc.cost += m2;
      } else {
        w_rob = p.huber_delta / mn;
        acc.cost += p.huber_delta * (2.0 * mn - p.huber_delta);
      }
      if (want_grad) {
        // r(d) = dst - exp(dthela) * y - dp, J = [ [y]x  -I ]
        const Eigen::Vector3d y = state * m.src.mean;
        Eigen::Matrix<double, 3, 6> jac;
        jac.leftCols<3>() = skew(y);
        jac.rightCols<3>() = -Eigen::Matrix3d::Identity();
        const Eigen::Matrix<double, 3, 6> wj = w * jac;
        acc.h.noalias() += w_rob * jac.transpose() * wj;
        acc.b.noalias() += w_rob * jac.transpose() * (w * r);
      }
    }
  };

  if (pool != nullptr && pool->workers() > 1 && chunks > 1) {
    pool->parallel_chunks(0, n, kChunk, work);
  } else {
    for (int c = 0; c < chunks; ++c) {
      const int b = c * kChunk;
      work(c, b, std::min(n, b + kChunk));
    }
  }

  ChunkAccum total;
  for (const ChunkAccum& acc : partial) {
    total.h += acc.h;
    total.b += acc.b;
    total.cost += acc.cost;
    total.dropped += acc.dropped;
  }
  return total;
}

}  // namespace

bool gicp_residual(const Match& match, const Pose& state_pose, double cov_eps,
                   Eigen::Vector3d* value, Eigen::Matrix3d* weight) {
  const Eigen::Matrix3d r = state_pose.rotation.toRotationMatrix();
  *value = match.dst.mean - state_pose * match.src.mean;
  Eigen::Matrix3d sigma = match.dst.covariance +
                          r * match.src.covariance * r.transpose() +
                          cov_eps * Eigen::Matrix3d::Identity();
  Eigen::LLT<Eigen::Matrix3d> llt(sigma);
  if (llt.info() != Eigen::Success) return false;
  *weight = llt.solve(Eigen::Matrix3d::Identity());
  return true;
}

std::vector<Match> associate(const FeatureGrid& grid,
                             const std::vector<std::int64_t>& fences_by_gc,
                             const LocalTrajectory& traj, const DepthPano& pano,
                             const IcpParams& params, ThreadPool* pool) {
  const int total = grid.rows() * grid.cols();
  std::vector<Match> slots(total);
  std::vector<std::uint8_t> ok(total, 0);

  auto work = [&](int, int b, int e) {
    for (int k = b; k < e; ++k) {
      const int gr = k / grid.cols();
      const int gc = k % grid.cols();
      const Cell& cell = grid.at(gr, gc);
      if (cell.state == CellState::kInvalid) continue;
      const std::int64_t fence = fences_by_gc[gc];
      const Pose state = traj.at_fence(fence).pose();
      const auto proj = pano.model().project(state * cell.stats.mean);
      if (!proj) continue;
      const float d_pano = pano.depth(proj->row, proj->col);
      if (!(d_pano > 0.0f)) continue;
      if (std::abs(proj->range - d_pano) > params.assoc_tol * d_pano) continue;
      const auto win = pano.window_stats(proj->row, proj->col, params.win_rows,
                                         params.win_cols);
      if (!win) continue;
      Match& m = slots[k];
      m.src = cell.stats;
      m.dst = *win;
      m.pano_row = proj->row;
      m.pano_col = proj->col;
      m.fence = fence;
      m.grid_row = gr;
      m.grid_col = gc;
      ok[k] = 1;
    }
  };

  if (pool != nullptr && pool->workers() > 1) {
    pool->parallel_chunks(0, total, 64, work);
  } else {
    work(0, 0, total);
  }

  std::vector<Match> matches;
  matches.reserve(total);
  for (int k = 0; k < total; ++k) {
    if (ok[k]) matches.push_back(slots[k]);
  }
  return matches;
}

void lm_steps(const std::vector<Match>& matches, LocalTrajectory& traj,
              const IcpParams& params, double dt_span, ThreadPool* pool,
              SolveReport* report) {
  double lambda = params.lm_lambda;
  ChunkAccum cur = assemble(matches, traj, nullptr, params, true, pool);
  report->dropped += cur.dropped;
  report->cost_history.push_back(cur.cost);
  double cost = cur.cost;

  for (int inner = 0; inner < params.max_inner; ++inner) {
    bool accepted = false;
    Vector6d delta = Vector6d::Zero();
    for (int retry = 0; retry <= 3; ++retry) {
      Matrix6d damped = cur.h;
      damped.diagonal() += lambda * cur.h.diagonal();
      delta = damped.ldlt().solve(-cur.b);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Pose step{exp_so3(delta.head<3>()), delta.tail<3>()};
      const ChunkAccum trial =
          assemble(matches, traj, &step, params, false, pool);
      if (trial.cost <= cost) {
        traj.apply_correction(step, dt_span);
        report->correction = compose(step, report->correction);
        cost = trial.cost;
        report->cost_history.push_back(cost);
        ++report->iterations;
        lambda = std::max(lambda * 0.5, 1e-9);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // keep the best state reached so far
    if (delta.norm() < params.step_tol) {
      report->converged = true;
      break;
    }
    if (inner + 1 < params.max_inner) {
      cur = assemble(matches, traj, nullptr, params, true, pool);
    }
  }

  report->final_cost = cost;

  // Condition estimate of the last normal matrix, to flag degenerate
  // geometry such as a single plane.
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(cur.h);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  report->condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  report->condition_warning = !(report->condition < params.cond_warn);
}

SolveReport solve(FeatureGrid& grid,
                  const std::vector<std::int64_t>& fences_by_gc,
                  LocalTrajectory& traj, const DepthPano& pano,
                  const IcpParams& params, double dt_span, int candidate_count,
                  ThreadPool* pool) {
  SolveReport report;
  report.candidate_count = candidate_count;

  std::vector<Match> matches;
  for (int outer = 0; outer < params.max_outer; ++outer) {
    const auto t0 = std::chrono::steady_clock::now();
    matches = associate(grid, fences_by_gc, traj, pano, params, pool);
    report.associate_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    report.match_count = static_cast<int>(matches.size());
    if (report.match_count < params.min_matches) {
      if (outer == 0) {
        report.status = SolveReport::Status::kDegenerate;
        return report;
      }
      break;
    }
    lm_steps(matches, traj, params, dt_span, pool, &report);
    if (report.converged) break;
  }

  for (const Match& m : matches) {
    grid.at(m.grid_row, m.grid_col).state = CellState::kMatched;
  }
  return report;
}

}  // namespace lodom
