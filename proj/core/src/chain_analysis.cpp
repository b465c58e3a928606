#include "rwl/chain_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "rwl/errors.hpp"

namespace rwl {

namespace {

constexpr double kReversibleTol = 1e-12;

void check_square(const Eigen::MatrixXd& p) {
  if (p.rows() == 0 || p.rows() != p.cols()) throw InvalidArgument("transition matrix must be square and non-empty");
}

}  // namespace

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p, const PowerIterationOptions& opts) {
  check_square(p);
  const Eigen::Index n = p.rows();
  // Column-major sparse P^T: one product per iteration gives (pi P)^T.
  const Eigen::SparseMatrix<double> pt = p.transpose().sparseView();

  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  bool lazy = false;
  bool extended = false;
  std::size_t limit = opts.max_iters;
  double last_checkpoint = std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0;; ++it) {
    next.noalias() = pt * pi;
    residual = (next - pi).lpNorm<1>();
    if (residual <= opts.tol) return pi;

    if (it + 1 >= limit) {
      if (!extended && residual < 0.999 * last_checkpoint) {
        std::cerr << "warning: power iteration slow to mix (residual " << residual << " after " << limit
                  << " iterations); extending budget\n";
        limit *= 10;
        extended = true;
      } else {
        throw ConvergenceFailure("power iteration did not converge; residual " + std::to_string(residual),
                                 residual);
      }
    }

    if (opts.check_every > 0 && (it + 1) % opts.check_every == 0) {
      if (residual >= 0.999 * last_checkpoint) {
        if (lazy)
          throw ConvergenceFailure("power iteration stagnated; residual " + std::to_string(residual), residual);
        lazy = true;
      }
      last_checkpoint = residual;
    }

    if (lazy) next = 0.5 * (next + pi);
    pi = next / next.sum();
  }
}

Eigen::VectorXd stationary_distribution(const TransitionKernel& k, const PowerIterationOptions& opts) {
  return stationary_distribution(k.matrix, opts);
}

double fixed_point_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi) {
  check_square(p);
  if (pi.size() != p.rows()) throw InvalidArgument("distribution length does not match matrix");
  return (p.transpose() * pi - pi).lpNorm<1>();
}

std::vector<double> eigenvalue_moduli(const Eigen::MatrixXd& p) {
  check_square(p);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(p, false);
  if (solver.info() != Eigen::Success) throw NumericFailure("eigendecomposition failed");
  std::vector<double> mods;
  mods.reserve(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) mods.push_back(std::abs(solver.eigenvalues()[i]));
  std::sort(mods.begin(), mods.end(), std::greater<>());
  return mods;
}

double spectral_gap(const Eigen::MatrixXd& p, const Eigen::VectorXd* reversible_pi) {
  check_square(p);
  const Eigen::Index n = p.rows();
  if (n == 1) return 1.0;

  if (reversible_pi != nullptr && reversible_pi->size() == n && (reversible_pi->array() > 0.0).all() &&
      detailed_balance_residual(p, *reversible_pi) <= kReversibleTol) {
    const Eigen::VectorXd sq = reversible_pi->array().sqrt();
    const Eigen::VectorXd inv_sq = sq.cwiseInverse();
    Eigen::MatrixXd s = sq.asDiagonal() * p * inv_sq.asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericFailure("symmetric eigendecomposition failed");
    const auto& ev = solver.eigenvalues();  // ascending; ev[n-1] is the Perron root
    const double second = std::max(std::abs(ev[0]), std::abs(ev[n - 2]));
    return std::clamp(1.0 - second, 0.0, 1.0);
  }

  const auto mods = eigenvalue_moduli(p);
  return std::clamp(1.0 - mods[1], 0.0, 1.0);
}

double spectral_gap(const TransitionKernel& k) {
  return spectral_gap(k.matrix, k.target.size() ? &k.target : nullptr);
}

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size())
    throw InvalidArgument("tv_distance: lengths " + std::to_string(p.size()) + " and " +
                          std::to_string(q.size()) + " differ");
  return 0.5 * (p - q).lpNorm<1>();
}

double detailed_balance_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi) {
  check_square(p);
  if (pi.size() != p.rows()) throw InvalidArgument("distribution length does not match matrix");
  const Eigen::MatrixXd flow = pi.asDiagonal() * p;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

ChainStats analyze_chain(const TransitionKernel& k, const Eigen::VectorXd* target) {
  ChainStats stats;
  stats.stationary = k.target.size() ? k.target : stationary_distribution(k);
  stats.db_residual = detailed_balance_residual(k.matrix, stats.stationary);
  stats.is_reversible = stats.db_residual <= kReversibleTol;
  stats.spectral_gap = spectral_gap(k.matrix, stats.is_reversible ? &stats.stationary : nullptr);
  if (target != nullptr) stats.tv_to_target = tv_distance(stats.stationary, *target);
  return stats;
}

VisitDiagnostics visit_diagnostics(std::span<const NodeId> trajectory, std::size_t n, bool keep_curve) {
  if (trajectory.empty()) throw InvalidArgument("visit_diagnostics needs a non-empty trajectory");
  if (n == 0) throw InvalidArgument("visit_diagnostics needs n >= 1");
  VisitDiagnostics d;
  d.visit_counts.assign(n, 0);
  if (keep_curve) d.cover_fraction_curve.reserve(trajectory.size());

  std::size_t distinct = 0;
  std::size_t run = 0;
  NodeId prev = trajectory.front();
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const NodeId v = trajectory[t];
    if (v >= n) throw InvalidArgument("trajectory contains node " + std::to_string(v) + " >= n");
    if (d.visit_counts[v]++ == 0) ++distinct;
    run = (t > 0 && v == prev) ? run + 1 : 1;
    d.max_sojourn = std::max(d.max_sojourn, run);
    prev = v;
    if (d.half_cover_time == VisitDiagnostics::kNever && 2 * distinct >= n) d.half_cover_time = t;
    if (keep_curve) d.cover_fraction_curve.push_back(static_cast<double>(distinct) / static_cast<double>(n));
  }
  d.empirical_dist.resize(n);
  for (std::size_t v = 0; v < n; ++v)
    d.empirical_dist[v] = static_cast<double>(d.visit_counts[v]) / static_cast<double>(trajectory.size());
  return d;
}

}  // namespace rwl
