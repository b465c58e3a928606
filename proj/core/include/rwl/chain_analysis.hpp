#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rwl/graph.hpp"
#include "rwl/kernels.hpp"

namespace rwl {

struct PowerIterationOptions {
  double tol = 1e-10;               // on |pi P - pi|_1
  std::size_t max_iters = 1'000'000;
  std::size_t check_every = 1000;   // stagnation test period
};

// Left fixed point of a row-stochastic matrix by power iteration from the
// uniform vector, using a sparse copy of P.
//
// If the residual stops shrinking between checkpoints (a periodic chain
// oscillates instead of converging) the iteration switches to the lazy chain
// (P + I) / 2, which has the same fixed point. Reaching max_iters while the
// residual is still shrinking extends the budget once by 10x with a warning
// on stderr. Throws ConvergenceFailure carrying the last residual otherwise.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p, const PowerIterationOptions& opts = {});
Eigen::VectorXd stationary_distribution(const TransitionKernel& k, const PowerIterationOptions& opts = {});

// |pi P - pi|_1.
double fixed_point_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi);

// Absolute spectral gap 1 - max_{i>=2} |lambda_i| from a full dense
// eigendecomposition. When `reversible_pi` is given and P satisfies detailed
// balance against it, the symmetric similarity transform D^1/2 P D^-1/2 is
// diagonalised instead. Throws NumericFailure if the eigensolver fails.
double spectral_gap(const Eigen::MatrixXd& p, const Eigen::VectorXd* reversible_pi = nullptr);
double spectral_gap(const TransitionKernel& k);

// Moduli of all eigenvalues, descending.
std::vector<double> eigenvalue_moduli(const Eigen::MatrixXd& p);

// 1/2 sum |p_i - q_i|. Throws InvalidArgument on a length mismatch.
double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// max_{v,u} |pi_v P(v,u) - pi_u P(u,v)|.
double detailed_balance_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi);

struct ChainStats {
  Eigen::VectorXd stationary;
  double spectral_gap = 0.0;
  bool is_reversible = false;
  double db_residual = 0.0;
  double tv_to_target = std::numeric_limits<double>::quiet_NaN();
};

// Stationary law (closed form when the kernel carries one, power iteration
// otherwise), absolute spectral gap, detailed-balance residual and, when a
// target is supplied, the TV distance to it.
ChainStats analyze_chain(const TransitionKernel& k, const Eigen::VectorXd* target = nullptr);

struct VisitDiagnostics {
  static constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

  std::vector<std::size_t> visit_counts;
  std::vector<double> empirical_dist;
  std::size_t max_sojourn = 0;
  // Fraction of distinct nodes seen after each step of the trajectory.
  std::vector<double> cover_fraction_curve;
  // First step index at which half of the nodes have been seen; kNever if
  // that never happens.
  std::size_t half_cover_time = kNever;
};

// n is the node count; throws InvalidArgument for an empty trajectory or an
// id >= n.
VisitDiagnostics visit_diagnostics(std::span<const NodeId> trajectory, std::size_t n,
                                   bool keep_curve = true);

}  // namespace rwl
