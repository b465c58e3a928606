#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rwl/graph.hpp"
#include "rwl/rng.hpp"

namespace rwl {

// Largest n for which dense n x n kernels are built.
inline constexpr std::size_t kDenseLimit = 2000;

enum class KernelKind { unif_mh, weight_mh, mixed_mh, levy, mhlj };

std::string_view to_string(KernelKind k);
KernelKind parse_kernel_kind(std::string_view s);

// How the multi-hop jump matrix is normalised.
//
// hop_walk:   sum_i w_i (D^-1 A_G)^i, the exact law of i consecutive uniform
//             hops over neighbours(v) plus v. This is what the procedural
//             jump samples.
// path_count: sum_i w_i diag(A_G^i 1)^-1 A_G^i, i.e. a uniformly chosen
//             length-i path. Identical to hop_walk on regular graphs only.
enum class LevyForm { hop_walk, path_count };

std::string_view to_string(LevyForm f);
LevyForm parse_levy_form(std::string_view s);

struct JumpParams {
  double p_jump = 0.1;      // probability of a jump instead of an MH step
  double p_distance = 0.5;  // truncated-geometric parameter
  int horizon = 10;         // maximum jump length r

  // Throws InvalidArgument unless 0 <= p_jump <= 1, 0 < p_distance < 1, horizon >= 1.
  void validate() const;
  bool operator==(const JumpParams&) const = default;
};

struct KernelParams {
  double lambda = 0.0;
  JumpParams jump{};
  LevyForm levy_form = LevyForm::hop_walk;

  bool operator==(const KernelParams&) const = default;
};

// Dense row-stochastic transition matrix.
struct TransitionKernel {
  KernelKind kind = KernelKind::unif_mh;
  KernelParams params{};
  Eigen::MatrixXd matrix;
  // Stationary distribution when it is known in closed form (all MH kinds);
  // empty for levy and mhlj.
  Eigen::VectorXd target;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  std::string describe() const;
};

// Truncated-geometric jump-length law on {1..r}:
// w_i = p (1-p)^(i-1) / (1 - (1-p)^r).
std::vector<double> jump_length_weights(double p_distance, int horizon);
double expected_jump_length(double p_distance, int horizon);

// Stationary target of the mixed walk: lambda / n + (1 - lambda) L_v / sum L.
Eigen::VectorXd mixed_target(const Eigen::VectorXd& lipschitz, double lambda);

// Metropolis-Hastings kernel for an arbitrary positive target with uniform
// neighbour proposals:
//   P(v,u) = min{1, deg(v) t_u / (deg(u) t_v)} / deg(v)   for u in N(v)
//   P(v,v) = 1 - sum of the above.
Eigen::MatrixXd mh_matrix(const Graph& g, const Eigen::VectorXd& target);

TransitionKernel build_uniform_mh(const Graph& g);
TransitionKernel build_weighted_mh(const Graph& g, const Eigen::VectorXd& lipschitz);
TransitionKernel build_mixed_mh(const Graph& g, const Eigen::VectorXd& lipschitz, double lambda);
TransitionKernel build_levy_matrix(const Graph& g, double p_distance, int horizon,
                                   LevyForm form = LevyForm::hop_walk);
// (1 - p_J) P_IS + p_J P_Levy.
TransitionKernel build_mhlj_matrix(const Graph& g, const Eigen::VectorXd& lipschitz,
                                   const JumpParams& jump, LevyForm form = LevyForm::hop_walk);

// One Metropolis-Hastings step using only the current node's neighbourhood.
// Holds a reference to the graph; the graph must outlive the sampler.
class MhSampler {
 public:
  MhSampler(const Graph& g, Eigen::VectorXd target);

  static MhSampler uniform(const Graph& g);
  static MhSampler weighted(const Graph& g, const Eigen::VectorXd& lipschitz);
  static MhSampler mixed(const Graph& g, const Eigen::VectorXd& lipschitz, double lambda);

  // Proposes a uniform neighbour u and accepts with probability
  // min{1, deg(v) t_u / (deg(u) t_v)}; otherwise stays at v.
  NodeId step(NodeId v, Rng& rng) const;

  const Eigen::VectorXd& target() const { return target_; }

 private:
  const Graph* graph_;
  Eigen::VectorXd target_;
};

struct JumpOutcome {
  NodeId destination;
  int hops;
};

// Levy jump: d ~ truncated geometric on {1..r}, then d uniform hops over
// neighbours(v) plus v. Holds a reference to the graph.
class LevySampler {
 public:
  LevySampler(const Graph& g, double p_distance, int horizon);

  int sample_length(Rng& rng) const;
  NodeId hop(NodeId v, Rng& rng) const;
  JumpOutcome jump(NodeId v, Rng& rng) const;

 private:
  const Graph* graph_;
  std::vector<double> cdf_;
};

NodeId sample_step_mh(const Graph& g, const Eigen::VectorXd& target, NodeId v, Rng& rng);
JumpOutcome sample_levy_jump(const Graph& g, double p_distance, int horizon, NodeId v, Rng& rng);

// Max over rows of |row sum - 1|.
double row_sum_error(const Eigen::MatrixXd& p);

// Plain-text export: "# rwl-kernel v1" line, a "# key=value ..." parameter
// line, then one row per line at 17 significant digits.
void write_kernel(const TransitionKernel& k, std::ostream& out);
TransitionKernel read_kernel(std::istream& in);

}  // namespace rwl
