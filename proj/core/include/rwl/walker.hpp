#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rwl/data.hpp"
#include "rwl/kernels.hpp"
#include "rwl/rng.hpp"

namespace rwl {

enum class StrategyKind { unif_rw, weight_rw, mixed_rw, mhlj };

std::string_view to_string(StrategyKind s);
StrategyKind parse_strategy_kind(std::string_view s);

struct Strategy {
  StrategyKind kind = StrategyKind::weight_rw;
  double lambda = 0.5;  // mixed_rw only
  JumpParams jump{};    // mhlj only

  bool operator==(const Strategy&) const = default;
};

enum class StartMode { stationary_sample, uniform_sample, fixed };

std::string_view to_string(StartMode m);
StartMode parse_start_mode(std::string_view s);

struct PjSchedule {
  enum class Kind { constant, decay };
  Kind kind = Kind::constant;
  // Decay horizon T0 in p_J(t) = p_J0 / (1 + t / T0); 0 means T / 10.
  double horizon = 0.0;

  bool operator==(const PjSchedule&) const = default;
};

struct SwitchRule {
  enum class Kind { window, fixed_step };
  Kind kind = Kind::window;
  std::size_t window = 200;
  double tau = 0.05;
  std::size_t step = 0;  // fixed_step only
  // Step size after the switch; default 0.5 / L_max.
  std::optional<double> gamma_after;

  bool operator==(const SwitchRule&) const = default;
};

struct TrainerConfig {
  Strategy strategy{};
  // Unset means default_gamma(instance, strategy).
  std::optional<double> gamma;
  std::size_t iterations = 1000;
  StartMode start_mode = StartMode::stationary_sample;
  NodeId start_node = 0;
  std::size_t record_every = 1;
  PjSchedule pj_schedule{};
  std::optional<SwitchRule> switch_rule;
  bool keep_visit_log = true;

  // Throws InvalidArgument for gamma <= 0, record_every == 0, window == 0,
  // or invalid strategy parameters.
  void validate() const;
  bool operator==(const TrainerConfig&) const = default;
};

struct TraceRecord {
  std::size_t t = 0;
  NodeId node = 0;
  double sq_error = 0.0;  // NaN without a closed-form optimum
  double global_loss = 0.0;
  std::uint64_t cumulative_transitions = 0;
  bool jumped = false;  // the token reached `node` through a jump
};

struct RunResult {
  std::vector<TraceRecord> trace;
  Eigen::VectorXd final_model;
  // Node at which each update happened, plus the final position: T + 1 ids.
  std::vector<NodeId> visit_log;
  TrainerConfig config_echo;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  std::size_t gradient_evaluations = 0;
  std::uint64_t total_transitions = 0;
  // Sum of squared per-update transition counts, for the standard error.
  double transitions_sq_sum = 0.0;
  std::size_t jumps = 0;
  std::optional<std::size_t> switch_step;
};

// Importance weight applied to the local gradient: 1 / (n pi(v)) for the
// strategy's stationary target (1 for unif_rw, Lbar / L_v for weight_rw and
// mhlj, 1 / (lambda + (1 - lambda) L_v / Lbar) for mixed_rw).
double update_weight(const ProblemInstance& inst, const Strategy& s, NodeId v);

// x - gamma * update_weight * grad f_v(x).
Eigen::VectorXd update_step(const ProblemInstance& inst, const Strategy& s, NodeId v,
                            const Eigen::VectorXd& x, double gamma);

// 0.5 / max_v (w_v L_v): 0.5 / Lbar for weighted sampling, 0.5 / L_max for
// uniform sampling.
double default_gamma(const ProblemInstance& inst, const Strategy& s);

double pj_at(const PjSchedule& schedule, double p_j0, std::size_t t, std::size_t total_iterations);

// Sliding window of reweighted gradients for the switch-to-uniform rule.
class GradientWindow {
 public:
  explicit GradientWindow(std::size_t capacity);

  void push(const Eigen::VectorXd& g);
  bool full() const { return items_.size() == capacity_; }
  Eigen::VectorXd mean() const;
  // Norm of the first gradient ever pushed; 0 before any push.
  double first_norm() const { return first_norm_; }

 private:
  std::size_t capacity_;
  std::deque<Eigen::VectorXd> items_;
  Eigen::VectorXd sum_;
  double first_norm_ = 0.0;
  bool has_first_ = false;
};

// Window rule: true once the window is full and
// |mean| <= tau * (1 + |first gradient|). Fixed-step rules are handled by the
// walker directly and always return false here.
bool apply_switch_rule(const GradientWindow& window, const SwitchRule& rule);

// Pre-built samplers and start distribution for one (instance, config) pair;
// reusable across seeds. Holds a reference to the instance.
class Walker {
 public:
  Walker(const ProblemInstance& inst, TrainerConfig config);

  RunResult run(Rng& rng) const;
  RunResult run(std::uint64_t seed) const;

  const Eigen::VectorXd& start_distribution() const { return start_dist_; }
  double gamma() const { return gamma_; }
  const TrainerConfig& config() const { return config_; }

 private:
  NodeId draw_start(Rng& rng) const;

  const ProblemInstance* inst_;
  TrainerConfig config_;
  double gamma_;
  double gamma_after_switch_;
  MhSampler sampler_;
  MhSampler uniform_sampler_;
  std::optional<LevySampler> levy_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd start_dist_;
  std::vector<double> start_cdf_;
};

RunResult run(const ProblemInstance& inst, const TrainerConfig& config, Rng& rng);

struct CommunicationStats {
  double mean_transitions_per_update = 0.0;
  double std_error = 0.0;
  double bound = 1.0;  // 1 + p_J (1 / p_d - 1); 1 without jumps
};

CommunicationStats communication_stats(const RunResult& result);

}  // namespace rwl
