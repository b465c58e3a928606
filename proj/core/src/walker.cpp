#include "rwl/walker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rwl/chain_analysis.hpp"
#include "rwl/errors.hpp"

namespace rwl {

std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::unif_rw: return "unif_rw";
    case StrategyKind::weight_rw: return "weight_rw";
    case StrategyKind::mixed_rw: return "mixed_rw";
    case StrategyKind::mhlj: return "mhlj";
  }
  return "?";
}

StrategyKind parse_strategy_kind(std::string_view s) {
  if (s == "unif_rw" || s == "unif") return StrategyKind::unif_rw;
  if (s == "weight_rw" || s == "weight") return StrategyKind::weight_rw;
  if (s == "mixed_rw" || s == "mixed") return StrategyKind::mixed_rw;
  if (s == "mhlj") return StrategyKind::mhlj;
  throw InvalidArgument("unknown strategy '" + std::string(s) + "'");
}

std::string_view to_string(StartMode m) {
  switch (m) {
    case StartMode::stationary_sample: return "stationary_sample";
    case StartMode::uniform_sample: return "uniform_sample";
    case StartMode::fixed: return "fixed";
  }
  return "?";
}

StartMode parse_start_mode(std::string_view s) {
  if (s == "stationary_sample" || s == "stationary") return StartMode::stationary_sample;
  if (s == "uniform_sample" || s == "uniform") return StartMode::uniform_sample;
  if (s == "fixed") return StartMode::fixed;
  throw InvalidArgument("unknown start mode '" + std::string(s) + "'");
}

void TrainerConfig::validate() const {
  if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) throw InvalidArgument("gamma must be positive");
  if (record_every == 0) throw InvalidArgument("record_every must be >= 1");
  if (strategy.kind == StrategyKind::mixed_rw && !(strategy.lambda >= 0.0 && strategy.lambda <= 1.0))
    throw InvalidArgument("lambda must lie in [0, 1]");
  if (strategy.kind == StrategyKind::mhlj) strategy.jump.validate();
  if (pj_schedule.horizon < 0.0) throw InvalidArgument("decay horizon must be >= 0");
  if (switch_rule) {
    if (switch_rule->kind == SwitchRule::Kind::window && switch_rule->window == 0)
      throw InvalidArgument("switch window must be >= 1");
    if (switch_rule->tau < 0.0) throw InvalidArgument("switch tau must be >= 0");
    if (switch_rule->gamma_after && !(*switch_rule->gamma_after > 0.0))
      throw InvalidArgument("post-switch gamma must be positive");
  }
}

double update_weight(const ProblemInstance& inst, const Strategy& s, NodeId v) {
  if (v >= inst.size()) throw InvalidArgument("node id out of range");
  const double lv = inst.lipschitz()[v];
  const double lbar = inst.lipschitz_mean();
  switch (s.kind) {
    case StrategyKind::unif_rw: return 1.0;
    case StrategyKind::weight_rw:
    case StrategyKind::mhlj: return lbar / lv;
    case StrategyKind::mixed_rw: return 1.0 / (s.lambda + (1.0 - s.lambda) * lv / lbar);
  }
  return 1.0;
}

Eigen::VectorXd update_step(const ProblemInstance& inst, const Strategy& s, NodeId v, const Eigen::VectorXd& x,
                            double gamma) {
  return x - gamma * update_weight(inst, s, v) * local_grad(inst, v, x);
}

double default_gamma(const ProblemInstance& inst, const Strategy& s) {
  double worst = 0.0;
  for (std::size_t v = 0; v < inst.size(); ++v)
    worst = std::max(worst, update_weight(inst, s, static_cast<NodeId>(v)) * inst.lipschitz()[static_cast<Eigen::Index>(v)]);
  return 0.5 / worst;
}

double pj_at(const PjSchedule& schedule, double p_j0, std::size_t t, std::size_t total_iterations) {
  if (schedule.kind == PjSchedule::Kind::constant) return p_j0;
  double t0 = schedule.horizon > 0.0 ? schedule.horizon : static_cast<double>(total_iterations) / 10.0;
  if (t0 <= 0.0) t0 = 1.0;
  return p_j0 / (1.0 + static_cast<double>(t) / t0);
}

GradientWindow::GradientWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("gradient window needs capacity >= 1");
}

void GradientWindow::push(const Eigen::VectorXd& g) {
  if (!has_first_) {
    first_norm_ = g.norm();
    has_first_ = true;
    sum_ = Eigen::VectorXd::Zero(g.size());
  }
  items_.push_back(g);
  sum_ += g;
  if (items_.size() > capacity_) {
    sum_ -= items_.front();
    items_.pop_front();
  }
}

Eigen::VectorXd GradientWindow::mean() const {
  if (items_.empty()) return {};
  return sum_ / static_cast<double>(items_.size());
}

bool apply_switch_rule(const GradientWindow& window, const SwitchRule& rule) {
  if (rule.kind != SwitchRule::Kind::window || !window.full()) return false;
  return window.mean().norm() <= rule.tau * (1.0 + window.first_norm());
}

namespace {

// d f_v / d margin, so that grad f_v(x) = c * A_v.
double margin_slope(LossModel loss, double margin, double y) {
  if (loss == LossModel::linear_regression) return -2.0 * (y - margin);
  const double s = margin >= 0.0 ? 1.0 / (1.0 + std::exp(-margin)) : std::exp(margin) / (1.0 + std::exp(margin));
  return s - y;
}

double sq_error_of(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  if (!inst.has_optimum()) return std::numeric_limits<double>::quiet_NaN();
  return (x - inst.optimum()).squaredNorm();
}

}  // namespace

Walker::Walker(const ProblemInstance& inst, TrainerConfig config)
    : inst_(&inst),
      config_(std::move(config)),
      sampler_(MhSampler::uniform(inst.graph())),
      uniform_sampler_(MhSampler::uniform(inst.graph())) {
  config_.validate();
  const Graph& g = inst.graph();
  const auto n = static_cast<Eigen::Index>(inst.size());
  const Strategy& s = config_.strategy;
  if (config_.start_mode == StartMode::fixed && config_.start_node >= inst.size())
    throw InvalidArgument("start node " + std::to_string(config_.start_node) + " out of range");

  switch (s.kind) {
    case StrategyKind::unif_rw: break;
    case StrategyKind::weight_rw:
    case StrategyKind::mhlj: sampler_ = MhSampler::weighted(g, inst.lipschitz()); break;
    case StrategyKind::mixed_rw: sampler_ = MhSampler::mixed(g, inst.lipschitz(), s.lambda); break;
  }
  if (s.kind == StrategyKind::mhlj) levy_.emplace(g, s.jump.p_distance, s.jump.horizon);

  weights_.resize(n);
  for (Eigen::Index v = 0; v < n; ++v) weights_[v] = update_weight(inst, s, static_cast<NodeId>(v));
  gamma_ = config_.gamma ? *config_.gamma : default_gamma(inst, s);
  gamma_after_switch_ = 0.5 / inst.lipschitz_max();
  if (config_.switch_rule && config_.switch_rule->gamma_after) gamma_after_switch_ = *config_.switch_rule->gamma_after;

  switch (config_.start_mode) {
    case StartMode::uniform_sample: start_dist_ = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)); break;
    case StartMode::fixed:
      start_dist_ = Eigen::VectorXd::Zero(n);
      start_dist_[config_.start_node] = 1.0;
      break;
    case StartMode::stationary_sample:
      if (s.kind == StrategyKind::mhlj && s.jump.p_jump > 0.0) {
        if (inst.size() > kDenseLimit)
          throw Unsupported("stationary start for mhlj needs n <= " + std::to_string(kDenseLimit));
        start_dist_ = stationary_distribution(build_mhlj_matrix(g, inst.lipschitz(), s.jump));
      } else {
        // The MH kernels have their target as stationary law.
        start_dist_ = sampler_.target() / sampler_.target().sum();
      }
      break;
  }
  start_cdf_.resize(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) start_cdf_[static_cast<std::size_t>(v)] = acc += start_dist_[v];
}

NodeId Walker::draw_start(Rng& rng) const {
  if (config_.start_mode == StartMode::fixed) return config_.start_node;
  const double u = rng.uniform() * start_cdf_.back();
  const auto it = std::upper_bound(start_cdf_.begin(), start_cdf_.end(), u);
  const auto idx = static_cast<std::size_t>(it - start_cdf_.begin());
  return static_cast<NodeId>(std::min(idx, start_cdf_.size() - 1));
}

RunResult Walker::run(std::uint64_t seed) const {
  Rng rng(seed);
  RunResult r = run(rng);
  r.seed = seed;
  return r;
}

RunResult Walker::run(Rng& rng) const {
  const ProblemInstance& inst = *inst_;
  const std::size_t T = config_.iterations;
  const Eigen::MatrixXd& a = inst.features();
  const Eigen::VectorXd& y = inst.responses();
  const bool is_mhlj = config_.strategy.kind == StrategyKind::mhlj;
  const double p_j0 = is_mhlj ? config_.strategy.jump.p_jump : 0.0;

  RunResult res;
  res.config_echo = config_;
  res.gamma = gamma_;
  res.trace.reserve(T / config_.record_every + 2);
  if (config_.keep_visit_log) res.visit_log.reserve(T + 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inst.dim()));
  Eigen::VectorXd g(x.size());
  NodeId v = draw_start(rng);
  res.trace.push_back({0, v, sq_error_of(inst, x), global_loss(inst, x), 0, false});

  const SwitchRule* rule = config_.switch_rule ? &*config_.switch_rule : nullptr;
  std::optional<GradientWindow> window;
  if (rule && rule->kind == SwitchRule::Kind::window) window.emplace(rule->window);
  bool switched = false;
  double gamma = gamma_;

  for (std::size_t t = 0; t < T; ++t) {
    const double w = switched ? 1.0 : weights_[v];
    const double c = margin_slope(inst.loss(), a.row(v).dot(x), y[v]);
    if (window && !switched) {
      g.noalias() = (w * c) * a.row(v).transpose();
      window->push(g);
    }
    x.noalias() -= (gamma * w * c) * a.row(v).transpose();
    ++res.gradient_evaluations;
    if (config_.keep_visit_log) res.visit_log.push_back(v);

    if (rule && !switched) {
      const bool fire = rule->kind == SwitchRule::Kind::fixed_step ? t + 1 >= rule->step
                                                                   : apply_switch_rule(*window, *rule);
      if (fire) {
        switched = true;
        gamma = gamma_after_switch_;
        res.switch_step = t + 1;
      }
    }

    const double pj = switched ? 0.0 : pj_at(config_.pj_schedule, p_j0, t, T);
    // No draw at p_J = 0 keeps the stream identical to weight_rw.
    const bool jumped = pj > 0.0 && rng.bernoulli(pj);
    std::uint64_t hops = 1;
    if (jumped) {
      const JumpOutcome out = levy_->jump(v, rng);
      v = out.destination;
      hops = static_cast<std::uint64_t>(out.hops);
      ++res.jumps;
    } else {
      v = (switched ? uniform_sampler_ : sampler_).step(v, rng);
    }
    res.total_transitions += hops;
    res.transitions_sq_sum += static_cast<double>(hops * hops);

    if ((t + 1) % config_.record_every == 0 || t + 1 == T)
      res.trace.push_back({t + 1, v, sq_error_of(inst, x), global_loss(inst, x), res.total_transitions, jumped});
  }
  if (config_.keep_visit_log) res.visit_log.push_back(v);
  res.final_model = std::move(x);
  return res;
}

RunResult run(const ProblemInstance& inst, const TrainerConfig& config, Rng& rng) {
  return Walker(inst, config).run(rng);
}

CommunicationStats communication_stats(const RunResult& result) {
  CommunicationStats s;
  const Strategy& st = result.config_echo.strategy;
  if (st.kind == StrategyKind::mhlj) s.bound = 1.0 + st.jump.p_jump * (1.0 / st.jump.p_distance - 1.0);
  const auto n = static_cast<double>(result.gradient_evaluations);
  if (n == 0.0) return s;
  const double mean = static_cast<double>(result.total_transitions) / n;
  s.mean_transitions_per_update = mean;
  if (n > 1.0) {
    const double var = std::max(0.0, (result.transitions_sq_sum - n * mean * mean) / (n - 1.0));
    s.std_error = std::sqrt(var / n);
  }
  return s;
}

}  // namespace rwl
