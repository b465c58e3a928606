// Acceptance suite: runs every primary criterion and prints one PASS/FAIL
// line per criterion.
//
// Exit status: 0 when every criterion ran to completion, 1 when a criterion
// threw. With --strict a FAIL verdict also exits 1. --only N runs a single
// criterion; --report FILE copies the verdict lines to FILE.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rwl/chain_analysis.hpp"
#include "rwl/data.hpp"
#include "rwl/experiments.hpp"
#include "rwl/kernels.hpp"
#include "rwl/walker.hpp"

using namespace rwl;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Notes {
 public:
  template <class... Args>
  Notes& add(const char* fmt, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    if (!text_.empty()) text_ += "; ";
    text_ += buf;
    return *this;
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentResult run_preset(const std::string& name) {
  RunOptions opts;
  opts.write_files = false;
  return run_experiment(experiment_from_config(preset_config(name)), opts);
}

const StrategySummary& by_label(const ExperimentResult& r, const std::string& label) {
  for (const auto& s : r.summaries)
    if (s.label == label) return s;
  throw std::runtime_error("no strategy '" + label + "'");
}

ProblemInstance ring_instance() { return build_instance(experiment_from_config(preset_config("fig3b_desk"))); }

// 1. Kernel exactness of the importance-sampling MH kernel.
Verdict kernel_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_row = 0, worst_db = 0, worst_tv = 0;
  for (std::uint32_t s = 0; s < 20; ++s) {
    const std::size_t n = 5 + s % 16;
    const Graph g = oracle::random_connected_graph(n, 0.25, 1000 + s);
    const Eigen::VectorXd l = oracle::random_positive(n, 2000 + s);
    const Eigen::VectorXd pi = l / l.sum();
    const Eigen::MatrixXd p = build_weighted_mh(g, l).matrix;
    worst_row = std::max(worst_row, row_sum_error(p));
    worst_db = std::max(worst_db, detailed_balance_residual(p, pi));
    worst_tv = std::max(worst_tv, tv_distance(stationary_distribution(p), pi));
  }
  const double secs = seconds_since(t0);
  Notes n;
  n.add("max row-sum error %.2e", worst_row).add("max db residual %.2e", worst_db).add("max TV %.2e", worst_tv).add(
      "%.2fs", secs);
  return {worst_row <= 1e-12 && worst_db <= 1e-12 && worst_tv <= 1e-8 && secs < 10.0, n.str()};
}

// 2. Levy jump: closed form vs sampled jumps vs path enumeration.
Verdict levy_closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  const int draws = 1'000'000;
  double worst_tv = 0, worst_entry = 0;
  Rng rng(20240601);
  for (std::uint32_t s = 0; s < 10; ++s) {
    const std::size_t n = 6 + 2 * (s % 8);
    const Graph g = oracle::random_connected_graph(n, 0.2, 3000 + s);
    for (double pd : {0.3, 0.5})
      for (int r : {1, 2, 5}) {
        const Eigen::MatrixXd p = build_levy_matrix(g, pd, r).matrix;
        const LevySampler sampler(g, pd, r);
        std::vector<std::uint32_t> counts(n);
        for (NodeId v = 0; v < n; ++v) {
          std::fill(counts.begin(), counts.end(), 0u);
          for (int i = 0; i < draws; ++i) ++counts[sampler.jump(v, rng).destination];
          Eigen::VectorXd emp(static_cast<Eigen::Index>(n));
          for (std::size_t u = 0; u < n; ++u) emp[static_cast<Eigen::Index>(u)] = counts[u] / static_cast<double>(draws);
          worst_tv = std::max(worst_tv, tv_distance(emp, p.row(v).transpose()));
        }
      }
  }
  for (std::uint32_t s = 0; s < 10; ++s) {
    const std::size_t n = 4 + s % 5;
    const Graph g = oracle::random_connected_graph(n, 0.3, 4000 + s);
    for (double pd : {0.3, 0.5})
      for (int r : {1, 2, 3}) {
        const Eigen::MatrixXd diff = build_levy_matrix(g, pd, r).matrix - oracle::levy_by_paths(g, pd, r, true);
        worst_entry = std::max(worst_entry, diff.cwiseAbs().maxCoeff());
      }
  }
  const double secs = seconds_since(t0);
  Notes n;
  n.add("max sampled TV %.4f", worst_tv).add("max path-oracle entry error %.2e", worst_entry).add("%.1fs", secs);
  return {worst_tv <= 0.01 && worst_entry <= 1e-12 && secs < 120.0, n.str()};
}

// 3. MHLJ is the convex combination and is not reversible.
Verdict mhlj_composition() {
  double worst = 0;
  bool exact_at_zero = true;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const Graph g = oracle::random_connected_graph(12, 0.25, 5000 + s);
    const Eigen::VectorXd l = oracle::random_positive(12, 6000 + s);
    const JumpParams j{0.1 + 0.05 * s, 0.5, 4};
    const Eigen::MatrixXd expect = (1 - j.p_jump) * oracle::mh_by_hand(g, l / l.sum()) +
                                   j.p_jump * build_levy_matrix(g, j.p_distance, j.horizon).matrix;
    worst = std::max(worst, (build_mhlj_matrix(g, l, j).matrix - expect).cwiseAbs().maxCoeff());
    exact_at_zero = exact_at_zero && build_mhlj_matrix(g, l, {0.0, 0.5, 4}).matrix == build_weighted_mh(g, l).matrix;
  }
  const auto inst = ring_instance();
  const auto& l = inst.lipschitz();
  const double db = detailed_balance_residual(build_mhlj_matrix(inst.graph(), l, {0.1, 0.5, 10}).matrix,
                                              stationary_distribution(build_mhlj_matrix(inst.graph(), l, {0.1, 0.5, 10})));
  Notes n;
  n.add("max entry error %.2e", worst).add("p_J=0 exact %s", exact_at_zero ? "yes" : "no").add(
      "ring db residual at p_J=0.1 %.3e", db);
  return {worst <= 1e-14 && exact_at_zero && db > 1e-6, n.str()};
}

// 4. Entrapment on the heterogeneous ring.
Verdict entrapment() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_preset("fig3b_desk");
  const auto& u = by_label(r, "unif_rw");
  const auto& w = by_label(r, "weight_rw");
  const auto& m = by_label(r, "mhlj");
  const double secs = seconds_since(t0);
  const double ratio = w.median_half_cover_time / u.median_half_cover_time;
  const bool a = ratio > 5.0;
  const bool b = w.iterations_to_threshold > u.iterations_to_threshold &&
                 m.iterations_to_threshold <= 1.2 * u.iterations_to_threshold;
  Notes n;
  n.add("(a) half-cover weight/unif %.0f/%.0f = %.2fx %s", w.median_half_cover_time, u.median_half_cover_time, ratio,
        a ? "ok" : "below 5x")
      .add("(b) itt weight %.0f, unif %.0f, mhlj %.0f %s", w.iterations_to_threshold, u.iterations_to_threshold,
           m.iterations_to_threshold, b ? "ok" : "order violated")
      .add("%.1fs", secs);
  return {a && b && secs < 180.0, n.str()};
}

// 5. Well-connected graph: weighting helps; homogeneous control.
Verdict er_speedup() {
  const auto het = run_preset("fig3a_desk");
  const double u = by_label(het, "unif_rw").iterations_to_threshold;
  const double w = by_label(het, "weight_rw").iterations_to_threshold;
  const double m = by_label(het, "mhlj").iterations_to_threshold;
  const auto hom = run_preset("fig4a_desk");
  double lo = StrategySummary::kInf, hi = 0;
  for (const auto& s : hom.summaries) {
    lo = std::min(lo, s.iterations_to_threshold);
    hi = std::max(hi, s.iterations_to_threshold);
  }
  const bool ok = w < u && m <= 1.2 * w && hi <= 2.0 * lo;
  Notes n;
  n.add("het itt unif %.0f, weight %.0f, mhlj %.0f", u, w, m).add("hom itt range %.0f..%.0f (%.2fx)", lo, hi, hi / lo);
  return {ok, n.str()};
}

// 6. Sparse families.
Verdict sparse_families() {
  Notes n;
  bool ok = true;
  for (const char* name : {"fig5_grid_desk", "fig5_ws_desk"}) {
    const auto r = run_preset(name);
    const double w = by_label(r, "weight_rw").iterations_to_threshold;
    const double m = by_label(r, "mhlj").iterations_to_threshold;
    ok = ok && m < w;
    n.add("%s itt weight %.0f, mhlj %.0f", name, w, m);
  }
  return {ok, n.str()};
}

// 7. Spectral gaps on the entrapment ring.
Verdict spectral_mechanism() {
  const auto inst = ring_instance();
  const auto& l = inst.lipschitz();
  const double eta_is = spectral_gap(build_weighted_mh(inst.graph(), l).matrix);
  const double eta_mhlj = spectral_gap(build_mhlj_matrix(inst.graph(), l, {0.1, 0.5, 10}).matrix);
  std::vector<double> etas;
  // Same graph and low-variance nodes, L normalised so L_min = 1; the
  // high-variance node takes L in {10, 100, 1000}.
  for (double high : {10.0, 100.0, 1000.0}) {
    Eigen::VectorXd lv = l / l.minCoeff();
    for (std::size_t v = 0; v < inst.size(); ++v)
      if (inst.high_variance()[v]) lv[static_cast<Eigen::Index>(v)] = high;
    etas.push_back(spectral_gap(build_weighted_mh(inst.graph(), lv).matrix));
  }
  const bool ok = eta_is < eta_mhlj && eta_mhlj < 1.0 && etas[0] > etas[1] && etas[1] > etas[2];
  Notes n;
  n.add("eta IS %.3e < eta MHLJ %.3e", eta_is, eta_mhlj).add("eta IS at L_high 10/100/1000: %.3e, %.3e, %.3e", etas[0],
                                                                etas[1], etas[2]);
  return {ok, n.str()};
}

// 8. Error gap grows with the jump probability.
Verdict error_gap() {
  RunOptions opts;
  opts.write_files = false;
  const auto r = run_sweep(sweep_from_config(preset_config("pj_sweep_desk")), opts);
  bool increasing = true;
  Notes n;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const auto& s = r.points[i].summaries.front();
    if (i > 0 && !(s.tv_to_target > r.points[i - 1].summaries.front().tv_to_target)) increasing = false;
    n.add("p_J=%.2f TV %.4f plateau %.4g", r.values[i], s.tv_to_target, s.median_plateau_sq_error);
  }
  const double first = r.points.front().summaries.front().median_plateau_sq_error;
  const double last = r.points.back().summaries.front().median_plateau_sq_error;
  return {increasing && last > first && r.values.front() == 0.0 && r.values.back() == 0.4, n.str()};
}

// 9. Communication cost per update.
Verdict communication() {
  const auto inst = ring_instance();
  TrainerConfig cfg;
  cfg.strategy.kind = StrategyKind::mhlj;
  cfg.strategy.jump = {0.1, 0.5, 10};
  cfg.iterations = 100000;
  cfg.record_every = 100000;
  cfg.keep_visit_log = false;
  const auto c = communication_stats(Walker(inst, cfg).run(9));
  Notes n;
  n.add("mean %.4f +- %.4f (bound %.2f)", c.mean_transitions_per_update, c.std_error, c.bound);
  return {c.mean_transitions_per_update <= 1.1 + 3 * c.std_error && c.mean_transitions_per_update >= 1.0, n.str()};
}

// 10. Switching and decaying the jump probability.
Verdict gap_elimination() {
  const auto sw = run_preset("fig6a_switch");
  const double never = by_label(sw, "mhlj").median_plateau_sq_error;
  const double switched = by_label(sw, "switch").median_plateau_sq_error;

  const auto spec = experiment_from_config(preset_config("fig6b_decay"));
  const auto inst = build_instance(spec);
  const TrainerConfig* decay = nullptr;
  for (const auto& s : spec.strategies)
    if (s.trainer.pj_schedule.kind == PjSchedule::Kind::decay) decay = &s.trainer;
  if (!decay) return {false, "no decaying strategy in fig6b_decay"};
  const double pj_end = pj_at(decay->pj_schedule, decay->strategy.jump.p_jump, decay->iterations, decay->iterations);
  JumpParams j = decay->strategy.jump;
  j.p_jump = pj_end;
  const Eigen::MatrixXd at_t = build_mhlj_matrix(inst.graph(), inst.lipschitz(), j).matrix;
  const Eigen::MatrixXd is = build_weighted_mh(inst.graph(), inst.lipschitz()).matrix;
  double worst = 0;
  for (Eigen::Index v = 0; v < at_t.rows(); ++v)
    worst = std::max(worst, tv_distance(at_t.row(v).transpose(), is.row(v).transpose()));

  Notes n;
  n.add("plateau switch %.4g vs never %.4g", switched, never).add("p_J(T) = %.5f, max row TV to P_IS %.5f", pj_end, worst);
  return {switched <= never && worst <= 0.01, n.str()};
}

// 11. Analytic gradients vs central differences.
Verdict gradients() {
  double worst = 0;
  for (LossModel loss : {LossModel::linear_regression, LossModel::logistic_regression}) {
    DataParams p;
    p.heterogeneous = true;
    p.loss = loss;
    p.p_high = 0.01;
    const auto inst = gen_heterogeneous(build_ring(200), p);
    Rng rng(77);
    for (int probe = 0; probe < 100; ++probe) {
      const auto v = static_cast<NodeId>(rng.below(200));
      Eigen::VectorXd x(10);
      for (auto& e : x) e = rng.normal();
      const Eigen::VectorXd g = local_grad(inst, v, x);
      const Eigen::VectorXd fd =
          oracle::numeric_gradient([&](const Eigen::VectorXd& z) { return local_loss(inst, v, z); }, x, 1e-6);
      worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-12));
    }
  }
  Notes n;
  n.add("max relative error %.2e over 200 probes", worst);
  return {worst <= 1e-5, n.str()};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  int only = 0;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") {
      strict = true;
    } else if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (a == "--report" && i + 1 < argc) {
      report_path = argv[++i];
    } else {
      std::cerr << "usage: rwl_acceptance [--strict] [--only N] [--report FILE]\n";
      return 2;
    }
  }

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"kernel exactness", kernel_exactness},
      {"levy closed form vs sampler", levy_closed_form},
      {"mhlj composition", mhlj_composition},
      {"entrapment on the ring", entrapment},
      {"speedup on ER", er_speedup},
      {"grid and small-world", sparse_families},
      {"spectral gaps", spectral_mechanism},
      {"error gap vs p_J", error_gap},
      {"communication cost", communication},
      {"gap elimination", gap_elimination},
      {"gradient check", gradients},
  };

  std::ostringstream report;
  int failed = 0, crashed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (only && only != id) continue;
    std::string line;
    try {
      const Verdict v = criteria[i].second();
      line = "criterion " + std::to_string(id) + " [" + criteria[i].first + "]: " + (v.pass ? "PASS" : "FAIL") +
             "  " + v.detail;
      if (!v.pass) ++failed;
    } catch (const std::exception& e) {
      line = "criterion " + std::to_string(id) + " [" + criteria[i].first + "]: FAIL  exception: " + e.what();
      ++failed;
      ++crashed;
    }
    std::cout << line << std::endl;
    report << line << '\n';
  }
  const std::string tally = "failed: " + std::to_string(failed) + " of " + std::to_string(criteria.size());
  std::cout << tally << std::endl;
  report << tally << '\n';
  if (!report_path.empty()) std::ofstream(report_path) << report.str();
  if (crashed) return 1;
  return strict && failed ? 1 : 0;
}
