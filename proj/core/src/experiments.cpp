#include "rwl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "rwl/chain_analysis.hpp"
#include "rwl/csv.hpp"
#include "rwl/errors.hpp"
#include "rwl/kernels.hpp"

namespace rwl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- enums

std::string_view to_string(GammaRule r) { return r == GammaRule::matched ? "matched" : "per_strategy"; }

GammaRule parse_gamma_rule(std::string_view s) {
  if (s == "per_strategy") return GammaRule::per_strategy;
  if (s == "matched") return GammaRule::matched;
  throw InvalidArgument("unknown gamma rule '" + std::string(s) + "'");
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::p_jump: return "p_jump";
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::sigma_high_sq: return "sigma_high_sq";
    case SweepAxis::n: return "n";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "p_jump" || s == "p_J") return SweepAxis::p_jump;
  if (s == "gamma") return SweepAxis::gamma;
  if (s == "lambda") return SweepAxis::lambda;
  if (s == "sigma_high_sq" || s == "sigma_H_sq") return SweepAxis::sigma_high_sq;
  if (s == "n") return SweepAxis::n;
  throw InvalidArgument("unknown sweep axis '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- graph

Graph build_graph(const GraphSpec& spec) {
  switch (spec.topology) {
    case Topology::ring: return build_ring(spec.n);
    case Topology::grid2d: {
      std::size_t rows = spec.rows, cols = spec.cols;
      if (rows == 0 && cols == 0) {
        rows = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spec.n))));
        cols = rows;
        if (rows * cols != spec.n) throw InvalidArgument("grid2d: n is not a perfect square; set rows and cols");
      } else if (rows == 0 || cols == 0) {
        const std::size_t known = rows ? rows : cols;
        if (spec.n % known != 0) throw InvalidArgument("grid2d: n is not divisible by the given side");
        (rows ? cols : rows) = spec.n / known;
      }
      return build_grid2d(rows, cols);
    }
    case Topology::erdos_renyi: return build_erdos_renyi(spec.n, spec.p, spec.seed);
    case Topology::watts_strogatz: return build_watts_strogatz(spec.n, spec.k, spec.beta, spec.seed);
    case Topology::custom: {
      std::ifstream in(spec.file);
      if (!in) throw IoError("cannot open edge list '" + spec.file + "'");
      return read_edge_list(in);
    }
  }
  throw InvalidArgument("unknown topology");
}

// ---------------------------------------------------------------- validation

namespace {

bool safe_name(std::string_view s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

void validate_into(const ExperimentSpec& spec, std::vector<std::string>& errors) {
  if (!safe_name(spec.name)) errors.push_back("experiment.name: '" + spec.name + "' is not a safe file name");
  if (spec.strategies.empty()) errors.push_back("experiment: at least one strategy is required");
  if (spec.seeds.empty()) errors.push_back("experiment.seeds: at least one seed is required");
  if (!(spec.gamma_scale > 0.0)) errors.push_back("experiment.gamma_scale: must be positive");
  if (!(spec.plateau_fraction > 0.0 && spec.plateau_fraction <= 1.0))
    errors.push_back("experiment.plateau_fraction: must lie in (0, 1]");
  if (spec.graph.n < 1) errors.push_back("graph.n: must be positive");
  if (spec.data.dim < 1) errors.push_back("data.dim: must be positive");
  if (!(spec.data.p_high >= 0.0 && spec.data.p_high <= 1.0)) errors.push_back("data.p_high: must lie in [0, 1]");
  if (spec.data.noise_std < 0.0) errors.push_back("data.noise_std: must be >= 0");

  std::vector<std::string> seen;
  for (const auto& s : spec.strategies) {
    const std::string where = "strategy " + s.label;
    if (!safe_name(s.label)) errors.push_back(where + ": label is not a safe file name");
    if (std::find(seen.begin(), seen.end(), s.label) != seen.end()) errors.push_back(where + ": duplicate label");
    seen.push_back(s.label);
    if (s.trainer.iterations < 1) errors.push_back(where + ".iterations: must be >= 1");
    try {
      s.trainer.validate();
    } catch (const std::exception& e) {
      errors.push_back(where + ": " + e.what());
    }
    if (s.trainer.start_mode == StartMode::fixed && s.trainer.start_node >= spec.graph.n)
      errors.push_back(where + ".start_node: out of range");
  }
}

[[noreturn]] void throw_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid specification";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ValidationError(msg);
}

}  // namespace

void ExperimentSpec::validate() const {
  std::vector<std::string> errors;
  validate_into(*this, errors);
  if (!errors.empty()) throw_errors(errors);
}

void SweepSpec::validate() const {
  std::vector<std::string> errors;
  validate_into(base, errors);
  if (values.empty()) errors.push_back("sweep.values: at least one value is required");
  for (double v : values) {
    try {
      apply_axis(base, axis, v).validate();
    } catch (const ValidationError& e) {
      errors.push_back("sweep.values: " + format_double(v) + " gives an invalid point");
    } catch (const std::exception& e) {
      errors.push_back("sweep.values: " + format_double(v) + ": " + e.what());
    }
  }
  if (!errors.empty()) throw_errors(errors);
}

ExperimentSpec apply_axis(const ExperimentSpec& base, SweepAxis axis, double value) {
  ExperimentSpec spec = base;
  switch (axis) {
    case SweepAxis::p_jump:
      for (auto& s : spec.strategies)
        if (s.trainer.strategy.kind == StrategyKind::mhlj) s.trainer.strategy.jump.p_jump = value;
      break;
    case SweepAxis::gamma:
      for (auto& s : spec.strategies) s.trainer.gamma = value;
      break;
    case SweepAxis::lambda:
      for (auto& s : spec.strategies)
        if (s.trainer.strategy.kind == StrategyKind::mixed_rw) s.trainer.strategy.lambda = value;
      break;
    case SweepAxis::sigma_high_sq: spec.data.sigma_high_sq = value; break;
    case SweepAxis::n:
      if (!(value >= 1.0) || value != std::floor(value)) throw InvalidArgument("n must be a positive integer");
      spec.graph.n = static_cast<std::size_t>(value);
      spec.graph.rows = spec.graph.cols = 0;
      break;
  }
  return spec;
}

// ---------------------------------------------------------------- config mapping

namespace {

constexpr std::string_view kExperimentKeys[] = {"name",           "seeds",      "output_dir",   "gamma_rule",
                                                 "gamma_scale",    "plateau_fraction", "threads", "iterations",
                                                 "record_every",   "start_mode", "start_node"};
constexpr std::string_view kGraphKeys[] = {"topology", "n", "rows", "cols", "p", "k", "beta", "seed", "file"};
constexpr std::string_view kDataKeys[] = {"heterogeneous", "dim",        "sigma_sq", "sigma_low_sq",
                                          "sigma_high_sq", "p_high",     "placement", "noise_std",
                                          "loss",          "model_seed", "data_seed"};
constexpr std::string_view kStrategyKeys[] = {
    "kind",       "lambda",       "p_jump",      "p_distance",  "horizon",      "gamma",
    "iterations", "record_every", "start_mode",  "start_node",  "pj_schedule",  "pj_horizon",
    "switch",     "switch_window", "switch_tau", "switch_step", "switch_gamma", "keep_visit_log"};
constexpr std::string_view kSweepKeys[] = {"axis", "values"};

template <std::size_t N>
bool contains(const std::string_view (&keys)[N], std::string_view k) {
  return std::find(std::begin(keys), std::end(keys), k) != std::end(keys);
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

std::string join_double(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : "auto"; }

std::string_view switch_name(const std::optional<SwitchRule>& r) {
  if (!r) return "none";
  return r->kind == SwitchRule::Kind::window ? "window" : "fixed_step";
}

struct StrategyDefaults {
  std::size_t iterations = 1000;
  std::size_t record_every = 1;
  StartMode start_mode = StartMode::stationary_sample;
  std::size_t start_node = 0;
};

StrategySpec read_strategy(const ConfigSection& sec, const StrategyDefaults& defs, std::vector<std::string>& errors) {
  FieldReader r(sec, errors);
  StrategySpec s;
  s.label = sec.label;
  TrainerConfig& t = s.trainer;
  if (!r.has("kind")) r.fail("kind", "missing");
  r.read_enum("kind", t.strategy.kind, [](const std::string& v) { return parse_strategy_kind(v); });
  r.read("lambda", t.strategy.lambda);
  r.read("p_jump", t.strategy.jump.p_jump);
  r.read("p_distance", t.strategy.jump.p_distance);
  r.read("horizon", t.strategy.jump.horizon);
  r.read("gamma", t.gamma);
  t.iterations = defs.iterations;
  t.record_every = defs.record_every;
  t.start_mode = defs.start_mode;
  std::size_t start_node = defs.start_node;
  r.read("iterations", t.iterations);
  r.read("record_every", t.record_every);
  r.read_enum("start_mode", t.start_mode, [](const std::string& v) { return parse_start_mode(v); });
  r.read("start_node", start_node);
  t.start_node = static_cast<NodeId>(start_node);
  r.read_enum("pj_schedule", t.pj_schedule.kind, [](const std::string& v) {
    if (v == "constant") return PjSchedule::Kind::constant;
    if (v == "decay") return PjSchedule::Kind::decay;
    throw InvalidArgument("expected constant or decay");
  });
  r.read("pj_horizon", t.pj_schedule.horizon);
  std::string sw = "none";
  r.read("switch", sw);
  SwitchRule rule;
  r.read("switch_window", rule.window);
  r.read("switch_tau", rule.tau);
  r.read("switch_step", rule.step);
  r.read("switch_gamma", rule.gamma_after);
  if (sw == "window" || sw == "fixed_step") {
    rule.kind = sw == "window" ? SwitchRule::Kind::window : SwitchRule::Kind::fixed_step;
    t.switch_rule = rule;
  } else if (sw != "none") {
    r.fail("switch", "expected none, window or fixed_step");
  }
  r.read("keep_visit_log", t.keep_visit_log);
  r.reject_unknown();
  return s;
}

void write_strategy(ConfigSection& sec, const StrategySpec& s) {
  const TrainerConfig& t = s.trainer;
  sec.set("kind", std::string(to_string(t.strategy.kind)));
  sec.set("lambda", format_double(t.strategy.lambda));
  sec.set("p_jump", format_double(t.strategy.jump.p_jump));
  sec.set("p_distance", format_double(t.strategy.jump.p_distance));
  sec.set("horizon", std::to_string(t.strategy.jump.horizon));
  sec.set("gamma", opt_double(t.gamma));
  sec.set("iterations", std::to_string(t.iterations));
  sec.set("record_every", std::to_string(t.record_every));
  sec.set("start_mode", std::string(to_string(t.start_mode)));
  sec.set("start_node", std::to_string(t.start_node));
  sec.set("pj_schedule", t.pj_schedule.kind == PjSchedule::Kind::decay ? "decay" : "constant");
  sec.set("pj_horizon", format_double(t.pj_schedule.horizon));
  const SwitchRule rule = t.switch_rule.value_or(SwitchRule{});
  sec.set("switch", std::string(switch_name(t.switch_rule)));
  sec.set("switch_window", std::to_string(rule.window));
  sec.set("switch_tau", format_double(rule.tau));
  sec.set("switch_step", std::to_string(rule.step));
  sec.set("switch_gamma", opt_double(rule.gamma_after));
  sec.set("keep_visit_log", t.keep_visit_log ? "true" : "false");
}

}  // namespace

ExperimentSpec experiment_from_config(const ConfigDocument& doc) {
  std::vector<std::string> errors;
  ExperimentSpec spec;
  spec.strategies.clear();
  StrategyDefaults defs;

  for (const auto& sec : doc.sections) {
    if (sec.kind == "strategy" || sec.kind == "sweep") continue;
    if (sec.kind != "experiment" && sec.kind != "graph" && sec.kind != "data")
      errors.push_back("[" + sec.title() + "]: unknown section");
    else if (!sec.label.empty())
      errors.push_back("[" + sec.title() + "]: this section takes no label");
  }

  if (const ConfigSection* sec = doc.find("experiment")) {
    FieldReader r(*sec, errors);
    r.read("name", spec.name);
    r.read("seeds", spec.seeds);
    std::string out;
    r.read("output_dir", out);
    if (!out.empty()) spec.output_dir = out;
    r.read_enum("gamma_rule", spec.gamma_rule, [](const std::string& v) { return parse_gamma_rule(v); });
    r.read("gamma_scale", spec.gamma_scale);
    r.read("plateau_fraction", spec.plateau_fraction);
    r.read("threads", spec.threads);
    r.read("iterations", defs.iterations);
    r.read("record_every", defs.record_every);
    r.read_enum("start_mode", defs.start_mode, [](const std::string& v) { return parse_start_mode(v); });
    r.read("start_node", defs.start_node);
    r.reject_unknown();
  } else {
    errors.push_back("[experiment]: missing section");
  }

  if (const ConfigSection* sec = doc.find("graph")) {
    FieldReader r(*sec, errors);
    GraphSpec& g = spec.graph;
    r.read_enum("topology", g.topology, [](const std::string& v) { return parse_topology(v); });
    r.read("n", g.n);
    r.read("rows", g.rows);
    r.read("cols", g.cols);
    r.read("p", g.p);
    r.read("k", g.k);
    r.read("beta", g.beta);
    r.read("seed", g.seed);
    r.read("file", g.file);
    r.reject_unknown();
    if (g.topology == Topology::grid2d && g.rows && g.cols && !r.has("n")) g.n = g.rows * g.cols;
  }

  if (const ConfigSection* sec = doc.find("data")) {
    FieldReader r(*sec, errors);
    DataParams& d = spec.data;
    r.read("heterogeneous", d.heterogeneous);
    r.read("dim", d.dim);
    r.read("sigma_sq", d.sigma_sq);
    r.read("sigma_low_sq", d.sigma_low_sq);
    r.read("sigma_high_sq", d.sigma_high_sq);
    r.read("p_high", d.p_high);
    r.read_enum("placement", d.placement, [](const std::string& v) { return parse_placement(v); });
    r.read("noise_std", d.noise_std);
    r.read_enum("loss", d.loss, [](const std::string& v) { return parse_loss_model(v); });
    r.read("model_seed", d.model_seed);
    r.read("data_seed", d.data_seed);
    r.reject_unknown();
  }

  for (const auto& sec : doc.sections)
    if (sec.kind == "strategy") {
      if (sec.label.empty()) {
        errors.push_back("[strategy]: a label is required, e.g. [strategy weight]");
        continue;
      }
      spec.strategies.push_back(read_strategy(sec, defs, errors));
    }

  validate_into(spec, errors);
  if (!errors.empty()) throw_errors(errors);
  return spec;
}

ConfigDocument experiment_to_config(const ExperimentSpec& spec) {
  ConfigDocument doc;
  auto& e = doc.get_or_add("experiment");
  e.set("name", spec.name);
  e.set("seeds", join_u64(spec.seeds));
  e.set("output_dir", spec.output_dir.string());
  e.set("gamma_rule", std::string(to_string(spec.gamma_rule)));
  e.set("gamma_scale", format_double(spec.gamma_scale));
  e.set("plateau_fraction", format_double(spec.plateau_fraction));
  e.set("threads", std::to_string(spec.threads));

  auto& g = doc.get_or_add("graph");
  g.set("topology", std::string(to_string(spec.graph.topology)));
  g.set("n", std::to_string(spec.graph.n));
  g.set("rows", std::to_string(spec.graph.rows));
  g.set("cols", std::to_string(spec.graph.cols));
  g.set("p", format_double(spec.graph.p));
  g.set("k", std::to_string(spec.graph.k));
  g.set("beta", format_double(spec.graph.beta));
  g.set("seed", std::to_string(spec.graph.seed));
  if (!spec.graph.file.empty()) g.set("file", spec.graph.file);

  auto& d = doc.get_or_add("data");
  const DataParams& p = spec.data;
  d.set("heterogeneous", p.heterogeneous ? "true" : "false");
  d.set("dim", std::to_string(p.dim));
  d.set("sigma_sq", format_double(p.sigma_sq));
  d.set("sigma_low_sq", format_double(p.sigma_low_sq));
  d.set("sigma_high_sq", format_double(p.sigma_high_sq));
  d.set("p_high", format_double(p.p_high));
  d.set("placement", std::string(to_string(p.placement)));
  d.set("noise_std", format_double(p.noise_std));
  d.set("loss", std::string(to_string(p.loss)));
  d.set("model_seed", std::to_string(p.model_seed));
  d.set("data_seed", std::to_string(p.data_seed));

  for (const auto& s : spec.strategies) write_strategy(doc.get_or_add("strategy", s.label), s);
  return doc;
}

SweepSpec sweep_from_config(const ConfigDocument& doc) {
  SweepSpec sweep;
  std::vector<std::string> errors;
  try {
    sweep.base = experiment_from_config(doc);
  } catch (const ValidationError& e) {
    errors.emplace_back(e.what());
  }
  if (const ConfigSection* sec = doc.find("sweep")) {
    FieldReader r(*sec, errors);
    if (!r.has("axis")) r.fail("axis", "missing");
    r.read_enum("axis", sweep.axis, [](const std::string& v) { return parse_sweep_axis(v); });
    r.read("values", sweep.values);
    r.reject_unknown();
    if (sweep.values.empty()) r.fail("values", "at least one value is required");
  } else {
    errors.push_back("[sweep]: missing section");
  }
  if (!errors.empty()) throw_errors(errors);
  sweep.validate();
  return sweep;
}

ConfigDocument sweep_to_config(const SweepSpec& spec) {
  ConfigDocument doc = experiment_to_config(spec.base);
  auto& s = doc.get_or_add("sweep");
  s.set("axis", std::string(to_string(spec.axis)));
  s.set("values", join_double(spec.values));
  return doc;
}

void apply_override(ConfigDocument& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ValidationError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string path(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));

  const auto dot = path.find('.');
  if (dot != std::string::npos) {
    const std::string section = path.substr(0, dot);
    std::string key = path.substr(dot + 1);
    if (section == "strategy") {
      const auto dot2 = key.find('.');
      if (dot2 == std::string::npos) throw ValidationError("override '" + path + "': use strategy.<label>.<key>");
      const std::string label = key.substr(0, dot2);
      key = key.substr(dot2 + 1);
      ConfigSection* sec = doc.find("strategy", label);
      if (!sec) throw ValidationError("override '" + path + "': no strategy labelled '" + label + "'");
      if (!contains(kStrategyKeys, key)) throw ValidationError("override '" + path + "': unknown strategy key");
      sec->set(key, value);
      return;
    }
    const bool known = (section == "experiment" && contains(kExperimentKeys, key)) ||
                       (section == "graph" && contains(kGraphKeys, key)) ||
                       (section == "data" && contains(kDataKeys, key)) ||
                       (section == "sweep" && contains(kSweepKeys, key));
    if (!known) throw ValidationError("override '" + path + "': unknown key");
    doc.get_or_add(section).set(key, value);
    return;
  }

  bool applied = false;
  if (contains(kStrategyKeys, path)) {
    for (auto& sec : doc.sections)
      if (sec.kind == "strategy") {
        sec.set(path, value);
        applied = true;
      }
  }
  if (contains(kExperimentKeys, path)) {
    doc.get_or_add("experiment").set(path, value);
    applied = true;
  } else if (contains(kGraphKeys, path)) {
    doc.get_or_add("graph").set(path, value);
    applied = true;
  } else if (contains(kDataKeys, path)) {
    doc.get_or_add("data").set(path, value);
    applied = true;
  } else if (contains(kSweepKeys, path)) {
    doc.get_or_add("sweep").set(path, value);
    applied = true;
  }
  if (!applied) throw ValidationError("override '" + path + "': unknown key");
}

fs::path default_output_dir() {
  if (const char* env = std::getenv("RWL_OUTPUT_DIR"); env && *env) return env;
  return "runs";
}

// ---------------------------------------------------------------- csv

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{"t", "node", "sq_error", "global_loss", "cum_transitions", "jumped"};
  return cols;
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{"strategy",
                                             "kernel",
                                             "params",
                                             "gamma",
                                             "seeds",
                                             "median_final_sq_error",
                                             "median_plateau_sq_error",
                                             "iterations_to_threshold",
                                             "median_half_cover_time",
                                             "mean_transitions_per_update",
                                             "transitions_std_error",
                                             "communication_bound",
                                             "median_switch_step",
                                             "eta",
                                             "tv_to_target",
                                             "db_residual"};
  return cols;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{"axis",        "value",           "strategy", "seed", "t",
                                             "node",        "sq_error",        "global_loss",
                                             "cum_transitions", "jumped",      "eta",      "tv_to_target",
                                             "db_residual"};
  return cols;
}

const std::vector<std::string>& sweep_summary_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"axis", "value"};
    const auto& s = summary_columns();
    c.insert(c.end(), s.begin(), s.end());
    return c;
  }();
  return cols;
}

void write_trace_csv(const RunResult& r, std::ostream& out) {
  CsvWriter w(out, trace_columns());
  for (const auto& rec : r.trace) {
    w.cell(static_cast<unsigned long long>(rec.t))
        .cell(static_cast<unsigned long long>(rec.node))
        .cell(rec.sq_error)
        .cell(rec.global_loss)
        .cell(static_cast<unsigned long long>(rec.cumulative_transitions))
        .cell(rec.jumped ? 1 : 0);
    w.end_row();
  }
}

namespace {

void summary_cells(CsvWriter& w, const StrategySummary& s) {
  w.cell(s.label)
      .cell(to_string(s.kernel_kind))
      .cell(s.params)
      .cell(s.gamma)
      .cell(static_cast<unsigned long long>(s.seeds))
      .cell(s.median_final_sq_error)
      .cell(s.median_plateau_sq_error)
      .cell(s.iterations_to_threshold)
      .cell(s.median_half_cover_time)
      .cell(s.mean_transitions_per_update)
      .cell(s.transitions_std_error)
      .cell(s.communication_bound)
      .cell(s.median_switch_step)
      .cell(s.eta)
      .cell(s.tv_to_target)
      .cell(s.db_residual);
}

}  // namespace

void write_summary_csv(const std::vector<StrategySummary>& rows, std::ostream& out) {
  CsvWriter w(out, summary_columns());
  for (const auto& s : rows) {
    summary_cells(w, s);
    w.end_row();
  }
}

// ---------------------------------------------------------------- running

std::vector<double> resolve_gammas(const ExperimentSpec& spec, const ProblemInstance& inst) {
  std::vector<double> defaults;
  for (const auto& s : spec.strategies) defaults.push_back(default_gamma(inst, s.trainer.strategy));
  const double matched = defaults.empty() ? 0.0 : *std::min_element(defaults.begin(), defaults.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < spec.strategies.size(); ++i) {
    const auto& t = spec.strategies[i].trainer;
    if (t.gamma)
      out.push_back(*t.gamma);
    else
      out.push_back(spec.gamma_scale * (spec.gamma_rule == GammaRule::matched ? matched : defaults[i]));
  }
  return out;
}

ProblemInstance build_instance(const ExperimentSpec& spec) { return generate_instance(build_graph(spec.graph), spec.data); }

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

KernelKind kernel_kind_of(StrategyKind k) {
  switch (k) {
    case StrategyKind::unif_rw: return KernelKind::unif_mh;
    case StrategyKind::weight_rw: return KernelKind::weight_mh;
    case StrategyKind::mixed_rw: return KernelKind::mixed_mh;
    case StrategyKind::mhlj: return KernelKind::mhlj;
  }
  return KernelKind::unif_mh;
}

TransitionKernel kernel_of(const ProblemInstance& inst, const Strategy& s) {
  switch (s.kind) {
    case StrategyKind::unif_rw: return build_uniform_mh(inst.graph());
    case StrategyKind::weight_rw: return build_weighted_mh(inst.graph(), inst.lipschitz());
    case StrategyKind::mixed_rw: return build_mixed_mh(inst.graph(), inst.lipschitz(), s.lambda);
    case StrategyKind::mhlj: return build_mhlj_matrix(inst.graph(), inst.lipschitz(), s.jump);
  }
  throw InvalidArgument("unknown strategy");
}

std::string params_of(const TrainerConfig& t) {
  std::ostringstream o;
  const Strategy& s = t.strategy;
  if (s.kind == StrategyKind::mixed_rw) o << "lambda=" << format_double(s.lambda);
  if (s.kind == StrategyKind::mhlj) {
    o << "p_J=" << format_double(s.jump.p_jump) << ";p_d=" << format_double(s.jump.p_distance)
      << ";r=" << s.jump.horizon;
    if (t.pj_schedule.kind == PjSchedule::Kind::decay) o << ";schedule=decay";
  }
  if (t.switch_rule) o << (o.tellp() > 0 ? ";" : "") << "switch=" << switch_name(t.switch_rule);
  const std::string s_out = o.str();
  return s_out.empty() ? "-" : s_out;
}

// Per-cell reductions kept after the RunResult is dropped.
struct CellStats {
  std::vector<std::size_t> ts;
  std::vector<double> sq;
  double final_sq = 0.0;
  double plateau_sq = 0.0;
  double half_cover = StrategySummary::kInf;
  double transitions_mean = 0.0;
  double transitions_se = 0.0;
  double bound = 1.0;
  double switch_step = std::numeric_limits<double>::quiet_NaN();
};

CellStats reduce_cell(const RunResult& r, std::size_t n, double plateau_fraction) {
  CellStats c;
  for (const auto& rec : r.trace) {
    c.ts.push_back(rec.t);
    c.sq.push_back(rec.sq_error);
  }
  c.final_sq = r.trace.back().sq_error;
  const double total = static_cast<double>(r.trace.back().t);
  const double from = total * (1.0 - plateau_fraction);
  double acc = 0.0;
  std::size_t cnt = 0;
  for (const auto& rec : r.trace)
    if (static_cast<double>(rec.t) >= from) {
      acc += rec.sq_error;
      ++cnt;
    }
  c.plateau_sq = cnt ? acc / static_cast<double>(cnt) : c.final_sq;
  if (!r.visit_log.empty()) {
    const auto d = visit_diagnostics(r.visit_log, n, false);
    if (d.half_cover_time != VisitDiagnostics::kNever) c.half_cover = static_cast<double>(d.half_cover_time);
  } else {
    c.half_cover = std::numeric_limits<double>::quiet_NaN();
  }
  const auto comm = communication_stats(r);
  c.transitions_mean = comm.mean_transitions_per_update;
  c.transitions_se = comm.std_error;
  c.bound = comm.bound;
  if (r.switch_step) c.switch_step = static_cast<double>(*r.switch_step);
  return c;
}

using CellCallback = std::function<void(std::size_t strategy, std::size_t seed_index, const RunResult&)>;

ExperimentResult run_cells(const ExperimentSpec& spec, const RunOptions& options, const CellCallback& on_cell) {
  spec.validate();
  const ProblemInstance inst = build_instance(spec);
  const std::vector<double> gammas = resolve_gammas(spec, inst);
  const std::size_t S = spec.strategies.size();
  const std::size_t K = spec.seeds.size();

  ExperimentResult result;
  result.directory = spec.output_dir / spec.name;
  if (options.write_files) {
    std::error_code ec;
    fs::create_directories(result.directory, ec);
    if (ec) throw IoError("cannot create '" + result.directory.string() + "': " + ec.message());
  }

  std::vector<Walker> walkers;
  walkers.reserve(S);
  for (std::size_t s = 0; s < S; ++s) {
    TrainerConfig t = spec.strategies[s].trainer;
    t.gamma = gammas[s];
    walkers.emplace_back(inst, t);
  }

  std::vector<CellStats> cells(S * K);
  if (options.keep_runs) result.runs.assign(S, std::vector<RunResult>(K));
  std::vector<std::exception_ptr> failures(S * K);
  std::atomic<std::size_t> next{0};
  std::mutex keep_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < S * K; i = next++) {
      const std::size_t s = i / K, k = i % K;
      try {
        RunResult r = walkers[s].run(spec.seeds[k]);
        if (options.write_files) {
          const fs::path file =
              result.directory / (spec.strategies[s].label + "_" + std::to_string(spec.seeds[k]) + ".csv");
          std::ofstream out(file, std::ios::binary | std::ios::trunc);
          if (!out) throw IoError("cannot write '" + file.string() + "'");
          write_trace_csv(r, out);
          if (!out) throw IoError("write failed for '" + file.string() + "'");
        }
        cells[i] = reduce_cell(r, inst.size(), spec.plateau_fraction);
        if (on_cell) on_cell(s, k, r);
        if (options.keep_runs) {
          std::lock_guard lock(keep_mutex);
          result.runs[s][k] = std::move(r);
        }
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, S * K);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  Eigen::VectorXd pi_is = inst.lipschitz() / inst.lipschitz().sum();
  for (std::size_t s = 0; s < S; ++s) {
    const auto& t = spec.strategies[s].trainer;
    StrategySummary sum;
    sum.label = spec.strategies[s].label;
    sum.strategy = t.strategy;
    sum.kernel_kind = kernel_kind_of(t.strategy.kind);
    sum.params = params_of(t);
    sum.gamma = gammas[s];
    sum.seeds = K;

    std::vector<double> finals, plateaus, covers, switches;
    double tmean = 0.0, tvar = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const CellStats& c = cells[s * K + k];
      finals.push_back(c.final_sq);
      plateaus.push_back(c.plateau_sq);
      covers.push_back(c.half_cover);
      if (!std::isnan(c.switch_step)) switches.push_back(c.switch_step);
      tmean += c.transitions_mean;
      tvar += c.transitions_se * c.transitions_se;
      sum.communication_bound = c.bound;
    }
    sum.median_final_sq_error = median(finals);
    sum.median_plateau_sq_error = median(plateaus);
    sum.median_half_cover_time = median(covers);
    sum.mean_transitions_per_update = tmean / static_cast<double>(K);
    sum.transitions_std_error = std::sqrt(tvar) / static_cast<double>(K);
    if (!switches.empty()) sum.median_switch_step = median(switches);

    // Median curve over seeds; all cells of a strategy share record times.
    const auto& ts = cells[s * K].ts;
    std::vector<double> curve(ts.size());
    for (std::size_t j = 0; j < ts.size(); ++j) {
      std::vector<double> col;
      for (std::size_t k = 0; k < K; ++k) col.push_back(cells[s * K + k].sq[j]);
      curve[j] = median(col);
    }
    if (std::isnan(curve.front())) {
      sum.iterations_to_threshold = std::numeric_limits<double>::quiet_NaN();
    } else {
      for (std::size_t j = 0; j < ts.size(); ++j)
        if (curve[j] <= 0.1 * curve.front()) {
          sum.iterations_to_threshold = static_cast<double>(ts[j]);
          break;
        }
    }

    if (options.chain_stats && inst.size() <= kDenseLimit) {
      const TransitionKernel kern = kernel_of(inst, t.strategy);
      const ChainStats cs = analyze_chain(kern, &pi_is);
      sum.eta = cs.spectral_gap;
      sum.tv_to_target = cs.tv_to_target;
      sum.db_residual = cs.db_residual;
    }
    result.summaries.push_back(std::move(sum));
  }

  if (options.write_files) {
    const fs::path summary = result.directory / "summary.csv";
    std::ofstream out(summary, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + summary.string() + "'");
    write_summary_csv(result.summaries, out);
    std::ofstream cfg(result.directory / "spec.cfg", std::ios::binary | std::ios::trunc);
    experiment_to_config(spec).write(cfg);
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  return run_cells(spec, options, {});
}

SweepResult run_sweep(const SweepSpec& sweep, const RunOptions& options) {
  sweep.validate();
  const ExperimentSpec& base = sweep.base;
  SweepResult result;
  result.directory = base.output_dir / base.name;
  result.values = sweep.values;

  std::ofstream long_out, summary_out;
  std::optional<CsvWriter> long_csv, summary_csv;
  if (options.write_files) {
    std::error_code ec;
    fs::create_directories(result.directory, ec);
    if (ec) throw IoError("cannot create '" + result.directory.string() + "': " + ec.message());
    long_out.open(result.directory / "sweep.csv", std::ios::binary | std::ios::trunc);
    summary_out.open(result.directory / "sweep_summary.csv", std::ios::binary | std::ios::trunc);
    if (!long_out || !summary_out) throw IoError("cannot write sweep outputs in '" + result.directory.string() + "'");
    long_csv.emplace(long_out, sweep_columns());
    summary_csv.emplace(summary_out, sweep_summary_columns());
    std::ofstream cfg(result.directory / "spec.cfg", std::ios::binary | std::ios::trunc);
    sweep_to_config(sweep).write(cfg);
  }

  RunOptions inner = options;
  inner.write_files = false;
  const std::string axis(to_string(sweep.axis));
  for (double value : sweep.values) {
    const ExperimentSpec spec = apply_axis(base, sweep.axis, value);
    const std::size_t S = spec.strategies.size(), K = spec.seeds.size();
    // Traces are buffered per cell so the long CSV has a fixed row order.
    std::vector<std::vector<TraceRecord>> traces(options.write_files ? S * K : 0);
    CellCallback keep;
    if (options.write_files) keep = [&](std::size_t s, std::size_t k, const RunResult& r) { traces[s * K + k] = r.trace; };
    ExperimentResult point = run_cells(spec, inner, keep);

    if (options.write_files) {
      for (std::size_t s = 0; s < S; ++s) {
        const StrategySummary& sum = point.summaries[s];
        for (std::size_t k = 0; k < K; ++k)
          for (const auto& rec : traces[s * K + k]) {
            long_csv->cell(axis)
                .cell(value)
                .cell(spec.strategies[s].label)
                .cell(static_cast<unsigned long long>(spec.seeds[k]))
                .cell(static_cast<unsigned long long>(rec.t))
                .cell(static_cast<unsigned long long>(rec.node))
                .cell(rec.sq_error)
                .cell(rec.global_loss)
                .cell(static_cast<unsigned long long>(rec.cumulative_transitions))
                .cell(rec.jumped ? 1 : 0)
                .cell(sum.eta)
                .cell(sum.tv_to_target)
                .cell(sum.db_residual);
            long_csv->end_row();
          }
        summary_csv->cell(axis).cell(value);
        summary_cells(*summary_csv, sum);
        summary_csv->end_row();
      }
    }
    result.points.push_back(std::move(point));
  }
  if (options.write_files && (!long_out || !summary_out)) throw IoError("write failed in '" + result.directory.string() + "'");
  return result;
}

}  // namespace rwl
