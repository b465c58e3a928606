#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "rwl/config.hpp"
#include "rwl/data.hpp"
#include "rwl/graph.hpp"
#include "rwl/walker.hpp"

namespace rwl {

struct GraphSpec {
  Topology topology = Topology::ring;
  std::size_t n = 200;
  std::size_t rows = 0;  // grid2d; 0 means derive from n
  std::size_t cols = 0;
  double p = 0.1;        // erdos_renyi
  std::size_t k = 4;     // watts_strogatz
  double beta = 0.1;     // watts_strogatz
  std::uint64_t seed = 7;
  std::string file;      // custom: edge-list path

  bool operator==(const GraphSpec&) const = default;
};

Graph build_graph(const GraphSpec& spec);

// How unset strategy step sizes are chosen.
//   per_strategy: gamma_scale * default_gamma(strategy)
//   matched:      gamma_scale * min over the experiment's strategies
enum class GammaRule { per_strategy, matched };

std::string_view to_string(GammaRule r);
GammaRule parse_gamma_rule(std::string_view s);

struct StrategySpec {
  std::string label;  // file-name safe; used for "<label>_<seed>.csv"
  TrainerConfig trainer;

  bool operator==(const StrategySpec&) const = default;
};

struct ExperimentSpec {
  std::string name = "experiment";
  GraphSpec graph{};
  DataParams data{};
  std::vector<StrategySpec> strategies;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "runs";
  GammaRule gamma_rule = GammaRule::per_strategy;
  double gamma_scale = 1.0;
  // Trailing fraction of each trace averaged into the plateau error.
  double plateau_fraction = 0.1;
  // Worker threads; 0 means hardware concurrency.
  std::size_t threads = 0;

  // Throws ValidationError listing every offending field.
  void validate() const;
  bool operator==(const ExperimentSpec&) const = default;
};

enum class SweepAxis { p_jump, gamma, lambda, sigma_high_sq, n };

std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepSpec {
  ExperimentSpec base;
  SweepAxis axis = SweepAxis::p_jump;
  std::vector<double> values;

  void validate() const;
  bool operator==(const SweepSpec&) const = default;
};

// Copy of `base` with the axis value applied: p_jump to every mhlj strategy,
// gamma to every strategy, lambda to every mixed_rw strategy, sigma_high_sq to
// the data, n to the graph.
ExperimentSpec apply_axis(const ExperimentSpec& base, SweepAxis axis, double value);

// Config text <-> spec. The document uses sections [experiment], [graph],
// [data], one [strategy <label>] per strategy and, for sweeps, [sweep].
// Keys iterations, record_every, start_mode and start_node under
// [experiment] are defaults for strategies that do not set them.
ExperimentSpec experiment_from_config(const ConfigDocument& doc);
ConfigDocument experiment_to_config(const ExperimentSpec& spec);
SweepSpec sweep_from_config(const ConfigDocument& doc);
ConfigDocument sweep_to_config(const SweepSpec& spec);

// Applies "section.key=value", "strategy.<label>.key=value" or a bare
// "key=value". A bare key goes to whichever of [experiment], [graph] or
// [data] defines it; a strategy key goes to every strategy section.
// Throws ValidationError for a malformed or unknown override.
void apply_override(ConfigDocument& doc, std::string_view assignment);

// Default output directory: $RWL_OUTPUT_DIR if set, else "runs".
std::filesystem::path default_output_dir();

// Per-strategy aggregate over seeds.
struct StrategySummary {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::string label;
  Strategy strategy;
  KernelKind kernel_kind = KernelKind::unif_mh;
  std::string params;
  double gamma = 0.0;
  std::size_t seeds = 0;
  double median_final_sq_error = 0.0;
  double median_plateau_sq_error = 0.0;
  // First recorded t where the across-seed median sq_error is at most a
  // tenth of its t = 0 value; kInf if never.
  double iterations_to_threshold = kInf;
  double median_half_cover_time = kInf;
  double mean_transitions_per_update = 0.0;
  double transitions_std_error = 0.0;
  double communication_bound = 1.0;
  double median_switch_step = std::numeric_limits<double>::quiet_NaN();
  // Chain statistics of the strategy's kernel (at the initial p_J).
  double eta = std::numeric_limits<double>::quiet_NaN();
  double tv_to_target = std::numeric_limits<double>::quiet_NaN();  // TV(pi_IS, stationary)
  double db_residual = std::numeric_limits<double>::quiet_NaN();
};

struct RunOptions {
  bool write_files = true;
  bool keep_runs = false;  // retain every RunResult in the returned value
  bool chain_stats = true;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<StrategySummary> summaries;
  // runs[s][k] is strategy s under seed k; filled when keep_runs is set.
  std::vector<std::vector<RunResult>> runs;
};

// Resolved step size for each strategy of `spec` on `inst`.
std::vector<double> resolve_gammas(const ExperimentSpec& spec, const ProblemInstance& inst);

ProblemInstance build_instance(const ExperimentSpec& spec);

// Runs every (strategy, seed) cell on a thread pool. With write_files, writes
// <output_dir>/<name>/<label>_<seed>.csv per cell, summary.csv and spec.cfg.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

struct SweepResult {
  std::filesystem::path directory;
  std::vector<double> values;
  std::vector<ExperimentResult> points;
};

// Writes <output_dir>/<name>/sweep.csv (one row per axis value, strategy,
// seed and recorded step), sweep_summary.csv and spec.cfg.
SweepResult run_sweep(const SweepSpec& sweep, const RunOptions& options = {});

// Column lists of the CSV outputs.
const std::vector<std::string>& trace_columns();
const std::vector<std::string>& summary_columns();
const std::vector<std::string>& sweep_columns();
const std::vector<std::string>& sweep_summary_columns();

void write_trace_csv(const RunResult& r, std::ostream& out);
void write_summary_csv(const std::vector<StrategySummary>& rows, std::ostream& out);

// Named desk-scale configurations.
struct PresetInfo {
  std::string name;
  std::string description;
  bool is_sweep = false;
};

const std::vector<PresetInfo>& preset_list();
bool has_preset(std::string_view name);
// Preset as a config document, ready for overrides. Throws InvalidArgument
// for an unknown name.
ConfigDocument preset_config(std::string_view name);

}  // namespace rwl
