// rwl: command-line front end for instance generation, experiments, sweeps
// and kernel analysis.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwl/chain_analysis.hpp"
#include "rwl/csv.hpp"
#include "rwl/errors.hpp"
#include "rwl/experiments.hpp"
#include "rwl/kernels.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string preset_help() {
  std::ostringstream o;
  o << "Presets:\n";
  for (const auto& p : rwl::preset_list())
    o << "  " << p.name << std::string(p.name.size() < 18 ? 18 - p.name.size() : 1, ' ') << p.description
      << (p.is_sweep ? " (sweep)" : "") << '\n';
  return o.str();
}

struct CommonOptions {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  std::optional<std::size_t> seeds;
  std::string out;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_seeds = true) {
  cmd->add_option("-o,--override", o.overrides, "Override a spec field: key=value, section.key=value or "
                                                "strategy.<label>.key=value")
      ->allow_extra_args(false);
  if (with_seeds) {
    cmd->add_option("--seeds", o.seeds, "Use seeds 1..N")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "Output directory (default: $RWL_OUTPUT_DIR or ./runs)");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    cmd->add_flag("-q,--quiet", o.quiet, "Do not print the summary table");
  }
}

rwl::ConfigDocument load_document(const CommonOptions& o) {
  rwl::ConfigDocument doc;
  if (!o.preset.empty()) {
    if (!rwl::has_preset(o.preset)) throw UsageError("unknown preset '" + o.preset + "'\n" + preset_help());
    doc = rwl::preset_config(o.preset);
  } else {
    std::ifstream in(o.config);
    if (!in) throw rwl::IoError("cannot open config '" + o.config + "'");
    doc = rwl::ConfigDocument::parse(in);
  }
  for (const auto& ov : o.overrides) rwl::apply_override(doc, ov);
  if (o.seeds) rwl::apply_override(doc, "experiment.seeds=1.." + std::to_string(*o.seeds));
  if (o.threads) rwl::apply_override(doc, "experiment.threads=" + std::to_string(*o.threads));
  const std::string out = o.out.empty() ? rwl::default_output_dir().string() : o.out;
  if (!o.out.empty() || !doc.find("experiment") || !doc.find("experiment")->find("output_dir"))
    rwl::apply_override(doc, "experiment.output_dir=" + out);
  return doc;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

void print_summary(const std::vector<rwl::StrategySummary>& rows, std::ostream& out) {
  std::fprintf(stdout, "%-12s %-11s %-11s %-11s %-11s %-10s %-8s %-10s %-10s\n", "strategy", "gamma", "itt",
               "final_sq", "plateau_sq", "half_cover", "tx/upd", "eta", "tv_to_IS");
  for (const auto& s : rows)
    std::fprintf(stdout, "%-12s %-11s %-11s %-11s %-11s %-10s %-8s %-10s %-10s\n", s.label.c_str(),
                 num(s.gamma).c_str(), num(s.iterations_to_threshold).c_str(),
                 num(s.median_final_sq_error).c_str(), num(s.median_plateau_sq_error).c_str(),
                 num(s.median_half_cover_time).c_str(), num(s.mean_transitions_per_update).c_str(),
                 num(s.eta).c_str(), num(s.tv_to_target).c_str());
  out.flush();
}

bool is_sweep(const rwl::ConfigDocument& doc) { return doc.find("sweep") != nullptr; }

int do_experiment(const CommonOptions& o, bool force_sweep) {
  const rwl::ConfigDocument doc = load_document(o);
  if (force_sweep || is_sweep(doc)) {
    const rwl::SweepSpec sweep = rwl::sweep_from_config(doc);
    const rwl::SweepResult r = rwl::run_sweep(sweep);
    if (!o.quiet)
      for (std::size_t i = 0; i < r.values.size(); ++i) {
        std::cout << rwl::to_string(sweep.axis) << " = " << rwl::format_double(r.values[i]) << '\n';
        print_summary(r.points[i].summaries, std::cout);
      }
    std::cerr << "wrote " << r.directory.string() << '\n';
    return 0;
  }
  const rwl::ExperimentSpec spec = rwl::experiment_from_config(doc);
  const rwl::ExperimentResult r = rwl::run_experiment(spec);
  if (!o.quiet) print_summary(r.summaries, std::cout);
  std::cerr << "wrote " << r.directory.string() << '\n';
  return 0;
}

struct GenOptions {
  CommonOptions common;
  std::string out;
  std::string kernel;
  std::string kernel_out;
  double lambda = 0.5;
  rwl::JumpParams jump{};
  std::string levy_form = "hop_walk";
};

int do_gen_instance(const GenOptions& g) {
  const rwl::ExperimentSpec spec = rwl::experiment_from_config(load_document(g.common));
  const rwl::ProblemInstance inst = rwl::build_instance(spec);
  {
    std::ofstream out(g.out);
    if (!out) throw rwl::IoError("cannot write '" + g.out + "'");
    rwl::write_instance(inst, out);
  }
  std::cerr << "wrote instance n=" << inst.size() << " d=" << inst.dim() << " to " << g.out << '\n';
  if (g.kernel.empty()) return 0;

  const rwl::KernelKind kind = rwl::parse_kernel_kind(g.kernel);
  const rwl::LevyForm form = rwl::parse_levy_form(g.levy_form);
  rwl::TransitionKernel k;
  switch (kind) {
    case rwl::KernelKind::unif_mh: k = rwl::build_uniform_mh(inst.graph()); break;
    case rwl::KernelKind::weight_mh: k = rwl::build_weighted_mh(inst.graph(), inst.lipschitz()); break;
    case rwl::KernelKind::mixed_mh: k = rwl::build_mixed_mh(inst.graph(), inst.lipschitz(), g.lambda); break;
    case rwl::KernelKind::levy:
      k = rwl::build_levy_matrix(inst.graph(), g.jump.p_distance, g.jump.horizon, form);
      break;
    case rwl::KernelKind::mhlj: k = rwl::build_mhlj_matrix(inst.graph(), inst.lipschitz(), g.jump, form); break;
  }
  const std::string path = g.kernel_out.empty() ? g.out + ".kernel" : g.kernel_out;
  std::ofstream out(path);
  if (!out) throw rwl::IoError("cannot write '" + path + "'");
  rwl::write_kernel(k, out);
  std::cerr << "wrote " << k.describe() << " to " << path << '\n';
  return 0;
}

int do_analyze(const std::string& kernel_path) {
  std::ifstream in(kernel_path);
  if (!in) throw rwl::IoError("cannot open kernel '" + kernel_path + "'");
  const rwl::TransitionKernel k = rwl::read_kernel(in);
  const rwl::ChainStats s = rwl::analyze_chain(k);
  std::cout << "kernel " << k.describe() << '\n';
  std::cout << "n " << k.size() << '\n';
  std::cout << "eta " << rwl::format_double(s.spectral_gap) << '\n';
  std::cout << "reversible " << (s.is_reversible ? "yes" : "no") << '\n';
  std::cout << "db_residual " << rwl::format_double(s.db_residual) << '\n';
  std::cout << "row_sum_error " << rwl::format_double(rwl::row_sum_error(k.matrix)) << '\n';
  std::cout << "stationary";
  for (Eigen::Index i = 0; i < s.stationary.size(); ++i) std::cout << ' ' << rwl::format_double(s.stationary[i]);
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk SGD simulator: Metropolis-Hastings walks with Levy jumps"};
  app.name("rwl");
  app.footer(preset_help());
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run an experiment (or sweep) from a config file");
  run->add_option("-c,--config", run_opts.config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(run, run_opts);

  CommonOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a config file with a [sweep] section");
  sweep->add_option("-c,--config", sweep_opts.config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(sweep, sweep_opts);

  CommonOptions preset_opts;
  auto* preset = app.add_subcommand("preset", "Run a named preset");
  preset->add_option("name", preset_opts.preset, "Preset name")->required();
  add_common(preset, preset_opts);
  preset->footer(preset_help());

  auto* presets = app.add_subcommand("presets", "List presets");
  std::string show;
  presets->add_option("--show", show, "Print the config of one preset");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-instance", "Generate a problem instance (and optionally a kernel)");
  auto* gen_src = gen_cmd->add_option_group("source");
  gen_src->add_option("-c,--config", gen.common.config, "Config file")->check(CLI::ExistingFile);
  gen_src->add_option("--preset", gen.common.preset, "Preset name");
  gen_src->require_option(1);
  add_common(gen_cmd, gen.common, false);
  gen_cmd->add_option("--out", gen.out, "Instance file to write")->required();
  gen_cmd->add_option("--kernel", gen.kernel, "Also export a kernel: unif_mh, weight_mh, mixed_mh, levy or mhlj");
  gen_cmd->add_option("--kernel-out", gen.kernel_out, "Kernel file (default: <out>.kernel)");
  gen_cmd->add_option("--lambda", gen.lambda, "Mixing weight for mixed_mh");
  gen_cmd->add_option("--p-jump", gen.jump.p_jump, "Jump probability for mhlj");
  gen_cmd->add_option("--p-distance", gen.jump.p_distance, "Truncated-geometric parameter");
  gen_cmd->add_option("--horizon", gen.jump.horizon, "Maximum jump length");
  gen_cmd->add_option("--levy-form", gen.levy_form, "hop_walk or path_count");

  std::string kernel_path;
  auto* analyze = app.add_subcommand("analyze", "Chain statistics of a saved kernel");
  analyze->add_option("--kernel", kernel_path, "Kernel file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return do_experiment(run_opts, false);
    if (*sweep) return do_experiment(sweep_opts, true);
    if (*preset) return do_experiment(preset_opts, false);
    if (*presets) {
      if (!show.empty()) {
        if (!rwl::has_preset(show)) throw UsageError("unknown preset '" + show + "'");
        rwl::preset_config(show).write(std::cout);
      } else {
        std::cout << preset_help();
      }
      return 0;
    }
    if (*gen_cmd) return do_gen_instance(gen);
    if (*analyze) return do_analyze(kernel_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const rwl::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
