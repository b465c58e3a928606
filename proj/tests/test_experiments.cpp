#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rwl/csv.hpp"
#include "rwl/errors.hpp"
#include "rwl/experiments.hpp"

using namespace rwl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("rwl_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CsvTable table(const fs::path& p) {
  std::ifstream in(p);
  return read_csv(in);
}

ExperimentSpec small_spec(const fs::path& out) {
  ExperimentSpec spec;
  spec.name = "small";
  spec.graph.topology = Topology::ring;
  spec.graph.n = 40;
  spec.data.heterogeneous = true;
  spec.data.dim = 4;
  spec.data.p_high = 0.05;
  spec.seeds = {1, 2, 3};
  spec.output_dir = out;
  spec.threads = 2;
  for (auto [label, kind] : {std::pair{"unif", StrategyKind::unif_rw}, std::pair{"weight", StrategyKind::weight_rw},
                             std::pair{"mhlj", StrategyKind::mhlj}}) {
    StrategySpec s;
    s.label = label;
    s.trainer.strategy.kind = kind;
    s.trainer.iterations = 500;
    s.trainer.record_every = 50;
    spec.strategies.push_back(s);
  }
  return spec;
}

}  // namespace

TEST(Experiment, WritesTracesSummaryAndSpec) {
  const auto out = scratch("files");
  const auto spec = small_spec(out);
  const auto r = run_experiment(spec);
  EXPECT_EQ(r.directory, out / "small");
  for (const char* label : {"unif", "weight", "mhlj"})
    for (int seed = 1; seed <= 3; ++seed) {
      const auto t = table(out / "small" / (std::string(label) + "_" + std::to_string(seed) + ".csv"));
      EXPECT_EQ(t.schema, 1);
      EXPECT_EQ(t.columns, (std::vector<std::string>{"t", "node", "sq_error", "global_loss", "cum_transitions", "jumped"}));
      EXPECT_EQ(t.rows.size(), 11u);
    }
  const auto s = table(out / "small" / "summary.csv");
  EXPECT_EQ(s.schema, 1);
  EXPECT_EQ(s.columns, summary_columns());
  ASSERT_EQ(s.rows.size(), 3u);
  EXPECT_EQ(s.rows[2][s.column("kernel")], "mhlj");
  EXPECT_EQ(s.rows[2][s.column("params")], "p_J=0.10000000000000001;p_d=0.5;r=10");
  EXPECT_TRUE(fs::exists(out / "small" / "spec.cfg"));
}

TEST(Experiment, SummaryMatchesRuns) {
  const auto spec = small_spec(scratch("summary"));
  RunOptions opts;
  opts.write_files = false;
  opts.keep_runs = true;
  const auto r = run_experiment(spec, opts);
  ASSERT_EQ(r.runs.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<double> finals;
    for (const auto& run : r.runs[s]) finals.push_back(run.trace.back().sq_error);
    std::sort(finals.begin(), finals.end());
    EXPECT_EQ(r.summaries[s].median_final_sq_error, finals[1]);
    EXPECT_EQ(r.summaries[s].seeds, 3u);
  }
  EXPECT_EQ(r.summaries[0].mean_transitions_per_update, 1.0);
  EXPECT_GT(r.summaries[0].tv_to_target, 0.1);
  EXPECT_NEAR(r.summaries[1].tv_to_target, 0.0, 1e-12);
  EXPECT_LT(r.summaries[1].db_residual, 1e-14);
  EXPECT_GT(r.summaries[2].db_residual, 1e-6);
  EXPECT_GT(r.summaries[2].eta, r.summaries[1].eta);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  auto spec = small_spec(scratch("threads"));
  RunOptions opts;
  opts.write_files = false;
  opts.keep_runs = true;
  spec.threads = 1;
  const auto a = run_experiment(spec, opts);
  spec.threads = 3;
  const auto b = run_experiment(spec, opts);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.runs[s][k].visit_log, b.runs[s][k].visit_log);
}

TEST(Experiment, RerunIsByteIdentical) {
  const auto out = scratch("idem");
  const auto spec = small_spec(out);
  run_experiment(spec);
  const std::string trace = slurp(out / "small" / "mhlj_2.csv");
  const std::string summary = slurp(out / "small" / "summary.csv");
  const std::string cfg = slurp(out / "small" / "spec.cfg");
  run_experiment(spec);
  EXPECT_EQ(slurp(out / "small" / "mhlj_2.csv"), trace);
  EXPECT_EQ(slurp(out / "small" / "summary.csv"), summary);
  EXPECT_EQ(slurp(out / "small" / "spec.cfg"), cfg);
}

TEST(Experiment, UnwritableOutputIsIoError) {
  const auto out = scratch("blocked");
  fs::create_directories(out.parent_path());
  std::ofstream(out) << "a file, not a directory";
  EXPECT_THROW(run_experiment(small_spec(out)), IoError);
  fs::remove(out);
}

TEST(Experiment, ValidationListsEveryField) {
  auto spec = small_spec(scratch("invalid"));
  spec.name = "bad/name";
  spec.seeds.clear();
  spec.strategies[0].trainer.record_every = 0;
  try {
    spec.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("name"), std::string::npos);
    EXPECT_NE(msg.find("seeds"), std::string::npos);
    EXPECT_NE(msg.find("record_every"), std::string::npos);
  }
  spec = small_spec(scratch("invalid"));
  spec.strategies.clear();
  EXPECT_THROW(spec.validate(), ValidationError);
  spec = small_spec(scratch("invalid"));
  spec.strategies[1].label = spec.strategies[0].label;
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Experiment, GammaRules) {
  auto spec = small_spec(scratch("gamma"));
  const auto inst = build_instance(spec);
  const double unif = 0.5 / inst.lipschitz_max(), weight = 0.5 / inst.lipschitz_mean();
  auto g = resolve_gammas(spec, inst);
  EXPECT_DOUBLE_EQ(g[0], unif);
  EXPECT_NEAR(g[1], weight, 1e-15);
  spec.gamma_rule = GammaRule::matched;
  spec.gamma_scale = 0.5;
  spec.strategies[2].trainer.gamma = 0.003;
  g = resolve_gammas(spec, inst);
  EXPECT_DOUBLE_EQ(g[0], 0.5 * unif);
  EXPECT_DOUBLE_EQ(g[1], 0.5 * unif);
  EXPECT_EQ(g[2], 0.003);
}

TEST(Config, SpecRoundTripIsLossless) {
  auto spec = small_spec("some/dir");
  spec.graph.topology = Topology::watts_strogatz;
  spec.graph.k = 6;
  spec.data.noise_std = 0.123456789012345678;
  spec.data.loss = LossModel::logistic_regression;
  spec.gamma_rule = GammaRule::matched;
  spec.gamma_scale = 1.0 / 3.0;
  auto& t = spec.strategies[2].trainer;
  t.strategy.jump = {0.2, 0.3, 7};
  t.pj_schedule.kind = PjSchedule::Kind::decay;
  t.pj_schedule.horizon = 123;
  SwitchRule rule;
  rule.window = 50;
  rule.tau = 0.01;
  rule.gamma_after = 1e-4;
  t.switch_rule = rule;
  t.gamma = 0.1;
  t.start_mode = StartMode::fixed;
  t.start_node = 5;
  t.keep_visit_log = false;
  spec.strategies[1].trainer.strategy.kind = StrategyKind::mixed_rw;
  spec.strategies[1].trainer.strategy.lambda = 0.7;

  const std::string text = experiment_to_config(spec).to_string();
  const auto back = experiment_from_config(ConfigDocument::parse_string(text));
  EXPECT_EQ(back, spec);
  EXPECT_EQ(experiment_to_config(back).to_string(), text);
}

TEST(Config, SweepRoundTrip) {
  SweepSpec s;
  s.base = small_spec("x");
  s.axis = SweepAxis::lambda;
  s.values = {0, 0.25, 1};
  const auto back = sweep_from_config(ConfigDocument::parse_string(sweep_to_config(s).to_string()));
  EXPECT_EQ(back, s);
}

TEST(Config, ExperimentDefaultsFlowToStrategies) {
  const auto doc = ConfigDocument::parse_string(R"([experiment]
name = d
iterations = 77
record_every = 7
[graph]
topology = ring
n = 10
[strategy a]
kind = unif
[strategy b]
kind = weight
iterations = 5
)");
  const auto spec = experiment_from_config(doc);
  EXPECT_EQ(spec.strategies[0].trainer.iterations, 77u);
  EXPECT_EQ(spec.strategies[0].trainer.record_every, 7u);
  EXPECT_EQ(spec.strategies[1].trainer.iterations, 5u);
}

TEST(Config, UnknownAndBadFieldsAreReported) {
  const auto doc = ConfigDocument::parse_string(R"([experiment]
name = d
colour = blue
[graph]
n = many
[strategy a]
kind = teleport
)");
  try {
    experiment_from_config(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("colour"), std::string::npos);
    EXPECT_NE(msg.find("graph.n"), std::string::npos);
    EXPECT_NE(msg.find("kind"), std::string::npos);
  }
}

TEST(Overrides, Routing) {
  auto doc = experiment_to_config(small_spec("x"));
  apply_override(doc, "gamma=0.01");
  apply_override(doc, "strategy.mhlj.p_jump=0.3");
  apply_override(doc, "n=50");
  apply_override(doc, "data.dim=3");
  const auto spec = experiment_from_config(doc);
  for (const auto& s : spec.strategies) EXPECT_EQ(s.trainer.gamma, 0.01);
  EXPECT_EQ(spec.strategies[2].trainer.strategy.jump.p_jump, 0.3);
  EXPECT_EQ(spec.graph.n, 50u);
  EXPECT_EQ(spec.data.dim, 3u);
  EXPECT_THROW(apply_override(doc, "nonsense=1"), ValidationError);
  EXPECT_THROW(apply_override(doc, "strategy.ghost.gamma=1"), ValidationError);
  EXPECT_THROW(apply_override(doc, "graph.colour=1"), ValidationError);
  EXPECT_THROW(apply_override(doc, "novalue"), ValidationError);
}

TEST(Sweep, LongCsvAndChainStats) {
  const auto out = scratch("sweep");
  SweepSpec s;
  s.base = small_spec(out);
  s.base.name = "pj";
  s.base.strategies.erase(s.base.strategies.begin(), s.base.strategies.begin() + 2);
  s.base.seeds = {1, 2};
  s.axis = SweepAxis::p_jump;
  s.values = {0.0, 0.1, 0.4};
  const auto r = run_sweep(s);
  const auto long_csv = table(out / "pj" / "sweep.csv");
  EXPECT_EQ(long_csv.columns, sweep_columns());
  EXPECT_EQ(long_csv.rows.size(), 3u * 2u * 11u);
  const auto sum = table(out / "pj" / "sweep_summary.csv");
  EXPECT_EQ(sum.columns, sweep_summary_columns());
  ASSERT_EQ(sum.rows.size(), 3u);
  EXPECT_EQ(r.points.size(), 3u);
  EXPECT_NEAR(r.points[0].summaries[0].tv_to_target, 0.0, 1e-6);
  EXPECT_LT(r.points[0].summaries[0].tv_to_target, r.points[1].summaries[0].tv_to_target);
  EXPECT_LT(r.points[1].summaries[0].tv_to_target, r.points[2].summaries[0].tv_to_target);
  const auto value_col = long_csv.column("value");
  EXPECT_EQ(parse_double(long_csv.rows.back()[value_col]), 0.4);
  EXPECT_TRUE(fs::exists(out / "pj" / "spec.cfg"));
}

TEST(Sweep, ApplyAxis) {
  auto base = small_spec("x");
  base.strategies[1].trainer.strategy.kind = StrategyKind::mixed_rw;
  EXPECT_EQ(apply_axis(base, SweepAxis::p_jump, 0.3).strategies[2].trainer.strategy.jump.p_jump, 0.3);
  EXPECT_EQ(apply_axis(base, SweepAxis::gamma, 0.01).strategies[0].trainer.gamma, 0.01);
  EXPECT_EQ(apply_axis(base, SweepAxis::lambda, 0.2).strategies[1].trainer.strategy.lambda, 0.2);
  EXPECT_EQ(apply_axis(base, SweepAxis::sigma_high_sq, 30).data.sigma_high_sq, 30.0);
  EXPECT_EQ(apply_axis(base, SweepAxis::n, 64).graph.n, 64u);
  SweepSpec s;
  s.base = base;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Presets, AllParseAndValidate) {
  ASSERT_GE(preset_list().size(), 8u);
  for (const auto& p : preset_list()) {
    const auto doc = preset_config(p.name);
    if (p.is_sweep)
      EXPECT_NO_THROW(sweep_from_config(doc).validate()) << p.name;
    else
      EXPECT_NO_THROW(experiment_from_config(doc).validate()) << p.name;
  }
  for (const char* name : {"fig3b_desk", "fig3a_desk", "fig4a_desk", "fig5_grid_desk", "fig5_ws_desk", "fig6a_switch",
                           "fig6b_decay", "fig_mixed_lambda"})
    EXPECT_TRUE(has_preset(name)) << name;
  EXPECT_THROW(preset_config("fig99"), InvalidArgument);
}

TEST(Presets, RingPresetHasOneHighNode) {
  const auto spec = experiment_from_config(preset_config("fig3b_desk"));
  const auto inst = build_instance(spec);
  EXPECT_EQ(inst.size(), 200u);
  EXPECT_EQ(inst.high_count(), 1u);
  EXPECT_EQ(spec.seeds.size(), 10u);
  const auto er = build_instance(experiment_from_config(preset_config("fig3a_desk")));
  EXPECT_EQ(er.high_count(), 2u);
}

TEST(OutputDir, EnvironmentOverride) {
  ::setenv("RWL_OUTPUT_DIR", "/tmp/elsewhere", 1);
  EXPECT_EQ(default_output_dir(), fs::path("/tmp/elsewhere"));
  ::unsetenv("RWL_OUTPUT_DIR");
  EXPECT_EQ(default_output_dir(), fs::path("runs"));
}
