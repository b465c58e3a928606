#include <algorithm>
#include <string>

#include "rwl/errors.hpp"
#include "rwl/experiments.hpp"

namespace rwl {

namespace {

struct Preset {
  PresetInfo info;
  std::string text;
};

// Shared blocks. Ring presets place one high-variance node, the others two.
constexpr const char* kRingHet = R"(
[graph]
topology = ring
n = 200

[data]
heterogeneous = true
dim = 10
sigma_low_sq = 1
sigma_high_sq = 100
p_high = 0.005
placement = fixed_count
noise_std = 1
)";

constexpr const char* kThree = R"(
[strategy unif_rw]
kind = unif_rw

[strategy weight_rw]
kind = weight_rw

[strategy mhlj]
kind = mhlj
p_jump = 0.1
p_distance = 0.5
horizon = 10
)";

std::string join(std::initializer_list<const char*> parts) {
  std::string s;
  for (const char* p : parts) s += p;
  return s;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = [] {
    std::vector<Preset> v;
    auto add = [&](std::string name, std::string description, bool sweep, std::string text) {
      v.push_back({{std::move(name), std::move(description), sweep}, std::move(text)});
    };

    add("fig3b_desk", "ring(200), one high-variance node: entrapment of the weighted walk", false,
        join({R"([experiment]
name = fig3b_desk
seeds = 1..10
gamma_rule = matched
iterations = 30000
record_every = 10
)",
              kRingHet, kThree}));

    add("fig3a_desk", "ER(200, 0.1), two high-variance nodes: weighted sampling pays off", false,
        join({R"([experiment]
name = fig3a_desk
seeds = 1..10
gamma_rule = per_strategy
iterations = 30000
record_every = 10

[graph]
topology = erdos_renyi
n = 200
p = 0.1
seed = 7

[data]
heterogeneous = true
dim = 10
sigma_low_sq = 1
sigma_high_sq = 100
p_high = 0.01
placement = fixed_count
noise_std = 1
)",
              kThree}));

    add("fig4a_desk", "ER(200, 0.1), homogeneous data: all strategies behave alike", false,
        join({R"([experiment]
name = fig4a_desk
seeds = 1..10
gamma_rule = matched
iterations = 30000
record_every = 10

[graph]
topology = erdos_renyi
n = 200
p = 0.1
seed = 7

[data]
heterogeneous = false
dim = 10
sigma_sq = 1
noise_std = 1
)",
              kThree}));

    add("fig5_grid_desk", "14x14 grid, two high-variance nodes", false,
        join({R"([experiment]
name = fig5_grid_desk
seeds = 1..10
gamma_rule = per_strategy
gamma_scale = 0.1
iterations = 30000
record_every = 10

[graph]
topology = grid2d
rows = 14
cols = 14
n = 196

[data]
heterogeneous = true
dim = 10
sigma_low_sq = 1
sigma_high_sq = 100
p_high = 0.01
placement = fixed_count
noise_std = 1
)",
              kThree}));

    add("fig5_ws_desk", "Watts-Strogatz(200, 4, 0.1), two high-variance nodes", false,
        join({R"([experiment]
name = fig5_ws_desk
seeds = 1..10
gamma_rule = per_strategy
gamma_scale = 0.1
iterations = 30000
record_every = 10

[graph]
topology = watts_strogatz
n = 200
k = 4
beta = 0.1
seed = 7

[data]
heterogeneous = true
dim = 10
sigma_low_sq = 1
sigma_high_sq = 100
p_high = 0.01
placement = fixed_count
noise_std = 1
)",
              kThree}));

    add("fig6a_switch", "ring(200): MHLJ with and without switching to uniform sampling", false,
        join({R"([experiment]
name = fig6a_switch
seeds = 1..10
gamma_rule = per_strategy
gamma_scale = 0.1
iterations = 100000
record_every = 100
)",
              kRingHet, R"(
[strategy mhlj]
kind = mhlj
p_jump = 0.1
p_distance = 0.5
horizon = 10

[strategy switch]
kind = mhlj
p_jump = 0.1
p_distance = 0.5
horizon = 10
switch = window
switch_window = 200
switch_tau = 0.05
)"}));

    add("fig6b_decay", "ring(200): MHLJ with constant and harmonically decaying jump probability", false,
        join({R"([experiment]
name = fig6b_decay
seeds = 1..10
gamma_rule = per_strategy
gamma_scale = 0.1
iterations = 100000
record_every = 100
)",
              kRingHet, R"(
[strategy mhlj]
kind = mhlj
p_jump = 0.1
p_distance = 0.5
horizon = 10

[strategy decay]
kind = mhlj
p_jump = 0.1
p_distance = 0.5
horizon = 10
pj_schedule = decay
)"}));

    add("fig_mixed_lambda", "ring(200): mixed walk over lambda in {0, 0.25, 0.5, 0.75, 1}", true,
        join({R"([experiment]
name = fig_mixed_lambda
seeds = 1..10
gamma_rule = per_strategy
iterations = 30000
record_every = 10
)",
              kRingHet, R"(
[strategy mixed]
kind = mixed_rw
lambda = 0.5

[sweep]
axis = lambda
values = 0, 0.25, 0.5, 0.75, 1
)"}));

    add("pj_sweep_desk", "ring(200), label noise std 5: jump probability sweep", true,
        join({R"([experiment]
name = pj_sweep_desk
seeds = 1..10
gamma_rule = per_strategy
gamma_scale = 0.0002
iterations = 1000000
record_every = 1000
plateau_fraction = 0.5

[graph]
topology = ring
n = 200

[data]
heterogeneous = true
dim = 10
sigma_low_sq = 1
sigma_high_sq = 100
p_high = 0.005
placement = fixed_count
noise_std = 5

[strategy mhlj]
kind = mhlj
p_jump = 0.1
p_distance = 0.5
horizon = 10

[sweep]
axis = p_jump
values = 0, 0.05, 0.1, 0.2, 0.4
)"}));

    add("gamma_sweep_desk", "ER(200, 0.1), homogeneous: step-size sweep of the noise floor", true,
        R"([experiment]
name = gamma_sweep_desk
seeds = 1..10
gamma_rule = per_strategy
iterations = 200000
record_every = 100
plateau_fraction = 0.25

[graph]
topology = erdos_renyi
n = 200
p = 0.1
seed = 7

[data]
heterogeneous = false
dim = 10
sigma_sq = 1
noise_std = 1

[strategy unif_rw]
kind = unif_rw

[sweep]
axis = gamma
values = 0.02, 0.01, 0.005
)");

    return v;
  }();
  return list;
}

}  // namespace

const std::vector<PresetInfo>& preset_list() {
  static const std::vector<PresetInfo> infos = [] {
    std::vector<PresetInfo> out;
    for (const auto& p : presets()) out.push_back(p.info);
    return out;
  }();
  return infos;
}

bool has_preset(std::string_view name) {
  const auto& l = presets();
  return std::any_of(l.begin(), l.end(), [&](const Preset& p) { return p.info.name == name; });
}

ConfigDocument preset_config(std::string_view name) {
  for (const auto& p : presets())
    if (p.info.name == name) return ConfigDocument::parse_string(p.text);
  throw InvalidArgument("unknown preset '" + std::string(name) + "'");
}

}  // namespace rwl
