#pragma once
#include <cstdint>
#include <string>

#include <json.hpp>

#include "agentevo/agent.hpp"
#include "agentevo/evolution.hpp"
#include "agentevo/router.hpp"
#include "agentevo/task.hpp"
#include "agentevo/toolforge.hpp"

namespace agentevo {

struct CurriculumConfig {
    double exploration_coefficient = 0.5;
    double ema_decay = 0.2;
};

enum class ModeSelectKind { fixed, rule };

struct ModeSelectConfig {
    ModeSelectKind kind = ModeSelectKind::rule;
    EvolutionMode fixed_mode = EvolutionMode::CL;
    int tier_threshold = 4;       // rule: CL below, RL at or above
    int ga_after_rejections = 2;  // rule: escalate to GA from this many rejections
};

struct LifecycleConfig {
    double epsilon_fail = 0.3;
    double epsilon_verify = 0.02;
    double delta_safe = 0.05;
    double c_max = 150.0;  // registry synthesis budget
    int window = 20;
    long clone_step_budget = 200;
    int max_rejections = 3;
    long n_stream = 500;
};

struct MetricsConfig {
    long tool_use_window = 50;
    double cell_size = 0.25;
};

struct RunConfig {
    std::uint64_t seed = 42;
    GeneratorConfig generator;
    SplitRatios split;
    SubstrateConfig substrate;
    ForgeConfig forge;
    RoutingPolicy router;
    CurriculumConfig curriculum;
    ClConfig cl;
    RlConfig rl;
    GaConfig ga;
    ModeSelectConfig mode_policy;
    LifecycleConfig lifecycle;
    MetricsConfig metrics;
};

RunConfig default_config();

// Strict parse: unknown keys and out-of-range values raise ConfigError naming
// the offending dotted key path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

// "a.b.c=value" with the value parsed as JSON when possible, else as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace agentevo
