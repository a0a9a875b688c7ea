#pragma once
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agentevo/rng.hpp"
#include "agentevo/task.hpp"

namespace agentevo {

enum class ToolProvenance { builtin, synthesized };

struct Tool {
    std::string id;
    std::vector<double> caps;  // [0,1]^F
    double exec_prob = 1.0;
    double cost = 0.0;
    ToolProvenance provenance = ToolProvenance::builtin;
    long created_at = 0;  // lifecycle step index

    bool operator==(const Tool&) const = default;
};

// Append-only tool store with a hard synthesis budget (spent <= budget).
struct ToolRegistry {
    std::string id = "main";
    std::vector<Tool> tools;
    double spent = 0.0;
    double budget = 0.0;

    const Tool* find(const std::string& tool_id) const;

    bool operator==(const ToolRegistry&) const = default;
};

struct ForgeConfig {
    double kappa = 1.0;            // cost per unit of L1 capability
    double noise_sd = 0.05;        // 0 disables capability noise
    double reliability_alpha = 8.0;
    double reliability_beta = 2.0;
    double min_exec_rate = 0.6;
    int validate_trials = 50;
};

// Fraction of demanded capability mass the caps vector supplies:
// sum_i min(caps_i, req_i) / sum_i req_i, defined as 1 when nothing is required.
double coverage(const std::vector<double>& caps, const std::vector<double>& req);

// Best candidate for the task, nullptr meaning bare-handed. Order: max
// coverage, then lowest cost, then lexicographic id ("no tool" has zero caps,
// zero cost, and the empty id, so ties never displace it).
const Tool* best_tool(const Task& task, const ToolRegistry& registry);

// Elementwise shortfall of the task's demand against best_tool's caps.
std::vector<double> capability_gap(const Task& task, const ToolRegistry& registry);

// Proposes a tool closing the task's gap. Capabilities target the gap plus the
// coverage already available, so the deployed tool fully covers the task when
// noise is disabled. Draw order: caps noise (iff noise_sd > 0), then the
// reliability draw. Returns nullopt without touching anything when the
// candidate's cost would break the budget.
std::optional<Tool> synthesize(const Task& task, const std::vector<double>& gap,
                               const ForgeConfig& cfg, const ToolRegistry& registry,
                               rng::Stream& rng, long step = 0);

// Execution-based check: n_trials Bernoulli trials at the tool's exec_prob,
// accepted iff the empirical rate reaches cfg.min_exec_rate.
bool validate(const Tool& tool, const std::vector<const Task*>& probe_tasks, int n_trials,
              const ForgeConfig& cfg, rng::Stream& rng);

// Hot in-place extension; existing tools are never touched.
void deploy(ToolRegistry& registry, const Tool& tool);

void to_json(nlohmann::json& j, const Tool& t);
void from_json(const nlohmann::json& j, Tool& t);
void to_json(nlohmann::json& j, const ToolRegistry& r);
void from_json(const nlohmann::json& j, ToolRegistry& r);

}  // namespace agentevo
