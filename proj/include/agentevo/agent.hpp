#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "agentevo/rng.hpp"
#include "agentevo/task.hpp"
#include "agentevo/toolforge.hpp"

namespace agentevo {

struct AgentParams {
    std::vector<double> weights;
    double bias = 0.0;

    bool operator==(const AgentParams&) const = default;
};

enum class AgentStatus { active, clone_in_training, retired };

struct Agent {
    std::string id;
    AgentParams params;
    std::string tool_registry_id = "main";
    int generation = 0;
    std::string lineage;  // parent id, empty for seeds
    AgentStatus status = AgentStatus::active;

    bool operator==(const Agent&) const = default;
};

struct Trace {
    std::string task_id;
    std::vector<StepRecord> steps;
    std::string tool_used;  // empty when bare-handed
    bool success = false;
    double raw_task_reward = 0.0;
    bool exec_ok = true;
    double cost_incurred = 0.0;
    bool unsafe = false;
    // Cached attempt context so downstream consumers (reward model features,
    // policy gradients) need no registry lookups.
    double coverage = 1.0;
    int difficulty = 1;
    double tool_exec_prob = 1.0;

    bool operator==(const Trace&) const = default;
};

struct SubstrateConfig {
    double beta = 0.5;         // difficulty penalty inside the sigmoid
    double hazard_rate = 0.0;  // unsafe-trace probability when coverage < 1
    double lambda_cost = 0.05;
    bool partial_credit = false;
};

double sigmoid(double z);

// Competence under the simulated substrate:
// sigmoid(w.x + b - beta * difficulty) * coverage(tool, task).
// tool = nullptr means bare-handed (zero caps).
double success_prob(const AgentParams& params, const Task& task, const Tool* tool,
                    const SubstrateConfig& cfg);

// Best tool for the task; nullptr means bare-handed is at least as good.
// Order: max coverage, then lowest cost, then lexicographic id ("" first).
const Tool* choose_tool(const Agent& agent, const Task& task, const ToolRegistry& registry);

// One rollout. Consumes, in order: the tool execution draw, up to
// composition_depth step draws (stops at the first failure), and one hazard
// draw (always). The per-step pass probability is success_prob^(1/depth), so
// the chance of clearing every step is exactly success_prob.
Trace attempt(const Agent& agent, const Task& task, const ToolRegistry& registry,
              const SubstrateConfig& cfg, rng::Stream& rng);

// Tool-conditioned reward: raw * P_exec(tool) - lambda_cost * C_cost(tool).
// Tool-free traces use P_exec = 1, C_cost = 0.
double trace_reward(const Trace& trace, const Tool* tool, double lambda_cost);
// Same, from the exec-prob/cost the trace cached at attempt time.
double trace_reward(const Trace& trace, double lambda_cost);

// n_samples = 0: closed form success_prob * P_exec - lambda * cost under the
// tool choose_tool picks; exact expectation of the sampled estimate when
// partial credit is off. n_samples >= 1: Monte Carlo mean of trace_reward.
double expected_reward(const Agent& agent, const Task& task, const ToolRegistry& registry,
                       const SubstrateConfig& cfg, int n_samples, rng::Stream* rng);

void to_json(nlohmann::json& j, const AgentParams& p);
void from_json(const nlohmann::json& j, AgentParams& p);
void to_json(nlohmann::json& j, const Agent& a);
void from_json(const nlohmann::json& j, Agent& a);
void to_json(nlohmann::json& j, const Trace& t);
void from_json(const nlohmann::json& j, Trace& t);

}  // namespace agentevo
