#include "agentevo/agent.hpp"

#include <algorithm>
#include <cmath>

#include "agentevo/errors.hpp"

namespace agentevo {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double success_prob(const AgentParams& params, const Task& task, const Tool* tool,
                    const SubstrateConfig& cfg) {
    if (params.weights.size() != task.features.size())
        throw ContractError("success_prob: weight/feature dimension mismatch");
    double z = params.bias - cfg.beta * task.difficulty;
    for (std::size_t i = 0; i < params.weights.size(); ++i)
        z += params.weights[i] * task.features[i];
    double cov = tool != nullptr ? coverage(tool->caps, task.required_caps)
                                 : coverage({}, task.required_caps);
    return sigmoid(z) * cov;
}

const Tool* choose_tool(const Agent& agent, const Task& task, const ToolRegistry& registry) {
    (void)agent;  // the match depends only on demand vs caps
    return best_tool(task, registry);
}

Trace attempt(const Agent& agent, const Task& task, const ToolRegistry& registry,
              const SubstrateConfig& cfg, rng::Stream& rng) {
    if (agent.status == AgentStatus::retired)
        throw ContractError("attempt: retired agent " + agent.id);

    const Tool* tool = choose_tool(agent, task, registry);
    double exec_prob = tool != nullptr ? tool->exec_prob : 1.0;
    double cov = tool != nullptr ? coverage(tool->caps, task.required_caps)
                                 : coverage({}, task.required_caps);

    Trace tr;
    tr.task_id = task.id;
    tr.tool_used = tool != nullptr ? tool->id : "";
    tr.cost_incurred = tool != nullptr ? tool->cost : 0.0;
    tr.coverage = cov;
    tr.difficulty = task.difficulty;
    tr.tool_exec_prob = exec_prob;

    // Draw order is part of the replay contract: one execution draw, then the
    // step walk (stops at the first failed step), then one hazard draw.
    tr.exec_ok = rng.bernoulli(exec_prob);

    int depth = std::max(1, task.composition_depth);
    double eff = success_prob(agent.params, task, tool, cfg);
    double p_step = std::pow(eff, 1.0 / depth);
    int completed = 0;
    for (int s = 0; s < depth; ++s) {
        if (!rng.bernoulli(p_step)) break;
        ++completed;
    }

    double hazard_draw = rng.uniform();
    tr.unsafe = cov < 1.0 && hazard_draw < cfg.hazard_rate;

    // raw reflects step competence alone; the execution and hazard outcomes
    // gate success but enter the reward only through the P_exec discount.
    bool all_pass = completed == depth;
    tr.success = tr.exec_ok && all_pass && !tr.unsafe;
    if (all_pass)
        tr.raw_task_reward = 1.0;
    else if (cfg.partial_credit)
        tr.raw_task_reward = static_cast<double>(completed) / depth;

    for (int s = 0; s < completed; ++s) {
        if (static_cast<std::size_t>(s) < task.gold_trace.size())
            tr.steps.push_back(task.gold_trace[s]);
        else
            tr.steps.push_back({StepKind::reasoning, "", "r" + std::to_string(s)});
    }
    return tr;
}

double trace_reward(const Trace& trace, const Tool* tool, double lambda_cost) {
    double exec_prob = tool != nullptr ? tool->exec_prob : 1.0;
    double cost = tool != nullptr ? tool->cost : 0.0;
    return trace.raw_task_reward * exec_prob - lambda_cost * cost;
}

double trace_reward(const Trace& trace, double lambda_cost) {
    return trace.raw_task_reward * trace.tool_exec_prob - lambda_cost * trace.cost_incurred;
}

double expected_reward(const Agent& agent, const Task& task, const ToolRegistry& registry,
                       const SubstrateConfig& cfg, int n_samples, rng::Stream* rng) {
    if (n_samples < 0) throw ConfigError("expected_reward: n_samples must be non-negative");
    if (n_samples > 0) {
        if (rng == nullptr)
            throw ContractError("expected_reward: sampling requires an rng stream");
        double sum = 0.0;
        for (int i = 0; i < n_samples; ++i)
            sum += trace_reward(attempt(agent, task, registry, cfg, *rng), cfg.lambda_cost);
        return sum / n_samples;
    }
    // Closed form: E[raw] = success_prob when partial credit is off, and the
    // cost term is deterministic given the chosen tool.
    const Tool* tool = choose_tool(agent, task, registry);
    double exec_prob = tool != nullptr ? tool->exec_prob : 1.0;
    double cost = tool != nullptr ? tool->cost : 0.0;
    return success_prob(agent.params, task, tool, cfg) * exec_prob - cfg.lambda_cost * cost;
}

void to_json(nlohmann::json& j, const AgentParams& p) {
    j = nlohmann::json{{"weights", p.weights}, {"bias", p.bias}};
}

void from_json(const nlohmann::json& j, AgentParams& p) {
    j.at("weights").get_to(p.weights);
    j.at("bias").get_to(p.bias);
}

namespace {

std::string status_name(AgentStatus s) {
    switch (s) {
        case AgentStatus::active: return "active";
        case AgentStatus::clone_in_training: return "clone_in_training";
        case AgentStatus::retired: return "retired";
    }
    throw ContractError("agent: bad status value");
}

AgentStatus status_from(const std::string& s) {
    if (s == "active") return AgentStatus::active;
    if (s == "clone_in_training") return AgentStatus::clone_in_training;
    if (s == "retired") return AgentStatus::retired;
    throw SchemaError("agent: unknown status " + s);
}

}  // namespace

void to_json(nlohmann::json& j, const Agent& a) {
    j = nlohmann::json{{"id", a.id},
                       {"params", a.params},
                       {"tool_registry_id", a.tool_registry_id},
                       {"generation", a.generation},
                       {"lineage", a.lineage},
                       {"status", status_name(a.status)}};
}

void from_json(const nlohmann::json& j, Agent& a) {
    j.at("id").get_to(a.id);
    j.at("params").get_to(a.params);
    j.at("tool_registry_id").get_to(a.tool_registry_id);
    j.at("generation").get_to(a.generation);
    j.at("lineage").get_to(a.lineage);
    a.status = status_from(j.at("status").get<std::string>());
}

void to_json(nlohmann::json& j, const Trace& t) {
    j = nlohmann::json{{"task_id", t.task_id},
                       {"steps", t.steps},
                       {"tool_used", t.tool_used},
                       {"success", t.success},
                       {"raw_task_reward", t.raw_task_reward},
                       {"exec_ok", t.exec_ok},
                       {"cost_incurred", t.cost_incurred},
                       {"unsafe", t.unsafe},
                       {"coverage", t.coverage},
                       {"difficulty", t.difficulty},
                       {"tool_exec_prob", t.tool_exec_prob}};
}

void from_json(const nlohmann::json& j, Trace& t) {
    j.at("task_id").get_to(t.task_id);
    j.at("steps").get_to(t.steps);
    j.at("tool_used").get_to(t.tool_used);
    j.at("success").get_to(t.success);
    j.at("raw_task_reward").get_to(t.raw_task_reward);
    j.at("exec_ok").get_to(t.exec_ok);
    j.at("cost_incurred").get_to(t.cost_incurred);
    j.at("unsafe").get_to(t.unsafe);
    j.at("coverage").get_to(t.coverage);
    j.at("difficulty").get_to(t.difficulty);
    j.at("tool_exec_prob").get_to(t.tool_exec_prob);
}

}  // namespace agentevo
