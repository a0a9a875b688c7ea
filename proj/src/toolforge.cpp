#include "agentevo/toolforge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agentevo/errors.hpp"

namespace agentevo {
namespace {

double l1_norm(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0,
                           [](double a, double b) { return a + std::abs(b); });
}

}  // namespace

const Tool* best_tool(const Task& task, const ToolRegistry& registry) {
    const Tool* best = nullptr;
    double best_cov = coverage({}, task.required_caps);  // no tool
    double best_cost = 0.0;
    std::string best_id;
    for (const Tool& t : registry.tools) {
        double cov = coverage(t.caps, task.required_caps);
        bool better = cov > best_cov ||
                      (cov == best_cov && (t.cost < best_cost ||
                                           (t.cost == best_cost && t.id < best_id)));
        if (better) {
            best = &t;
            best_cov = cov;
            best_cost = t.cost;
            best_id = t.id;
        }
    }
    return best;
}

double coverage(const std::vector<double>& caps, const std::vector<double>& req) {
    double need = std::accumulate(req.begin(), req.end(), 0.0);
    if (need <= 0.0) return 1.0;
    double got = 0.0;
    for (std::size_t i = 0; i < req.size(); ++i) {
        double c = i < caps.size() ? caps[i] : 0.0;
        got += std::min(c, req[i]);
    }
    return got / need;
}

const Tool* ToolRegistry::find(const std::string& tool_id) const {
    for (const Tool& t : tools)
        if (t.id == tool_id) return &t;
    return nullptr;
}

std::vector<double> capability_gap(const Task& task, const ToolRegistry& registry) {
    const Tool* best = best_tool(task, registry);
    std::vector<double> gap(task.required_caps.size(), 0.0);
    for (std::size_t i = 0; i < gap.size(); ++i) {
        double have = 0.0;
        if (best != nullptr && i < best->caps.size()) have = best->caps[i];
        gap[i] = std::max(0.0, task.required_caps[i] - have);
    }
    return gap;
}

std::optional<Tool> synthesize(const Task& task, const std::vector<double>& gap,
                               const ForgeConfig& cfg, const ToolRegistry& registry,
                               rng::Stream& rng, long step) {
    if (cfg.kappa < 0.0) throw ConfigError("synthesize: kappa must be non-negative");
    if (gap.size() != task.required_caps.size())
        throw ContractError("synthesize: gap dimension mismatch");
    if (l1_norm(gap) == 0.0)
        throw ContractError("synthesize: no capability gap to close");

    // Target the full requirement: the gap plus whatever the best existing
    // tool already provides, so the new tool covers the task on its own.
    const Tool* best = best_tool(task, registry);
    std::vector<double> caps(gap.size(), 0.0);
    for (std::size_t i = 0; i < caps.size(); ++i) {
        double have = 0.0;
        if (best != nullptr && i < best->caps.size()) have = best->caps[i];
        caps[i] = std::min(1.0, gap[i] + std::min(have, task.required_caps[i]));
    }
    if (cfg.noise_sd > 0.0) {
        for (double& c : caps)
            c = std::clamp(c + rng.gaussian(0.0, cfg.noise_sd), 0.0, 1.0);
    }

    Tool t;
    t.id = "syn-" + task.id + "-" + std::to_string(registry.tools.size());
    t.caps = std::move(caps);
    t.exec_prob = rng.beta(cfg.reliability_alpha, cfg.reliability_beta);
    t.cost = cfg.kappa * l1_norm(t.caps);
    t.provenance = ToolProvenance::synthesized;
    t.created_at = step;

    if (registry.spent + t.cost > registry.budget) return std::nullopt;
    return t;
}

bool validate(const Tool& tool, const std::vector<const Task*>& probe_tasks, int n_trials,
              const ForgeConfig& cfg, rng::Stream& rng) {
    (void)probe_tasks;  // probes carry no extra signal under the simulated substrate
    if (n_trials <= 0) throw ConfigError("validate: n_trials must be positive");
    int ok = 0;
    for (int i = 0; i < n_trials; ++i)
        if (rng.bernoulli(tool.exec_prob)) ++ok;
    return static_cast<double>(ok) / n_trials >= cfg.min_exec_rate;
}

void deploy(ToolRegistry& registry, const Tool& tool) {
    if (registry.find(tool.id) != nullptr)
        throw DuplicateError("deploy: duplicate tool id " + tool.id);
    if (registry.spent + tool.cost > registry.budget)
        throw ContractError("deploy: tool cost exceeds remaining budget");
    registry.tools.push_back(tool);
    registry.spent += tool.cost;
}

void to_json(nlohmann::json& j, const Tool& t) {
    j = nlohmann::json{{"id", t.id},
                       {"caps", t.caps},
                       {"exec_prob", t.exec_prob},
                       {"cost", t.cost},
                       {"provenance", t.provenance == ToolProvenance::builtin ? "builtin" : "synthesized"},
                       {"created_at", t.created_at}};
}

void from_json(const nlohmann::json& j, Tool& t) {
    j.at("id").get_to(t.id);
    j.at("caps").get_to(t.caps);
    j.at("exec_prob").get_to(t.exec_prob);
    j.at("cost").get_to(t.cost);
    std::string prov = j.at("provenance").get<std::string>();
    if (prov == "builtin")
        t.provenance = ToolProvenance::builtin;
    else if (prov == "synthesized")
        t.provenance = ToolProvenance::synthesized;
    else
        throw SchemaError("tool: unknown provenance " + prov);
    j.at("created_at").get_to(t.created_at);
}

void to_json(nlohmann::json& j, const ToolRegistry& r) {
    j = nlohmann::json{{"id", r.id}, {"tools", r.tools}, {"spent", r.spent}, {"budget", r.budget}};
}

void from_json(const nlohmann::json& j, ToolRegistry& r) {
    j.at("id").get_to(r.id);
    j.at("tools").get_to(r.tools);
    j.at("spent").get_to(r.spent);
    j.at("budget").get_to(r.budget);
}

}  // namespace agentevo
