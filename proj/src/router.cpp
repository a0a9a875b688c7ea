#include "agentevo/router.hpp"

#include <algorithm>
#include <cmath>

#include "agentevo/errors.hpp"

namespace agentevo {

double affinity(const Agent& agent, const Task& task) {
    if (agent.params.weights.size() != task.features.size())
        throw ContractError("affinity: weight/feature dimension mismatch");
    double a = agent.params.bias;
    for (std::size_t i = 0; i < agent.params.weights.size(); ++i)
        a += agent.params.weights[i] * task.features[i];
    return a;
}

const Agent& route(const Task& task, const std::vector<Agent>& agents,
                   const RoutingPolicy& policy, rng::Stream& rng) {
    if (policy.mode == RoutingMode::softmax && policy.temperature <= 0.0)
        throw ConfigError("route: softmax temperature must be positive");

    std::vector<const Agent*> eligible;
    for (const Agent& a : agents)
        if (a.status == AgentStatus::active) eligible.push_back(&a);
    if (eligible.empty()) throw RoutingError("route: no active agent");

    std::sort(eligible.begin(), eligible.end(),
              [](const Agent* a, const Agent* b) { return a->id < b->id; });

    std::vector<double> scores(eligible.size());
    for (std::size_t i = 0; i < eligible.size(); ++i)
        scores[i] = affinity(*eligible[i], task);

    if (policy.mode == RoutingMode::argmax) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] > scores[best]) best = i;  // ties keep the earlier (lex-smaller) id
        return *eligible[best];
    }

    double max_s = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp((scores[i] - max_s) / policy.temperature);
        z += probs[i];
    }
    double u = rng.uniform() * z;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return *eligible[i];
    }
    return *eligible.back();  // guard against rounding at u == z
}

}  // namespace agentevo
