#pragma once
#include <vector>

#include "agentevo/agent.hpp"
#include "agentevo/rng.hpp"
#include "agentevo/task.hpp"

namespace agentevo {

enum class RoutingMode { argmax, softmax };

struct RoutingPolicy {
    RoutingMode mode = RoutingMode::argmax;
    double temperature = 1.0;  // softmax only, must stay positive
};

// Pre-sigmoid competence score: weights . features + bias.
double affinity(const Agent& agent, const Task& task);

// Picks the handling agent among status == active entries. argmax breaks ties
// by lexicographic id; softmax samples proportional to exp(affinity/T) with a
// single uniform draw. Throws RoutingError when no agent is eligible.
const Agent& route(const Task& task, const std::vector<Agent>& agents,
                   const RoutingPolicy& policy, rng::Stream& rng);

}  // namespace agentevo
