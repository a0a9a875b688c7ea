#pragma once
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agentevo/agent.hpp"
#include "agentevo/rng.hpp"
#include "agentevo/task.hpp"
#include "agentevo/toolforge.hpp"

namespace agentevo {

enum class EvolutionMode { CL, RL, GA };

std::string mode_name(EvolutionMode m);
EvolutionMode mode_from(const std::string& s);

// ---- curriculum bandit ----

struct ArmStats {
    long pulls = 0;
    double mean_gain = 0.0;
    double cost = 1.0;  // mean composition depth of the bucket

    bool operator==(const ArmStats&) const = default;
};

struct CurriculumState {
    std::map<int, ArmStats> arms;  // keyed by difficulty tier
    double exploration_coefficient = 0.5;
    double ema_decay = 0.2;
    long total_pulls = 0;

    bool operator==(const CurriculumState&) const = default;
};

CurriculumState init_curriculum(const TaskSet& ts, double exploration_coefficient,
                                double ema_decay);

// Cost-normalized UCB argmax: (mean + ec * sqrt(ln(total+1)/(pulls+1))) / cost.
// Unpulled arms go first in tier order; ties resolve to the lowest tier.
// eligible restricts the candidate set (empty set -> ConfigError).
int select_bucket(const CurriculumState& state, const std::vector<int>& eligible);
int select_bucket(const CurriculumState& state);

// First observation seeds the mean; later ones blend by the EMA decay.
void update_bucket_stats(CurriculumState& state, int bucket, double observed_gain);

// ---- preference reward model ----

constexpr int kTraceFeatureDim = 5;

// [success, coverage, cost_incurred, step count, difficulty]
std::array<double, kTraceFeatureDim> trace_features(const Trace& trace);

struct RewardModel {
    std::vector<double> phi_weights = std::vector<double>(kTraceFeatureDim, 0.0);
    double phi_bias = 0.0;

    bool operator==(const RewardModel&) const = default;
};

struct RewardFitConfig {
    int iterations = 300;
    double learning_rate = 0.1;
};

// Bradley-Terry fit by full-batch gradient ascent on the mean pairwise
// log-likelihood log sigma(score+ - score-). The bias cancels in every pair,
// so it stays at its initial value.
RewardModel fit_reward_model(const std::vector<std::pair<Trace, Trace>>& pairs,
                             const RewardFitConfig& cfg);

double score_trace(const RewardModel& model, const Trace& trace);

// ---- policy gradient ----

struct PgSample {
    const Trace* trace = nullptr;
    const Task* task = nullptr;
};

// Surrogate whose gradient is the REINFORCE-with-baseline estimator:
// -(1/N) sum_i A_i * log-lik_i(theta) + gamma * 0.5 * ||theta||^2,
// where the trace log-likelihood models success as Bernoulli(q * sigma(z)),
// q = exec_prob * coverage cached on the trace, z the substrate logit.
double pg_surrogate(const AgentParams& params, const std::vector<PgSample>& batch,
                    const std::vector<double>& advantages, double gamma,
                    const SubstrateConfig& sub);

AgentParams pg_gradient(const AgentParams& params, const std::vector<PgSample>& batch,
                        const std::vector<double>& advantages, double gamma,
                        const SubstrateConfig& sub);

// One descent step on the surrogate; inputs untouched, new params returned.
AgentParams policy_gradient_step(const AgentParams& params, const std::vector<PgSample>& batch,
                                 const std::function<double(const Trace&)>& reward_fn,
                                 double eta, double gamma, const SubstrateConfig& sub);

// ---- GA operators ----

AgentParams mutate(const AgentParams& params, double variance, rng::Stream& rng);

AgentParams crossover(const AgentParams& p1, const AgentParams& p2, double lambda_x);

struct GaConfig {
    int population_size = 16;
    int generations = 20;
    double mutation_variance = 0.04;
    std::optional<double> crossover_lambda;  // unset: drawn uniform per child
    int elite_count = 2;
    int tournament_size = 3;
};

struct Population {
    struct Member {
        AgentParams params;
        double fitness = 0.0;
    };
    std::vector<Member> members;
    int generation = 0;
    GaConfig config;
};

using FitnessFn = std::function<double(const AgentParams&)>;
using ParamsObserver = std::function<void(const AgentParams&)>;

// Elite carry-over, then tournament parents -> crossover -> mutation for the
// rest. Per-child draw order: tournament_size indices for each parent, the
// crossover lambda (when not fixed), then the mutation noise.
Population evolve_generation(const Population& pop, const FitnessFn& fitness_fn,
                             rng::Stream& rng, const ParamsObserver& observe = {});

// ---- fitness ----

// Mean closed-form expected reward over the given tasks; deterministic.
double fitness(const AgentParams& params, const std::vector<const Task*>& tasks,
               const ToolRegistry& registry, const SubstrateConfig& sub);
double fitness(const AgentParams& params, const TaskSet& ts, const std::string& split,
               const ToolRegistry& registry, const SubstrateConfig& sub);

// ---- engine drivers ----

struct ClConfig {
    int batch_size = 16;
    double eta = 0.05;
    double gamma = 1e-3;
};

struct RlConfig {
    int batch_size = 32;
    double eta = 0.05;
    double gamma = 1e-3;
    int refit_every = 25;
    int max_pairs = 64;
    int min_pairs = 4;
    RewardFitConfig fit;
};

struct TrainResult {
    AgentParams params;
    long steps_used = 0;
    std::vector<double> val_curve;  // validation fitness after each update
};

// Bandit-scheduled policy-gradient training on bucket samples; bucket gains
// feed update_bucket_stats; stops early once the validation gain over the
// starting point reaches early_stop_gain.
TrainResult cl_train(const Agent& clone, CurriculumState& state, const TaskSet& ts,
                     const ToolRegistry& registry, const SubstrateConfig& sub,
                     const ClConfig& cfg, long step_budget, double early_stop_gain,
                     rng::Stream& rng, const ParamsObserver& observe = {});

// Policy-gradient training where rewards come from a Bradley-Terry model
// refitted on success/failure pairs harvested from the rollouts; environment
// reward is used until the first fit.
TrainResult rl_train(const Agent& clone, const TaskSet& ts, const ToolRegistry& registry,
                     const SubstrateConfig& sub, const RlConfig& cfg, long step_budget,
                     double early_stop_gain, rng::Stream& rng,
                     const ParamsObserver& observe = {});

// Population search seeded with the clone plus mutated variants; returns the
// best member by validation fitness.
TrainResult ga_train(const Agent& clone, const TaskSet& ts, const ToolRegistry& registry,
                     const SubstrateConfig& sub, const GaConfig& cfg, double early_stop_gain,
                     rng::Stream& rng, const ParamsObserver& observe = {});

void to_json(nlohmann::json& j, const ArmStats& a);
void from_json(const nlohmann::json& j, ArmStats& a);
void to_json(nlohmann::json& j, const CurriculumState& s);
void from_json(const nlohmann::json& j, CurriculumState& s);

}  // namespace agentevo
