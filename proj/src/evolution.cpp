#include "agentevo/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "agentevo/errors.hpp"

namespace agentevo {

std::string mode_name(EvolutionMode m) {
    switch (m) {
        case EvolutionMode::CL: return "cl";
        case EvolutionMode::RL: return "rl";
        case EvolutionMode::GA: return "ga";
    }
    throw ContractError("mode_name: bad mode value");
}

EvolutionMode mode_from(const std::string& s) {
    if (s == "cl") return EvolutionMode::CL;
    if (s == "rl") return EvolutionMode::RL;
    if (s == "ga") return EvolutionMode::GA;
    throw ConfigError("unknown evolution mode " + s);
}

CurriculumState init_curriculum(const TaskSet& ts, double exploration_coefficient,
                                double ema_decay) {
    CurriculumState state;
    state.exploration_coefficient = exploration_coefficient;
    state.ema_decay = ema_decay;
    TaskIndex index(ts);
    for (const auto& [tier, ids] : ts.buckets) {
        if (ids.empty()) continue;
        double depth_sum = 0.0;
        for (const std::string& id : ids) depth_sum += index.at(id).composition_depth;
        ArmStats arm;
        arm.cost = depth_sum / ids.size();
        state.arms[tier] = arm;
    }
    return state;
}

namespace {

double arm_score(const CurriculumState& state, const ArmStats& arm) {
    double bonus = state.exploration_coefficient *
                   std::sqrt(std::log(static_cast<double>(state.total_pulls) + 1.0) /
                             (static_cast<double>(arm.pulls) + 1.0));
    return (arm.mean_gain + bonus) / arm.cost;
}

}  // namespace

int select_bucket(const CurriculumState& state, const std::vector<int>& eligible) {
    if (eligible.empty()) throw ConfigError("select_bucket: no arms");
    for (int tier : eligible) {
        auto it = state.arms.find(tier);
        if (it == state.arms.end())
            throw ContractError("select_bucket: unknown bucket " + std::to_string(tier));
        if (it->second.pulls == 0) return tier;  // eligible is kept tier-sorted
    }
    int best = eligible.front();
    double best_score = arm_score(state, state.arms.at(best));
    for (std::size_t i = 1; i < eligible.size(); ++i) {
        double s = arm_score(state, state.arms.at(eligible[i]));
        if (s > best_score) {
            best = eligible[i];
            best_score = s;
        }
    }
    return best;
}

int select_bucket(const CurriculumState& state) {
    std::vector<int> all;
    for (const auto& [tier, arm] : state.arms) all.push_back(tier);
    return select_bucket(state, all);
}

void update_bucket_stats(CurriculumState& state, int bucket, double observed_gain) {
    auto it = state.arms.find(bucket);
    if (it == state.arms.end())
        throw ContractError("update_bucket_stats: unknown bucket " + std::to_string(bucket));
    ArmStats& arm = it->second;
    if (arm.pulls == 0)
        arm.mean_gain = observed_gain;
    else
        arm.mean_gain = (1.0 - state.ema_decay) * arm.mean_gain + state.ema_decay * observed_gain;
    ++arm.pulls;
    ++state.total_pulls;
}

std::array<double, kTraceFeatureDim> trace_features(const Trace& trace) {
    return {trace.success ? 1.0 : 0.0, trace.coverage, trace.cost_incurred,
            static_cast<double>(trace.steps.size()), static_cast<double>(trace.difficulty)};
}

RewardModel fit_reward_model(const std::vector<std::pair<Trace, Trace>>& pairs,
                             const RewardFitConfig& cfg) {
    if (pairs.empty()) throw ConfigError("fit_reward_model: no preference pairs");
    RewardModel model;
    std::size_t n = pairs.size();
    std::vector<std::array<double, kTraceFeatureDim>> diffs(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto fp = trace_features(pairs[i].first);
        auto fm = trace_features(pairs[i].second);
        for (int k = 0; k < kTraceFeatureDim; ++k) diffs[i][k] = fp[k] - fm[k];
    }
    for (int it = 0; it < cfg.iterations; ++it) {
        std::array<double, kTraceFeatureDim> grad{};
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            for (int k = 0; k < kTraceFeatureDim; ++k) d += model.phi_weights[k] * diffs[i][k];
            double w = 1.0 - sigmoid(d);
            for (int k = 0; k < kTraceFeatureDim; ++k) grad[k] += w * diffs[i][k];
        }
        for (int k = 0; k < kTraceFeatureDim; ++k)
            model.phi_weights[k] += cfg.learning_rate * grad[k] / static_cast<double>(n);
    }
    return model;
}

double score_trace(const RewardModel& model, const Trace& trace) {
    auto f = trace_features(trace);
    double s = model.phi_bias;
    for (int k = 0; k < kTraceFeatureDim; ++k) s += model.phi_weights[k] * f[k];
    return s;
}

namespace {

constexpr double kProbEps = 1e-12;

struct PgTerm {
    double dldz = 0.0;     // d log-lik / d z
    double loglik = 0.0;
};

PgTerm pg_term(const AgentParams& params, const PgSample& s, const SubstrateConfig& sub) {
    const Task& task = *s.task;
    const Trace& trace = *s.trace;
    if (params.weights.size() != task.features.size())
        throw ContractError("policy gradient: weight/feature dimension mismatch");
    double z = params.bias - sub.beta * task.difficulty;
    for (std::size_t i = 0; i < params.weights.size(); ++i)
        z += params.weights[i] * task.features[i];
    double sg = sigmoid(z);
    double q = std::clamp(trace.tool_exec_prob * trace.coverage, 0.0, 1.0);
    double p = std::clamp(q * sg, kProbEps, 1.0 - kProbEps);
    PgTerm t;
    if (trace.success) {
        t.loglik = std::log(p);
        t.dldz = q * sg * (1.0 - sg) / p;
    } else {
        t.loglik = std::log(1.0 - p);
        t.dldz = -q * sg * (1.0 - sg) / (1.0 - p);
    }
    return t;
}

}  // namespace

double pg_surrogate(const AgentParams& params, const std::vector<PgSample>& batch,
                    const std::vector<double>& advantages, double gamma,
                    const SubstrateConfig& sub) {
    if (batch.empty()) throw ContractError("pg_surrogate: empty batch");
    if (batch.size() != advantages.size())
        throw ContractError("pg_surrogate: advantage count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        acc += advantages[i] * pg_term(params, batch[i], sub).loglik;
    double reg = params.bias * params.bias;
    for (double w : params.weights) reg += w * w;
    return -acc / static_cast<double>(batch.size()) + gamma * 0.5 * reg;
}

AgentParams pg_gradient(const AgentParams& params, const std::vector<PgSample>& batch,
                        const std::vector<double>& advantages, double gamma,
                        const SubstrateConfig& sub) {
    if (batch.empty()) throw ContractError("pg_gradient: empty batch");
    if (batch.size() != advantages.size())
        throw ContractError("pg_gradient: advantage count mismatch");
    AgentParams grad;
    grad.weights.assign(params.weights.size(), 0.0);
    double n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        PgTerm t = pg_term(params, batch[i], sub);
        double scale = -advantages[i] * t.dldz / n;
        const Task& task = *batch[i].task;
        for (std::size_t k = 0; k < grad.weights.size(); ++k)
            grad.weights[k] += scale * task.features[k];
        grad.bias += scale;
    }
    for (std::size_t k = 0; k < grad.weights.size(); ++k)
        grad.weights[k] += gamma * params.weights[k];
    grad.bias += gamma * params.bias;
    return grad;
}

AgentParams policy_gradient_step(const AgentParams& params, const std::vector<PgSample>& batch,
                                 const std::function<double(const Trace&)>& reward_fn,
                                 double eta, double gamma, const SubstrateConfig& sub) {
    if (batch.empty()) throw ContractError("policy_gradient_step: empty batch");
    if (eta < 0.0) throw ConfigError("policy_gradient_step: eta must be non-negative");
    if (gamma < 0.0) throw ConfigError("policy_gradient_step: gamma must be non-negative");
    std::vector<double> rewards(batch.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        rewards[i] = reward_fn(*batch[i].trace);
        mean += rewards[i];
    }
    mean /= static_cast<double>(batch.size());
    for (double& r : rewards) r -= mean;
    AgentParams grad = pg_gradient(params, batch, rewards, gamma, sub);
    AgentParams out = params;
    for (std::size_t k = 0; k < out.weights.size(); ++k)
        out.weights[k] -= eta * grad.weights[k];
    out.bias -= eta * grad.bias;
    return out;
}

AgentParams mutate(const AgentParams& params, double variance, rng::Stream& rng) {
    if (variance < 0.0) throw ConfigError("mutate: variance must be non-negative");
    AgentParams out = params;
    if (variance == 0.0) return out;  // no draws consumed
    double sd = std::sqrt(variance);
    for (double& w : out.weights) w += rng.gaussian(0.0, sd);
    out.bias += rng.gaussian(0.0, sd);
    return out;
}

AgentParams crossover(const AgentParams& p1, const AgentParams& p2, double lambda_x) {
    if (lambda_x < 0.0 || lambda_x > 1.0)
        throw ConfigError("crossover: lambda_x must be in [0,1]");
    if (p1.weights.size() != p2.weights.size())
        throw ContractError("crossover: dimension mismatch");
    AgentParams out;
    out.weights.resize(p1.weights.size());
    for (std::size_t i = 0; i < out.weights.size(); ++i)
        out.weights[i] = lambda_x * p1.weights[i] + (1.0 - lambda_x) * p2.weights[i];
    out.bias = lambda_x * p1.bias + (1.0 - lambda_x) * p2.bias;
    return out;
}

namespace {

std::size_t tournament_pick(const std::vector<Population::Member>& members, int size,
                            rng::Stream& rng) {
    std::size_t best = rng.uniform_int(0, static_cast<long>(members.size()) - 1);
    for (int i = 1; i < size; ++i) {
        std::size_t c = rng.uniform_int(0, static_cast<long>(members.size()) - 1);
        if (members[c].fitness > members[best].fitness ||
            (members[c].fitness == members[best].fitness && c < best))
            best = c;
    }
    return best;
}

}  // namespace

Population evolve_generation(const Population& pop, const FitnessFn& fitness_fn,
                             rng::Stream& rng, const ParamsObserver& observe) {
    const GaConfig& cfg = pop.config;
    if (pop.members.empty()) throw ContractError("evolve_generation: empty population");
    if (cfg.elite_count < 0 || cfg.elite_count > static_cast<int>(pop.members.size()))
        throw ConfigError("evolve_generation: elite_count out of range");
    if (cfg.tournament_size < 1)
        throw ConfigError("evolve_generation: tournament_size must be positive");
    for (const auto& m : pop.members)
        if (!std::isfinite(m.fitness))
            throw ContractError("evolve_generation: member fitness missing");

    std::vector<std::size_t> order(pop.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pop.members[a].fitness > pop.members[b].fitness;
    });

    Population next;
    next.config = cfg;
    next.generation = pop.generation + 1;
    for (int e = 0; e < cfg.elite_count; ++e) next.members.push_back(pop.members[order[e]]);

    while (next.members.size() < pop.members.size()) {
        std::size_t p1 = tournament_pick(pop.members, cfg.tournament_size, rng);
        std::size_t p2 = tournament_pick(pop.members, cfg.tournament_size, rng);
        double lx = cfg.crossover_lambda ? *cfg.crossover_lambda : rng.uniform();
        AgentParams child = crossover(pop.members[p1].params, pop.members[p2].params, lx);
        child = mutate(child, cfg.mutation_variance, rng);
        double fit = fitness_fn(child);
        if (observe) observe(child);
        next.members.push_back({std::move(child), fit});
    }
    return next;
}

double fitness(const AgentParams& params, const std::vector<const Task*>& tasks,
               const ToolRegistry& registry, const SubstrateConfig& sub) {
    if (tasks.empty()) throw ConfigError("fitness: empty task list");
    Agent probe;
    probe.id = "probe";
    probe.params = params;
    double sum = 0.0;
    for (const Task* t : tasks) sum += expected_reward(probe, *t, registry, sub, 0, nullptr);
    return sum / static_cast<double>(tasks.size());
}

double fitness(const AgentParams& params, const TaskSet& ts, const std::string& split,
               const ToolRegistry& registry, const SubstrateConfig& sub) {
    auto it = ts.splits.find(split);
    if (it == ts.splits.end()) throw ConfigError("fitness: unknown split " + split);
    TaskIndex index(ts);
    std::vector<const Task*> tasks;
    tasks.reserve(it->second.size());
    for (const std::string& id : it->second) tasks.push_back(&index.at(id));
    return fitness(params, tasks, registry, sub);
}

namespace {

std::vector<const Task*> split_tasks(const TaskSet& ts, const TaskIndex& index,
                                     const std::string& split) {
    auto it = ts.splits.find(split);
    if (it == ts.splits.end()) throw ConfigError("missing split " + split);
    std::vector<const Task*> out;
    out.reserve(it->second.size());
    for (const std::string& id : it->second) out.push_back(&index.at(id));
    return out;
}

// Train-split tasks grouped by bucket tier, bucket order preserved.
std::map<int, std::vector<const Task*>> train_buckets(const TaskSet& ts, const TaskIndex& index) {
    auto it = ts.splits.find("train");
    if (it == ts.splits.end()) throw ConfigError("missing split train");
    std::set<std::string> train_ids(it->second.begin(), it->second.end());
    std::map<int, std::vector<const Task*>> out;
    for (const auto& [tier, ids] : ts.buckets) {
        std::vector<const Task*> dst;
        for (const std::string& id : ids)
            if (train_ids.count(id) != 0) dst.push_back(&index.at(id));
        if (!dst.empty()) out[tier] = std::move(dst);
    }
    return out;
}

}  // namespace

TrainResult cl_train(const Agent& clone, CurriculumState& state, const TaskSet& ts,
                     const ToolRegistry& registry, const SubstrateConfig& sub,
                     const ClConfig& cfg, long step_budget, double early_stop_gain,
                     rng::Stream& rng, const ParamsObserver& observe) {
    TaskIndex index(ts);
    auto val = split_tasks(ts, index, "val");
    auto buckets = train_buckets(ts, index);

    TrainResult res;
    res.params = clone.params;
    Agent worker = clone;

    double base = fitness(res.params, val, registry, sub);
    double prev = base;
    auto env_reward = [&](const Trace& t) { return trace_reward(t, sub.lambda_cost); };

    for (long step = 0; step < step_budget; ++step) {
        std::vector<int> eligible;
        for (const auto& [tier, tasks] : buckets)
            if (!tasks.empty()) eligible.push_back(tier);
        int bucket = select_bucket(state, eligible);
        const auto& pool = buckets.at(bucket);

        std::vector<Trace> traces;
        std::vector<PgSample> batch;
        traces.reserve(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
            const Task* task = pool[rng.uniform_int(0, static_cast<long>(pool.size()) - 1)];
            traces.push_back(attempt(worker, *task, registry, sub, rng));
            batch.push_back({&traces.back(), task});
        }
        res.params = policy_gradient_step(res.params, batch, env_reward, cfg.eta, cfg.gamma, sub);
        worker.params = res.params;
        if (observe) observe(res.params);

        double now = fitness(res.params, val, registry, sub);
        update_bucket_stats(state, bucket, now - prev);
        prev = now;
        res.val_curve.push_back(now);
        res.steps_used = step + 1;
        if (now - base >= early_stop_gain) break;
    }
    return res;
}

TrainResult rl_train(const Agent& clone, const TaskSet& ts, const ToolRegistry& registry,
                     const SubstrateConfig& sub, const RlConfig& cfg, long step_budget,
                     double early_stop_gain, rng::Stream& rng, const ParamsObserver& observe) {
    TaskIndex index(ts);
    auto val = split_tasks(ts, index, "val");
    auto train = split_tasks(ts, index, "train");
    if (train.empty()) throw ConfigError("rl_train: empty train split");

    TrainResult res;
    res.params = clone.params;
    Agent worker = clone;

    double base = fitness(res.params, val, registry, sub);
    std::vector<std::pair<Trace, Trace>> pair_buffer;
    RewardModel model;
    bool fitted = false;

    for (long step = 0; step < step_budget; ++step) {
        std::vector<Trace> traces;
        std::vector<PgSample> batch;
        traces.reserve(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
            const Task* task = train[rng.uniform_int(0, static_cast<long>(train.size()) - 1)];
            traces.push_back(attempt(worker, *task, registry, sub, rng));
            batch.push_back({&traces.back(), task});
        }

        std::vector<const Trace*> wins, losses;
        for (const Trace& t : traces) (t.success ? wins : losses).push_back(&t);
        for (std::size_t i = 0; i < std::min(wins.size(), losses.size()); ++i) {
            pair_buffer.emplace_back(*wins[i], *losses[i]);
            if (static_cast<int>(pair_buffer.size()) > cfg.max_pairs)
                pair_buffer.erase(pair_buffer.begin());
        }
        bool due = !fitted || step % cfg.refit_every == 0;
        if (due && static_cast<int>(pair_buffer.size()) >= cfg.min_pairs) {
            model = fit_reward_model(pair_buffer, cfg.fit);
            fitted = true;
        }

        auto reward_fn = [&](const Trace& t) {
            return fitted ? score_trace(model, t) : trace_reward(t, sub.lambda_cost);
        };
        res.params = policy_gradient_step(res.params, batch, reward_fn, cfg.eta, cfg.gamma, sub);
        worker.params = res.params;
        if (observe) observe(res.params);

        double now = fitness(res.params, val, registry, sub);
        res.val_curve.push_back(now);
        res.steps_used = step + 1;
        if (now - base >= early_stop_gain) break;
    }
    return res;
}

TrainResult ga_train(const Agent& clone, const TaskSet& ts, const ToolRegistry& registry,
                     const SubstrateConfig& sub, const GaConfig& cfg, double early_stop_gain,
                     rng::Stream& rng, const ParamsObserver& observe) {
    if (cfg.population_size < 2) throw ConfigError("ga_train: population_size must be >= 2");
    TaskIndex index(ts);
    auto val = split_tasks(ts, index, "val");
    FitnessFn fit = [&](const AgentParams& p) { return fitness(p, val, registry, sub); };

    Population pop;
    pop.config = cfg;
    pop.members.push_back({clone.params, fit(clone.params)});
    double base = pop.members[0].fitness;
    for (int i = 1; i < cfg.population_size; ++i) {
        AgentParams p = mutate(clone.params, cfg.mutation_variance, rng);
        double f = fit(p);
        if (observe) observe(p);
        pop.members.push_back({std::move(p), f});
    }

    TrainResult res;
    res.params = clone.params;
    for (int g = 0; g < cfg.generations; ++g) {
        pop = evolve_generation(pop, fit, rng, observe);
        double best = pop.members[0].fitness;
        std::size_t best_i = 0;
        for (std::size_t i = 1; i < pop.members.size(); ++i)
            if (pop.members[i].fitness > best) {
                best = pop.members[i].fitness;
                best_i = i;
            }
        res.params = pop.members[best_i].params;
        res.val_curve.push_back(best);
        res.steps_used = g + 1;
        if (best - base >= early_stop_gain) break;
    }
    return res;
}

void to_json(nlohmann::json& j, const ArmStats& a) {
    j = nlohmann::json{{"pulls", a.pulls}, {"mean_gain", a.mean_gain}, {"cost", a.cost}};
}

void from_json(const nlohmann::json& j, ArmStats& a) {
    j.at("pulls").get_to(a.pulls);
    j.at("mean_gain").get_to(a.mean_gain);
    j.at("cost").get_to(a.cost);
}

void to_json(nlohmann::json& j, const CurriculumState& s) {
    nlohmann::json arms = nlohmann::json::object();
    for (const auto& [tier, arm] : s.arms) arms[std::to_string(tier)] = arm;
    j = nlohmann::json{{"arms", arms},
                       {"exploration_coefficient", s.exploration_coefficient},
                       {"ema_decay", s.ema_decay},
                       {"total_pulls", s.total_pulls}};
}

void from_json(const nlohmann::json& j, CurriculumState& s) {
    s.arms.clear();
    for (const auto& [key, val] : j.at("arms").items())
        s.arms[std::stoi(key)] = val.get<ArmStats>();
    j.at("exploration_coefficient").get_to(s.exploration_coefficient);
    j.at("ema_decay").get_to(s.ema_decay);
    j.at("total_pulls").get_to(s.total_pulls);
}

}  // namespace agentevo
