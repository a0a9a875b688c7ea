#include "agentevo/lifecycle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agentevo/errors.hpp"

namespace agentevo {

FailureMonitor::FailureMonitor(int window, double epsilon_fail)
    : window_(window), epsilon_fail_(epsilon_fail) {
    if (window < 1) throw ConfigError("FailureMonitor: window must be >= 1");
}

bool FailureMonitor::record_and_detect(const std::string& agent_id, double reward) {
    std::deque<double>& q = recent_[agent_id];
    q.push_back(reward);
    if (static_cast<int>(q.size()) > window_) q.pop_front();
    if (static_cast<int>(q.size()) < window_) return false;
    double mean = std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
    return mean < epsilon_fail_;
}

void FailureMonitor::clear(const std::string& agent_id) { recent_.erase(agent_id); }

nlohmann::json FailureMonitor::to_json() const {
    nlohmann::json queues = nlohmann::json::object();
    for (const auto& [id, q] : recent_) queues[id] = std::vector<double>(q.begin(), q.end());
    return nlohmann::json{
        {"window", window_}, {"epsilon_fail", epsilon_fail_}, {"queues", queues}};
}

FailureMonitor FailureMonitor::from_json(const nlohmann::json& j) {
    FailureMonitor m(j.at("window").get<int>(), j.at("epsilon_fail").get<double>());
    for (const auto& [id, q] : j.at("queues").items()) {
        auto vals = q.get<std::vector<double>>();
        m.recent_[id] = std::deque<double>(vals.begin(), vals.end());
    }
    return m;
}

double wilson_upper(long count, long total, double z) {
    if (total <= 0) return 0.0;
    double n = static_cast<double>(total);
    double p = static_cast<double>(count) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = p + z2 / (2.0 * n);
    double rad = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return (center + rad) / denom;
}

SafetyStatus check_safety(SafetyMonitor& monitor, const Trace& trace) {
    ++monitor.total_count;
    if (trace.unsafe) ++monitor.unsafe_count;
    if (monitor.unsafe_count == 0) return SafetyStatus::ok;  // clean history is always fine
    double ucb = wilson_upper(monitor.unsafe_count, monitor.total_count);
    return ucb > monitor.delta_safe ? SafetyStatus::violation : SafetyStatus::ok;
}

EvolutionMode select_mode(const ModeSelectConfig& policy, int tier, int prior_rejections) {
    if (policy.kind == ModeSelectKind::fixed) return policy.fixed_mode;
    if (prior_rejections >= policy.ga_after_rejections) return EvolutionMode::GA;
    return tier < policy.tier_threshold ? EvolutionMode::CL : EvolutionMode::RL;
}

Agent clone_agent(const Agent& agent, const std::string& new_id) {
    if (agent.status != AgentStatus::active)
        throw ContractError("clone_agent: " + agent.id + " is not active");
    Agent clone = agent;
    clone.id = new_id;
    clone.lineage = agent.id;
    clone.generation = agent.generation + 1;
    clone.status = AgentStatus::clone_in_training;
    return clone;
}

double evaluate_delta(const Agent& candidate, const Agent& incumbent,
                      const std::vector<const Task*>& validation, const ToolRegistry& registry,
                      const SubstrateConfig& sub) {
    return fitness(candidate.params, validation, registry, sub) -
           fitness(incumbent.params, validation, registry, sub);
}

PromotionRecord promote_or_reject(double delta, double epsilon_verify,
                                  const std::string& candidate_id,
                                  const std::string& incumbent_id, std::vector<Agent>& roster,
                                  long val_size, long timestamp) {
    Agent* candidate = nullptr;
    Agent* incumbent = nullptr;
    for (Agent& a : roster) {
        if (a.id == candidate_id) candidate = &a;
        if (a.id == incumbent_id) incumbent = &a;
    }
    if (candidate == nullptr || incumbent == nullptr)
        throw ContractError("promote_or_reject: agent not in roster");
    if (candidate->status != AgentStatus::clone_in_training)
        throw ContractError("promote_or_reject: candidate is not a clone in training");

    PromotionRecord rec;
    rec.original_id = incumbent_id;
    rec.clone_id = candidate_id;
    rec.delta_perf = delta;
    rec.epsilon_verify = epsilon_verify;
    rec.val_size = val_size;
    rec.timestamp = timestamp;
    if (delta >= epsilon_verify) {
        candidate->status = AgentStatus::active;
        incumbent->status = AgentStatus::retired;
        rec.decision = PromotionDecision::promoted;
    } else {
        candidate->status = AgentStatus::retired;
        rec.decision = PromotionDecision::rejected;
    }
    return rec;
}

void to_json(nlohmann::json& j, const PromotionRecord& r) {
    j = nlohmann::json{
        {"original_id", r.original_id},
        {"clone_id", r.clone_id},
        {"delta_perf", r.delta_perf},
        {"epsilon_verify", r.epsilon_verify},
        {"decision", r.decision == PromotionDecision::promoted ? "promoted" : "rejected"},
        {"val_size", r.val_size},
        {"timestamp", r.timestamp}};
}

void from_json(const nlohmann::json& j, PromotionRecord& r) {
    j.at("original_id").get_to(r.original_id);
    j.at("clone_id").get_to(r.clone_id);
    j.at("delta_perf").get_to(r.delta_perf);
    j.at("epsilon_verify").get_to(r.epsilon_verify);
    std::string d = j.at("decision").get<std::string>();
    if (d == "promoted")
        r.decision = PromotionDecision::promoted;
    else if (d == "rejected")
        r.decision = PromotionDecision::rejected;
    else
        throw SchemaError("promotion record: unknown decision " + d);
    j.at("val_size").get_to(r.val_size);
    j.at("timestamp").get_to(r.timestamp);
}

std::string status_name(RunStatus s) {
    switch (s) {
        case RunStatus::running: return "running";
        case RunStatus::completed: return "completed";
        case RunStatus::halted_safety: return "halted_safety";
    }
    throw ContractError("status_name: bad status value");
}

RunStatus status_from_name(const std::string& s) {
    if (s == "running") return RunStatus::running;
    if (s == "completed") return RunStatus::completed;
    if (s == "halted_safety") return RunStatus::halted_safety;
    throw SchemaError("run status: unknown value " + s);
}

LifecycleRun::LifecycleRun(const RunConfig& cfg, TaskSet taskset)
    : cfg_(cfg),
      taskset_(std::move(taskset)),
      index_(taskset_),
      failures_(cfg.lifecycle.window, cfg.lifecycle.epsilon_fail) {
    build_stream();
    safety_.delta_safe = cfg_.lifecycle.delta_safe;
    registry_.budget = cfg_.lifecycle.c_max;
    curriculum_ = init_curriculum(taskset_, cfg_.curriculum.exploration_coefficient,
                                  cfg_.curriculum.ema_decay);

    Agent seed;
    seed.id = "a0";
    seed.params.weights.assign(cfg_.generator.feature_dim, 0.0);
    roster_.push_back(std::move(seed));

    MetricPoint origin;
    origin.x = 0.0;
    origin.y = fitness(roster_.front().params, split_ptrs("val"), registry_, cfg_.substrate);
    metrics_.generation_points.push_back(origin);

    emit({{"event", "run_start"},
          {"step", -1},
          {"seed", cfg_.seed},
          {"tasks", taskset_.tasks.size()},
          {"stream", stream_.size()}});
}

LifecycleRun::LifecycleRun(const RunConfig& cfg, TaskSet taskset, const nlohmann::json& state)
    : cfg_(cfg), taskset_(std::move(taskset)), index_(taskset_) {
    build_stream();
    state.at("step").get_to(step_);
    status_ = status_from_name(state.at("status").get<std::string>());
    state.at("roster").get_to(roster_);
    state.at("registry").get_to(registry_);
    failures_ = FailureMonitor::from_json(state.at("failures"));
    state.at("safety").at("delta_safe").get_to(safety_.delta_safe);
    state.at("safety").at("unsafe_count").get_to(safety_.unsafe_count);
    state.at("safety").at("total_count").get_to(safety_.total_count);
    state.at("curriculum").get_to(curriculum_);
    for (const auto& [id, n] : state.at("rejections").items()) rejections_[id] = n.get<int>();
    for (const auto& id : state.at("plateaued")) plateaued_.insert(id.get<std::string>());
    state.at("clone_seq").get_to(clone_seq_);
    state.at("metrics").get_to(metrics_);
    ended_ = status_ != RunStatus::running;

    emit({{"event", "run_resume"}, {"step", -1}, {"at", step_}});
}

void LifecycleRun::build_stream() {
    auto it = taskset_.splits.find("train");
    if (it == taskset_.splits.end() || it->second.empty())
        throw ConfigError("lifecycle: taskset has no train split");
    const std::vector<std::string>& train = it->second;
    std::uint64_t pass = 0;
    while (static_cast<long>(stream_.size()) < cfg_.lifecycle.n_stream) {
        std::vector<std::string> ids = train;
        rng::Stream r = rng::Stream::derive(cfg_.seed, {rng::hash64("stream"), pass});
        for (std::size_t i = ids.size(); i > 1; --i)
            std::swap(ids[i - 1], ids[r.uniform_int(0, static_cast<long>(i) - 1)]);
        for (std::string& id : ids) {
            if (static_cast<long>(stream_.size()) >= cfg_.lifecycle.n_stream) break;
            stream_.push_back(std::move(id));
        }
        ++pass;
    }
}

void LifecycleRun::emit(nlohmann::json event) { log_.push_back(event.dump()); }

std::vector<const Task*> LifecycleRun::split_ptrs(const std::string& split) const {
    auto it = taskset_.splits.find(split);
    if (it == taskset_.splits.end()) throw ConfigError("lifecycle: missing split " + split);
    std::vector<const Task*> out;
    out.reserve(it->second.size());
    for (const std::string& id : it->second) out.push_back(&index_.at(id));
    return out;
}

std::string LifecycleRun::lineage_root(const std::string& agent_id) const {
    std::string cur = agent_id;
    for (;;) {
        const Agent* a = nullptr;
        for (const Agent& r : roster_)
            if (r.id == cur) a = &r;
        if (a == nullptr) throw ContractError("lineage_root: unknown agent " + cur);
        if (a->lineage.empty()) return cur;
        cur = a->lineage;
    }
}

Agent& LifecycleRun::agent_ref(const std::string& id) {
    for (Agent& a : roster_)
        if (a.id == id) return a;
    throw ContractError("lifecycle: unknown agent " + id);
}

const Agent& LifecycleRun::active_agent() const {
    for (const Agent& a : roster_)
        if (a.status == AgentStatus::active) return a;
    throw ContractError("lifecycle: no active agent");
}

void LifecycleRun::halt_safety(long at_step) {
    emit({{"event", "safety_violation"},
          {"step", at_step},
          {"unsafe_count", safety_.unsafe_count},
          {"total", safety_.total_count},
          {"ucb", wilson_upper(safety_.unsafe_count, safety_.total_count)}});
    emit({{"event", "run_end"},
          {"step", at_step},
          {"status", "halted_safety"},
          {"final_agent", active_agent().id}});
    status_ = RunStatus::halted_safety;
    ended_ = true;
}

void LifecycleRun::run_episode(const std::string& agent_id, int tier) {
    ++metrics_.episodes;
    std::string root = lineage_root(agent_id);
    int prior_rej = rejections_.count(root) != 0 ? rejections_.at(root) : 0;
    EvolutionMode mode = select_mode(cfg_.mode_policy, tier, prior_rej);

    ++clone_seq_;
    std::string clone_id = "a" + std::to_string(clone_seq_);
    roster_.push_back(clone_agent(agent_ref(agent_id), clone_id));

    rng::Stream es = rng::Stream::derive(
        cfg_.seed, {rng::hash64(mode_name(mode)), static_cast<std::uint64_t>(clone_seq_)});
    ParamsObserver observe = [this](const AgentParams& p) {
        metrics_.record_params(p, cfg_.metrics.cell_size);
    };

    TrainResult tr;
    const Agent& clone = agent_ref(clone_id);
    switch (mode) {
        case EvolutionMode::CL:
            tr = cl_train(clone, curriculum_, taskset_, registry_, cfg_.substrate, cfg_.cl,
                          cfg_.lifecycle.clone_step_budget, cfg_.lifecycle.epsilon_verify, es,
                          observe);
            break;
        case EvolutionMode::RL:
            tr = rl_train(clone, taskset_, registry_, cfg_.substrate, cfg_.rl,
                          cfg_.lifecycle.clone_step_budget, cfg_.lifecycle.epsilon_verify, es,
                          observe);
            break;
        case EvolutionMode::GA:
            tr = ga_train(clone, taskset_, registry_, cfg_.substrate, cfg_.ga,
                          cfg_.lifecycle.epsilon_verify, es, observe);
            break;
    }
    agent_ref(clone_id).params = tr.params;
    metrics_.val_fitness.insert(metrics_.val_fitness.end(), tr.val_curve.begin(),
                                tr.val_curve.end());

    std::vector<const Task*> val = split_ptrs("val");
    double delta = evaluate_delta(agent_ref(clone_id), agent_ref(agent_id), val, registry_,
                                  cfg_.substrate);
    emit({{"event", "evolution"},
          {"step", step_},
          {"agent", agent_id},
          {"clone", clone_id},
          {"mode", mode_name(mode)},
          {"steps_used", tr.steps_used},
          {"delta", delta}});

    PromotionRecord rec =
        promote_or_reject(delta, cfg_.lifecycle.epsilon_verify, clone_id, agent_id, roster_,
                          static_cast<long>(val.size()), step_);
    nlohmann::json rec_json = rec;
    rec_json["event"] = rec.decision == PromotionDecision::promoted ? "promotion" : "rejection";
    rec_json["step"] = step_;
    emit(rec_json);

    failures_.clear(agent_id);
    if (rec.decision == PromotionDecision::promoted) {
        ++metrics_.promotions;
        if (metrics_.first_promotion_episode < 0)
            metrics_.first_promotion_episode = metrics_.episodes;
        double cand_fit = fitness(agent_ref(clone_id).params, val, registry_, cfg_.substrate);
        MetricPoint p;
        p.x = agent_ref(clone_id).generation;
        p.y = cand_fit;
        metrics_.generation_points.push_back(p);
        rejections_[root] = 0;
        failures_.clear(clone_id);
    } else {
        ++metrics_.rejections;
        rejections_[root] = prior_rej + 1;
        bool terminal_mode =
            cfg_.mode_policy.kind == ModeSelectKind::fixed || mode == EvolutionMode::GA;
        if (rejections_[root] >= cfg_.lifecycle.max_rejections && terminal_mode) {
            plateaued_.insert(root);
            emit({{"event", "plateau"}, {"step", step_}, {"lineage", root}});
        }
    }
}

bool LifecycleRun::step() {
    if (status_ != RunStatus::running) return false;
    if (step_ >= static_cast<long>(stream_.size())) {
        emit({{"event", "run_end"},
              {"step", step_},
              {"status", "completed"},
              {"final_agent", active_agent().id}});
        status_ = RunStatus::completed;
        ended_ = true;
        return false;
    }

    const Task& task = index_.at(stream_[step_]);
    rng::Stream route_rng =
        rng::Stream::derive(cfg_.seed, {rng::hash64("route"), static_cast<std::uint64_t>(step_)});
    std::string agent_id = route(task, roster_, cfg_.router, route_rng).id;
    emit({{"event", "route"}, {"step", step_}, {"task", task.id}, {"agent", agent_id}});

    auto do_attempt = [&](int retry) {
        rng::Stream arng = rng::Stream::derive(
            cfg_.seed, {rng::hash64("attempt"), rng::hash64(agent_id), rng::hash64(task.id),
                        static_cast<std::uint64_t>(step_ * 2 + retry)});
        Trace t = attempt(agent_ref(agent_id), task, registry_, cfg_.substrate, arng);
        metrics_.record_attempt(!t.tool_used.empty(), t.cost_incurred, t.success,
                                cfg_.metrics.tool_use_window);
        emit({{"event", "attempt"},
              {"step", step_},
              {"task", task.id},
              {"agent", agent_id},
              {"retry", retry},
              {"success", t.success},
              {"tool", t.tool_used},
              {"unsafe", t.unsafe},
              {"reward", trace_reward(t, cfg_.substrate.lambda_cost)}});
        return t;
    };

    Trace tr = do_attempt(0);
    if (check_safety(safety_, tr) == SafetyStatus::violation) {
        halt_safety(step_);
        return false;
    }

    if (!tr.success) {
        std::vector<double> gap = capability_gap(task, registry_);
        double gap_l1 = std::accumulate(gap.begin(), gap.end(), 0.0);
        if (gap_l1 > 0.0) {
            rng::Stream srng = rng::Stream::derive(
                cfg_.seed, {rng::hash64("synth"), static_cast<std::uint64_t>(step_)});
            std::optional<Tool> tool =
                synthesize(task, gap, cfg_.forge, registry_, srng, step_);
            if (!tool) {
                ++metrics_.refusals;
                emit({{"event", "budget_refusal"},
                      {"step", step_},
                      {"task", task.id},
                      {"spent", registry_.spent},
                      {"budget", registry_.budget}});
            } else {
                ++metrics_.syntheses;
                rng::Stream vrng = rng::Stream::derive(
                    cfg_.seed, {rng::hash64("validate"), static_cast<std::uint64_t>(step_)});
                bool accepted =
                    validate(*tool, {}, cfg_.forge.validate_trials, cfg_.forge, vrng);
                emit({{"event", "synthesis"},
                      {"step", step_},
                      {"task", task.id},
                      {"tool", tool->id},
                      {"cost", tool->cost},
                      {"accepted", accepted}});
                if (accepted) {
                    deploy(registry_, *tool);
                    emit({{"event", "deploy"},
                          {"step", step_},
                          {"tool", tool->id},
                          {"cost", tool->cost},
                          {"spent", registry_.spent}});
                    Trace tr2 = do_attempt(1);
                    if (check_safety(safety_, tr2) == SafetyStatus::violation) {
                        halt_safety(step_);
                        return false;
                    }
                    tr = tr2;
                }
            }
        }
    }

    double reward = trace_reward(tr, cfg_.substrate.lambda_cost);
    bool triggered = failures_.record_and_detect(agent_id, reward);
    if (triggered) {
        std::string root = lineage_root(agent_id);
        failures_.clear(agent_id);
        if (plateaued_.count(root) == 0) {
            emit({{"event", "failure_trigger"},
                  {"step", step_},
                  {"agent", agent_id},
                  {"window", failures_.window()}});
            run_episode(agent_id, task.difficulty);
        }
    }

    ++step_;
    return true;
}

void LifecycleRun::run() {
    while (step()) {
    }
}

nlohmann::json LifecycleRun::state_json() const {
    nlohmann::json rejections = nlohmann::json::object();
    for (const auto& [id, n] : rejections_) rejections[id] = n;
    return nlohmann::json{
        {"step", step_},
        {"status", status_name(status_)},
        {"roster", roster_},
        {"registry", registry_},
        {"failures", failures_.to_json()},
        {"safety",
         {{"delta_safe", safety_.delta_safe},
          {"unsafe_count", safety_.unsafe_count},
          {"total_count", safety_.total_count}}},
        {"curriculum", curriculum_},
        {"rejections", rejections},
        {"plateaued", std::vector<std::string>(plateaued_.begin(), plateaued_.end())},
        {"clone_seq", clone_seq_},
        {"metrics", metrics_}};
}

nlohmann::json LifecycleRun::summary() const {
    std::vector<const Task*> val = split_ptrs("val");
    std::vector<const Task*> test = split_ptrs("test");
    const Agent& final_agent = active_agent();
    const Agent& seed = seed_agent();
    double tool_cost_per_success =
        metrics_.total_tool_cost / static_cast<double>(std::max<long>(1, metrics_.successes));
    long learning_speed = metrics_.first_promotion_episode > 0
                              ? metrics_.first_promotion_episode
                              : metrics_.episodes + 1;
    return nlohmann::json{
        {"schema", "agentevo-summary"},
        {"v", 1},
        {"seed", cfg_.seed},
        {"status", status_name(status_)},
        {"steps", step_},
        {"episodes", metrics_.episodes},
        {"promotions", metrics_.promotions},
        {"rejections", metrics_.rejections},
        {"syntheses", metrics_.syntheses},
        {"refusals", metrics_.refusals},
        {"final_agent", final_agent.id},
        {"final_generation", final_agent.generation},
        {"seed_val_fitness", fitness(seed.params, val, registry_, cfg_.substrate)},
        {"final_val_fitness", fitness(final_agent.params, val, registry_, cfg_.substrate)},
        {"seed_test_fitness", fitness(seed.params, test, registry_, cfg_.substrate)},
        {"final_test_fitness", fitness(final_agent.params, test, registry_, cfg_.substrate)},
        {"stability", metrics_.stability()},
        {"exploration_cells", metrics_.cells.size()},
        {"tool_cost_per_success", tool_cost_per_success},
        {"learning_speed_episodes", learning_speed},
        {"attempts", metrics_.attempts},
        {"successes", metrics_.successes},
        {"unsafe_count", safety_.unsafe_count},
        {"total_traces", safety_.total_count},
        {"spent", registry_.spent},
        {"budget", registry_.budget}};
}

std::vector<MetricSeries> LifecycleRun::series() const {
    std::vector<MetricSeries> out;
    const Agent& final_agent = active_agent();

    MetricSeries by_tier;
    by_tier.name = "success_rate_by_difficulty";
    by_tier.x_label = "difficulty";
    std::map<int, std::vector<double>> per_tier;
    for (const Task* t : split_ptrs("test")) {
        const Tool* tool = choose_tool(final_agent, *t, registry_);
        double p = success_prob(final_agent.params, *t, tool, cfg_.substrate) *
                   (tool != nullptr ? tool->exec_prob : 1.0);
        per_tier[t->difficulty].push_back(p);
    }
    for (const auto& [tier, vals] : per_tier) {
        double mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                      static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size());
        MetricPoint p;
        p.x = tier;
        p.y = mean;
        p.stderr_ = std::sqrt(var / static_cast<double>(vals.size()));
        by_tier.points.push_back(p);
    }
    out.push_back(std::move(by_tier));

    MetricSeries tool_use;
    tool_use.name = "tool_use_over_training";
    tool_use.x_label = "attempt_window";
    tool_use.points = metrics_.tool_use_points;
    out.push_back(std::move(tool_use));

    MetricSeries gens;
    gens.name = "perf_across_generations";
    gens.x_label = "generation";
    gens.points = metrics_.generation_points;
    out.push_back(std::move(gens));

    MetricSeries valfit;
    valfit.name = "val_fitness_over_training";
    valfit.x_label = "training_update";
    for (std::size_t i = 0; i < metrics_.val_fitness.size(); ++i) {
        MetricPoint p;
        p.x = static_cast<double>(i + 1);
        p.y = metrics_.val_fitness[i];
        valfit.points.push_back(p);
    }
    out.push_back(std::move(valfit));
    return out;
}

}  // namespace agentevo
