#pragma once
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "agentevo/agent.hpp"
#include "agentevo/config.hpp"
#include "agentevo/evolution.hpp"
#include "agentevo/metrics.hpp"
#include "agentevo/router.hpp"
#include "agentevo/task.hpp"
#include "agentevo/toolforge.hpp"

namespace agentevo {

// Sliding-window estimate of E[reward] per agent; trigger fires only on a
// full window whose mean is strictly below epsilon_fail.
class FailureMonitor {
  public:
    FailureMonitor() = default;
    FailureMonitor(int window, double epsilon_fail);

    bool record_and_detect(const std::string& agent_id, double reward);
    void clear(const std::string& agent_id);

    int window() const { return window_; }
    double epsilon_fail() const { return epsilon_fail_; }

    nlohmann::json to_json() const;
    static FailureMonitor from_json(const nlohmann::json& j);

    bool operator==(const FailureMonitor&) const = default;

  private:
    int window_ = 20;
    double epsilon_fail_ = 0.3;
    std::map<std::string, std::deque<double>> recent_;
};

enum class SafetyStatus { ok, violation };

struct SafetyMonitor {
    double delta_safe = 0.05;
    long unsafe_count = 0;
    long total_count = 0;

    bool operator==(const SafetyMonitor&) const = default;
};

// One-sided 95% Wilson upper bound on a binomial rate.
double wilson_upper(long count, long total, double z = 1.6448536269514722);

// Updates the counters; a clean history is always ok, otherwise the Wilson
// upper bound of the unsafe rate is held against delta_safe.
SafetyStatus check_safety(SafetyMonitor& monitor, const Trace& trace);

EvolutionMode select_mode(const ModeSelectConfig& policy, int tier, int prior_rejections);

// Deep copy with fresh identity; the original keeps serving while the clone
// trains. Cloning anything but an active agent is a contract violation.
Agent clone_agent(const Agent& agent, const std::string& new_id);

// fitness(candidate) - fitness(incumbent) on the same tasks and registry.
double evaluate_delta(const Agent& candidate, const Agent& incumbent,
                      const std::vector<const Task*>& validation, const ToolRegistry& registry,
                      const SubstrateConfig& sub);

enum class PromotionDecision { promoted, rejected };

struct PromotionRecord {
    std::string original_id;
    std::string clone_id;
    double delta_perf = 0.0;
    double epsilon_verify = 0.0;
    PromotionDecision decision = PromotionDecision::rejected;
    long val_size = 0;
    long timestamp = 0;  // lifecycle step index
};

// delta >= epsilon_verify promotes the candidate and retires the incumbent in
// one roster update; otherwise the candidate retires and the incumbent stays.
PromotionRecord promote_or_reject(double delta, double epsilon_verify,
                                  const std::string& candidate_id,
                                  const std::string& incumbent_id, std::vector<Agent>& roster,
                                  long val_size, long timestamp);

void to_json(nlohmann::json& j, const PromotionRecord& r);
void from_json(const nlohmann::json& j, PromotionRecord& r);

enum class RunStatus { running, completed, halted_safety };

std::string status_name(RunStatus s);
RunStatus status_from_name(const std::string& s);

// The orchestrator: route, attempt, synthesis escalation, failure-triggered
// evolution episodes, promotion gating, safety halt, JSONL event log. The
// whole run is a pure function of (config, taskset embedded seed).
class LifecycleRun {
  public:
    LifecycleRun(const RunConfig& cfg, TaskSet taskset);
    LifecycleRun(const RunConfig& cfg, TaskSet taskset, const nlohmann::json& state);

    // Executes one task; returns false once the run is finished or halted.
    bool step();
    void run();

    RunStatus status() const { return status_; }
    long current_step() const { return step_; }
    const std::vector<std::string>& log_lines() const { return log_; }
    const std::vector<Agent>& roster() const { return roster_; }
    const ToolRegistry& tool_registry() const { return registry_; }
    const TaskSet& taskset() const { return taskset_; }
    const MetricsAccum& metrics() const { return metrics_; }
    const Agent& active_agent() const;
    const Agent& seed_agent() const { return roster_.front(); }

    nlohmann::json state_json() const;
    nlohmann::json summary() const;
    std::vector<MetricSeries> series() const;

  private:
    void build_stream();
    void emit(nlohmann::json event);
    std::vector<const Task*> split_ptrs(const std::string& split) const;
    std::string lineage_root(const std::string& agent_id) const;
    Agent& agent_ref(const std::string& id);
    void run_episode(const std::string& agent_id, int tier);
    void halt_safety(long at_step);

    RunConfig cfg_;
    TaskSet taskset_;
    TaskIndex index_;
    std::vector<std::string> stream_;  // derived, not serialized

    long step_ = 0;
    RunStatus status_ = RunStatus::running;
    std::vector<Agent> roster_;
    ToolRegistry registry_;
    FailureMonitor failures_;
    SafetyMonitor safety_;
    CurriculumState curriculum_;
    std::map<std::string, int> rejections_;  // by lineage root
    std::set<std::string> plateaued_;        // lineage roots
    long clone_seq_ = 0;
    MetricsAccum metrics_;
    std::vector<std::string> log_;
    bool ended_ = false;
};

}  // namespace agentevo
