#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "agentevo/config.hpp"
#include "agentevo/lifecycle.hpp"
#include "agentevo/metrics.hpp"

namespace agentevo {

// Per-run scores feeding the seven-dimension comparison.
struct RunMeasures {
    double learning_speed = 0.0;   // evolution episodes until first promotion; lower is better
    double generalization = 0.0;   // final agent's test-split fitness
    double mastery = 0.0;          // mean success probability on the top difficulty tier
    double exploration = 0.0;      // distinct parameter cells visited in training
    double stability = 0.0;        // inverse std-dev of the validation curve
    double tool_efficiency = 0.0;  // tool cost per success; lower is better
    double seed_test_fitness = 0.0;
    AgentParams final_params;
};

struct RunArtifacts {
    RunStatus status = RunStatus::completed;
    std::vector<std::string> log_lines;
    nlohmann::json summary;
    std::vector<MetricSeries> series;
    RunMeasures measures;
};

// Generates + splits the taskset from the config seed, runs the lifecycle to
// completion, and packages log, summary, series, and measures.
RunArtifacts run_experiment(const RunConfig& cfg);
RunArtifacts run_experiment(const RunConfig& cfg, TaskSet taskset);

struct CriteriaEntry {
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct CriteriaReport {
    std::vector<std::string> dimensions;  // fixed order, seven entries
    std::vector<std::string> paradigms;   // cl, rl, ga
    std::map<std::string, std::map<std::string, CriteriaEntry>> scores;
    std::map<std::string, std::string> winner;  // paradigm name, or "tie:a,b"
};

// Runs every paradigm as a fixed-mode experiment on each seed (>= 3 required)
// and aggregates the seven dimensions with per-dimension winners.
CriteriaReport compare_paradigms(const RunConfig& base, const std::vector<std::uint64_t>& seeds);

// criteria CSV schema: dimension,paradigm,mean,stderr,winner.
std::string render_criteria(const CriteriaReport& report, ReportFormat format);
void emit_criteria(const CriteriaReport& report, const std::string& path, ReportFormat format);

struct Checkpoint {
    RunConfig config;
    TaskSet taskset;
    nlohmann::json state;
};

// Versioned envelope embedding config, taskset, and lifecycle state; loading
// never mutates anything on failure, it throws instead.
void checkpoint_save(const std::string& path, const RunConfig& cfg, const LifecycleRun& run);
Checkpoint checkpoint_load(const std::string& path);

}  // namespace agentevo
