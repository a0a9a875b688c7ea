#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace agentevo {

enum class StepKind { reasoning, tool_call, observation };

const char* step_kind_name(StepKind k);
StepKind step_kind_from_name(const std::string& name);

struct StepRecord {
    StepKind kind = StepKind::reasoning;
    std::string tool_id;  // non-empty iff kind == tool_call
    std::string payload;

    bool operator==(const StepRecord&) const = default;
};

// One unit of work. `description` and `tool_calls` are retained for ingested
// records so a set can be exported back to the same JSONL bytes.
struct Task {
    std::string id;
    std::vector<double> features;       // dimension F
    int difficulty = 1;                 // tier in [1, d_max]
    std::vector<double> required_caps;  // [0,1]^F capability demand
    int composition_depth = 1;
    std::string gold_output;
    std::vector<StepRecord> gold_trace;
    std::string description;
    std::vector<std::string> tool_calls;

    bool operator==(const Task&) const = default;
};

struct TaskSet {
    std::vector<Task> tasks;
    std::map<int, std::vector<std::string>> buckets;            // tier -> ids
    std::map<std::string, std::vector<std::string>> splits;     // train/val/test

    bool operator==(const TaskSet&) const = default;
};

// Id -> Task lookup built over a TaskSet that must outlive the index.
class TaskIndex {
public:
    explicit TaskIndex(const TaskSet& set);
    const Task& at(const std::string& id) const;
    const Task* find(const std::string& id) const;

private:
    std::unordered_map<std::string, const Task*> by_id_;
};

struct GeneratorConfig {
    int feature_dim = 16;
    int d_max = 5;
    int count_per_tier = 100;
    double cap_base = 0.1;    // per-coordinate demand ceiling at tier 1
    double cap_slope = 0.15;  // ceiling growth per tier
    double feature_sd = 1.0;
};

struct SplitRatios {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;
};

TaskSet generate_tasks(const GeneratorConfig& cfg, uint64_t seed);

// Reads TaskCraft-format JSONL: one object per line with task_description,
// difficulty, trajectory, tool_calls and final_output ("id" optional).
TaskSet ingest_taskcraft(const std::string& path, int feature_dim = 16);
TaskSet ingest_taskcraft_string(const std::string& content, int feature_dim = 16);

std::string export_taskcraft_string(const TaskSet& set);
void export_taskcraft(const TaskSet& set, const std::string& path);

// Fills `splits`, preserving tasks and buckets. Per-tier allocation uses
// largest-remainder rounding, so each tier's split counts are within one task
// of the exact ratio.
TaskSet stratified_split(TaskSet set, const SplitRatios& ratios, uint64_t seed);

std::map<int, std::vector<std::string>> bucketize(const std::vector<Task>& tasks);

// Deterministic hash-based bag-of-tokens projection of text into R^dim.
std::vector<double> embed_text(const std::string& text, int dim);

// Capability demand derived from named tool calls, one hashed slot per tool.
std::vector<double> caps_from_tool_calls(const std::vector<std::string>& calls, int dim);

void to_json(nlohmann::json& j, const StepRecord& s);
void from_json(const nlohmann::json& j, StepRecord& s);
void to_json(nlohmann::json& j, const Task& t);
void from_json(const nlohmann::json& j, Task& t);
void to_json(nlohmann::json& j, const TaskSet& s);
void from_json(const nlohmann::json& j, TaskSet& s);

// Versioned checkpoint envelope around the canonical TaskSet JSON.
void save_taskset(const TaskSet& set, const std::string& path);
TaskSet load_taskset(const std::string& path);
std::string taskset_to_string(const TaskSet& set);
TaskSet taskset_from_string(const std::string& content);

}  // namespace agentevo
