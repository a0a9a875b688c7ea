#pragma once
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "agentevo/agent.hpp"

namespace agentevo {

struct MetricPoint {
    double x = 0.0;
    double y = 0.0;
    double stderr_ = 0.0;

    bool operator==(const MetricPoint&) const = default;
};

struct MetricSeries {
    std::string name;
    std::string x_label;
    std::vector<MetricPoint> points;  // x strictly increasing

    bool operator==(const MetricSeries&) const = default;
};

// Locale-independent shortest-round-trip formatting (dot decimal).
std::string format_number(double v);

// Grid cell of a parameter vector: coordinates floored to cell_size, hashed.
std::uint64_t param_cell(const AgentParams& params, double cell_size);

// Rolling tallies a lifecycle run feeds; everything here serializes into the
// checkpoint so a resumed run continues the same series.
struct MetricsAccum {
    // tool-use windows
    long win_attempts = 0;
    long win_tool_calls = 0;
    long windows_done = 0;
    std::vector<MetricPoint> tool_use_points;
    // validation fitness after every training update, across all episodes
    std::vector<double> val_fitness;
    // (generation, fitness) per promotion, preceded by the seed point
    std::vector<MetricPoint> generation_points;
    // distinct parameter cells visited during training
    std::set<std::uint64_t> cells;
    // run totals
    double total_tool_cost = 0.0;
    long successes = 0;
    long attempts = 0;
    long episodes = 0;
    long promotions = 0;
    long rejections = 0;
    long refusals = 0;
    long syntheses = 0;
    long first_promotion_episode = -1;  // 1-based; -1 while none

    void record_attempt(bool used_tool, double cost, bool success, long window_size);
    void record_params(const AgentParams& params, double cell_size);

    // 1/(sigma + 1e-9) over the val-fitness curve; 0 points give sigma 0.
    double stability() const;

    bool operator==(const MetricsAccum&) const = default;
};

void to_json(nlohmann::json& j, const MetricPoint& p);
void from_json(const nlohmann::json& j, MetricPoint& p);
void to_json(nlohmann::json& j, const MetricSeries& s);
void from_json(const nlohmann::json& j, MetricSeries& s);
void to_json(nlohmann::json& j, const MetricsAccum& m);
void from_json(const nlohmann::json& j, MetricsAccum& m);

enum class ReportFormat { csv, jsonl };

// series CSV schema: series,x,y,stderr (one row per point; header always).
void emit_series(const std::vector<MetricSeries>& series, const std::string& path,
                 ReportFormat format);
std::string render_series(const std::vector<MetricSeries>& series, ReportFormat format);

}  // namespace agentevo
