#include "agentevo/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "agentevo/errors.hpp"
#include "agentevo/rng.hpp"

namespace agentevo {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t param_cell(const AgentParams& params, double cell_size) {
    std::uint64_t h = 1469598103934665603ull;
    auto fold = [&h](double v) {
        auto q = static_cast<std::int64_t>(std::floor(v));
        h = rng::mix64(h ^ static_cast<std::uint64_t>(q));
    };
    for (double w : params.weights) fold(w / cell_size);
    fold(params.bias / cell_size);
    return h;
}

void MetricsAccum::record_attempt(bool used_tool, double cost, bool success, long window_size) {
    ++attempts;
    ++win_attempts;
    if (used_tool) ++win_tool_calls;
    total_tool_cost += cost;
    if (success) ++successes;
    if (win_attempts >= window_size) {
        ++windows_done;
        MetricPoint p;
        p.x = static_cast<double>(windows_done);
        p.y = static_cast<double>(win_tool_calls) / static_cast<double>(win_attempts);
        tool_use_points.push_back(p);
        win_attempts = 0;
        win_tool_calls = 0;
    }
}

void MetricsAccum::record_params(const AgentParams& params, double cell_size) {
    cells.insert(param_cell(params, cell_size));
}

double MetricsAccum::stability() const {
    if (val_fitness.size() < 2) return 1.0 / 1e-9;
    double mean = 0.0;
    for (double v : val_fitness) mean += v;
    mean /= static_cast<double>(val_fitness.size());
    double var = 0.0;
    for (double v : val_fitness) var += (v - mean) * (v - mean);
    var /= static_cast<double>(val_fitness.size());
    return 1.0 / (std::sqrt(var) + 1e-9);
}

void to_json(nlohmann::json& j, const MetricPoint& p) {
    j = nlohmann::json{{"x", p.x}, {"y", p.y}, {"stderr", p.stderr_}};
}

void from_json(const nlohmann::json& j, MetricPoint& p) {
    j.at("x").get_to(p.x);
    j.at("y").get_to(p.y);
    j.at("stderr").get_to(p.stderr_);
}

void to_json(nlohmann::json& j, const MetricSeries& s) {
    j = nlohmann::json{{"name", s.name}, {"x_label", s.x_label}, {"points", s.points}};
}

void from_json(const nlohmann::json& j, MetricSeries& s) {
    j.at("name").get_to(s.name);
    j.at("x_label").get_to(s.x_label);
    j.at("points").get_to(s.points);
}

void to_json(nlohmann::json& j, const MetricsAccum& m) {
    j = nlohmann::json{{"win_attempts", m.win_attempts},
                       {"win_tool_calls", m.win_tool_calls},
                       {"windows_done", m.windows_done},
                       {"tool_use_points", m.tool_use_points},
                       {"val_fitness", m.val_fitness},
                       {"generation_points", m.generation_points},
                       {"cells", std::vector<std::uint64_t>(m.cells.begin(), m.cells.end())},
                       {"total_tool_cost", m.total_tool_cost},
                       {"successes", m.successes},
                       {"attempts", m.attempts},
                       {"episodes", m.episodes},
                       {"promotions", m.promotions},
                       {"rejections", m.rejections},
                       {"refusals", m.refusals},
                       {"syntheses", m.syntheses},
                       {"first_promotion_episode", m.first_promotion_episode}};
}

void from_json(const nlohmann::json& j, MetricsAccum& m) {
    j.at("win_attempts").get_to(m.win_attempts);
    j.at("win_tool_calls").get_to(m.win_tool_calls);
    j.at("windows_done").get_to(m.windows_done);
    j.at("tool_use_points").get_to(m.tool_use_points);
    j.at("val_fitness").get_to(m.val_fitness);
    j.at("generation_points").get_to(m.generation_points);
    std::vector<std::uint64_t> cells = j.at("cells").get<std::vector<std::uint64_t>>();
    m.cells = std::set<std::uint64_t>(cells.begin(), cells.end());
    j.at("total_tool_cost").get_to(m.total_tool_cost);
    j.at("successes").get_to(m.successes);
    j.at("attempts").get_to(m.attempts);
    j.at("episodes").get_to(m.episodes);
    j.at("promotions").get_to(m.promotions);
    j.at("rejections").get_to(m.rejections);
    j.at("refusals").get_to(m.refusals);
    j.at("syntheses").get_to(m.syntheses);
    j.at("first_promotion_episode").get_to(m.first_promotion_episode);
}

std::string render_series(const std::vector<MetricSeries>& series, ReportFormat format) {
    std::string out;
    if (format == ReportFormat::csv) {
        out += "series,x,y,stderr\n";
        for (const MetricSeries& s : series)
            for (const MetricPoint& p : s.points)
                out += s.name + "," + format_number(p.x) + "," + format_number(p.y) + "," +
                       format_number(p.stderr_) + "\n";
        return out;
    }
    for (const MetricSeries& s : series) {
        nlohmann::json j = s;
        out += j.dump() + "\n";
    }
    return out;
}

void emit_series(const std::vector<MetricSeries>& series, const std::string& path,
                 ReportFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << render_series(series, format);
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace agentevo
