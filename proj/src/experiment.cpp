#include "agentevo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "agentevo/errors.hpp"

namespace agentevo {
namespace {

RunMeasures collect_measures(const LifecycleRun& run) {
    RunMeasures m;
    nlohmann::json summary = run.summary();
    m.learning_speed = summary.at("learning_speed_episodes").get<double>();
    m.generalization = summary.at("final_test_fitness").get<double>();
    m.seed_test_fitness = summary.at("seed_test_fitness").get<double>();
    m.exploration = static_cast<double>(run.metrics().cells.size());
    m.stability = run.metrics().stability();
    m.tool_efficiency = summary.at("tool_cost_per_success").get<double>();
    m.final_params = run.active_agent().params;

    int top_tier = 0;
    for (const Task& t : run.taskset().tasks) top_tier = std::max(top_tier, t.difficulty);
    for (const MetricSeries& s : run.series()) {
        if (s.name != "success_rate_by_difficulty") continue;
        for (const MetricPoint& p : s.points)
            if (static_cast<int>(p.x) == top_tier) m.mastery = p.y;
    }
    return m;
}

}  // namespace

RunArtifacts run_experiment(const RunConfig& cfg) {
    TaskSet ts = stratified_split(generate_tasks(cfg.generator, cfg.seed), cfg.split, cfg.seed);
    return run_experiment(cfg, std::move(ts));
}

RunArtifacts run_experiment(const RunConfig& cfg, TaskSet taskset) {
    LifecycleRun run(cfg, std::move(taskset));
    run.run();
    RunArtifacts art;
    art.status = run.status();
    art.log_lines = run.log_lines();
    art.summary = run.summary();
    art.series = run.series();
    art.measures = collect_measures(run);
    return art;
}

namespace {

CriteriaEntry mean_stderr(const std::vector<double>& xs) {
    CriteriaEntry e;
    if (xs.empty()) return e;
    double n = static_cast<double>(xs.size());
    for (double x : xs) e.mean += x;
    e.mean /= n;
    if (xs.size() < 2) return e;
    double var = 0.0;
    for (double x : xs) var += (x - e.mean) * (x - e.mean);
    var /= n - 1.0;
    e.stderr_ = std::sqrt(var / n);
    return e;
}

double param_distance(const AgentParams& a, const AgentParams& b) {
    double acc = (a.bias - b.bias) * (a.bias - b.bias);
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        acc += (a.weights[i] - b.weights[i]) * (a.weights[i] - b.weights[i]);
    return std::sqrt(acc);
}

}  // namespace

CriteriaReport compare_paradigms(const RunConfig& base, const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() < 3) throw ConfigError("compare_paradigms: need at least 3 seeds");

    CriteriaReport report;
    report.dimensions = {"learning_speed", "generalization", "high_difficulty_mastery",
                         "exploration",    "stability",      "diversity",
                         "tool_efficiency"};
    report.paradigms = {"cl", "rl", "ga"};
    std::vector<std::string> lower_better = {"learning_speed", "tool_efficiency"};

    for (EvolutionMode mode : {EvolutionMode::CL, EvolutionMode::RL, EvolutionMode::GA}) {
        std::string name = mode_name(mode);
        std::vector<double> speed, gen, mastery, explore, stab, eff;
        std::vector<AgentParams> finals;
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.seed = seed;
            cfg.mode_policy.kind = ModeSelectKind::fixed;
            cfg.mode_policy.fixed_mode = mode;
            RunArtifacts art = run_experiment(cfg);
            speed.push_back(art.measures.learning_speed);
            gen.push_back(art.measures.generalization);
            mastery.push_back(art.measures.mastery);
            explore.push_back(art.measures.exploration);
            stab.push_back(art.measures.stability);
            eff.push_back(art.measures.tool_efficiency);
            finals.push_back(art.measures.final_params);
        }
        report.scores["learning_speed"][name] = mean_stderr(speed);
        report.scores["generalization"][name] = mean_stderr(gen);
        report.scores["high_difficulty_mastery"][name] = mean_stderr(mastery);
        report.scores["exploration"][name] = mean_stderr(explore);
        report.scores["stability"][name] = mean_stderr(stab);
        report.scores["tool_efficiency"][name] = mean_stderr(eff);

        std::vector<double> dists;
        for (std::size_t i = 0; i < finals.size(); ++i)
            for (std::size_t j = i + 1; j < finals.size(); ++j)
                dists.push_back(param_distance(finals[i], finals[j]));
        report.scores["diversity"][name] = mean_stderr(dists);
    }

    for (const std::string& dim : report.dimensions) {
        bool lower = std::find(lower_better.begin(), lower_better.end(), dim) !=
                     lower_better.end();
        std::vector<std::string> best;
        double best_val = 0.0;
        for (const std::string& p : report.paradigms) {
            double v = report.scores.at(dim).at(p).mean;
            if (best.empty() || (lower ? v < best_val : v > best_val)) {
                best = {p};
                best_val = v;
            } else if (v == best_val) {
                best.push_back(p);
            }
        }
        if (best.size() == 1) {
            report.winner[dim] = best.front();
        } else {
            std::string tie = "tie:";
            for (std::size_t i = 0; i < best.size(); ++i)
                tie += (i != 0 ? "," : "") + best[i];
            report.winner[dim] = tie;
        }
    }
    return report;
}

std::string render_criteria(const CriteriaReport& report, ReportFormat format) {
    std::string out;
    if (format == ReportFormat::csv) {
        out += "dimension,paradigm,mean,stderr,winner\n";
        for (const std::string& dim : report.dimensions)
            for (const std::string& p : report.paradigms) {
                const CriteriaEntry& e = report.scores.at(dim).at(p);
                out += dim + "," + p + "," + format_number(e.mean) + "," +
                       format_number(e.stderr_) + "," + report.winner.at(dim) + "\n";
            }
        return out;
    }
    for (const std::string& dim : report.dimensions) {
        nlohmann::json j{{"dimension", dim}, {"winner", report.winner.at(dim)}};
        for (const std::string& p : report.paradigms) {
            const CriteriaEntry& e = report.scores.at(dim).at(p);
            j[p] = {{"mean", e.mean}, {"stderr", e.stderr_}};
        }
        out += j.dump() + "\n";
    }
    return out;
}

void emit_criteria(const CriteriaReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << render_criteria(report, format);
    if (!out) throw IoError("failed writing " + path);
}

void checkpoint_save(const std::string& path, const RunConfig& cfg, const LifecycleRun& run) {
    nlohmann::json j{{"schema", "agentevo-checkpoint"},
                     {"v", 1},
                     {"config", config_to_json(cfg)},
                     {"taskset", run.taskset()},
                     {"state", run.state_json()}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump() << "\n";
    if (!out) throw IoError("failed writing " + path);
}

Checkpoint checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path + ": " + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != "agentevo-checkpoint")
            throw SchemaError("checkpoint " + path + ": wrong schema tag");
        if (j.at("v").get<int>() != 1)
            throw VersionError("checkpoint " + path + ": unsupported version");
        Checkpoint cp;
        cp.config = parse_config(j.at("config"));
        cp.taskset = j.at("taskset").get<TaskSet>();
        cp.state = j.at("state");
        return cp;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("checkpoint " + path + ": " + e.what());
    }
}

}  // namespace agentevo
