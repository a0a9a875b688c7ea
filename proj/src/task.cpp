#include "agentevo/task.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "agentevo/errors.hpp"
#include "agentevo/rng.hpp"

namespace agentevo {

using nlohmann::json;

const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::reasoning: return "reasoning";
        case StepKind::tool_call: return "tool_call";
        case StepKind::observation: return "observation";
    }
    return "reasoning";
}

StepKind step_kind_from_name(const std::string& name) {
    if (name == "reasoning") return StepKind::reasoning;
    if (name == "tool_call") return StepKind::tool_call;
    if (name == "observation") return StepKind::observation;
    throw SchemaError("unknown step kind '" + name + "'");
}

TaskIndex::TaskIndex(const TaskSet& set) {
    by_id_.reserve(set.tasks.size());
    for (const Task& t : set.tasks) by_id_.emplace(t.id, &t);
}

const Task* TaskIndex::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : it->second;
}

const Task& TaskIndex::at(const std::string& id) const {
    const Task* t = find(id);
    if (!t) throw ContractError("unknown task id '" + id + "'");
    return *t;
}

std::vector<double> embed_text(const std::string& text, int dim) {
    std::vector<double> out(static_cast<size_t>(dim), 0.0);
    std::string token;
    size_t n_tokens = 0;
    auto flush = [&] {
        if (token.empty()) return;
        uint64_t h = rng::hash64(token);
        size_t idx = h % static_cast<uint64_t>(dim);
        double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
        out[idx] += sign;
        ++n_tokens;
        token.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    if (n_tokens > 0) {
        double scale = 1.0 / std::sqrt(static_cast<double>(n_tokens));
        for (double& v : out) v *= scale;
    }
    return out;
}

std::vector<double> caps_from_tool_calls(const std::vector<std::string>& calls, int dim) {
    std::vector<double> caps(static_cast<size_t>(dim), 0.0);
    for (const std::string& name : calls) {
        uint64_t h = rng::hash64(name);
        size_t idx = h % static_cast<uint64_t>(dim);
        double level = 0.3 + 0.7 * (static_cast<double>(rng::mix64(h) >> 11) * 0x1.0p-53);
        caps[idx] = std::max(caps[idx], level);
    }
    return caps;
}

std::map<int, std::vector<std::string>> bucketize(const std::vector<Task>& tasks) {
    std::map<int, std::vector<std::string>> buckets;
    for (const Task& t : tasks) buckets[t.difficulty].push_back(t.id);
    return buckets;
}

TaskSet generate_tasks(const GeneratorConfig& cfg, uint64_t seed) {
    if (cfg.feature_dim <= 0) throw ConfigError("generator.feature_dim: must be > 0");
    if (cfg.d_max <= 0) throw ConfigError("generator.d_max: must be > 0");
    if (cfg.count_per_tier <= 0) throw ConfigError("generator.count_per_tier: must be > 0");
    if (cfg.cap_base < 0.0) throw ConfigError("generator.cap_base: must be >= 0");
    if (cfg.cap_slope < 0.0) throw ConfigError("generator.cap_slope: must be >= 0");
    if (cfg.feature_sd < 0.0) throw ConfigError("generator.feature_sd: must be >= 0");

    TaskSet set;
    set.tasks.reserve(static_cast<size_t>(cfg.d_max) * cfg.count_per_tier);
    for (int tier = 1; tier <= cfg.d_max; ++tier) {
        double cap_ceiling = std::min(1.0, cfg.cap_base + cfg.cap_slope * (tier - 1));
        for (int i = 0; i < cfg.count_per_tier; ++i) {
            auto sub = rng::Stream::derive(seed, {rng::hash64("task"),
                                                 static_cast<uint64_t>(tier),
                                                 static_cast<uint64_t>(i)});
            Task t;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "t%d-%04d", tier, i);
            t.id = buf;
            t.features.resize(static_cast<size_t>(cfg.feature_dim));
            for (double& f : t.features) f = sub.gaussian(0.0, cfg.feature_sd);
            t.required_caps.resize(static_cast<size_t>(cfg.feature_dim));
            for (double& c : t.required_caps) c = sub.uniform(0.0, cap_ceiling);
            t.composition_depth = tier < cfg.d_max ? tier : cfg.d_max + sub.uniform_int(0, 2);
            t.difficulty = std::clamp(t.composition_depth, 1, cfg.d_max);
            t.gold_output = "g-" + t.id;
            t.gold_trace.reserve(static_cast<size_t>(t.composition_depth));
            for (int s = 0; s < t.composition_depth; ++s) {
                StepRecord step;
                switch (s % 3) {
                    case 0: step.kind = StepKind::reasoning; break;
                    case 1:
                        step.kind = StepKind::tool_call;
                        step.tool_id = "gt" + std::to_string(s);
                        break;
                    default: step.kind = StepKind::observation; break;
                }
                step.payload = "s" + std::to_string(s);
                t.gold_trace.push_back(std::move(step));
            }
            set.tasks.push_back(std::move(t));
        }
    }
    set.buckets = bucketize(set.tasks);
    return set;
}

namespace {

json step_to_record_json(const StepRecord& s) {
    json j;
    j["kind"] = step_kind_name(s.kind);
    if (s.kind == StepKind::tool_call) j["tool_id"] = s.tool_id;
    j["payload"] = s.payload;
    return j;
}

StepRecord step_from_record_json(const json& j, long line) {
    auto where = [line] { return "line " + std::to_string(line); };
    if (!j.is_object()) throw SchemaError(where() + ": trajectory step is not an object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw SchemaError(where() + ": trajectory step missing field 'kind'");
    StepRecord s;
    try {
        s.kind = step_kind_from_name(j.at("kind").get<std::string>());
    } catch (const SchemaError& e) {
        throw SchemaError(where() + ": " + e.what());
    }
    bool has_tool = j.contains("tool_id");
    if (s.kind == StepKind::tool_call) {
        if (!has_tool || !j.at("tool_id").is_string() || j.at("tool_id").get<std::string>().empty())
            throw SchemaError(where() + ": tool_call step requires non-empty 'tool_id'");
        s.tool_id = j.at("tool_id").get<std::string>();
    } else if (has_tool && !j.at("tool_id").is_null() && !j.at("tool_id").get<std::string>().empty()) {
        throw SchemaError(where() + ": 'tool_id' only allowed on tool_call steps");
    }
    if (j.contains("payload")) {
        if (!j.at("payload").is_string()) throw SchemaError(where() + ": 'payload' must be a string");
        s.payload = j.at("payload").get<std::string>();
    }
    return s;
}

}  // namespace

TaskSet ingest_taskcraft_string(const std::string& content, int feature_dim) {
    if (feature_dim <= 0) throw ConfigError("feature_dim: must be > 0");
    TaskSet set;
    std::istringstream in(content);
    std::string line;
    long lineno = 0;
    std::unordered_map<std::string, long> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
        auto where = "line " + std::to_string(lineno);
        if (!j.is_object()) throw SchemaError(where + ": record is not an object");
        auto require = [&](const char* key) -> const json& {
            if (!j.contains(key))
                throw SchemaError(where + ": missing field '" + std::string(key) + "'");
            return j.at(key);
        };
        const json& desc = require("task_description");
        if (!desc.is_string()) throw SchemaError(where + ": 'task_description' must be a string");
        const json& diff = require("difficulty");
        if (!diff.is_number_integer()) throw SchemaError(where + ": 'difficulty' must be an integer");
        const json& traj = require("trajectory");
        if (!traj.is_array()) throw SchemaError(where + ": 'trajectory' must be an array");
        const json& calls = require("tool_calls");
        if (!calls.is_array()) throw SchemaError(where + ": 'tool_calls' must be an array");
        const json& final_out = require("final_output");
        if (!final_out.is_string()) throw SchemaError(where + ": 'final_output' must be a string");

        Task t;
        if (j.contains("id")) {
            if (!j.at("id").is_string()) throw SchemaError(where + ": 'id' must be a string");
            t.id = j.at("id").get<std::string>();
        } else {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "tc-%06ld", lineno);
            t.id = buf;
        }
        auto [it, inserted] = seen.emplace(t.id, lineno);
        if (!inserted) {
            throw DuplicateError(where + ": duplicate id '" + t.id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
        }
        t.description = desc.get<std::string>();
        t.difficulty = diff.get<int>();
        if (t.difficulty < 1) throw SchemaError(where + ": 'difficulty' must be >= 1");
        t.features = embed_text(t.description, feature_dim);
        for (const json& c : calls) {
            if (!c.is_string()) throw SchemaError(where + ": 'tool_calls' entries must be strings");
            t.tool_calls.push_back(c.get<std::string>());
        }
        t.required_caps = caps_from_tool_calls(t.tool_calls, feature_dim);
        for (const json& s : traj) t.gold_trace.push_back(step_from_record_json(s, lineno));
        t.composition_depth = std::max<int>(1, static_cast<int>(t.gold_trace.size()));
        t.gold_output = final_out.get<std::string>();
        set.tasks.push_back(std::move(t));
    }
    set.buckets = bucketize(set.tasks);
    return set;
}

TaskSet ingest_taskcraft(const std::string& path, int feature_dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_taskcraft_string(buf.str(), feature_dim);
}

std::string export_taskcraft_string(const TaskSet& set) {
    std::string out;
    for (const Task& t : set.tasks) {
        json j;
        j["id"] = t.id;
        j["task_description"] = t.description;
        j["difficulty"] = t.difficulty;
        json traj = json::array();
        for (const StepRecord& s : t.gold_trace) traj.push_back(step_to_record_json(s));
        j["trajectory"] = std::move(traj);
        j["tool_calls"] = t.tool_calls;
        j["final_output"] = t.gold_output;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void export_taskcraft(const TaskSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << export_taskcraft_string(set);
}

TaskSet stratified_split(TaskSet set, const SplitRatios& ratios, uint64_t seed) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");
    if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0)
        throw ConfigError("split: ratios must be non-negative");

    const std::array<const char*, 3> names = {"train", "val", "test"};
    const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};

    set.splits.clear();
    for (const char* n : names) set.splits[n];  // keep all three keys present

    for (const auto& [tier, ids] : set.buckets) {
        std::vector<std::string> shuffled = ids;
        auto sub = rng::Stream::derive(seed, {rng::hash64("split"), static_cast<uint64_t>(tier)});
        for (size_t i = shuffled.size(); i > 1; --i) {
            size_t k = static_cast<size_t>(sub.uniform_int(0, static_cast<int>(i) - 1));
            std::swap(shuffled[i - 1], shuffled[k]);
        }
        const size_t n = shuffled.size();
        std::array<size_t, 3> count{};
        std::array<double, 3> frac{};
        size_t assigned = 0;
        for (int s = 0; s < 3; ++s) {
            double exact = static_cast<double>(n) * r[s];
            count[s] = static_cast<size_t>(std::floor(exact + 1e-9));
            frac[s] = exact - static_cast<double>(count[s]);
            assigned += count[s];
        }
        // Largest-remainder for the leftover; ties go to the earlier split.
        while (assigned < n) {
            int best = -1;
            for (int s = 0; s < 3; ++s) {
                if (r[s] <= 0.0) continue;
                if (best < 0 || frac[s] > frac[best] + 1e-12) best = s;
            }
            if (best < 0) best = 0;
            ++count[best];
            frac[best] -= 1.0;
            ++assigned;
        }
        size_t pos = 0;
        for (int s = 0; s < 3; ++s) {
            for (size_t k = 0; k < count[s]; ++k) set.splits[names[s]].push_back(shuffled[pos++]);
        }
    }
    return set;
}

void to_json(json& j, const StepRecord& s) {
    j = json{{"kind", step_kind_name(s.kind)}, {"payload", s.payload}};
    if (s.kind == StepKind::tool_call) j["tool_id"] = s.tool_id;
}

void from_json(const json& j, StepRecord& s) {
    s.kind = step_kind_from_name(j.at("kind").get<std::string>());
    s.payload = j.value("payload", std::string());
    s.tool_id = j.value("tool_id", std::string());
}

void to_json(json& j, const Task& t) {
    j = json{{"id", t.id},
             {"features", t.features},
             {"difficulty", t.difficulty},
             {"required_caps", t.required_caps},
             {"composition_depth", t.composition_depth},
             {"gold_output", t.gold_output},
             {"gold_trace", t.gold_trace},
             {"description", t.description},
             {"tool_calls", t.tool_calls}};
}

void from_json(const json& j, Task& t) {
    j.at("id").get_to(t.id);
    j.at("features").get_to(t.features);
    j.at("difficulty").get_to(t.difficulty);
    j.at("required_caps").get_to(t.required_caps);
    j.at("composition_depth").get_to(t.composition_depth);
    j.at("gold_output").get_to(t.gold_output);
    j.at("gold_trace").get_to(t.gold_trace);
    t.description = j.value("description", std::string());
    t.tool_calls = j.value("tool_calls", std::vector<std::string>());
}

void to_json(json& j, const TaskSet& s) {
    j = json{{"tasks", s.tasks}, {"buckets", s.buckets}, {"splits", s.splits}};
}

void from_json(const json& j, TaskSet& s) {
    j.at("tasks").get_to(s.tasks);
    s.buckets.clear();
    for (const auto& [k, v] : j.at("buckets").items())
        s.buckets[std::stoi(k)] = v.get<std::vector<std::string>>();
    j.at("splits").get_to(s.splits);
}

std::string taskset_to_string(const TaskSet& set) {
    json j{{"schema", "agentevo-taskset"}, {"v", 1}, {"taskset", set}};
    return j.dump();
}

TaskSet taskset_from_string(const std::string& content) {
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid taskset JSON: ") + e.what());
    }
    if (j.value("schema", std::string()) != "agentevo-taskset")
        throw VersionError("not a taskset checkpoint");
    if (j.value("v", 0) != 1)
        throw VersionError("unsupported taskset version " + std::to_string(j.value("v", 0)));
    return j.at("taskset").get<TaskSet>();
}

void save_taskset(const TaskSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << taskset_to_string(set);
}

TaskSet load_taskset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return taskset_from_string(buf.str());
}

}  // namespace agentevo
