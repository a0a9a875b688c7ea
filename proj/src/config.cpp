#include "agentevo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "agentevo/errors.hpp"

namespace agentevo {
namespace {

class Section {
  public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    ~Section() = default;

    void finish() const {
        for (const auto& [key, val] : j_.items())
            if (seen_.count(key) == 0) throw ConfigError(path_ + "." + key + ": unknown key");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const nlohmann::json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    template <typename T>
    void read(const std::string& key, T& out) {
        const nlohmann::json* v = get(key);
        if (v == nullptr) return;  // keep the default
        try {
            out = v->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(path(key) + ": wrong type");
        }
    }

  private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ConfigError(path + ": " + what);
}

void parse_generator(const nlohmann::json& j, GeneratorConfig& g) {
    Section s(j, "generator");
    s.read("feature_dim", g.feature_dim);
    s.read("d_max", g.d_max);
    s.read("count_per_tier", g.count_per_tier);
    s.read("cap_base", g.cap_base);
    s.read("cap_slope", g.cap_slope);
    s.read("feature_sd", g.feature_sd);
    s.finish();
    require(g.feature_dim >= 1, s.path("feature_dim"), "must be >= 1");
    require(g.d_max >= 1, s.path("d_max"), "must be >= 1");
    require(g.count_per_tier >= 1, s.path("count_per_tier"), "must be >= 1");
    require(g.cap_base >= 0.0, s.path("cap_base"), "must be >= 0");
    require(g.cap_slope >= 0.0, s.path("cap_slope"), "must be >= 0");
    require(g.feature_sd > 0.0, s.path("feature_sd"), "must be > 0");
}

void parse_split(const nlohmann::json& j, SplitRatios& r) {
    Section s(j, "split");
    s.read("train", r.train);
    s.read("val", r.val);
    s.read("test", r.test);
    s.finish();
    require(r.train > 0.0, s.path("train"), "must be > 0");
    require(r.val > 0.0, s.path("val"), "must be > 0");
    require(r.test > 0.0, s.path("test"), "must be > 0");
    require(std::abs(r.train + r.val + r.test - 1.0) < 1e-9, "split", "ratios must sum to 1");
}

void parse_substrate(const nlohmann::json& j, SubstrateConfig& c) {
    Section s(j, "substrate");
    s.read("beta", c.beta);
    s.read("hazard_rate", c.hazard_rate);
    s.read("lambda_cost", c.lambda_cost);
    s.read("partial_credit", c.partial_credit);
    s.finish();
    require(c.beta >= 0.0, s.path("beta"), "must be >= 0");
    require(c.hazard_rate >= 0.0 && c.hazard_rate <= 1.0, s.path("hazard_rate"),
            "must be in [0,1]");
    require(c.lambda_cost >= 0.0, s.path("lambda_cost"), "must be >= 0");
}

void parse_forge(const nlohmann::json& j, ForgeConfig& c) {
    Section s(j, "forge");
    s.read("kappa", c.kappa);
    s.read("noise_sd", c.noise_sd);
    s.read("reliability_alpha", c.reliability_alpha);
    s.read("reliability_beta", c.reliability_beta);
    s.read("min_exec_rate", c.min_exec_rate);
    s.read("validate_trials", c.validate_trials);
    s.finish();
    require(c.kappa >= 0.0, s.path("kappa"), "must be >= 0");
    require(c.noise_sd >= 0.0, s.path("noise_sd"), "must be >= 0");
    require(c.reliability_alpha > 0.0, s.path("reliability_alpha"), "must be > 0");
    require(c.reliability_beta > 0.0, s.path("reliability_beta"), "must be > 0");
    require(c.min_exec_rate >= 0.0 && c.min_exec_rate <= 1.0, s.path("min_exec_rate"),
            "must be in [0,1]");
    require(c.validate_trials >= 1, s.path("validate_trials"), "must be >= 1");
}

void parse_router(const nlohmann::json& j, RoutingPolicy& p) {
    Section s(j, "router");
    if (const nlohmann::json* v = s.get("mode")) {
        std::string m = v->get<std::string>();
        if (m == "argmax")
            p.mode = RoutingMode::argmax;
        else if (m == "softmax")
            p.mode = RoutingMode::softmax;
        else
            throw ConfigError(s.path("mode") + ": must be argmax or softmax");
    }
    s.read("temperature", p.temperature);
    s.finish();
    require(p.temperature > 0.0, s.path("temperature"), "must be > 0");
}

void parse_curriculum(const nlohmann::json& j, CurriculumConfig& c) {
    Section s(j, "curriculum");
    s.read("exploration_coefficient", c.exploration_coefficient);
    s.read("ema_decay", c.ema_decay);
    s.finish();
    require(c.exploration_coefficient >= 0.0, s.path("exploration_coefficient"), "must be >= 0");
    require(c.ema_decay > 0.0 && c.ema_decay <= 1.0, s.path("ema_decay"), "must be in (0,1]");
}

void parse_cl(const nlohmann::json& j, ClConfig& c) {
    Section s(j, "cl");
    s.read("batch_size", c.batch_size);
    s.read("eta", c.eta);
    s.read("gamma", c.gamma);
    s.finish();
    require(c.batch_size >= 1, s.path("batch_size"), "must be >= 1");
    require(c.eta >= 0.0, s.path("eta"), "must be >= 0");
    require(c.gamma >= 0.0, s.path("gamma"), "must be >= 0");
}

void parse_rl(const nlohmann::json& j, RlConfig& c) {
    Section s(j, "rl");
    s.read("batch_size", c.batch_size);
    s.read("eta", c.eta);
    s.read("gamma", c.gamma);
    s.read("refit_every", c.refit_every);
    s.read("max_pairs", c.max_pairs);
    s.read("min_pairs", c.min_pairs);
    if (const nlohmann::json* v = s.get("fit")) {
        Section f(*v, "rl.fit");
        f.read("iterations", c.fit.iterations);
        f.read("learning_rate", c.fit.learning_rate);
        f.finish();
    }
    s.finish();
    require(c.batch_size >= 1, s.path("batch_size"), "must be >= 1");
    require(c.eta >= 0.0, s.path("eta"), "must be >= 0");
    require(c.gamma >= 0.0, s.path("gamma"), "must be >= 0");
    require(c.refit_every >= 1, s.path("refit_every"), "must be >= 1");
    require(c.min_pairs >= 1, s.path("min_pairs"), "must be >= 1");
    require(c.max_pairs >= c.min_pairs, s.path("max_pairs"), "must be >= min_pairs");
    require(c.fit.iterations >= 1, "rl.fit.iterations", "must be >= 1");
    require(c.fit.learning_rate > 0.0, "rl.fit.learning_rate", "must be > 0");
}

void parse_ga(const nlohmann::json& j, GaConfig& c) {
    Section s(j, "ga");
    s.read("population_size", c.population_size);
    s.read("generations", c.generations);
    s.read("mutation_variance", c.mutation_variance);
    if (const nlohmann::json* v = s.get("crossover_lambda")) {
        if (v->is_null())
            c.crossover_lambda.reset();
        else
            c.crossover_lambda = v->get<double>();
    }
    s.read("elite_count", c.elite_count);
    s.read("tournament_size", c.tournament_size);
    s.finish();
    require(c.population_size >= 2, s.path("population_size"), "must be >= 2");
    require(c.generations >= 0, s.path("generations"), "must be >= 0");
    require(c.mutation_variance >= 0.0, s.path("mutation_variance"), "must be >= 0");
    if (c.crossover_lambda)
        require(*c.crossover_lambda >= 0.0 && *c.crossover_lambda <= 1.0,
                s.path("crossover_lambda"), "must be in [0,1] or null");
    require(c.elite_count >= 0 && c.elite_count <= c.population_size, s.path("elite_count"),
            "must be in [0, population_size]");
    require(c.tournament_size >= 1, s.path("tournament_size"), "must be >= 1");
}

void parse_mode_policy(const nlohmann::json& j, ModeSelectConfig& c) {
    Section s(j, "mode_policy");
    if (const nlohmann::json* v = s.get("kind")) {
        std::string k = v->get<std::string>();
        if (k == "fixed")
            c.kind = ModeSelectKind::fixed;
        else if (k == "rule")
            c.kind = ModeSelectKind::rule;
        else
            throw ConfigError(s.path("kind") + ": must be fixed or rule");
    }
    if (const nlohmann::json* v = s.get("fixed_mode")) c.fixed_mode = mode_from(v->get<std::string>());
    s.read("tier_threshold", c.tier_threshold);
    s.read("ga_after_rejections", c.ga_after_rejections);
    s.finish();
    require(c.tier_threshold >= 1, s.path("tier_threshold"), "must be >= 1");
    require(c.ga_after_rejections >= 1, s.path("ga_after_rejections"), "must be >= 1");
}

void parse_lifecycle(const nlohmann::json& j, LifecycleConfig& c) {
    Section s(j, "lifecycle");
    s.read("epsilon_fail", c.epsilon_fail);
    s.read("epsilon_verify", c.epsilon_verify);
    s.read("delta_safe", c.delta_safe);
    s.read("c_max", c.c_max);
    s.read("window", c.window);
    s.read("clone_step_budget", c.clone_step_budget);
    s.read("max_rejections", c.max_rejections);
    s.read("n_stream", c.n_stream);
    s.finish();
    require(c.epsilon_verify >= 0.0, s.path("epsilon_verify"), "must be >= 0");
    require(c.delta_safe >= 0.0 && c.delta_safe <= 1.0, s.path("delta_safe"), "must be in [0,1]");
    require(c.c_max >= 0.0, s.path("c_max"), "must be >= 0");
    require(c.window >= 1, s.path("window"), "must be >= 1");
    require(c.clone_step_budget >= 0, s.path("clone_step_budget"), "must be >= 0");
    require(c.max_rejections >= 1, s.path("max_rejections"), "must be >= 1");
    require(c.n_stream >= 1, s.path("n_stream"), "must be >= 1");
}

void parse_metrics(const nlohmann::json& j, MetricsConfig& c) {
    Section s(j, "metrics");
    s.read("tool_use_window", c.tool_use_window);
    s.read("cell_size", c.cell_size);
    s.finish();
    require(c.tool_use_window >= 1, s.path("tool_use_window"), "must be >= 1");
    require(c.cell_size > 0.0, s.path("cell_size"), "must be > 0");
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    Section root(j, "config");
    if (const nlohmann::json* v = root.get("seed")) {
        if (!v->is_number_integer() && !v->is_number_unsigned())
            throw ConfigError("config.seed: must be an integer");
        cfg.seed = v->get<std::uint64_t>();
    }
    if (const nlohmann::json* v = root.get("generator")) parse_generator(*v, cfg.generator);
    if (const nlohmann::json* v = root.get("split")) parse_split(*v, cfg.split);
    if (const nlohmann::json* v = root.get("substrate")) parse_substrate(*v, cfg.substrate);
    if (const nlohmann::json* v = root.get("forge")) parse_forge(*v, cfg.forge);
    if (const nlohmann::json* v = root.get("router")) parse_router(*v, cfg.router);
    if (const nlohmann::json* v = root.get("curriculum")) parse_curriculum(*v, cfg.curriculum);
    if (const nlohmann::json* v = root.get("cl")) parse_cl(*v, cfg.cl);
    if (const nlohmann::json* v = root.get("rl")) parse_rl(*v, cfg.rl);
    if (const nlohmann::json* v = root.get("ga")) parse_ga(*v, cfg.ga);
    if (const nlohmann::json* v = root.get("mode_policy")) parse_mode_policy(*v, cfg.mode_policy);
    if (const nlohmann::json* v = root.get("lifecycle")) parse_lifecycle(*v, cfg.lifecycle);
    if (const nlohmann::json* v = root.get("metrics")) parse_metrics(*v, cfg.metrics);
    root.finish();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config file " + path + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json ga{{"population_size", cfg.ga.population_size},
                      {"generations", cfg.ga.generations},
                      {"mutation_variance", cfg.ga.mutation_variance},
                      {"crossover_lambda", nullptr},
                      {"elite_count", cfg.ga.elite_count},
                      {"tournament_size", cfg.ga.tournament_size}};
    if (cfg.ga.crossover_lambda) ga["crossover_lambda"] = *cfg.ga.crossover_lambda;
    return nlohmann::json{
        {"seed", cfg.seed},
        {"generator",
         {{"feature_dim", cfg.generator.feature_dim},
          {"d_max", cfg.generator.d_max},
          {"count_per_tier", cfg.generator.count_per_tier},
          {"cap_base", cfg.generator.cap_base},
          {"cap_slope", cfg.generator.cap_slope},
          {"feature_sd", cfg.generator.feature_sd}}},
        {"split", {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}}},
        {"substrate",
         {{"beta", cfg.substrate.beta},
          {"hazard_rate", cfg.substrate.hazard_rate},
          {"lambda_cost", cfg.substrate.lambda_cost},
          {"partial_credit", cfg.substrate.partial_credit}}},
        {"forge",
         {{"kappa", cfg.forge.kappa},
          {"noise_sd", cfg.forge.noise_sd},
          {"reliability_alpha", cfg.forge.reliability_alpha},
          {"reliability_beta", cfg.forge.reliability_beta},
          {"min_exec_rate", cfg.forge.min_exec_rate},
          {"validate_trials", cfg.forge.validate_trials}}},
        {"router",
         {{"mode", cfg.router.mode == RoutingMode::argmax ? "argmax" : "softmax"},
          {"temperature", cfg.router.temperature}}},
        {"curriculum",
         {{"exploration_coefficient", cfg.curriculum.exploration_coefficient},
          {"ema_decay", cfg.curriculum.ema_decay}}},
        {"cl",
         {{"batch_size", cfg.cl.batch_size}, {"eta", cfg.cl.eta}, {"gamma", cfg.cl.gamma}}},
        {"rl",
         {{"batch_size", cfg.rl.batch_size},
          {"eta", cfg.rl.eta},
          {"gamma", cfg.rl.gamma},
          {"refit_every", cfg.rl.refit_every},
          {"max_pairs", cfg.rl.max_pairs},
          {"min_pairs", cfg.rl.min_pairs},
          {"fit",
           {{"iterations", cfg.rl.fit.iterations},
            {"learning_rate", cfg.rl.fit.learning_rate}}}}},
        {"ga", ga},
        {"mode_policy",
         {{"kind", cfg.mode_policy.kind == ModeSelectKind::fixed ? "fixed" : "rule"},
          {"fixed_mode", mode_name(cfg.mode_policy.fixed_mode)},
          {"tier_threshold", cfg.mode_policy.tier_threshold},
          {"ga_after_rejections", cfg.mode_policy.ga_after_rejections}}},
        {"lifecycle",
         {{"epsilon_fail", cfg.lifecycle.epsilon_fail},
          {"epsilon_verify", cfg.lifecycle.epsilon_verify},
          {"delta_safe", cfg.lifecycle.delta_safe},
          {"c_max", cfg.lifecycle.c_max},
          {"window", cfg.lifecycle.window},
          {"clone_step_budget", cfg.lifecycle.clone_step_budget},
          {"max_rejections", cfg.lifecycle.max_rejections},
          {"n_stream", cfg.lifecycle.n_stream}}},
        {"metrics",
         {{"tool_use_window", cfg.metrics.tool_use_window},
          {"cell_size", cfg.metrics.cell_size}}}};
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value: " + assignment);
    std::string key = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);
    std::string pointer = "/";
    for (char c : key) pointer += c == '.' ? '/' : c;
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;  // bare strings need no quotes on the command line
    }
    try {
        j[nlohmann::json::json_pointer(pointer)] = value;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("override " + key + ": " + e.what());
    }
}

}  // namespace agentevo
