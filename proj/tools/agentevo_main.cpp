#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "agentevo/config.hpp"
#include "agentevo/errors.hpp"
#include "agentevo/experiment.hpp"
#include "agentevo/lifecycle.hpp"
#include "agentevo/metrics.hpp"
#include "agentevo/task.hpp"

namespace {

namespace fs = std::filesystem;
using namespace agentevo;

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets,
                         const std::string& mode) {
    nlohmann::json j;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw IoError("cannot open config file " + config_path);
        in >> j;
    } else {
        j = config_to_json(default_config());
    }
    for (const std::string& s : sets) apply_override(j, s);
    if (!mode.empty()) {
        if (mode == "auto") {
            apply_override(j, "mode_policy.kind=rule");
        } else {
            apply_override(j, "mode_policy.kind=fixed");
            apply_override(j, "mode_policy.fixed_mode=" + mode);
        }
    }
    return parse_config(j);
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::string blob;
    for (const std::string& l : lines) {
        blob += l;
        blob += '\n';
    }
    write_text(path, blob);
}

void write_run_outputs(const fs::path& out_dir, const LifecycleRun& run) {
    fs::create_directories(out_dir);
    write_lines(out_dir / "runlog.jsonl", run.log_lines());
    write_text(out_dir / "summary.json", run.summary().dump(2) + "\n");
    std::vector<MetricSeries> series = run.series();
    emit_series(series, (out_dir / "metrics.csv").string(), ReportFormat::csv);
    emit_series(series, (out_dir / "series.jsonl").string(), ReportFormat::jsonl);
}

int cmd_gen_tasks(const RunConfig& cfg, const std::string& out_path) {
    TaskSet ts = stratified_split(generate_tasks(cfg.generator, cfg.seed), cfg.split, cfg.seed);
    save_taskset(ts, out_path);
    std::cout << "tasks: " << ts.tasks.size() << "\n";
    std::cout << "taskset: " << out_path << "\n";
    return 0;
}

int cmd_ingest(const RunConfig& cfg, const std::string& in_path, const std::string& out_path) {
    TaskSet ts = ingest_taskcraft(in_path, cfg.generator.feature_dim);
    ts = stratified_split(std::move(ts), cfg.split, cfg.seed);
    save_taskset(ts, out_path);
    std::cout << "records: " << ts.tasks.size() << "\n";
    std::cout << "taskset: " << out_path << "\n";
    return 0;
}

int cmd_run(const RunConfig& cfg, const std::string& taskset_path, const std::string& out_dir,
            const std::vector<long>& checkpoint_at) {
    TaskSet ts = taskset_path.empty()
                     ? stratified_split(generate_tasks(cfg.generator, cfg.seed), cfg.split,
                                        cfg.seed)
                     : load_taskset(taskset_path);
    LifecycleRun run(cfg, std::move(ts));
    std::set<long> marks(checkpoint_at.begin(), checkpoint_at.end());
    fs::path dir(out_dir);
    fs::create_directories(dir);
    for (;;) {
        if (marks.count(run.current_step()) != 0)
            checkpoint_save((dir / ("checkpoint-" + std::to_string(run.current_step()) + ".json"))
                                .string(),
                            cfg, run);
        if (!run.step()) break;
    }
    write_run_outputs(dir, run);
    std::cout << "status: " << status_name(run.status()) << "\n";
    std::cout << "steps: " << run.current_step() << "\n";
    std::cout << "out: " << out_dir << "\n";
    return run.status() == RunStatus::halted_safety ? 2 : 0;
}

int cmd_resume(const std::string& checkpoint_path, const std::string& out_dir) {
    Checkpoint cp = checkpoint_load(checkpoint_path);
    std::cout << "seed: " << cp.config.seed << "\n";
    LifecycleRun run(cp.config, std::move(cp.taskset), cp.state);
    run.run();
    write_run_outputs(out_dir, run);
    std::cout << "status: " << status_name(run.status()) << "\n";
    std::cout << "out: " << out_dir << "\n";
    return run.status() == RunStatus::halted_safety ? 2 : 0;
}

int cmd_compare(const RunConfig& cfg, int n_seeds, const std::string& out_dir) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
    CriteriaReport report = compare_paradigms(cfg, seeds);
    fs::path dir(out_dir);
    fs::create_directories(dir);
    emit_criteria(report, (dir / "criteria.csv").string(), ReportFormat::csv);
    emit_criteria(report, (dir / "criteria.jsonl").string(), ReportFormat::jsonl);
    for (const std::string& dim : report.dimensions)
        std::cout << dim << ": " << report.winner.at(dim) << "\n";
    std::cout << "out: " << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format_name,
               const std::string& out_path) {
    std::ifstream in(fs::path(run_dir) / "series.jsonl");
    if (!in) throw IoError("cannot open " + run_dir + "/series.jsonl");
    std::vector<MetricSeries> series;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        series.push_back(nlohmann::json::parse(line).get<MetricSeries>());
    }
    ReportFormat format = format_name == "jsonl" ? ReportFormat::jsonl : ReportFormat::csv;
    if (out_path.empty()) {
        std::cout << render_series(series, format);
    } else {
        emit_series(series, out_path, format);
        std::cout << "out: " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic self-evolving agent lifecycle harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "JSON config file (defaults when omitted)");
    app.add_option("--set", sets, "override config keys, e.g. --set lifecycle.n_stream=100");

    auto* gen = app.add_subcommand("gen-tasks", "generate a synthetic taskset");
    std::string gen_out = "taskset.json";
    gen->add_option("--out", gen_out, "output taskset path");

    auto* ingest = app.add_subcommand("ingest", "ingest TaskCraft-format JSONL");
    std::string ingest_in;
    std::string ingest_out = "taskset.json";
    ingest->add_option("--in", ingest_in, "input JSONL path")->required();
    ingest->add_option("--out", ingest_out, "output taskset path");

    auto* runc = app.add_subcommand("run", "run the lifecycle end to end");
    std::string run_mode;
    std::string run_taskset;
    std::string run_out = "out";
    std::vector<long> run_checkpoints;
    runc->add_option("--mode", run_mode, "cl, rl, ga, or auto")
        ->check(CLI::IsMember({"cl", "rl", "ga", "auto"}));
    runc->add_option("--taskset", run_taskset, "taskset file (generated when omitted)");
    runc->add_option("--out", run_out, "output directory");
    runc->add_option("--checkpoint-at", run_checkpoints, "steps to checkpoint before");

    auto* resume = app.add_subcommand("resume", "continue a checkpointed run");
    std::string resume_from;
    std::string resume_out = "out-resume";
    resume->add_option("--from", resume_from, "checkpoint file")->required();
    resume->add_option("--out", resume_out, "output directory");

    auto* compare = app.add_subcommand("compare", "compare cl/rl/ga across seeds");
    int compare_seeds = 3;
    std::string compare_out = "compare";
    compare->add_option("--seeds", compare_seeds, "number of consecutive seeds")
        ->check(CLI::PositiveNumber);
    compare->add_option("--out", compare_out, "output directory");

    auto* report = app.add_subcommand("report", "re-emit series from a run directory");
    std::string report_dir;
    std::string report_format = "csv";
    std::string report_out;
    report->add_option("--run", report_dir, "run output directory")->required();
    report->add_option("--format", report_format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    report->add_option("--out", report_out, "output file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) return cmd_report(report_dir, report_format, report_out);
        if (resume->parsed()) return cmd_resume(resume_from, resume_out);

        RunConfig cfg = resolve_config(config_path, sets, run_mode);
        std::cout << "seed: " << cfg.seed << "\n";
        if (!config_path.empty()) std::cout << "config: " << config_path << "\n";

        if (gen->parsed()) return cmd_gen_tasks(cfg, gen_out);
        if (ingest->parsed()) return cmd_ingest(cfg, ingest_in, ingest_out);
        if (runc->parsed()) return cmd_run(cfg, run_taskset, run_out, run_checkpoints);
        if (compare->parsed()) return cmd_compare(cfg, compare_seeds, compare_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
