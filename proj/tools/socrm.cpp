#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "socrm/error.hpp"
#include "socrm/harness.hpp"
#include "socrm/io.hpp"
#include "socrm/oracle.hpp"
#include "socrm/suite.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitIo = 3;

struct CommonOptions {
    std::string plan_path;
    std::uint64_t seed = 0;
    bool have_seed = false;
    std::string out_dir;
    std::string governors;
};

void add_common(CLI::App *cmd, CommonOptions &opts)
{
    cmd->add_option("--plan", opts.plan_path, "Experiment plan (JSON); default plan when omitted");
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&opts](const std::uint64_t &s) {
            opts.seed = s;
            opts.have_seed = true;
        },
        "Override the plan seed (re-derives every component seed)");
    cmd->add_option("--out", opts.out_dir, "Output directory (overrides the plan)");
}

socrm::ExperimentPlan resolve_plan(const CommonOptions &opts)
{
    socrm::ExperimentPlan plan =
        opts.plan_path.empty() ? socrm::default_plan() : socrm::load_plan(opts.plan_path);
    if (opts.have_seed) {
        plan.reseed(opts.seed);
    }
    if (!opts.out_dir.empty()) {
        plan.out_dir = opts.out_dir;
    }
    if (!opts.governors.empty()) {
        plan.governors = socrm::parse_governor_list(opts.governors);
    }
    plan.validate();
    return plan;
}

std::string path_in(const std::string &dir, const std::string &name)
{
    return (std::filesystem::path(dir) / name).string();
}

void gen_suite(const socrm::ExperimentPlan &plan)
{
    const auto soc = socrm::plan_soc(plan);
    auto write_suite = [&](const socrm::SuiteSpec &s) {
        const auto snippets = socrm::plan_snippets(soc, s);
        const std::string path = path_in(plan.out_dir, "suites/" + s.name + ".csv");
        socrm::write_file(path, socrm::suite_to_csv(soc, snippets));
        std::cout << path << ": " << snippets.size() << " snippets\n";
    };
    write_suite(plan.train);
    for (const auto &s : plan.sequences) {
        write_suite(s);
        if (s.family.name != plan.train.family.name &&
            socrm::families_overlap(plan.train.family, s.family)) {
            std::cerr << "warning: family '" << s.family.name << "' overlaps '"
                      << plan.train.family.name << "'\n";
        }
    }
    const auto traces = socrm::plan_frame_traces(soc, plan);
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const std::string path = path_in(plan.out_dir, "gpu/trace_" + std::to_string(k) + ".csv");
        socrm::write_file(path, socrm::frame_trace_to_csv(traces[k]));
        std::cout << path << ": " << traces[k].size() << " frames\n";
    }
    socrm::write_file(path_in(plan.out_dir, "plan.json"), socrm::plan_to_json(plan));
}

void build_oracle_tables(const socrm::ExperimentPlan &plan)
{
    const auto soc = socrm::plan_soc(plan);
    auto one = [&](const socrm::SuiteSpec &s) {
        const auto snippets = socrm::plan_snippets(soc, s);
        const auto table = socrm::build_oracle(soc, snippets, plan.objective, plan.threads);
        const std::string path = path_in(plan.out_dir, "oracle/" + s.name + ".csv");
        socrm::save_oracle_table(soc, table, path);
        std::cout << path << ": " << table.entries.size() << " entries\n";
    };
    one(plan.train);
    for (const auto &s : plan.sequences) {
        one(s);
    }
}

void train_policy(const socrm::ExperimentPlan &plan)
{
    const auto soc = socrm::plan_soc(plan);
    const auto snippets = socrm::plan_snippets(soc, plan.train);
    const auto table = socrm::build_oracle(soc, snippets, plan.objective, plan.threads);
    socrm::FitOptions fit;
    fit.seed = plan.seed;
    const auto policy = socrm::fit_initial_policy(soc, table, plan.policy_kind, fit);
    std::vector<socrm::LabeledSample> samples;
    for (const auto &e : table.entries) {
        samples.push_back({e.features, e.config});
    }
    const std::string path = path_in(plan.out_dir, "policy.txt");
    socrm::write_file(path, policy.serialize());
    std::printf("%s: training agreement %.4f over %zu snippets\n", path.c_str(),
                policy.agreement(samples), samples.size());
}

void run(const socrm::ExperimentPlan &plan)
{
    const auto report = socrm::run_experiment(plan);
    socrm::write_report(report, plan.out_dir);
    socrm::write_file(path_in(plan.out_dir, "plan.json"), socrm::plan_to_json(plan));
    for (const auto &w : report.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << socrm::format_report_table(socrm::report_table(report));
    if (!report.gpu.empty()) {
        std::cout << socrm::gpu_report_to_csv(report);
    }
}

void report(const std::string &dir, const std::string &table_out)
{
    const auto table = socrm::report_table_from_csv(socrm::read_file(path_in(dir, "report.csv")));
    const std::string text = socrm::format_report_table(table);
    if (!table_out.empty()) {
        socrm::write_file(table_out, text);
    }
    std::cout << text;
}

}  // namespace

int main(int argc, char **argv)
{
    CLI::App app{"SoC resource-management simulator and governor experiments"};
    app.require_subcommand(1);

    CommonOptions gen_opts;
    auto *gen = app.add_subcommand("gen-suite", "Write snippet suites and GPU frame traces");
    add_common(gen, gen_opts);

    CommonOptions oracle_opts;
    auto *oracle = app.add_subcommand("build-oracle", "Write oracle tables for every suite");
    add_common(oracle, oracle_opts);

    CommonOptions train_opts;
    auto *train = app.add_subcommand("train-policy", "Fit the offline policy and write a checkpoint");
    add_common(train, train_opts);

    CommonOptions run_opts;
    auto *run_cmd = app.add_subcommand("run", "Run every governor and write the report CSVs");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--governors", run_opts.governors, "Comma-separated governor subset");

    std::string report_dir = "out";
    std::string table_out;
    auto *report_cmd = app.add_subcommand("report", "Print the normalized-energy table of a run");
    report_cmd->add_option("--out", report_dir, "Directory holding report.csv");
    report_cmd->add_option("--table", table_out, "Also write the table to this file");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            gen_suite(resolve_plan(gen_opts));
        }
        else if (*oracle) {
            build_oracle_tables(resolve_plan(oracle_opts));
        }
        else if (*train) {
            train_policy(resolve_plan(train_opts));
        }
        else if (*run_cmd) {
            run(resolve_plan(run_opts));
        }
        else if (*report_cmd) {
            report(report_dir, table_out);
        }
    }
    catch (const socrm::IoError &e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return kExitIo;
    }
    catch (const socrm::InvariantViolation &e) {
        std::cerr << "error (invariant): " << e.what() << "\n";
        return kExitInvariant;
    }
    catch (const std::invalid_argument &e) {
        std::cerr << "error (usage): " << e.what() << "\n";
        return kExitUsage;
    }
    catch (const std::exception &e) {
        std::cerr << "error (invariant): " << e.what() << "\n";
        return kExitInvariant;
    }
    return kExitOk;
}
