#include "socrm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"
#include "socrm/baselines.hpp"
#include "socrm/error.hpp"
#include "socrm/il_governor.hpp"
#include "socrm/io.hpp"
#include "socrm/random.hpp"

namespace socrm {

namespace {

using nlohmann::json;

constexpr double kFloorTolerance = 1e-9;

bool same_cpu_knobs(const Configuration &a, const Configuration &b)
{
    return a.cpu_freq_idx == b.cpu_freq_idx && a.cpu_active_cores == b.cpu_active_cores;
}

bool contains(const std::vector<std::string> &list, const std::string &name)
{
    return std::find(list.begin(), list.end(), name) != list.end();
}

std::string resolve(const std::string &path, const std::string &base_dir)
{
    if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) {
        return path;
    }
    return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

template <typename T>
T get_or(const json &j, const char *key, T fallback)
{
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

void read_range(const json &j, const char *key, double &lo, double &hi)
{
    if (!j.contains(key)) {
        return;
    }
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2) {
        throw PlanError(std::string("plan: '") + key + "' must be a [lo, hi] pair");
    }
    lo = v[0];
    hi = v[1];
}

WorkloadFamily read_family(const json &j)
{
    if (j.is_string()) {
        try {
            return family_from_string(j.get<std::string>());
        }
        catch (const std::invalid_argument &ex) {
            throw PlanError(ex.what());
        }
    }
    WorkloadFamily f;
    if (j.contains("base")) {
        f = read_family(j.at("base"));
    }
    f.name = get_or<std::string>(j, "name", f.name);
    read_range(j, "mem", f.mem_lo, f.mem_hi);
    read_range(j, "parallel", f.parallel_lo, f.parallel_hi);
    read_range(j, "little_affinity", f.little_affinity_lo, f.little_affinity_hi);
    return f;
}

json family_json(const WorkloadFamily &f)
{
    return {{"name", f.name},
            {"mem", {f.mem_lo, f.mem_hi}},
            {"parallel", {f.parallel_lo, f.parallel_hi}},
            {"little_affinity", {f.little_affinity_lo, f.little_affinity_hi}}};
}

void read_suite(const json &j, SuiteSpec &s, const std::string &base_dir)
{
    s.name = get_or<std::string>(j, "name", s.name);
    if (j.contains("family")) {
        s.family = read_family(j.at("family"));
    }
    s.options.applications = get_or<int>(j, "applications", s.options.applications);
    s.options.snippets_per_application =
        get_or<int>(j, "snippets_per_application", s.options.snippets_per_application);
    s.options.jitter = get_or<double>(j, "jitter", s.options.jitter);
    s.options.instructions = get_or<double>(j, "instructions", s.options.instructions);
    s.options.seed = get_or<std::uint64_t>(j, "seed", s.options.seed);
    s.trace_path = resolve(get_or<std::string>(j, "trace", std::string()), base_dir);
}

json suite_json(const SuiteSpec &s)
{
    json j = {{"name", s.name},
              {"family", family_json(s.family)},
              {"applications", s.options.applications},
              {"snippets_per_application", s.options.snippets_per_application},
              {"jitter", s.options.jitter},
              {"instructions", s.options.instructions},
              {"seed", s.options.seed}};
    if (!s.trace_path.empty()) {
        j["trace"] = s.trace_path;
    }
    return j;
}

SuiteSpec make_suite(const std::string &name, const WorkloadFamily &family, int apps, int per_app)
{
    SuiteSpec s;
    s.name = name;
    s.family = family;
    s.options.applications = apps;
    s.options.snippets_per_application = per_app;
    return s;
}

struct TrainedModels {
    std::unique_ptr<IlPolicy> policy;
    std::unique_ptr<ModelBank> models;
    std::unique_ptr<QTable> q;
    std::vector<Configuration> actions;
};

/// Per-snippet books of one governor over one sequence.
struct CpuRun {
    SequenceResult result;
    std::vector<double> transition;
    std::vector<double> time;
};

double q_reward(const SocDescriptor &soc, const SnippetSpec &spec, const SnippetOutcome &out)
{
    const double ref = simulate_snippet(soc, spec, reference_configuration(soc)).energy;
    return -out.energy / ref;
}

void train_q(const SocDescriptor &soc, QTable &q, const std::vector<Configuration> &actions,
             const std::vector<SnippetSpec> &snippets)
{
    Configuration cfg = reference_configuration(soc);
    for (const auto &spec : snippets) {
        const SnippetOutcome out = simulate_snippet(soc, spec, cfg);
        cfg = q_step(q, actions, out.counters, q_reward(soc, spec, out));
    }
    q.clear_pending();
}

CpuRun run_cpu_governor(const std::string &name, const SocDescriptor &soc,
                        const ExperimentPlan &plan, const std::vector<SnippetSpec> &snippets,
                        const OracleTable &oracle, const TrainedModels &trained)
{
    const auto started = std::chrono::steady_clock::now();
    CpuRun run;
    run.result.governor = name;
    Configuration prev = reference_configuration(soc);

    // Runs snippet t at cfg and books the decision row against label.
    auto execute = [&](std::size_t t, const Configuration &cfg) {
        const TransitionCost trans = apply_transition(prev, cfg, soc);
        const SnippetOutcome out = simulate_snippet(soc, snippets[t], cfg);
        run.transition.push_back(trans.energy);
        run.time.push_back(out.exec_time + trans.time);
        DecisionRow row;
        row.snippet_id = static_cast<int>(t);
        row.chosen = cfg;
        row.label = oracle.entries[t].config;
        row.agreement = same_cpu_knobs(cfg, row.label);
        row.true_energy = out.energy;
        run.result.decisions.push_back(std::move(row));
        prev = cfg;
        return out;
    };

    const std::size_t n = snippets.size();
    if (name == "oracle") {
        for (std::size_t t = 0; t < n; ++t) {
            execute(t, oracle.entries[t].config);
        }
    }
    else if (name == "max_freq") {
        for (std::size_t t = 0; t < n; ++t) {
            execute(t, reference_configuration(soc));
        }
    }
    else if (name == "oracle_dp") {
        Objective obj = plan.objective;
        obj.transition_costs = true;
        const auto schedule = build_oracle_dp(soc, snippets, obj, plan.threads);
        for (std::size_t t = 0; t < n; ++t) {
            execute(t, schedule[t]);
        }
    }
    else if (name == "ondemand") {
        OndemandState state = OndemandState::initial(soc);
        Configuration cfg = state.current;
        for (std::size_t t = 0; t < n; ++t) {
            const SnippetOutcome out = execute(t, cfg);
            cfg = ondemand_step(state, soc, out.counters);
        }
    }
    else if (name == "q_learning") {
        QTable q = *trained.q;
        Configuration cfg = reference_configuration(soc);
        for (std::size_t t = 0; t < n; ++t) {
            const SnippetOutcome out = execute(t, cfg);
            cfg = q_step(q, trained.actions, out.counters, q_reward(soc, snippets[t], out));
        }
    }
    else if (name == "il_offline" || name == "il_online") {
        IlOptions options;
        options.online = name == "il_online";
        IlGovernor gov(soc, *trained.policy, *trained.models, options);
        Configuration cfg = gov.initial_configuration();
        for (std::size_t t = 0; t < n; ++t) {
            const SnippetOutcome out = execute(t, cfg);
            const IlStep step = gov.online_step(out, cfg);
            DecisionRow &row = run.result.decisions.back();
            row.label = step.label;
            row.agreement = step.agreement;
            row.has_prediction = true;
            row.predicted_energy = step.predicted_energy;
            cfg = step.chosen;
        }
    }
    else {
        throw PlanError("governor '" + name + "' does not control the CPU");
    }

    for (const auto &row : run.result.decisions) {
        run.result.agreement.push_back(row.agreement ? 1 : 0);
        run.result.energy += row.true_energy;
    }
    run.result.convergence = convergence_point(run.result.agreement);
    run.result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return run;
}

std::unique_ptr<GpuGovernor> make_gpu_governor(const std::string &name, const SocDescriptor &soc,
                                               const ExperimentPlan &plan,
                                               const std::shared_ptr<const ExplicitController> &ec)
{
    if (name == "ondemand") {
        return std::make_unique<OndemandGpuGovernor>(soc);
    }
    if (name == "max_freq") {
        return std::make_unique<MaxFrequencyGpuGovernor>(soc);
    }
    if (name == "nmpc") {
        return std::make_unique<MultiRateGpuGovernor>(soc, plan.gpu.mrc);
    }
    if (name == "enmpc") {
        return std::make_unique<MultiRateGpuGovernor>(soc, plan.gpu.mrc, ec);
    }
    throw PlanError("governor '" + name + "' does not control the GPU");
}

std::string fixed2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

const std::vector<std::string> &known_governors()
{
    static const std::vector<std::string> names = {"oracle",     "oracle_dp", "il_offline",
                                                   "il_online",  "q_learning", "ondemand",
                                                   "max_freq",   "nmpc",       "enmpc"};
    return names;
}

bool is_cpu_governor(const std::string &name)
{
    return contains({"oracle", "oracle_dp", "il_offline", "il_online", "q_learning", "ondemand",
                     "max_freq"},
                    name);
}

bool is_gpu_governor(const std::string &name)
{
    return contains({"ondemand", "max_freq", "nmpc", "enmpc"}, name);
}

std::vector<std::string> parse_governor_list(const std::string &text)
{
    std::vector<std::string> out;
    for (auto &field : split_csv_line(text)) {
        const auto b = field.find_first_not_of(" \t");
        const auto e = field.find_last_not_of(" \t");
        field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
        if (field.empty()) {
            continue;
        }
        if (!contains(known_governors(), field)) {
            throw PlanError("unknown governor '" + field + "'");
        }
        if (!contains(out, field)) {
            out.push_back(field);
        }
    }
    return out;
}

void ExperimentPlan::validate() const
{
    if (governors.empty()) {
        throw PlanError("plan must name at least one governor");
    }
    std::set<std::string> seen;
    bool cpu = false;
    bool gpu_needed = false;
    for (const auto &g : governors) {
        if (!contains(known_governors(), g)) {
            throw PlanError("unknown governor '" + g + "'");
        }
        if (!seen.insert(g).second) {
            throw PlanError("governor '" + g + "' listed twice");
        }
        cpu = cpu || is_cpu_governor(g);
        gpu_needed = gpu_needed || is_gpu_governor(g);
    }
    if (cpu && sequences.empty()) {
        throw PlanError("CPU governors need at least one sequence");
    }
    std::set<std::string> names;
    for (const auto &s : sequences) {
        if (s.name.empty() || s.name.find_first_of(",.\n") != std::string::npos) {
            throw PlanError("sequence names must be non-empty without ',' or '.'");
        }
        if (!names.insert(s.name).second) {
            throw PlanError("sequence '" + s.name + "' listed twice");
        }
    }
    if (gpu_needed && gpu.traces < 1 && gpu.trace_paths.empty()) {
        throw PlanError("GPU governors need at least one frame trace");
    }
    if (!(objective.max_exec_time > 0.0)) {
        throw PlanError("objective max_exec_time must be positive");
    }
    try {
        gpu.mrc.validate();
    }
    catch (const std::invalid_argument &ex) {
        throw PlanError(ex.what());
    }
    if (gpu.max_depth < 1) {
        throw PlanError("explicit controller depth must be >= 1");
    }
}

void ExperimentPlan::reseed(std::uint64_t s)
{
    seed = s;
    train.options.seed = mix_seed(s, 1);
    for (std::size_t k = 0; k < sequences.size(); ++k) {
        sequences[k].options.seed = mix_seed(s, 100 + k);
    }
    gpu.trace.seed = mix_seed(s, 200);
    gpu.samples.seed = mix_seed(s, 300);
}

ExperimentPlan default_plan(std::uint64_t seed)
{
    ExperimentPlan plan;
    plan.train = make_suite("train", family_a(), 12, 25);
    plan.sequences = {make_suite("A", family_a(), 5, 200), make_suite("B", family_b(), 5, 400)};
    plan.governors = known_governors();
    plan.reseed(seed);
    return plan;
}

ExperimentPlan parse_plan(const std::string &json_text, const std::string &base_dir)
{
    json j;
    try {
        j = json::parse(json_text);
    }
    catch (const json::parse_error &ex) {
        throw IoError(std::string("plan is not valid JSON: ") + ex.what());
    }
    ExperimentPlan plan = default_plan();
    try {
        if (!j.contains("seed")) {
            throw PlanError("plan must give a seed");
        }
        if (j.contains("sequences")) {
            plan.sequences.clear();
            for (std::size_t k = 0; k < j.at("sequences").size(); ++k) {
                plan.sequences.push_back(make_suite("S" + std::to_string(k), family_a(), 5, 400));
            }
        }
        plan.reseed(j.at("seed").get<std::uint64_t>());
        plan.soc_path = resolve(get_or<std::string>(j, "soc", std::string()), base_dir);
        plan.out_dir = get_or<std::string>(j, "out", plan.out_dir);
        plan.threads = get_or<int>(j, "threads", plan.threads);
        plan.policy_kind = policy_kind_from_string(get_or<std::string>(j, "policy_kind", "mlp"));
        if (j.contains("objective")) {
            const json &o = j.at("objective");
            plan.objective.kind = objective_from_string(get_or<std::string>(o, "kind", "min_energy"));
            plan.objective.max_exec_time =
                get_or<double>(o, "max_exec_time", plan.objective.max_exec_time);
            plan.objective.transition_costs = get_or<bool>(o, "transition_costs", false);
        }
        if (j.contains("governors")) {
            plan.governors.clear();
            for (const auto &g : j.at("governors")) {
                plan.governors.push_back(g.get<std::string>());
            }
        }
        if (j.contains("train_suite")) {
            read_suite(j.at("train_suite"), plan.train, base_dir);
        }
        if (j.contains("sequences")) {
            for (std::size_t k = 0; k < plan.sequences.size(); ++k) {
                read_suite(j.at("sequences").at(k), plan.sequences[k], base_dir);
            }
        }
        if (j.contains("gpu")) {
            const json &g = j.at("gpu");
            GpuPlan &gp = plan.gpu;
            gp.traces = get_or<int>(g, "traces", gp.traces);
            gp.trace.frames = get_or<int>(g, "frames", gp.trace.frames);
            gp.trace.fps = get_or<double>(g, "fps", gp.trace.fps);
            gp.trace.min_phase = get_or<int>(g, "min_phase", gp.trace.min_phase);
            gp.trace.max_phase = get_or<int>(g, "max_phase", gp.trace.max_phase);
            read_range(g, "demand", gp.trace.demand_lo, gp.trace.demand_hi);
            gp.trace.jitter = get_or<double>(g, "jitter", gp.trace.jitter);
            gp.trace.seed = get_or<std::uint64_t>(g, "trace_seed", gp.trace.seed);
            gp.mrc.slow_period = get_or<int>(g, "slow_period", gp.mrc.slow_period);
            gp.mrc.horizon = get_or<int>(g, "horizon", gp.mrc.horizon);
            gp.mrc.slack_target = get_or<double>(g, "slack_target", gp.mrc.slack_target);
            gp.mrc.fast_gain = get_or<double>(g, "fast_gain", gp.mrc.fast_gain);
            gp.kind = explicit_kind_from_string(get_or<std::string>(g, "explicit_kind", "tree"));
            gp.max_depth = get_or<int>(g, "max_depth", gp.max_depth);
            gp.samples.count = get_or<int>(g, "samples", gp.samples.count);
            gp.samples.max_demand = get_or<double>(g, "max_demand", gp.samples.max_demand);
            gp.samples.fps = gp.trace.fps;
            gp.samples.seed = get_or<std::uint64_t>(g, "sample_seed", gp.samples.seed);
            if (g.contains("trace_paths")) {
                for (const auto &p : g.at("trace_paths")) {
                    gp.trace_paths.push_back(resolve(p.get<std::string>(), base_dir));
                }
            }
        }
    }
    catch (const json::exception &ex) {
        throw PlanError(std::string("invalid plan: ") + ex.what());
    }
    catch (const PlanError &) {
        throw;
    }
    catch (const std::invalid_argument &ex) {
        throw PlanError(std::string("invalid plan: ") + ex.what());
    }
    plan.validate();
    return plan;
}

ExperimentPlan load_plan(const std::string &path)
{
    const std::string text = read_file(path);
    return parse_plan(text, std::filesystem::path(path).parent_path().string());
}

std::string plan_to_json(const ExperimentPlan &plan)
{
    json j;
    j["seed"] = plan.seed;
    j["soc"] = plan.soc_path;
    j["out"] = plan.out_dir;
    j["threads"] = plan.threads;
    j["policy_kind"] = to_string(plan.policy_kind);
    json o = {{"kind", to_string(plan.objective.kind)},
              {"transition_costs", plan.objective.transition_costs}};
    if (std::isfinite(plan.objective.max_exec_time)) {
        o["max_exec_time"] = plan.objective.max_exec_time;
    }
    j["objective"] = o;
    j["governors"] = plan.governors;
    j["train_suite"] = suite_json(plan.train);
    j["sequences"] = json::array();
    for (const auto &s : plan.sequences) {
        j["sequences"].push_back(suite_json(s));
    }
    const GpuPlan &gp = plan.gpu;
    j["gpu"] = {{"traces", gp.traces},
                {"frames", gp.trace.frames},
                {"fps", gp.trace.fps},
                {"min_phase", gp.trace.min_phase},
                {"max_phase", gp.trace.max_phase},
                {"demand", {gp.trace.demand_lo, gp.trace.demand_hi}},
                {"jitter", gp.trace.jitter},
                {"trace_seed", gp.trace.seed},
                {"slow_period", gp.mrc.slow_period},
                {"horizon", gp.mrc.horizon},
                {"slack_target", gp.mrc.slack_target},
                {"fast_gain", gp.mrc.fast_gain},
                {"explicit_kind", gp.kind == ExplicitKind::Tree ? "tree" : "linear"},
                {"max_depth", gp.max_depth},
                {"samples", gp.samples.count},
                {"max_demand", gp.samples.max_demand},
                {"sample_seed", gp.samples.seed},
                {"trace_paths", gp.trace_paths}};
    return j.dump(2) + "\n";
}

SocDescriptor plan_soc(const ExperimentPlan &plan)
{
    if (plan.soc_path.empty()) {
        return default_soc();
    }
    try {
        return load_soc(plan.soc_path);
    }
    catch (const IoError &) {
        throw;
    }
    catch (const std::invalid_argument &ex) {
        throw PlanError(std::string("descriptor ") + plan.soc_path + ": " + ex.what());
    }
}

std::vector<SnippetSpec> plan_snippets(const SocDescriptor &soc, const SuiteSpec &suite)
{
    if (!suite.trace_path.empty()) {
        return suite_from_csv(soc, read_file(suite.trace_path));
    }
    try {
        return generate_suite(soc, suite.family, suite.options).snippets;
    }
    catch (const std::invalid_argument &ex) {
        throw PlanError("suite '" + suite.name + "': " + ex.what());
    }
}

std::vector<int> plan_application_starts(const SocDescriptor &soc, const SuiteSpec &suite)
{
    if (!suite.trace_path.empty()) {
        return {0};
    }
    return generate_suite(soc, suite.family, suite.options).application_starts;
}

std::vector<FrameTrace> plan_frame_traces(const SocDescriptor &soc, const ExperimentPlan &plan)
{
    std::vector<FrameTrace> traces;
    if (!plan.gpu.trace_paths.empty()) {
        for (const auto &path : plan.gpu.trace_paths) {
            traces.push_back(frame_trace_from_csv(read_file(path)));
        }
        return traces;
    }
    for (int k = 0; k < plan.gpu.traces; ++k) {
        TraceOptions to = plan.gpu.trace;
        to.seed = mix_seed(plan.gpu.trace.seed, static_cast<std::uint64_t>(k));
        try {
            traces.push_back(generate_frame_trace(soc, to));
        }
        catch (const std::invalid_argument &ex) {
            throw PlanError(std::string("frame trace: ") + ex.what());
        }
    }
    return traces;
}

int convergence_point(const std::vector<int> &agreement, int window, double threshold)
{
    if (window < 1) {
        throw std::invalid_argument("convergence window must be >= 1");
    }
    long long sum = 0;
    for (std::size_t t = 0; t < agreement.size(); ++t) {
        sum += agreement[t];
        if (t >= static_cast<std::size_t>(window)) {
            sum -= agreement[t - window];
        }
        if (t + 1 >= static_cast<std::size_t>(window) &&
            static_cast<double>(sum) >= threshold * window - 1e-12) {
            return static_cast<int>(t);
        }
    }
    return -1;
}

const SequenceResult &RunReport::sequence(const std::string &governor, const std::string &name) const
{
    for (const auto &s : sequences) {
        if (s.governor == governor && s.sequence == name) {
            return s;
        }
    }
    throw std::out_of_range("no result for governor '" + governor + "' on sequence '" + name + "'");
}

RunReport run_experiment(const ExperimentPlan &plan)
{
    plan.validate();
    const SocDescriptor soc = plan_soc(plan);
    RunReport report;

    std::vector<std::string> cpu_govs;
    std::vector<std::string> gpu_govs;
    for (const auto &g : known_governors()) {
        if (contains(plan.governors, g)) {
            if (is_cpu_governor(g)) {
                cpu_govs.push_back(g);
            }
            if (is_gpu_governor(g)) {
                gpu_govs.push_back(g);
            }
        }
    }

    for (const auto &s : plan.sequences) {
        if (s.family.name != plan.train.family.name && families_overlap(plan.train.family, s.family)) {
            report.warnings.push_back("family '" + s.family.name + "' of sequence '" + s.name +
                                      "' overlaps training family '" + plan.train.family.name +
                                      "' in memory intensity");
        }
    }

    if (!cpu_govs.empty()) {
        TrainedModels trained;
        const bool need_il = contains(cpu_govs, "il_offline") || contains(cpu_govs, "il_online");
        const bool need_q = contains(cpu_govs, "q_learning");
        std::vector<SnippetSpec> train;
        if (need_il || need_q) {
            train = plan_snippets(soc, plan.train);
            if (train.empty()) {
                throw PlanError("training suite is empty");
            }
        }
        if (need_il) {
            const OracleTable table = build_oracle(soc, train, plan.objective, plan.threads);
            FitOptions fit;
            fit.seed = plan.seed;
            trained.policy =
                std::make_unique<IlPolicy>(fit_initial_policy(soc, table, plan.policy_kind, fit));
            trained.models = std::make_unique<ModelBank>(soc);
            trained.models->pretrain(train, plan.seed);
        }
        if (need_q) {
            trained.actions = enumerate_cpu_configurations(soc);
            QOptions qo;
            qo.seed = plan.seed;
            trained.q = std::make_unique<QTable>(qo.util_bins * qo.mem_bins,
                                                 static_cast<int>(trained.actions.size()), qo);
            train_q(soc, *trained.q, trained.actions, train);
        }

        const Objective floor_objective;
        const bool plain = plan.objective.kind == ObjectiveKind::MinEnergy &&
                           !std::isfinite(plan.objective.max_exec_time);
        for (const auto &seq : plan.sequences) {
            const auto snippets = plan_snippets(soc, seq);
            const auto starts = plan_application_starts(soc, seq);
            if (snippets.empty()) {
                continue;
            }
            const OracleTable floor = build_oracle(soc, snippets, floor_objective, plan.threads);
            const OracleTable oracle =
                plain ? floor : build_oracle(soc, snippets, plan.objective, plan.threads);
            if (std::isfinite(plan.objective.max_exec_time)) {
                for (std::size_t t = 0; t < snippets.size(); ++t) {
                    const double time =
                        simulate_snippet(soc, snippets[t], oracle.entries[t].config).exec_time;
                    if (time > plan.objective.max_exec_time) {
                        throw InvariantViolation(
                            "objective constraint infeasible: snippet " + std::to_string(t) +
                            " of sequence '" + seq.name + "' needs " + format_double(time) +
                            " s at the fastest configuration, limit " +
                            format_double(plan.objective.max_exec_time) + " s");
                    }
                }
            }
            double floor_total = 0.0;
            for (const auto &e : floor.entries) {
                floor_total += e.objective_value;
            }

            for (const auto &g : cpu_govs) {
                CpuRun run = run_cpu_governor(g, soc, plan, snippets, oracle, trained);
                run.result.sequence = seq.name;
                run.result.oracle_energy = floor_total;
                run.result.normalized_energy = run.result.energy / floor_total;
                for (std::size_t a = 0; a < starts.size(); ++a) {
                    const int begin = starts[a];
                    const int end = a + 1 < starts.size() ? starts[a + 1]
                                                          : static_cast<int>(snippets.size());
                    ApplicationResult app;
                    app.governor = g;
                    app.sequence = seq.name;
                    app.application = static_cast<int>(a);
                    double floor_app = 0.0;
                    for (int t = begin; t < end; ++t) {
                        app.energy += run.result.decisions[t].true_energy;
                        app.transition_energy += run.transition[t];
                        app.exec_time += run.time[t];
                        app.agreement.push_back(run.result.agreement[t]);
                        floor_app += floor.entries[t].objective_value;
                    }
                    app.normalized_energy = app.energy / floor_app;
                    app.convergence = convergence_point(app.agreement);
                    report.applications.push_back(std::move(app));
                }
                report.sequences.push_back(std::move(run.result));
            }
        }
    }

    if (!gpu_govs.empty()) {
        const auto traces = plan_frame_traces(soc, plan);
        std::shared_ptr<const ExplicitController> ec;
        if (contains(gpu_govs, "enmpc")) {
            ExplicitSampleOptions so = plan.gpu.samples;
            so.fps = plan.gpu.trace.fps;
            const auto samples = sample_nmpc_states(soc, plan.gpu.mrc, so, plan.threads);
            try {
                ec = std::make_shared<const ExplicitController>(
                    fit_explicit(soc, samples, plan.gpu.kind, plan.gpu.max_depth));
            }
            catch (const std::invalid_argument &ex) {
                throw PlanError(std::string("explicit controller: ") + ex.what());
            }
            report.explicit_dump = ec->dump();
            report.explicit_training_agreement = ec->training_freq_agreement();
        }
        for (std::size_t k = 0; k < traces.size(); ++k) {
            for (const auto &g : gpu_govs) {
                auto gov = make_gpu_governor(g, soc, plan, ec);
                report.gpu.push_back({static_cast<int>(k), evaluate_governor(traces[k], *gov, soc)});
            }
        }
    }

    check_oracle_floor(report);
    return report;
}

void check_oracle_floor(const RunReport &report)
{
    for (const auto &app : report.applications) {
        if (!(app.normalized_energy >= 1.0 - kFloorTolerance)) {
            throw InvariantViolation("oracle floor violated: governor '" + app.governor + "' on " +
                                     app.label() + " has normalized energy " +
                                     format_double(app.normalized_energy));
        }
    }
}

std::string report_to_csv(const RunReport &report)
{
    std::ostringstream os;
    os << "governor,sequence,application,energy_j,transition_energy_j,normalized_energy,"
          "exec_time_s,convergence_snippet\n";
    for (const auto &a : report.applications) {
        os << a.governor << ',' << a.sequence << ',' << a.application << ','
           << format_double(a.energy) << ',' << format_double(a.transition_energy) << ','
           << format_double(a.normalized_energy) << ',' << format_double(a.exec_time) << ','
           << a.convergence << '\n';
    }
    return os.str();
}

std::string convergence_to_csv(const RunReport &report)
{
    std::ostringstream os;
    os << "governor,sequence,snippet_id,agreement,rolling_agreement,convergence_snippet\n";
    constexpr int kWindow = 50;
    for (const auto &s : report.sequences) {
        long long sum = 0;
        for (std::size_t t = 0; t < s.agreement.size(); ++t) {
            sum += s.agreement[t];
            if (t >= kWindow) {
                sum -= s.agreement[t - kWindow];
            }
            const double len = static_cast<double>(std::min<std::size_t>(t + 1, kWindow));
            os << s.governor << ',' << s.sequence << ',' << t << ',' << s.agreement[t] << ','
               << format_double(static_cast<double>(sum) / len) << ',' << s.convergence << '\n';
        }
    }
    return os.str();
}

std::string decisions_to_csv(const RunReport &report, const std::string &governor)
{
    std::ostringstream os;
    os << "sequence,snippet_id,chosen_cfg,label_cfg,agreement_flag,predicted_energy,true_energy\n";
    for (const auto &s : report.sequences) {
        if (s.governor != governor) {
            continue;
        }
        for (const auto &r : s.decisions) {
            os << s.sequence << ',' << r.snippet_id << ',' << to_string(r.chosen) << ','
               << to_string(r.label) << ',' << (r.agreement ? 1 : 0) << ','
               << (r.has_prediction ? format_double(r.predicted_energy) : std::string()) << ','
               << format_double(r.true_energy) << '\n';
        }
    }
    return os.str();
}

std::string gpu_report_to_csv(const RunReport &report)
{
    std::ostringstream os;
    os << "trace,governor,total_energy_j,miss_rate,mean_fps\n";
    for (const auto &g : report.gpu) {
        os << g.trace << ',' << g.metrics.governor << ',' << format_double(g.metrics.total_energy)
           << ',' << format_double(g.metrics.miss_rate) << ',' << format_double(g.metrics.mean_fps)
           << '\n';
    }
    return os.str();
}

void write_report(const RunReport &report, const std::string &out_dir)
{
    const std::filesystem::path out(out_dir);
    write_file((out / "report.csv").string(), report_to_csv(report));
    write_file((out / "convergence.csv").string(), convergence_to_csv(report));
    std::vector<std::string> written;
    for (const auto &s : report.sequences) {
        if (!contains(written, s.governor)) {
            written.push_back(s.governor);
            write_file((out / "decisions" / (s.governor + ".csv")).string(),
                       decisions_to_csv(report, s.governor));
        }
    }
    if (!report.gpu.empty()) {
        write_file((out / "gpu_metrics.csv").string(), gpu_report_to_csv(report));
        int traces = 0;
        for (const auto &g : report.gpu) {
            traces = std::max(traces, g.trace + 1);
        }
        for (int k = 0; k < traces; ++k) {
            std::vector<GpuMetrics> metrics;
            for (const auto &g : report.gpu) {
                if (g.trace == k) {
                    metrics.push_back(g.metrics);
                }
            }
            write_file((out / "gpu" / ("metrics_" + std::to_string(k) + ".csv")).string(),
                       gpu_metrics_to_csv(metrics));
        }
    }
    if (!report.explicit_dump.empty()) {
        write_file((out / "explicit_controller.txt").string(), report.explicit_dump);
    }
    std::string warnings;
    for (const auto &w : report.warnings) {
        warnings += "warning: " + w + "\n";
    }
    write_file((out / "warnings.txt").string(), warnings);
}

namespace {

void add_cell(ReportTable &table, const std::string &governor, const std::string &column, double v)
{
    auto col = std::find(table.columns.begin(), table.columns.end(), column);
    if (col == table.columns.end()) {
        table.columns.push_back(column);
        for (auto &row : table.values) {
            row.push_back(std::nan(""));
        }
        col = table.columns.end() - 1;
    }
    auto gov = std::find(table.governors.begin(), table.governors.end(), governor);
    if (gov == table.governors.end()) {
        table.governors.push_back(governor);
        table.values.emplace_back(table.columns.size(), std::nan(""));
        gov = table.governors.end() - 1;
    }
    table.values[gov - table.governors.begin()][col - table.columns.begin()] = v;
}

}  // namespace

ReportTable report_table(const RunReport &report)
{
    ReportTable table;
    for (const auto &a : report.applications) {
        add_cell(table, a.governor, a.label(), a.normalized_energy);
    }
    return table;
}

ReportTable report_table_from_csv(const std::string &text)
{
    const CsvTable csv = parse_csv(text);
    const int c_gov = csv.column("governor");
    const int c_seq = csv.column("sequence");
    const int c_app = csv.column("application");
    const int c_norm = csv.column("normalized_energy");
    ReportTable table;
    for (const auto &row : csv.rows) {
        add_cell(table, row[c_gov], row[c_seq] + "." + row[c_app],
                 parse_double(row[c_norm], "normalized_energy"));
    }
    return table;
}

ReportTable round_table(const ReportTable &table)
{
    ReportTable out = table;
    for (auto &row : out.values) {
        for (double &v : row) {
            if (std::isfinite(v)) {
                v = std::round(v * 100.0) / 100.0;
            }
        }
    }
    return out;
}

std::string format_report_table(const ReportTable &table)
{
    std::ostringstream os;
    os << "governor";
    for (const auto &c : table.columns) {
        os << ',' << c;
    }
    os << '\n';
    const ReportTable rounded = round_table(table);
    for (std::size_t g = 0; g < rounded.governors.size(); ++g) {
        os << rounded.governors[g];
        for (double v : rounded.values[g]) {
            os << ',' << (std::isfinite(v) ? fixed2(v) : std::string());
        }
        os << '\n';
    }
    return os.str();
}

ReportTable parse_report_table(const std::string &text)
{
    const CsvTable csv = parse_csv(text);
    if (csv.header.empty() || csv.header.front() != "governor") {
        throw IoError("report table must start with a 'governor' column");
    }
    ReportTable table;
    table.columns.assign(csv.header.begin() + 1, csv.header.end());
    for (const auto &row : csv.rows) {
        table.governors.push_back(row[0]);
        std::vector<double> values;
        for (std::size_t c = 1; c < row.size(); ++c) {
            values.push_back(row[c].empty() ? std::nan("") : parse_double(row[c], "table value"));
        }
        table.values.push_back(std::move(values));
    }
    return table;
}

}  // namespace socrm
