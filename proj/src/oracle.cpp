#include "socrm/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "socrm/error.hpp"
#include "socrm/feature_selection.hpp"
#include "socrm/io.hpp"

namespace socrm {

ObjectiveKind objective_from_string(const std::string &name)
{
    if (name == "min_energy" || name == "energy") {
        return ObjectiveKind::MinEnergy;
    }
    if (name == "max_ppw" || name == "ppw") {
        return ObjectiveKind::MaxPpw;
    }
    throw std::invalid_argument("unknown objective '" + name + "' (expected min_energy or max_ppw)");
}

std::string to_string(ObjectiveKind kind)
{
    return kind == ObjectiveKind::MinEnergy ? "min_energy" : "max_ppw";
}

double objective_value(const SnippetOutcome &outcome, ObjectiveKind kind)
{
    if (kind == ObjectiveKind::MinEnergy) {
        return outcome.energy;
    }
    return outcome.counters.instructions_retired / outcome.energy;
}

double objective_cost(const SnippetOutcome &outcome, ObjectiveKind kind)
{
    const double v = objective_value(outcome, kind);
    return kind == ObjectiveKind::MinEnergy ? v : -v;
}

bool prefer_on_tie(const Configuration &a, const Configuration &b)
{
    const int fa = total_cpu_freq_index(a) + a.gpu_freq_idx;
    const int fb = total_cpu_freq_index(b) + b.gpu_freq_idx;
    if (fa != fb) {
        return fa < fb;
    }
    const int na = total_active_cores(a) + a.gpu_active_slices;
    const int nb = total_active_cores(b) + b.gpu_active_slices;
    if (na != nb) {
        return na < nb;
    }
    return a < b;
}

Configuration reference_configuration(const SocDescriptor &soc)
{
    Configuration cfg = max_configuration(soc);
    cfg.gpu_freq_idx = 0;
    cfg.gpu_active_slices = 1;
    return cfg;
}

void parallel_for(int n, int threads, const std::function<void(int)> &fn)
{
    if (threads <= 0) {
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                }
                catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

namespace {

/// Preference-ordered candidate list so that strict comparisons implement the tie rule.
std::vector<Configuration> ordered_cpu_configurations(const SocDescriptor &soc)
{
    auto configs = enumerate_cpu_configurations(soc);
    std::sort(configs.begin(), configs.end(), prefer_on_tie);
    return configs;
}

struct SweepRow {
    std::vector<double> cost;  // +inf where infeasible
    std::vector<double> energy;
    std::vector<double> value;
    int fastest = 0;
};

SweepRow sweep(const SocDescriptor &soc, const SnippetSpec &spec,
               const std::vector<Configuration> &configs, const Objective &objective)
{
    SweepRow row;
    row.cost.resize(configs.size());
    row.energy.resize(configs.size());
    row.value.resize(configs.size());
    double fastest_time = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto out = simulate_snippet(soc, spec, configs[i]);
        row.energy[i] = out.energy;
        row.value[i] = objective_value(out, objective.kind);
        row.cost[i] = out.exec_time <= objective.max_exec_time
                          ? objective_cost(out, objective.kind)
                          : std::numeric_limits<double>::infinity();
        if (out.exec_time < fastest_time) {
            fastest_time = out.exec_time;
            row.fastest = static_cast<int>(i);
        }
    }
    return row;
}

int best_index(const SweepRow &row)
{
    int best = -1;
    for (std::size_t i = 0; i < row.cost.size(); ++i) {
        if (std::isfinite(row.cost[i]) && (best < 0 || row.cost[i] < row.cost[best])) {
            best = static_cast<int>(i);
        }
    }
    return best < 0 ? row.fastest : best;
}

}  // namespace

OracleEntry oracle_entry(const SocDescriptor &soc, const SnippetSpec &spec,
                         const Objective &objective, int snippet_id)
{
    const auto configs = ordered_cpu_configurations(soc);
    const auto row = sweep(soc, spec, configs, objective);
    const int best = best_index(row);
    OracleEntry e;
    e.snippet_id = snippet_id;
    e.features = simulate_snippet(soc, spec, reference_configuration(soc)).counters;
    e.config = configs[best];
    e.objective_value = row.value[best];
    return e;
}

OracleTable build_oracle(const SocDescriptor &soc, const std::vector<SnippetSpec> &snippets,
                         const Objective &objective, int threads)
{
    validate(soc);
    if (snippets.empty()) {
        throw std::invalid_argument("build_oracle: empty snippet list");
    }
    const auto configs = ordered_cpu_configurations(soc);
    const Configuration ref = reference_configuration(soc);
    OracleTable table;
    table.objective = objective.kind;
    table.entries.resize(snippets.size());
    parallel_for(static_cast<int>(snippets.size()), threads, [&](int i) {
        const auto row = sweep(soc, snippets[i], configs, objective);
        const int best = best_index(row);
        auto &e = table.entries[i];
        e.snippet_id = i;
        e.features = simulate_snippet(soc, snippets[i], ref).counters;
        e.config = configs[best];
        e.objective_value = row.value[best];
    });
    return table;
}

std::vector<Configuration> build_oracle_dp(const SocDescriptor &soc,
                                           const std::vector<SnippetSpec> &sequence,
                                           const Objective &objective, int threads)
{
    validate(soc);
    if (sequence.empty()) {
        throw std::invalid_argument("build_oracle_dp: empty snippet sequence");
    }
    const auto configs = ordered_cpu_configurations(soc);
    const int n = static_cast<int>(configs.size());
    const int len = static_cast<int>(sequence.size());
    std::vector<SweepRow> rows(sequence.size());
    parallel_for(len, threads, [&](int t) { rows[t] = sweep(soc, sequence[t], configs, objective); });

    std::vector<Configuration> schedule;
    if (!objective.transition_costs) {
        for (const auto &row : rows) {
            schedule.push_back(configs[best_index(row)]);
        }
        return schedule;
    }

    // Stage cost: snippet energy where feasible; a snippet with no feasible
    // configuration only admits its fastest one.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> stage(len, std::vector<double>(n, inf));
    for (int t = 0; t < len; ++t) {
        bool any = false;
        for (int i = 0; i < n; ++i) {
            if (std::isfinite(rows[t].cost[i])) {
                stage[t][i] = rows[t].energy[i];
                any = true;
            }
        }
        if (!any) {
            stage[t][rows[t].fastest] = rows[t].energy[rows[t].fastest];
        }
    }
    std::vector<double> trans(static_cast<std::size_t>(n) * n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            trans[static_cast<std::size_t>(a) * n + b] = apply_transition(configs[a], configs[b], soc).energy;
        }
    }

    // value[t][i]: best energy of snippets t..end given snippet t runs configs[i].
    std::vector<std::vector<double>> value(len, std::vector<double>(n, inf));
    value[len - 1] = stage[len - 1];
    for (int t = len - 2; t >= 0; --t) {
        parallel_for(n, threads, [&](int a) {
            if (!std::isfinite(stage[t][a])) {
                return;
            }
            double best = inf;
            const double *row = &trans[static_cast<std::size_t>(a) * n];
            for (int b = 0; b < n; ++b) {
                best = std::min(best, row[b] + value[t + 1][b]);
            }
            value[t][a] = stage[t][a] + best;
        });
    }

    int cur = 0;
    for (int i = 1; i < n; ++i) {
        if (value[0][i] < value[0][cur]) {
            cur = i;
        }
    }
    schedule.push_back(configs[cur]);
    for (int t = 1; t < len; ++t) {
        const double *row = &trans[static_cast<std::size_t>(cur) * n];
        int next = 0;
        double best = row[0] + value[t][0];
        for (int b = 1; b < n; ++b) {
            const double v = row[b] + value[t][b];
            if (v < best) {
                best = v;
                next = b;
            }
        }
        cur = next;
        schedule.push_back(configs[cur]);
    }
    return schedule;
}

double schedule_energy(const SocDescriptor &soc, const std::vector<SnippetSpec> &sequence,
                       const std::vector<Configuration> &schedule)
{
    if (sequence.size() != schedule.size()) {
        throw std::invalid_argument("schedule_energy: schedule length differs from sequence");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        total += simulate_snippet(soc, sequence[t], schedule[t]).energy;
        if (t > 0) {
            total += apply_transition(schedule[t - 1], schedule[t], soc).energy;
        }
    }
    return total;
}

namespace {

std::vector<std::string> counter_columns(const SocDescriptor &soc)
{
    const int big = soc.cluster_count() > 1 ? soc.clusters.back().core_count : 0;
    auto names = counter_feature_names(big);
    names.push_back("total_chip_power");
    return names;
}

std::vector<double> counter_values(const CounterSample &s)
{
    auto v = counter_feature_vector(s);
    v.push_back(s.total_chip_power);
    return v;
}

}  // namespace

std::string oracle_table_to_csv(const SocDescriptor &soc, const OracleTable &table)
{
    std::ostringstream os;
    os << "snippet_id";
    for (const auto &name : counter_columns(soc)) {
        os << ',' << name;
    }
    for (const auto &cl : soc.clusters) {
        os << ",cfg_" << cl.name << "_f";
    }
    for (const auto &cl : soc.clusters) {
        os << ",cfg_" << cl.name << "_n";
    }
    os << ",objective_value\n";
    for (const auto &e : table.entries) {
        os << e.snippet_id;
        for (double v : counter_values(e.features)) {
            os << ',' << format_double(v);
        }
        for (int f : e.config.cpu_freq_idx) {
            os << ',' << f;
        }
        for (int n : e.config.cpu_active_cores) {
            os << ',' << n;
        }
        os << ',' << format_double(e.objective_value) << '\n';
    }
    return os.str();
}

OracleTable oracle_table_from_csv(const SocDescriptor &soc, const std::string &text)
{
    const CsvTable csv = parse_csv(text);
    const auto columns = counter_columns(soc);
    std::vector<int> counter_idx;
    for (const auto &name : columns) {
        counter_idx.push_back(csv.column(name));
    }
    std::vector<int> f_idx;
    std::vector<int> n_idx;
    for (const auto &cl : soc.clusters) {
        f_idx.push_back(csv.column("cfg_" + cl.name + "_f"));
        n_idx.push_back(csv.column("cfg_" + cl.name + "_n"));
    }
    const int id_col = csv.column("snippet_id");
    const int obj_col = csv.column("objective_value");
    const int big = soc.cluster_count() > 1 ? soc.clusters.back().core_count : 0;

    OracleTable table;
    for (const auto &row : csv.rows) {
        OracleEntry e;
        e.snippet_id = static_cast<int>(parse_int(row[id_col], "snippet_id"));
        std::vector<double> v;
        for (std::size_t j = 0; j < counter_idx.size(); ++j) {
            v.push_back(parse_double(row[counter_idx[j]], columns[j]));
        }
        auto &k = e.features;
        k.instructions_retired = v[0];
        k.cpu_cycles = v[1];
        k.branch_mispredictions = v[2];
        k.l2_cache_misses = v[3];
        k.data_memory_accesses = v[4];
        k.noncache_ext_mem_requests = v[5];
        k.little_util_total = v[6];
        k.big_util_per_core.assign(v.begin() + 7, v.begin() + 7 + big);
        k.total_chip_power = v.back();
        for (std::size_t c = 0; c < soc.clusters.size(); ++c) {
            e.config.cpu_freq_idx.push_back(static_cast<int>(parse_int(row[f_idx[c]], "cfg freq")));
            e.config.cpu_active_cores.push_back(static_cast<int>(parse_int(row[n_idx[c]], "cfg cores")));
        }
        if (!is_valid(soc, e.config)) {
            throw IoError("oracle table: configuration " + to_string(e.config) +
                          " does not fit the descriptor");
        }
        e.objective_value = parse_double(row[obj_col], "objective_value");
        table.entries.push_back(std::move(e));
    }
    return table;
}

void save_oracle_table(const SocDescriptor &soc, const OracleTable &table, const std::string &path)
{
    write_file(path, oracle_table_to_csv(soc, table));
}

OracleTable load_oracle_table(const SocDescriptor &soc, const std::string &path)
{
    return oracle_table_from_csv(soc, read_file(path));
}

IlPolicy fit_initial_policy(const SocDescriptor &soc, const OracleTable &table, PolicyKind kind,
                            const FitOptions &options)
{
    if (table.entries.empty()) {
        throw std::invalid_argument("fit_initial_policy: empty oracle table");
    }
    IlPolicy policy(soc, kind, options.seed, options.hidden);
    std::vector<std::vector<double>> features;
    std::vector<LabeledSample> samples;
    for (const auto &e : table.entries) {
        features.push_back(policy_features(e.features));
        samples.push_back({e.features, e.config});
    }
    policy.fit_normalization(features);
    policy.train(samples, options.train);
    return policy;
}

}  // namespace socrm
