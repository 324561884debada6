#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "socrm/policy.hpp"
#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"

namespace socrm {

enum class ObjectiveKind { MinEnergy, MaxPpw };
ObjectiveKind objective_from_string(const std::string &name);
std::string to_string(ObjectiveKind kind);

struct Objective {
    ObjectiveKind kind = ObjectiveKind::MinEnergy;
    /// Configurations slower than this are infeasible.
    double max_exec_time = std::numeric_limits<double>::infinity();
    /// Charge transition energy between consecutive snippets (dynamic-programming oracle).
    bool transition_costs = false;
};

/// Objective value of an outcome: energy in J, or instructions per joule.
double objective_value(const SnippetOutcome &outcome, ObjectiveKind kind);
/// Lower is better for both kinds.
double objective_cost(const SnippetOutcome &outcome, ObjectiveKind kind);

/// Deterministic preference among equally good configurations: lower summed
/// frequency index, then fewer active cores, then lexicographic order.
bool prefer_on_tie(const Configuration &a, const Configuration &b);

/// CPU knobs at their maximum, GPU knobs at (0, 1). Oracle features are read here.
Configuration reference_configuration(const SocDescriptor &soc);

struct OracleEntry {
    int snippet_id = 0;
    CounterSample features;
    Configuration config;
    double objective_value = 0.0;
};

struct OracleTable {
    std::vector<OracleEntry> entries;
    ObjectiveKind objective = ObjectiveKind::MinEnergy;
};

/// Exhaustive per-snippet sweep over every CPU configuration. Snippets are
/// swept in parallel and merged in input order. If no configuration meets the
/// performance constraint the fastest one is stored. Throws
/// std::invalid_argument for an empty snippet list.
OracleTable build_oracle(const SocDescriptor &soc, const std::vector<SnippetSpec> &snippets,
                         const Objective &objective, int threads = 0);

/// Per-snippet optimum for one snippet.
OracleEntry oracle_entry(const SocDescriptor &soc, const SnippetSpec &spec,
                         const Objective &objective, int snippet_id = 0);

/// Sequence-optimal configurations when switching between snippets costs
/// energy. The objective per snippet is energy plus transition energy from the
/// previous snippet's configuration; for MaxPpw the same sum is minimized
/// because the instruction total does not depend on the schedule. With
/// transition costs disabled this returns the per-snippet optima exactly.
std::vector<Configuration> build_oracle_dp(const SocDescriptor &soc,
                                           const std::vector<SnippetSpec> &sequence,
                                           const Objective &objective, int threads = 0);

/// Total energy of running a schedule, transition energy included.
double schedule_energy(const SocDescriptor &soc, const std::vector<SnippetSpec> &sequence,
                       const std::vector<Configuration> &schedule);

/// CSV with header snippet_id,<counter columns>,cfg_<cluster>_f...,cfg_<cluster>_n...,objective_value
std::string oracle_table_to_csv(const SocDescriptor &soc, const OracleTable &table);
OracleTable oracle_table_from_csv(const SocDescriptor &soc, const std::string &text);
void save_oracle_table(const SocDescriptor &soc, const OracleTable &table, const std::string &path);
OracleTable load_oracle_table(const SocDescriptor &soc, const std::string &path);

struct FitOptions {
    std::uint64_t seed = 1;
    int hidden = IlPolicy::kDefaultHidden;
    TrainOptions train{0.05, 500, 0.95};
};

/// Offline imitation: standardizes on the table features and trains on its labels.
IlPolicy fit_initial_policy(const SocDescriptor &soc, const OracleTable &table, PolicyKind kind,
                            const FitOptions &options = {});

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(int n, int threads, const std::function<void(int)> &fn);

}  // namespace socrm
