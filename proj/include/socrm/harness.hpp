#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "socrm/enmpc.hpp"
#include "socrm/oracle.hpp"
#include "socrm/policy.hpp"
#include "socrm/soc.hpp"
#include "socrm/suite.hpp"

namespace socrm {

/// Malformed plan or descriptor content; the CLI maps this to exit code 1.
class PlanError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Every governor name a plan may request, in report order.
const std::vector<std::string> &known_governors();
bool is_cpu_governor(const std::string &name);
bool is_gpu_governor(const std::string &name);
/// Comma-separated list; throws PlanError on an unknown name.
std::vector<std::string> parse_governor_list(const std::string &text);

/// One snippet sequence: synthesized from a family, or read from a trace CSV.
struct SuiteSpec {
    std::string name;
    WorkloadFamily family;
    SuiteOptions options;
    std::string trace_path;
};

struct GpuPlan {
    int traces = 5;
    TraceOptions trace;
    MultiRateConfig mrc;
    ExplicitSampleOptions samples;
    ExplicitKind kind = ExplicitKind::Tree;
    int max_depth = ExplicitController::kDefaultDepth;
    std::vector<std::string> trace_paths;
};

struct ExperimentPlan {
    std::string soc_path;  // empty: built-in default descriptor
    std::uint64_t seed = 1;
    Objective objective;
    SuiteSpec train;
    std::vector<SuiteSpec> sequences;
    std::vector<std::string> governors;
    PolicyKind policy_kind = PolicyKind::Mlp;
    GpuPlan gpu;
    std::string out_dir = "out";
    int threads = 0;

    /// Throws PlanError.
    void validate() const;
    /// Re-derives every component seed from `seed`.
    void reseed(std::uint64_t seed);
};

/// Family A training suite, a held-in family A sequence, the family B online sequence,
/// five GPU traces and every governor.
ExperimentPlan default_plan(std::uint64_t seed = 1);

/// JSON plan. "seed" is mandatory; relative paths resolve against base_dir.
ExperimentPlan parse_plan(const std::string &json_text, const std::string &base_dir = "");
ExperimentPlan load_plan(const std::string &path);
std::string plan_to_json(const ExperimentPlan &plan);

SocDescriptor plan_soc(const ExperimentPlan &plan);
std::vector<SnippetSpec> plan_snippets(const SocDescriptor &soc, const SuiteSpec &suite);
std::vector<int> plan_application_starts(const SocDescriptor &soc, const SuiteSpec &suite);
std::vector<FrameTrace> plan_frame_traces(const SocDescriptor &soc, const ExperimentPlan &plan);

/// First index t >= window - 1 whose trailing window of flags has mean >=
/// threshold; -1 when that never happens.
int convergence_point(const std::vector<int> &agreement, int window = 50, double threshold = 0.95);

struct DecisionRow {
    int snippet_id = 0;
    Configuration chosen;
    Configuration label;
    bool agreement = false;
    bool has_prediction = false;
    double predicted_energy = 0.0;
    double true_energy = 0.0;
};

struct ApplicationResult {
    std::string governor;
    std::string sequence;
    int application = 0;
    double energy = 0.0;             // snippet execution energy, joules
    double transition_energy = 0.0;  // knob switching energy, joules
    double normalized_energy = 0.0;  // energy / min-energy oracle energy
    double exec_time = 0.0;
    int convergence = -1;  // within the application's own series
    std::vector<int> agreement;

    /// Column label, e.g. "B.3".
    std::string label() const { return sequence + "." + std::to_string(application); }
};

struct SequenceResult {
    std::string governor;
    std::string sequence;
    double energy = 0.0;
    double oracle_energy = 0.0;
    double normalized_energy = 0.0;
    int convergence = -1;
    std::vector<int> agreement;
    std::vector<DecisionRow> decisions;
    double wall_seconds = 0.0;
};

struct GpuResult {
    int trace = 0;
    GpuMetrics metrics;
};

struct RunReport {
    std::vector<ApplicationResult> applications;
    std::vector<SequenceResult> sequences;
    std::vector<GpuResult> gpu;
    std::string explicit_dump;
    double explicit_training_agreement = 0.0;
    std::vector<std::string> warnings;

    const SequenceResult &sequence(const std::string &governor, const std::string &name) const;
};

/// Executes every requested governor over every sequence and GPU trace.
/// Throws InvariantViolation when the oracle floor is broken or the
/// objective's time constraint cannot be met.
RunReport run_experiment(const ExperimentPlan &plan);

/// Every non-oracle normalized energy must be >= 1 - 1e-9.
void check_oracle_floor(const RunReport &report);

/// CSV: governor,sequence,application,energy_j,transition_energy_j,normalized_energy,exec_time_s,convergence_snippet
std::string report_to_csv(const RunReport &report);
/// CSV: governor,sequence,snippet_id,agreement,rolling_agreement,convergence_snippet
std::string convergence_to_csv(const RunReport &report);
/// CSV: sequence,snippet_id,chosen_cfg,label_cfg,agreement_flag,predicted_energy,true_energy
std::string decisions_to_csv(const RunReport &report, const std::string &governor);
/// CSV: trace,governor,total_energy_j,miss_rate,mean_fps
std::string gpu_report_to_csv(const RunReport &report);

/// report.csv, convergence.csv, decisions/<governor>.csv, gpu_metrics.csv,
/// gpu/metrics_<k>.csv, explicit_controller.txt (when fitted), warnings.txt.
void write_report(const RunReport &report, const std::string &out_dir);

/// Normalized-energy table: rows = governors, columns = applications.
struct ReportTable {
    std::vector<std::string> columns;
    std::vector<std::string> governors;
    std::vector<std::vector<double>> values;

    bool operator==(const ReportTable &) const = default;
};

ReportTable report_table(const RunReport &report);
/// Reads a report.csv back into a table (values exact, not rounded).
ReportTable report_table_from_csv(const std::string &text);
/// Values rounded half away from zero to 2 decimals.
ReportTable round_table(const ReportTable &table);
/// CSV text with two-decimal values: "governor,<col>...".
std::string format_report_table(const ReportTable &table);
ReportTable parse_report_table(const std::string &text);

}  // namespace socrm
