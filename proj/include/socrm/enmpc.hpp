#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "socrm/baselines.hpp"
#include "socrm/rls.hpp"
#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"

namespace socrm {

/// Per-frame GPU work in cycles with a per-frame target rate.
struct FrameTrace {
    std::vector<double> work;
    std::vector<double> target_fps;

    std::size_t size() const { return work.size(); }
    double deadline(std::size_t frame) const { return 1.0 / target_fps.at(frame); }
    /// Throws std::invalid_argument unless every work > 0 and FPS > 0.
    void validate() const;
};

struct TraceOptions {
    int frames = 3000;
    double fps = 60.0;
    int min_phase = 60;
    int max_phase = 240;
    /// Phase demand as a fraction of the GPU's peak cycles per deadline.
    double demand_lo = 0.10;
    double demand_hi = 0.85;
    /// Per-frame multiplicative jitter U(1 - j, 1 + j) around the phase level.
    double jitter = 0.03;
    std::uint64_t seed = 1;
};

/// Piecewise-constant demand phases of random length with per-frame jitter.
FrameTrace generate_frame_trace(const SocDescriptor &soc, const TraceOptions &options);

/// CSV: frame_id,work_cycles,target_fps
std::string frame_trace_to_csv(const FrameTrace &trace);
FrameTrace frame_trace_from_csv(const std::string &text);

struct GpuKnobs {
    int freq_idx = 0;
    int slices = 1;

    bool operator==(const GpuKnobs &) const = default;
};

struct MultiRateConfig {
    int slow_period = 16;
    int horizon = 8;
    double slack_target = 0.9;
    double fast_gain = 0.5;

    void validate() const;
};

/// What the solver knows about the present: the knobs currently applied and the deadline.
struct NmpcState {
    GpuKnobs current;
    bool has_current = true;
    double deadline = 1.0 / 60.0;
};

using FrameEvaluator = std::function<FrameOutcome(double work, int freq_idx, int slices)>;

/// Exhaustive horizon search over every (f, slices) pair held for the whole
/// horizon. Cost = transition energy from the current knobs plus the frame
/// energies; feasible means every predicted frame meets the deadline, with
/// the transition time added to the first frame. When
/// nothing is feasible the smallest worst-case violation wins, then energy.
/// Ties go to the lower frequency, then fewer slices.
GpuKnobs nmpc_solve(const NmpcState &state, const std::vector<double> &predicted_work,
                    const SocDescriptor &soc, const MultiRateConfig &mrc);
GpuKnobs nmpc_solve(const NmpcState &state, const std::vector<double> &predicted_work,
                    const SocDescriptor &soc, const MultiRateConfig &mrc,
                    const FrameEvaluator &evaluate);

/// RLS models of frame time and frame energy over (work, f, slices), plus
/// finite-difference sensitivities at the last operating point.
class SensitivityModel {
  public:
    explicit SensitivityModel(const SocDescriptor &soc, double forgetting = 0.99);

    std::vector<double> time_features(double work, int freq_idx, int slices) const;
    std::vector<double> energy_features(double work, int freq_idx, int slices) const;

    double predict_time(double work, int freq_idx, int slices) const;
    double predict_energy(double work, int freq_idx, int slices) const;
    FrameOutcome predict(double work, int freq_idx, int slices) const;

    void update(double work, int freq_idx, int slices, double frame_time, double energy);

    struct Sensitivities {
        double time_per_freq_step = 0.0;
        double energy_per_freq_step = 0.0;
        double time_per_slice = 0.0;
        double energy_per_slice = 0.0;
    };
    const Sensitivities &sensitivities() const { return m_sens; }
    long long update_count() const { return m_time.update_count(); }

  private:
    void refresh_sensitivities(double work, int freq_idx, int slices);

    SocDescriptor m_soc;
    RlsEstimator m_time;
    RlsEstimator m_energy;
    Sensitivities m_sens;
};

/// Features the explicit controller reads: demand (predicted cycles per
/// second of deadline, in GHz), current frequency index, current slices, and
/// the last frame's deadline slack fraction.
inline constexpr int kControllerFeatureCount = 4;
std::vector<double> controller_features(double predicted_work, double deadline,
                                        const GpuKnobs &current, double last_slack);
std::vector<std::string> controller_feature_names();

/// Axis-aligned regression tree (variance-reduction splits, midpoint thresholds).
class RegressionTree {
  public:
    struct Node {
        int feature = -1;  // -1 for leaves
        double threshold = 0.0;
        double value = 0.0;
        int left = -1;
        int right = -1;
    };

    static RegressionTree fit(const std::vector<std::vector<double>> &x,
                              const std::vector<double> &y, int max_depth, int min_leaf = 1);
    double predict(const std::vector<double> &x) const;
    int depth() const;
    std::size_t node_count() const { return m_nodes.size(); }
    std::string dump(const std::vector<std::string> &names, const std::string &output) const;

  private:
    int build(const std::vector<std::vector<double>> &x, const std::vector<double> &y,
              std::vector<int> &idx, int begin, int end, int depth, int max_depth, int min_leaf);
    int depth_of(int node) const;
    void dump_node(std::ostringstream &os, int node, int indent,
                   const std::vector<std::string> &names, const std::string &output) const;

    std::vector<Node> m_nodes;
};

enum class ExplicitKind { Tree, Linear };
ExplicitKind explicit_kind_from_string(const std::string &name);

struct ExplicitSample {
    std::vector<double> features;
    GpuKnobs decision;
};

/// Regression approximation of the NMPC control surface: one regressor per
/// output, predictions rounded and clipped to valid knob ranges.
class ExplicitController {
  public:
    static constexpr int kDefaultDepth = 6;

    GpuKnobs decide(const std::vector<double> &features) const;
    ExplicitKind kind() const { return m_kind; }
    bool constant() const { return m_constant; }
    double training_agreement() const { return m_training_agreement; }
    double training_freq_agreement() const { return m_training_freq_agreement; }

    /// Nested threshold rules (tree) or coefficient listing (linear).
    std::string dump() const;

    friend ExplicitController fit_explicit(const SocDescriptor &soc,
                                           const std::vector<ExplicitSample> &samples,
                                           ExplicitKind kind, int max_depth);

  private:
    ExplicitKind m_kind = ExplicitKind::Tree;
    int m_levels = 1;
    int m_max_slices = 1;
    bool m_constant = false;
    GpuKnobs m_constant_value;
    RegressionTree m_freq_tree;
    RegressionTree m_slice_tree;
    Eigen::VectorXd m_freq_coef;
    Eigen::VectorXd m_slice_coef;
    double m_training_agreement = 0.0;       // exact on both outputs
    double m_training_freq_agreement = 0.0;  // slices exact, frequency within one step
};

/// Throws std::invalid_argument for fewer than 200 samples.
ExplicitController fit_explicit(const SocDescriptor &soc, const std::vector<ExplicitSample> &samples,
                                ExplicitKind kind = ExplicitKind::Tree,
                                int max_depth = ExplicitController::kDefaultDepth);

struct ExplicitSampleOptions {
    int count = 2000;
    double fps = 60.0;
    /// Demand is drawn up to this multiple of the GPU's peak capacity.
    double max_demand = 1.1;
    std::uint64_t seed = 1;
};

/// Random controller states labelled with nmpc_solve decisions (last-value
/// horizon, slack-tightened deadline as in slow_rate_step).
std::vector<ExplicitSample> sample_nmpc_states(const SocDescriptor &soc, const MultiRateConfig &mrc,
                                               const ExplicitSampleOptions &options,
                                               int threads = 0);

/// Slow- and fast-rate controller state.
struct ControllerState {
    GpuKnobs slow;         // last slow-rate decision
    GpuKnobs applied;      // knobs in effect now
    double accumulator = 0.0;
    double last_work = 0.0;
    double last_frame_time = 0.0;
    double last_deadline = 1.0 / 60.0;
    double next_deadline = 1.0 / 60.0;
    bool have_observation = false;
};

/// Explicit controller when given, otherwise nmpc_solve with the supplied
/// evaluator (or the simulator law when it is empty) over a last-value
/// horizon, planned against slack_target x next_deadline. The first tick
/// (no observation yet) takes the top frequency with every slice. Resets the
/// fast-rate accumulator.
GpuKnobs slow_rate_step(ControllerState &state, const SocDescriptor &soc,
                        const MultiRateConfig &mrc, const ExplicitController *controller,
                        const FrameEvaluator &evaluate = {});

/// Integral trim of the slow-rate frequency toward slack_target x deadline;
/// slices untouched.
int fast_rate_step(ControllerState &state, const SocDescriptor &soc, const MultiRateConfig &mrc,
                   double last_frame_time, double deadline);

/// Deadline-miss recovery between slow ticks: moves the slow-rate frequency
/// up to the lowest index the sensitivity model predicts meets
/// slack_target x deadline for the last frame's work at the current slices,
/// then clears the accumulator. Slices untouched. With an untrained model it
/// goes to the top frequency.
int fast_rate_recover(ControllerState &state, const SocDescriptor &soc, const MultiRateConfig &mrc,
                      const SensitivityModel &model);

struct FrameObservation {
    double work = 0.0;        // GPU busy cycles
    double frame_time = 0.0;  // render time
    double wall_time = 0.0;   // render plus knob-transition time
    double deadline = 0.0;
    double energy = 0.0;
};

class GpuGovernor {
  public:
    virtual ~GpuGovernor() = default;
    virtual std::string name() const = 0;
    virtual GpuKnobs decide(std::size_t frame, double deadline) = 0;
    virtual void observe(const FrameObservation &obs) = 0;
};

class MaxFrequencyGpuGovernor : public GpuGovernor {
  public:
    explicit MaxFrequencyGpuGovernor(const SocDescriptor &soc);
    std::string name() const override { return "max_freq"; }
    GpuKnobs decide(std::size_t frame, double deadline) override;
    void observe(const FrameObservation &) override {}

  private:
    GpuKnobs m_knobs;
};

class OndemandGpuGovernor : public GpuGovernor {
  public:
    explicit OndemandGpuGovernor(const SocDescriptor &soc);
    std::string name() const override { return "ondemand"; }
    GpuKnobs decide(std::size_t frame, double deadline) override;
    void observe(const FrameObservation &obs) override;

  private:
    SocDescriptor m_soc;
    GpuOndemandState m_state;
};

/// Multi-rate governor: slow tick every K frames (NMPC or explicit), fast
/// frequency trim in between, miss recovery after a late frame. A downward
/// trim is skipped when the sensitivity model predicts it misses the deadline.
class MultiRateGpuGovernor : public GpuGovernor {
  public:
    /// controller == nullptr gives the brute-force NMPC governor.
    MultiRateGpuGovernor(const SocDescriptor &soc, const MultiRateConfig &mrc,
                         std::shared_ptr<const ExplicitController> controller = nullptr);
    std::string name() const override { return m_controller ? "enmpc" : "nmpc"; }
    GpuKnobs decide(std::size_t frame, double deadline) override;
    void observe(const FrameObservation &obs) override;

    const SensitivityModel &model() const { return m_model; }
    const ControllerState &state() const { return m_state; }

  private:
    SocDescriptor m_soc;
    MultiRateConfig m_mrc;
    std::shared_ptr<const ExplicitController> m_controller;
    ControllerState m_state;
    SensitivityModel m_model;
};

struct GpuMetrics {
    std::string governor;
    double total_energy = 0.0;
    double miss_rate = 0.0;
    double mean_fps = 0.0;
    std::size_t frames = 0;
    std::size_t misses = 0;
    /// Frames at which the slice count changed.
    std::vector<std::size_t> slice_changes;
};

/// Frame-by-frame simulation. A frame misses when render plus transition time
/// exceeds its deadline; a frame is displayed no earlier than its deadline, so
/// mean FPS = frames / sum(max(wall time, deadline)).
GpuMetrics evaluate_governor(const FrameTrace &trace, GpuGovernor &governor,
                             const SocDescriptor &soc);

/// CSV: governor,total_energy_j,miss_rate,mean_fps
std::string gpu_metrics_to_csv(const std::vector<GpuMetrics> &metrics);

}  // namespace socrm
