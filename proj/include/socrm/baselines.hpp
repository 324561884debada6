#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socrm/random.hpp"
#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"

namespace socrm {

/// Threshold governor: per cluster, one frequency step up when utilization
/// exceeds up_threshold and one step down when it falls below down_threshold.
/// All cores stay active.
struct OndemandState {
    double up_threshold = 0.80;
    double down_threshold = 0.30;
    Configuration current;

    /// Starts at the highest frequencies with every core active.
    static OndemandState initial(const SocDescriptor &soc, double up = 0.80, double down = 0.30);
    void validate() const;
};

/// Utilization per cluster as ondemand sees it: busiest core of the cluster.
std::vector<double> cluster_utilization(const CounterSample &counters, int cluster_count);

/// Threshold rule applied to explicit per-cluster utilizations.
Configuration ondemand_step(OndemandState &state, const SocDescriptor &soc,
                            const std::vector<double> &utilization);
Configuration ondemand_step(OndemandState &state, const SocDescriptor &soc,
                            const CounterSample &counters);

/// GPU variant: utilization = frame time / deadline, all slices active.
struct GpuOndemandState {
    double up_threshold = 0.80;
    double down_threshold = 0.30;
    int freq_idx = 0;
    int slices = 1;

    static GpuOndemandState initial(const SocDescriptor &soc);
};
int gpu_ondemand_step(GpuOndemandState &state, const SocDescriptor &soc, double utilization);

struct QOptions {
    int util_bins = 8;
    int mem_bins = 8;
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon = 0.1;
    double epsilon_decay = 0.999;
    std::uint64_t seed = 1;
};

/// Tabular Q-learning over a (utilization x memory-proxy) grid with one
/// action per CPU configuration.
class QTable {
  public:
    QTable(int states, int actions, const QOptions &options);

    int state_count() const { return m_states; }
    int action_count() const { return m_actions; }
    double alpha() const { return m_options.alpha; }
    double gamma() const { return m_options.gamma; }
    double epsilon() const { return m_epsilon; }
    void set_epsilon(double epsilon);
    const QOptions &options() const { return m_options; }

    double value(int state, int action) const;
    void set_value(int state, int action, double v);
    /// Highest-valued action; lowest index on ties.
    int greedy(int state) const;
    double max_value(int state) const;

    /// Q(s,a) += alpha (r + gamma max Q(s',.) - Q(s,a)).
    void update(int state, int action, double reward, int next_state);
    /// Epsilon-greedy draw; epsilon then decays.
    int select(int state);

    /// Previous (state, action) pair awaiting its reward.
    bool has_pending() const { return m_pending_state >= 0; }
    int pending_state() const { return m_pending_state; }
    int pending_action() const { return m_pending_action; }
    void set_pending(int state, int action);
    void clear_pending();

    /// CSV with header state_u,state_m,action,value for every entry.
    std::string to_csv() const;

  private:
    int m_states;
    int m_actions;
    QOptions m_options;
    double m_epsilon;
    std::vector<double> m_values;
    Rng m_rng;
    int m_pending_state = -1;
    int m_pending_action = -1;
};

/// State index from counters: utilization of the last (big) cluster's lead
/// core and l2 misses per instruction, each quantized into equal bins.
int q_state(const CounterSample &counters, const QOptions &options);

/// One learning step: credits `reward` to the pending (state, action), then
/// picks the action for the state observed in `counters`.
Configuration q_step(QTable &q, const std::vector<Configuration> &actions,
                     const CounterSample &counters, double reward);

}  // namespace socrm
