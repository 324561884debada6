#include "socrm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "socrm/error.hpp"
#include "socrm/io.hpp"

namespace socrm {

OndemandState OndemandState::initial(const SocDescriptor &soc, double up, double down)
{
    OndemandState s;
    s.up_threshold = up;
    s.down_threshold = down;
    s.current = max_configuration(soc);
    s.current.gpu_freq_idx = 0;
    s.current.gpu_active_slices = 1;
    s.validate();
    return s;
}

void OndemandState::validate() const
{
    if (!(0.0 < down_threshold && down_threshold < up_threshold && up_threshold < 1.0)) {
        throw std::invalid_argument("ondemand thresholds must satisfy 0 < down < up < 1");
    }
}

std::vector<double> cluster_utilization(const CounterSample &counters, int cluster_count)
{
    std::vector<double> util(cluster_count, 0.0);
    if (cluster_count == 0) {
        return util;
    }
    util[0] = counters.little_util_total;
    if (cluster_count > 1) {
        double busiest = 0.0;
        for (double u : counters.big_util_per_core) {
            busiest = std::max(busiest, u);
        }
        for (int c = 1; c < cluster_count; ++c) {
            util[c] = busiest;
        }
    }
    return util;
}

Configuration ondemand_step(OndemandState &state, const SocDescriptor &soc,
                            const std::vector<double> &utilization)
{
    if (state.current.cpu_freq_idx.size() != soc.clusters.size()) {
        state.current = OndemandState::initial(soc, state.up_threshold, state.down_threshold).current;
    }
    for (std::size_t c = 0; c < soc.clusters.size() && c < utilization.size(); ++c) {
        const int top = static_cast<int>(soc.clusters[c].freq_levels.size()) - 1;
        int &f = state.current.cpu_freq_idx[c];
        if (utilization[c] > state.up_threshold) {
            f = std::min(f + 1, top);
        }
        else if (utilization[c] < state.down_threshold) {
            f = std::max(f - 1, 0);
        }
    }
    return state.current;
}

Configuration ondemand_step(OndemandState &state, const SocDescriptor &soc,
                            const CounterSample &counters)
{
    return ondemand_step(state, soc, cluster_utilization(counters, soc.cluster_count()));
}

GpuOndemandState GpuOndemandState::initial(const SocDescriptor &soc)
{
    GpuOndemandState s;
    s.freq_idx = static_cast<int>(soc.gpu.freq_levels.size()) - 1;
    s.slices = soc.gpu.slice_count;
    return s;
}

int gpu_ondemand_step(GpuOndemandState &state, const SocDescriptor &soc, double utilization)
{
    const int top = static_cast<int>(soc.gpu.freq_levels.size()) - 1;
    if (utilization > state.up_threshold) {
        state.freq_idx = std::min(state.freq_idx + 1, top);
    }
    else if (utilization < state.down_threshold) {
        state.freq_idx = std::max(state.freq_idx - 1, 0);
    }
    return state.freq_idx;
}

QTable::QTable(int states, int actions, const QOptions &options)
    : m_states(states), m_actions(actions), m_options(options), m_epsilon(options.epsilon),
      m_values(static_cast<std::size_t>(states) * actions, 0.0), m_rng(mix_seed(options.seed, 0x9a))
{
    if (states < 1 || actions < 1) {
        throw std::invalid_argument("Q-table needs at least one state and one action");
    }
    set_epsilon(options.epsilon);
}

void QTable::set_epsilon(double epsilon)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    }
    m_epsilon = epsilon;
}

double QTable::value(int state, int action) const
{
    if (state < 0 || state >= m_states || action < 0 || action >= m_actions) {
        throw BoundsError("Q-table index out of range");
    }
    return m_values[static_cast<std::size_t>(state) * m_actions + action];
}

void QTable::set_value(int state, int action, double v)
{
    value(state, action);
    m_values[static_cast<std::size_t>(state) * m_actions + action] = v;
}

int QTable::greedy(int state) const
{
    int best = 0;
    for (int a = 1; a < m_actions; ++a) {
        if (value(state, a) > value(state, best)) {
            best = a;
        }
    }
    return best;
}

double QTable::max_value(int state) const
{
    return value(state, greedy(state));
}

void QTable::update(int state, int action, double reward, int next_state)
{
    if (!std::isfinite(reward)) {
        throw std::invalid_argument("Q-learning reward must be finite");
    }
    const double q = value(state, action);
    const double target = reward + m_options.gamma * max_value(next_state);
    set_value(state, action, q + m_options.alpha * (target - q));
}

int QTable::select(int state)
{
    int action = greedy(state);
    if (m_epsilon > 0.0 && m_rng.uniform() < m_epsilon) {
        action = static_cast<int>(m_rng.below(static_cast<std::uint64_t>(m_actions)));
    }
    m_epsilon *= m_options.epsilon_decay;
    return action;
}

void QTable::set_pending(int state, int action)
{
    value(state, action);
    m_pending_state = state;
    m_pending_action = action;
}

void QTable::clear_pending()
{
    m_pending_state = -1;
    m_pending_action = -1;
}

std::string QTable::to_csv() const
{
    std::ostringstream os;
    os << "state_u,state_m,action,value\n";
    const int mem_bins = std::max(1, m_options.mem_bins);
    for (int s = 0; s < m_states; ++s) {
        for (int a = 0; a < m_actions; ++a) {
            os << s / mem_bins << ',' << s % mem_bins << ',' << a << ','
               << format_double(value(s, a)) << '\n';
        }
    }
    return os.str();
}

int q_state(const CounterSample &counters, const QOptions &options)
{
    const double util = counters.big_util_per_core.empty() ? counters.little_util_total
                                                           : counters.big_util_per_core.front();
    const double instr = counters.instructions_retired;
    // Memory proxy spans [0, kL2MissRate] l2 misses per instruction.
    const double mem = instr > 0.0 ? counters.l2_cache_misses / instr / kL2MissRate : 0.0;
    auto bin = [](double x, int bins) {
        if (!std::isfinite(x)) {
            return 0;
        }
        return std::clamp(static_cast<int>(std::floor(x * bins)), 0, bins - 1);
    };
    return bin(util, options.util_bins) * options.mem_bins + bin(mem, options.mem_bins);
}

Configuration q_step(QTable &q, const std::vector<Configuration> &actions,
                     const CounterSample &counters, double reward)
{
    if (static_cast<int>(actions.size()) != q.action_count()) {
        throw std::invalid_argument("q_step: action list does not match the Q-table");
    }
    const int state = q_state(counters, q.options());
    if (q.has_pending()) {
        q.update(q.pending_state(), q.pending_action(), reward, state);
    }
    const int action = q.select(state);
    q.set_pending(state, action);
    return actions[action];
}

}  // namespace socrm
