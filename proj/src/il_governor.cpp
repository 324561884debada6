#include "socrm/il_governor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <stdexcept>

#include "socrm/error.hpp"
#include "socrm/oracle.hpp"
#include "socrm/random.hpp"

namespace socrm {

namespace {

constexpr char kBufferMagic[4] = {'S', 'R', 'A', 'B'};
constexpr std::uint32_t kBufferVersion = 1;

template <typename T>
void put(std::string &out, T value)
{
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string &in, std::size_t &at)
{
    if (at + sizeof(T) > in.size()) {
        throw IoError("aggregation buffer: truncated data");
    }
    T value;
    std::memcpy(&value, in.data() + at, sizeof(T));
    at += sizeof(T);
    return value;
}

}  // namespace

AggregationBuffer::AggregationBuffer(std::size_t capacity) : m_capacity(capacity)
{
    if (capacity == 0) {
        throw std::invalid_argument("aggregation buffer capacity must be positive");
    }
    m_samples.reserve(capacity);
}

bool AggregationBuffer::push(const CounterSample &counters, const Configuration &label)
{
    if (full()) {
        throw InvariantViolation("aggregation buffer overflow: retrain before pushing");
    }
    m_samples.push_back({counters, label});
    return full();
}

std::string AggregationBuffer::serialize() const
{
    std::string out(kBufferMagic, sizeof(kBufferMagic));
    const std::uint32_t big =
        m_samples.empty() ? 0 : static_cast<std::uint32_t>(m_samples.front().counters.big_util_per_core.size());
    const std::uint32_t clusters =
        m_samples.empty() ? 0 : static_cast<std::uint32_t>(m_samples.front().label.cpu_freq_idx.size());
    put<std::uint32_t>(out, kBufferVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m_capacity));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m_samples.size()));
    put<std::uint32_t>(out, big);
    put<std::uint32_t>(out, clusters);
    for (const auto &s : m_samples) {
        const auto &k = s.counters;
        if (k.big_util_per_core.size() != big || s.label.cpu_freq_idx.size() != clusters ||
            s.label.cpu_active_cores.size() != clusters) {
            throw InvariantViolation("aggregation buffer entries have inconsistent shapes");
        }
        for (double v : {k.instructions_retired, k.cpu_cycles, k.branch_mispredictions,
                         k.l2_cache_misses, k.data_memory_accesses, k.noncache_ext_mem_requests,
                         k.little_util_total}) {
            put<double>(out, v);
        }
        for (double u : k.big_util_per_core) {
            put<double>(out, u);
        }
        for (int f : s.label.cpu_freq_idx) {
            put<std::int32_t>(out, f);
        }
        for (int n : s.label.cpu_active_cores) {
            put<std::int32_t>(out, n);
        }
    }
    return out;
}

AggregationBuffer AggregationBuffer::deserialize(const std::string &bytes)
{
    if (bytes.size() < sizeof(kBufferMagic) ||
        std::memcmp(bytes.data(), kBufferMagic, sizeof(kBufferMagic)) != 0) {
        throw IoError("not an aggregation buffer");
    }
    std::size_t at = sizeof(kBufferMagic);
    if (take<std::uint32_t>(bytes, at) != kBufferVersion) {
        throw IoError("aggregation buffer version is not supported");
    }
    const auto capacity = take<std::uint32_t>(bytes, at);
    const auto count = take<std::uint32_t>(bytes, at);
    const auto big = take<std::uint32_t>(bytes, at);
    const auto clusters = take<std::uint32_t>(bytes, at);
    if (capacity == 0 || count > capacity) {
        throw IoError("aggregation buffer header is malformed");
    }
    AggregationBuffer buf(capacity);
    for (std::uint32_t i = 0; i < count; ++i) {
        LabeledSample s;
        auto &k = s.counters;
        k.instructions_retired = take<double>(bytes, at);
        k.cpu_cycles = take<double>(bytes, at);
        k.branch_mispredictions = take<double>(bytes, at);
        k.l2_cache_misses = take<double>(bytes, at);
        k.data_memory_accesses = take<double>(bytes, at);
        k.noncache_ext_mem_requests = take<double>(bytes, at);
        k.little_util_total = take<double>(bytes, at);
        for (std::uint32_t j = 0; j < big; ++j) {
            k.big_util_per_core.push_back(take<double>(bytes, at));
        }
        for (std::uint32_t c = 0; c < clusters; ++c) {
            s.label.cpu_freq_idx.push_back(take<std::int32_t>(bytes, at));
        }
        for (std::uint32_t c = 0; c < clusters; ++c) {
            s.label.cpu_active_cores.push_back(take<std::int32_t>(bytes, at));
        }
        buf.m_samples.push_back(std::move(s));
    }
    if (at != bytes.size()) {
        throw IoError("aggregation buffer has trailing bytes");
    }
    return buf;
}

ModelBank::ModelBank(const SocDescriptor &soc, double forgetting)
    : m_soc(soc), m_power(2 * soc.cluster_count(), forgetting),
      m_throughput(soc.cluster_count(), forgetting)
{
    validate(soc);
}

WorkloadEstimate ModelBank::estimate(const CounterSample &k) const
{
    WorkloadEstimate w;
    const double instr = k.instructions_retired;
    w.mem_intensity = instr > 0.0 ? std::clamp(k.l2_cache_misses / instr / kL2MissRate, 0.0, 1.0) : 0.0;
    w.parallel_fraction = m_parallel_hint;
    const auto &big = k.big_util_per_core;
    if (big.size() > 1 && big[0] > 0.0) {
        double sum = 0.0;
        int active = 0;
        for (std::size_t i = 1; i < big.size(); ++i) {
            if (big[i] > 0.0) {
                sum += big[i];
                ++active;
            }
        }
        if (active > 0) {
            w.parallel_fraction = std::clamp(sum / active / big[0], 0.0, 1.0);
        }
    }
    const int nc = m_soc.cluster_count();
    w.affinity.assign(nc, 0.0);
    if (nc == 1) {
        w.affinity[0] = 1.0;
    }
    else {
        w.affinity[0] = std::clamp(k.little_util_total, 0.0, 1.0);
        w.affinity[nc - 1] = big.empty() ? 1.0 - w.affinity[0] : std::clamp(big[0], 0.0, 1.0);
        const double rest = std::max(0.0, 1.0 - w.affinity[0] - w.affinity[nc - 1]);
        for (int c = 1; c < nc - 1; ++c) {
            w.affinity[c] = rest / (nc - 2);
        }
    }
    return w;
}

std::vector<double> ModelBank::power_features(const WorkloadEstimate &w,
                                              const Configuration &cfg) const
{
    std::vector<double> x;
    for (int c = 0; c < m_soc.cluster_count(); ++c) {
        const auto &cl = m_soc.clusters[c];
        const double f = cl.freq_levels[cfg.cpu_freq_idx[c]] * 1e-9;
        const double v = cl.volt_levels[cfg.cpu_freq_idx[c]];
        const int n = cfg.cpu_active_cores[c];
        x.push_back(v * v * f * w.affinity[c] * parallel_speedup(n, w.parallel_fraction));
        x.push_back(n * v);
    }
    return x;
}

std::vector<double> ModelBank::throughput_features(const WorkloadEstimate &w,
                                                   const Configuration &cfg) const
{
    const double f_ref = m_soc.reference_frequency();
    std::vector<double> x;
    for (int c = 0; c < m_soc.cluster_count(); ++c) {
        const auto &cl = m_soc.clusters[c];
        const double hz = cl.freq_levels[cfg.cpu_freq_idx[c]];
        const int n = cfg.cpu_active_cores[c];
        x.push_back(w.affinity[c] * hz * 1e-9 * parallel_speedup(n, w.parallel_fraction) /
                    (1.0 + w.mem_intensity * hz / f_ref));
    }
    return x;
}

Prediction ModelBank::predict(const WorkloadEstimate &w, double instructions,
                              const Configuration &cfg) const
{
    Prediction p;
    p.power = m_power.predict(power_features(w, cfg));
    const double rate = m_throughput.predict(throughput_features(w, cfg)) * 1e9;
    p.valid = rate > 0.0 && p.power > 0.0 && std::isfinite(rate) && std::isfinite(p.power);
    p.exec_time = rate > 0.0 ? instructions / rate : 0.0;
    p.energy = p.power * p.exec_time;
    return p;
}

Prediction ModelBank::predict(const CounterSample &counters, const Configuration &cfg) const
{
    return predict(estimate(counters), counters.instructions_retired, cfg);
}

void ModelBank::update(const CounterSample &counters, const Configuration &cfg, double exec_time,
                       double avg_power)
{
    validate(m_soc, cfg);
    if (!(exec_time > 0.0) || !std::isfinite(exec_time) || !std::isfinite(avg_power)) {
        throw ModelError("model update needs a finite positive execution time and power");
    }
    const WorkloadEstimate w = estimate(counters);
    m_power.update(power_features(w, cfg), avg_power);
    m_throughput.update(throughput_features(w, cfg), counters.instructions_retired / exec_time * 1e-9);
    const auto &big = counters.big_util_per_core;
    if (big.size() > 1 && big[0] > 0.0 && big[1] > 0.0) {
        m_parallel_hint = w.parallel_fraction;
    }
}

void ModelBank::pretrain(const std::vector<SnippetSpec> &snippets, std::uint64_t seed)
{
    Rng rng(mix_seed(seed, 0x70e7));
    for (const auto &spec : snippets) {
        Configuration cfg = min_configuration(m_soc);
        for (int c = 0; c < m_soc.cluster_count(); ++c) {
            const auto &cl = m_soc.clusters[c];
            cfg.cpu_freq_idx[c] = static_cast<int>(rng.below(cl.freq_levels.size()));
            cfg.cpu_active_cores[c] = 1 + static_cast<int>(rng.below(cl.core_count));
        }
        const auto out = simulate_snippet(m_soc, spec, cfg);
        update(out.counters, cfg, out.exec_time, out.avg_power);
    }
}

std::vector<Configuration> candidate_neighborhood(const SocDescriptor &soc, const Configuration &cfg)
{
    validate(soc, cfg);
    std::vector<Configuration> out;
    Configuration cur = cfg;
    const int nc = soc.cluster_count();
    std::function<void(int)> rec = [&](int c) {
        if (c == nc) {
            out.push_back(cur);
            return;
        }
        const auto &cl = soc.clusters[c];
        const int levels = static_cast<int>(cl.freq_levels.size());
        for (int df = -1; df <= 1; ++df) {
            const int f = cfg.cpu_freq_idx[c] + df;
            if (f < 0 || f >= levels) {
                continue;
            }
            for (int dn = -1; dn <= 1; ++dn) {
                const int n = cfg.cpu_active_cores[c] + dn;
                if (n < 1 || n > cl.core_count) {
                    continue;
                }
                cur.cpu_freq_idx[c] = f;
                cur.cpu_active_cores[c] = n;
                rec(c + 1);
            }
        }
        cur.cpu_freq_idx[c] = cfg.cpu_freq_idx[c];
        cur.cpu_active_cores[c] = cfg.cpu_active_cores[c];
    };
    rec(0);
    std::sort(out.begin(), out.end());
    return out;
}

LabelResult runtime_oracle_label(const ModelBank &models, const CounterSample &counters,
                                 const std::vector<Configuration> &candidates)
{
    if (candidates.empty()) {
        throw std::invalid_argument("runtime_oracle_label: no candidates");
    }
    const WorkloadEstimate w = models.estimate(counters);
    LabelResult best;
    bool have = false;
    for (const auto &cfg : candidates) {
        const Prediction p = models.predict(w, counters.instructions_retired, cfg);
        if (!p.valid) {
            continue;
        }
        if (!have || p.energy < best.predicted_energy ||
            (p.energy == best.predicted_energy && prefer_on_tie(cfg, best.config))) {
            best.config = cfg;
            best.predicted_energy = p.energy;
            have = true;
        }
    }
    if (!have) {
        throw ModelError("runtime oracle: models give no valid prediction for any candidate");
    }
    return best;
}

LabelResult model_guided_label(const ModelBank &models, const CounterSample &counters,
                               const Configuration &start, int max_iterations,
                               double tolerance)
{
    LabelResult cur;
    cur.config = start;
    cur.config.gpu_freq_idx = 0;
    cur.config.gpu_active_slices = 1;
    const Prediction here = models.predict(counters, cur.config);
    cur.predicted_energy =
        here.valid ? here.energy : std::numeric_limits<double>::infinity();
    for (int i = 0; i < std::max(1, max_iterations); ++i) {
        const LabelResult best =
            runtime_oracle_label(models, counters, candidate_neighborhood(models.soc(), cur.config));
        if (best.config == cur.config ||
            best.predicted_energy >= cur.predicted_energy * (1.0 - tolerance)) {
            break;
        }
        cur = best;
    }
    return cur;
}

IlGovernor::IlGovernor(const SocDescriptor &soc, IlPolicy policy, ModelBank models,
                       IlOptions options)
    : m_soc(soc), m_policy(std::move(policy)), m_models(std::move(models)),
      m_options(options), m_buffer(options.buffer_capacity)
{
    validate(soc);
}

Configuration IlGovernor::initial_configuration() const
{
    return reference_configuration(m_soc);
}

IlStep IlGovernor::online_step(const SnippetOutcome &observed, const Configuration &ran)
{
    IlStep step;
    step.predicted_energy = m_models.predict(observed.counters, ran).energy;
    step.true_energy = observed.energy;
    if (m_options.online) {
        m_models.update(observed.counters, ran, observed.exec_time, observed.avg_power);
    }
    // The descent starts from the previous label rather than from `ran`, so
    // labels inside one workload phase do not follow the policy's own choices.
    const Configuration &start = m_have_label ? m_last_label : ran;
    step.label = model_guided_label(m_models, observed.counters, start,
                                    m_options.max_label_iterations, m_options.label_tolerance).config;
    m_last_label = step.label;
    m_have_label = true;
    if (m_options.online) {
        if (m_buffer.push(observed.counters, step.label)) {
            policy_update(m_policy, m_buffer.samples(), m_options.train);
            m_buffer.clear();
            ++m_retrains;
            step.retrained = true;
        }
    }
    step.chosen = m_policy.decide(observed.counters);
    step.agreement = step.chosen.cpu_freq_idx == step.label.cpu_freq_idx &&
                     step.chosen.cpu_active_cores == step.label.cpu_active_cores;
    return step;
}

}  // namespace socrm
