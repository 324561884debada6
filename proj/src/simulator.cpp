#include "socrm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "socrm/error.hpp"
#include "socrm/random.hpp"

namespace socrm {

void validate(const SocDescriptor &soc, const SnippetSpec &spec)
{
    if (!(spec.instruction_count > 0.0) || !std::isfinite(spec.instruction_count)) {
        throw std::invalid_argument("snippet instruction_count must be positive");
    }
    if (!(spec.mem_intensity >= 0.0 && spec.mem_intensity <= 1.0)) {
        throw std::invalid_argument("snippet mem_intensity must lie in [0, 1]");
    }
    if (!(spec.parallel_fraction >= 0.0 && spec.parallel_fraction <= 1.0)) {
        throw std::invalid_argument("snippet parallel_fraction must lie in [0, 1]");
    }
    if (spec.cluster_affinity.size() != soc.clusters.size()) {
        throw std::invalid_argument("snippet affinity needs one weight per cluster");
    }
    double sum = 0.0;
    for (double a : spec.cluster_affinity) {
        if (!(a >= 0.0)) {
            throw std::invalid_argument("snippet affinity weights must be non-negative");
        }
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("snippet affinity weights must sum to 1");
    }
}

double parallel_speedup(int active_cores, double parallel_fraction)
{
    return active_cores * parallel_fraction + (1.0 - parallel_fraction);
}

SnippetOutcome simulate_snippet(const SocDescriptor &soc, const SnippetSpec &spec,
                                const Configuration &cfg)
{
    validate(soc, cfg);
    validate(soc, spec);

    const double f_ref = soc.reference_frequency();
    const double mu = spec.mem_intensity;
    const double work = spec.instruction_count;
    const auto nc = soc.clusters.size();

    double throughput = 0.0;
    double weighted_ipc = 0.0;
    double power = soc.uncore_power;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto &cl = soc.clusters[c];
        const double f = cl.freq_levels[cfg.cpu_freq_idx[c]];
        const double v = cl.volt_levels[cfg.cpu_freq_idx[c]];
        const int n = cfg.cpu_active_cores[c];
        const double a = spec.cluster_affinity[c];
        const double speedup = parallel_speedup(n, spec.parallel_fraction);
        const double ipc = cl.ipc_max / (1.0 + mu * f / f_ref);
        throughput += a * ipc * f * speedup;
        weighted_ipc += a * ipc;
        const double util = a * speedup / n;
        power += n * cl.c_eff * v * v * f * util + n * cl.p_static_coeff * v;
    }
    if (!(throughput > 0.0)) {
        throw std::invalid_argument("snippet has zero effective throughput");
    }
    const double exec_time = work / throughput;

    // Noise factors are drawn from the snippet seed alone, in a fixed order.
    Rng rng(spec.seed);
    const double amp = soc.noise_amplitude;
    auto noise = [&]() { return rng.uniform(1.0 - amp, 1.0 + amp); };
    auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };

    SnippetOutcome out;
    auto &k = out.counters;
    const double l2_nominal = mu * kL2MissRate * work;
    k.instructions_retired = work * noise();
    k.cpu_cycles = work / weighted_ipc * noise();
    k.branch_mispredictions = kBranchMissRate * work * noise();
    k.l2_cache_misses = l2_nominal * noise();
    k.data_memory_accesses = kDataAccessRate * work * noise();
    k.noncache_ext_mem_requests = kExtMemPerL2Miss * l2_nominal * noise();
    k.little_util_total = clamp01(spec.cluster_affinity[0] * noise());
    if (nc > 1) {
        const auto big = nc - 1;
        const auto &cl = soc.clusters[big];
        const double a = spec.cluster_affinity[big];
        k.big_util_per_core.assign(cl.core_count, 0.0);
        for (int i = 0; i < cl.core_count; ++i) {
            // Noise is drawn for every core so the stream does not depend on cfg.
            const double nz = noise();
            if (i < cfg.cpu_active_cores[big]) {
                const double busy = (i == 0) ? a : a * spec.parallel_fraction;
                k.big_util_per_core[i] = clamp01(busy * nz);
            }
        }
    }
    out.exec_time = exec_time * noise();
    out.avg_power = power * noise();
    out.energy = out.avg_power * out.exec_time;
    k.total_chip_power = out.avg_power;
    return out;
}

FrameOutcome simulate_gpu_frame(const SocDescriptor &soc, double frame_work, int gpu_freq_idx,
                                int gpu_slices)
{
    const auto &gpu = soc.gpu;
    if (gpu_slices < 1 || gpu_slices > gpu.slice_count) {
        throw BoundsError("gpu: active slice count " + std::to_string(gpu_slices) +
                          " out of range");
    }
    if (gpu_freq_idx < 0 || gpu_freq_idx >= static_cast<int>(gpu.freq_levels.size())) {
        throw BoundsError("gpu: frequency index " + std::to_string(gpu_freq_idx) +
                          " out of range");
    }
    if (!(frame_work >= 0.0) || !std::isfinite(frame_work)) {
        throw std::invalid_argument("frame work must be finite and non-negative");
    }
    const double f = gpu.freq_levels[gpu_freq_idx];
    const double v = gpu.volt_levels[gpu_freq_idx];
    const double s = gpu_slices;
    FrameOutcome out;
    out.frame_time = frame_work / (f * std::pow(s, kSliceEfficiencyExponent));
    out.energy = (s * gpu.c_eff * v * v * f + s * gpu.p_static_coeff * v) * out.frame_time;
    return out;
}

FrameOutcome simulate_gpu_frame(const SocDescriptor &soc, double frame_work,
                                const Configuration &cfg)
{
    return simulate_gpu_frame(soc, frame_work, cfg.gpu_freq_idx, cfg.gpu_active_slices);
}

ConfigCount count_configurations(const SocDescriptor &soc)
{
    ConfigCount count = 1;
    for (const auto &cl : soc.clusters) {
        count *= static_cast<ConfigCount>(cl.freq_levels.size()) * cl.core_count;
    }
    count *= static_cast<ConfigCount>(soc.gpu.freq_levels.size()) * soc.gpu.slice_count;
    return count;
}

std::string to_string(ConfigCount value)
{
    if (value == 0) {
        return "0";
    }
    std::string digits;
    while (value > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    std::reverse(digits.begin(), digits.end());
    return digits;
}

namespace {

void enumerate_cpu(const SocDescriptor &soc, std::size_t cluster, Configuration &cur,
                   std::vector<Configuration> &out, bool with_gpu)
{
    if (cluster == soc.clusters.size()) {
        if (!with_gpu) {
            out.push_back(cur);
            return;
        }
        for (int gf = 0; gf < static_cast<int>(soc.gpu.freq_levels.size()); ++gf) {
            for (int gs = 1; gs <= soc.gpu.slice_count; ++gs) {
                cur.gpu_freq_idx = gf;
                cur.gpu_active_slices = gs;
                out.push_back(cur);
            }
        }
        cur.gpu_freq_idx = 0;
        cur.gpu_active_slices = 1;
        return;
    }
    const auto &cl = soc.clusters[cluster];
    for (int f = 0; f < static_cast<int>(cl.freq_levels.size()); ++f) {
        for (int n = 1; n <= cl.core_count; ++n) {
            cur.cpu_freq_idx[cluster] = f;
            cur.cpu_active_cores[cluster] = n;
            enumerate_cpu(soc, cluster + 1, cur, out, with_gpu);
        }
    }
}

std::vector<Configuration> enumerate_impl(const SocDescriptor &soc, bool with_gpu)
{
    Configuration cur = min_configuration(soc);
    std::vector<Configuration> out;
    enumerate_cpu(soc, 0, cur, out, with_gpu);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<Configuration> enumerate_configurations(const SocDescriptor &soc)
{
    return enumerate_impl(soc, true);
}

std::vector<Configuration> enumerate_cpu_configurations(const SocDescriptor &soc)
{
    return enumerate_impl(soc, false);
}

TransitionCost apply_transition(const Configuration &prev, const Configuration &next,
                                const SocDescriptor &soc)
{
    validate(soc, prev);
    validate(soc, next);
    int steps = std::abs(prev.gpu_freq_idx - next.gpu_freq_idx);
    for (std::size_t c = 0; c < prev.cpu_freq_idx.size(); ++c) {
        steps += std::abs(prev.cpu_freq_idx[c] - next.cpu_freq_idx[c]);
        steps += std::abs(prev.cpu_active_cores[c] - next.cpu_active_cores[c]);
    }
    const int slices = std::abs(prev.gpu_active_slices - next.gpu_active_slices);
    TransitionCost cost;
    cost.energy = soc.switch_energy_cost * steps + soc.gpu.slice_switch_energy * slices;
    cost.time = soc.switch_time_cost * steps + soc.gpu.slice_switch_latency * slices;
    return cost;
}

}  // namespace socrm
