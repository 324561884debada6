#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socrm/soc.hpp"

namespace socrm {

/// A fixed-instruction segment of an application.
struct SnippetSpec {
    double instruction_count = 100e6;
    double mem_intensity = 0.0;       // mu in [0, 1]
    double parallel_fraction = 0.0;   // [0, 1]
    std::vector<double> cluster_affinity;  // one weight per cluster, sums to 1
    std::uint64_t seed = 0;
};

/// Counter readings collected at the end of a snippet.
struct CounterSample {
    double instructions_retired = 0.0;
    double cpu_cycles = 0.0;
    double branch_mispredictions = 0.0;
    double l2_cache_misses = 0.0;
    double data_memory_accesses = 0.0;
    double noncache_ext_mem_requests = 0.0;
    double little_util_total = 0.0;
    std::vector<double> big_util_per_core;
    double total_chip_power = 0.0;

    bool operator==(const CounterSample &) const = default;
};

struct SnippetOutcome {
    CounterSample counters;
    double exec_time = 0.0;
    double energy = 0.0;
    double avg_power = 0.0;

    bool operator==(const SnippetOutcome &) const = default;
};

struct FrameOutcome {
    double frame_time = 0.0;
    double energy = 0.0;
};

struct TransitionCost {
    double energy = 0.0;
    double time = 0.0;
};

// Counter-law constants.
inline constexpr double kL2MissRate = 0.02;
inline constexpr double kBranchMissRate = 0.005;
inline constexpr double kDataAccessRate = 0.3;
inline constexpr double kExtMemPerL2Miss = 0.8;
inline constexpr double kSliceEfficiencyExponent = 0.9;

void validate(const SocDescriptor &soc, const SnippetSpec &spec);

/// Scaled speedup n * p + (1 - p).
double parallel_speedup(int active_cores, double parallel_fraction);

/// Ground-truth execution of one snippet. Pure and deterministic in (soc, spec, cfg).
SnippetOutcome simulate_snippet(const SocDescriptor &soc, const SnippetSpec &spec,
                                const Configuration &cfg);

/// Ground-truth execution of one GPU frame of frame_work cycles.
FrameOutcome simulate_gpu_frame(const SocDescriptor &soc, double frame_work,
                                const Configuration &cfg);
FrameOutcome simulate_gpu_frame(const SocDescriptor &soc, double frame_work, int gpu_freq_idx,
                                int gpu_slices);

/// Number of distinct configurations (product of knob cardinalities).
/// 128 bits, so per-core spaces such as 2^72 are exact.
__extension__ typedef unsigned __int128 ConfigCount;
ConfigCount count_configurations(const SocDescriptor &soc);
std::string to_string(ConfigCount value);

/// Every configuration of the descriptor, lexicographic in (cluster freq, cluster cores, ..., gpu).
std::vector<Configuration> enumerate_configurations(const SocDescriptor &soc);
/// CPU knobs only; GPU knobs held at (0, 1).
std::vector<Configuration> enumerate_cpu_configurations(const SocDescriptor &soc);

TransitionCost apply_transition(const Configuration &prev, const Configuration &next,
                                const SocDescriptor &soc);

}  // namespace socrm
