#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace socrm {

/// One CPU cluster of a heterogeneous SoC. Voltage level i pairs with frequency level i.
struct ClusterDescriptor {
    std::string name;
    int core_count = 1;
    std::vector<double> freq_levels;  // Hz, strictly ascending
    std::vector<double> volt_levels;  // V, non-decreasing
    double ipc_max = 1.0;
    double c_eff = 1e-10;             // F (scaled); dynamic power = n c V^2 f u
    double p_static_coeff = 0.0;      // W per volt per active core
};

struct GpuDescriptor {
    int slice_count = 1;
    std::vector<double> freq_levels;
    std::vector<double> volt_levels;
    double c_eff = 1e-10;
    double p_static_coeff = 0.0;
    double slice_switch_energy = 0.0;   // J per slice toggled
    double slice_switch_latency = 0.0;  // s per slice toggled
};

struct SocDescriptor {
    std::vector<ClusterDescriptor> clusters;
    GpuDescriptor gpu;
    double switch_energy_cost = 0.0;  // J per frequency-index step or core toggled
    double switch_time_cost = 0.0;    // s per frequency-index step or core toggled
    double uncore_power = 0.0;        // W drawn while a CPU snippet executes
    double noise_amplitude = 0.02;    // multiplicative noise is U(1 - a, 1 + a)

    int cluster_count() const { return static_cast<int>(clusters.size()); }
    /// Reference frequency of the stall model: highest frequency of cluster 0.
    double reference_frequency() const;
};

/// One point in the control space.
struct Configuration {
    std::vector<int> cpu_freq_idx;
    std::vector<int> cpu_active_cores;
    int gpu_freq_idx = 0;
    int gpu_active_slices = 1;

    bool operator==(const Configuration &other) const = default;
    auto operator<=>(const Configuration &other) const = default;
};

/// Throws std::invalid_argument when a descriptor invariant does not hold.
void validate(const SocDescriptor &soc);

/// Throws BoundsError when any knob is outside the descriptor's range.
void validate(const SocDescriptor &soc, const Configuration &cfg);
bool is_valid(const SocDescriptor &soc, const Configuration &cfg);

/// All frequencies at their highest level, all cores and slices active.
Configuration max_configuration(const SocDescriptor &soc);
/// All frequencies at their lowest level, one core per cluster, one slice.
Configuration min_configuration(const SocDescriptor &soc);

int total_cpu_freq_index(const Configuration &cfg);
int total_active_cores(const Configuration &cfg);

/// Compact text form, e.g. "2.4|1.1|g0.1" (cluster freq.cores, then GPU).
std::string to_string(const Configuration &cfg);
Configuration configuration_from_string(const std::string &text);

/// Two-cluster big.LITTLE SoC with a 4-slice GPU used by the experiments and tests.
SocDescriptor default_soc();

SocDescriptor load_soc(const std::string &path);
SocDescriptor parse_soc(const std::string &json_text);
std::string dump_soc(const SocDescriptor &soc);

}  // namespace socrm
