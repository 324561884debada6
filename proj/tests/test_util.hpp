#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"
#include "socrm/thermal.hpp"

namespace socrm_test {

/// Two clusters with three frequency levels and two cores each; GPU with two
/// frequency levels and two slices (144 configurations, 36 CPU ones).
inline socrm::SocDescriptor small_soc(double noise = 0.0)
{
    socrm::SocDescriptor soc;
    socrm::ClusterDescriptor little;
    little.name = "little";
    little.core_count = 2;
    little.freq_levels = {0.6e9, 1.0e9, 1.4e9};
    little.volt_levels = {0.90, 1.00, 1.16};
    little.ipc_max = 1.0;
    little.c_eff = 0.1e-9;
    little.p_static_coeff = 0.04;
    socrm::ClusterDescriptor big;
    big.name = "big";
    big.core_count = 2;
    big.freq_levels = {0.8e9, 1.4e9, 2.0e9};
    big.volt_levels = {0.88, 1.07, 1.30};
    big.ipc_max = 2.0;
    big.c_eff = 0.45e-9;
    big.p_static_coeff = 0.25;
    soc.clusters = {little, big};
    soc.gpu.slice_count = 2;
    soc.gpu.freq_levels = {300e6, 600e6};
    soc.gpu.volt_levels = {0.70, 0.85};
    soc.gpu.c_eff = 1e-9;
    soc.gpu.p_static_coeff = 0.3;
    soc.gpu.slice_switch_energy = 2e-3;
    soc.gpu.slice_switch_latency = 20e-3;
    soc.switch_energy_cost = 1e-4;
    soc.switch_time_cost = 50e-6;
    soc.uncore_power = 0.6;
    soc.noise_amplitude = noise;
    return soc;
}

/// One cluster, one frequency level, one core; GPU one level, one slice.
inline socrm::SocDescriptor trivial_soc()
{
    socrm::SocDescriptor soc;
    socrm::ClusterDescriptor cl;
    cl.name = "only";
    cl.core_count = 1;
    cl.freq_levels = {1e9};
    cl.volt_levels = {1.0};
    cl.ipc_max = 1.0;
    cl.c_eff = 1e-10;
    cl.p_static_coeff = 0.1;
    soc.clusters = {cl};
    soc.gpu.slice_count = 1;
    soc.gpu.freq_levels = {500e6};
    soc.gpu.volt_levels = {0.8};
    soc.noise_amplitude = 0.0;
    return soc;
}

inline socrm::SnippetSpec snippet(double mu, double parallel, double little_affinity,
                                  std::uint64_t seed = 1, double instructions = 100e6)
{
    socrm::SnippetSpec s;
    s.instruction_count = instructions;
    s.mem_intensity = mu;
    s.parallel_fraction = parallel;
    s.cluster_affinity = {little_affinity, 1.0 - little_affinity};
    s.seed = seed;
    return s;
}

inline socrm::Configuration cpu_config(std::vector<int> freq, std::vector<int> cores)
{
    socrm::Configuration cfg;
    cfg.cpu_freq_idx = std::move(freq);
    cfg.cpu_active_cores = std::move(cores);
    return cfg;
}

inline double spectral_radius_of(const Eigen::MatrixXd &m)
{
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

// True when iterating thermal_step settles from every one of the starts.
inline bool iterates_converge(const socrm::ThermalModel &tm, const Eigen::VectorXd &power, std::mt19937_64 &gen)
{
    std::uniform_real_distribution<double> u(-50.0, 150.0);
    for (int start = 0; start < 10; ++start) {
        Eigen::VectorXd t(tm.hotspots());
        for (int i = 0; i < t.size(); ++i) {
            t(i) = u(gen);
        }
        Eigen::VectorXd prev = t;
        for (int k = 0; k < 2000; ++k) {
            prev = t;
            t = socrm::thermal_step(tm, t, power);
        }
        if (!t.allFinite() || (t - prev).cwiseAbs().maxCoeff() > 1e-6) {
            return false;
        }
    }
    return true;
}

inline socrm::ThermalModel random_model(std::mt19937_64 &gen, int n, bool stable)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.05, 1.0);
    while (true) {
        socrm::ThermalModel tm;
        tm.a = Eigen::MatrixXd(n, n);
        tm.b = Eigen::MatrixXd(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                tm.a(i, j) = u(gen);
                tm.b(i, j) = (i == j) ? pos(gen) : 0.1 * pos(gen);
            }
        }
        tm.c = Eigen::VectorXd::Constant(n, 5.0);
        tm.leak_p0 = 0.2;
        tm.leak_p1 = 0.05;
        const double target = stable ? 0.2 + 0.7 * pos(gen) : 1.1 + 0.5 * pos(gen);
        tm.a *= target / spectral_radius_of(tm.a + tm.leak_p1 * tm.b);
        const double r = spectral_radius_of(tm.a + tm.leak_p1 * tm.b);
        if (std::abs(r - target) < 0.05) {
            return tm;
        }
    }
}

}  // namespace socrm_test
