#include "socrm/soc.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "socrm/error.hpp"

namespace socrm {

namespace {

void validate_levels(const std::string &what, const std::vector<double> &freqs,
                     const std::vector<double> &volts)
{
    if (freqs.empty()) {
        throw std::invalid_argument(what + ": freq_levels must not be empty");
    }
    if (freqs.size() != volts.size()) {
        throw std::invalid_argument(what + ": volt_levels and freq_levels differ in length");
    }
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (!(freqs[i] > 0.0) || !(volts[i] > 0.0)) {
            throw std::invalid_argument(what + ": levels must be positive");
        }
        if (i > 0 && !(freqs[i] > freqs[i - 1])) {
            throw std::invalid_argument(what + ": freq_levels must be strictly ascending");
        }
        if (i > 0 && volts[i] < volts[i - 1]) {
            throw std::invalid_argument(what + ": volt_levels must be non-decreasing");
        }
    }
}

}  // namespace

double SocDescriptor::reference_frequency() const
{
    if (clusters.empty() || clusters.front().freq_levels.empty()) {
        throw std::invalid_argument("descriptor has no cluster 0 frequency levels");
    }
    return clusters.front().freq_levels.back();
}

void validate(const SocDescriptor &soc)
{
    if (soc.clusters.empty()) {
        throw std::invalid_argument("descriptor must have at least one cluster");
    }
    for (const auto &cl : soc.clusters) {
        if (cl.core_count < 1) {
            throw std::invalid_argument("cluster " + cl.name + ": core_count must be positive");
        }
        validate_levels("cluster " + cl.name, cl.freq_levels, cl.volt_levels);
        if (!(cl.ipc_max > 0.0) || cl.c_eff < 0.0 || cl.p_static_coeff < 0.0) {
            throw std::invalid_argument("cluster " + cl.name + ": invalid power/ipc coefficients");
        }
    }
    if (soc.gpu.slice_count < 1) {
        throw std::invalid_argument("gpu: slice_count must be positive");
    }
    validate_levels("gpu", soc.gpu.freq_levels, soc.gpu.volt_levels);
    if (soc.switch_energy_cost < 0.0 || soc.switch_time_cost < 0.0 ||
        soc.gpu.slice_switch_energy < 0.0 || soc.gpu.slice_switch_latency < 0.0 ||
        soc.uncore_power < 0.0) {
        throw std::invalid_argument("transition costs and uncore power must be non-negative");
    }
    if (soc.noise_amplitude < 0.0 || soc.noise_amplitude >= 1.0) {
        throw std::invalid_argument("noise_amplitude must lie in [0, 1)");
    }
}

void validate(const SocDescriptor &soc, const Configuration &cfg)
{
    const auto n = soc.clusters.size();
    if (cfg.cpu_freq_idx.size() != n || cfg.cpu_active_cores.size() != n) {
        throw BoundsError("configuration has " + std::to_string(cfg.cpu_freq_idx.size()) +
                          " cluster entries, descriptor has " + std::to_string(n));
    }
    for (std::size_t c = 0; c < n; ++c) {
        const auto &cl = soc.clusters[c];
        if (cfg.cpu_freq_idx[c] < 0 ||
            cfg.cpu_freq_idx[c] >= static_cast<int>(cl.freq_levels.size())) {
            throw BoundsError("cluster " + cl.name + ": frequency index " +
                              std::to_string(cfg.cpu_freq_idx[c]) + " out of range");
        }
        if (cfg.cpu_active_cores[c] < 1 || cfg.cpu_active_cores[c] > cl.core_count) {
            throw BoundsError("cluster " + cl.name + ": active core count " +
                              std::to_string(cfg.cpu_active_cores[c]) + " out of range");
        }
    }
    if (cfg.gpu_freq_idx < 0 ||
        cfg.gpu_freq_idx >= static_cast<int>(soc.gpu.freq_levels.size())) {
        throw BoundsError("gpu: frequency index " + std::to_string(cfg.gpu_freq_idx) +
                          " out of range");
    }
    if (cfg.gpu_active_slices < 1 || cfg.gpu_active_slices > soc.gpu.slice_count) {
        throw BoundsError("gpu: active slice count " + std::to_string(cfg.gpu_active_slices) +
                          " out of range");
    }
}

bool is_valid(const SocDescriptor &soc, const Configuration &cfg)
{
    try {
        validate(soc, cfg);
    }
    catch (const BoundsError &) {
        return false;
    }
    return true;
}

Configuration max_configuration(const SocDescriptor &soc)
{
    Configuration cfg;
    for (const auto &cl : soc.clusters) {
        cfg.cpu_freq_idx.push_back(static_cast<int>(cl.freq_levels.size()) - 1);
        cfg.cpu_active_cores.push_back(cl.core_count);
    }
    cfg.gpu_freq_idx = static_cast<int>(soc.gpu.freq_levels.size()) - 1;
    cfg.gpu_active_slices = soc.gpu.slice_count;
    return cfg;
}

Configuration min_configuration(const SocDescriptor &soc)
{
    Configuration cfg;
    cfg.cpu_freq_idx.assign(soc.clusters.size(), 0);
    cfg.cpu_active_cores.assign(soc.clusters.size(), 1);
    cfg.gpu_freq_idx = 0;
    cfg.gpu_active_slices = 1;
    return cfg;
}

int total_cpu_freq_index(const Configuration &cfg)
{
    return std::accumulate(cfg.cpu_freq_idx.begin(), cfg.cpu_freq_idx.end(), 0);
}

int total_active_cores(const Configuration &cfg)
{
    return std::accumulate(cfg.cpu_active_cores.begin(), cfg.cpu_active_cores.end(), 0);
}

std::string to_string(const Configuration &cfg)
{
    std::ostringstream os;
    for (std::size_t c = 0; c < cfg.cpu_freq_idx.size(); ++c) {
        os << cfg.cpu_freq_idx[c] << '.' << cfg.cpu_active_cores[c] << '|';
    }
    os << 'g' << cfg.gpu_freq_idx << '.' << cfg.gpu_active_slices;
    return os.str();
}

Configuration configuration_from_string(const std::string &text)
{
    Configuration cfg;
    std::istringstream is(text);
    std::string part;
    bool have_gpu = false;
    while (std::getline(is, part, '|')) {
        bool is_gpu = !part.empty() && part.front() == 'g';
        std::string body = is_gpu ? part.substr(1) : part;
        auto dot = body.find('.');
        if (dot == std::string::npos || have_gpu) {
            throw std::invalid_argument("malformed configuration string: " + text);
        }
        int a = std::stoi(body.substr(0, dot));
        int b = std::stoi(body.substr(dot + 1));
        if (is_gpu) {
            cfg.gpu_freq_idx = a;
            cfg.gpu_active_slices = b;
            have_gpu = true;
        }
        else {
            cfg.cpu_freq_idx.push_back(a);
            cfg.cpu_active_cores.push_back(b);
        }
    }
    if (!have_gpu) {
        throw std::invalid_argument("configuration string lacks GPU part: " + text);
    }
    return cfg;
}

SocDescriptor default_soc()
{
    SocDescriptor soc;
    ClusterDescriptor little;
    little.name = "little";
    little.core_count = 4;
    little.freq_levels = {0.6e9, 1.0e9, 1.4e9};
    little.volt_levels = {0.90, 1.00, 1.16};
    little.ipc_max = 1.0;
    little.c_eff = 0.10e-9;
    little.p_static_coeff = 0.04;

    ClusterDescriptor big;
    big.name = "big";
    big.core_count = 4;
    big.freq_levels = {0.8e9, 1.2e9, 1.6e9, 2.0e9};
    big.volt_levels = {0.88, 1.00, 1.14, 1.30};
    big.ipc_max = 2.0;
    big.c_eff = 0.45e-9;
    big.p_static_coeff = 0.25;

    soc.clusters = {little, big};

    soc.gpu.slice_count = 4;
    soc.gpu.freq_levels = {300e6, 400e6, 500e6, 600e6, 700e6, 800e6, 900e6, 1000e6};
    soc.gpu.volt_levels = {0.70, 0.72, 0.75, 0.79, 0.84, 0.90, 0.97, 1.05};
    soc.gpu.c_eff = 1.0e-9;
    soc.gpu.p_static_coeff = 0.30;
    soc.gpu.slice_switch_energy = 2e-3;
    soc.gpu.slice_switch_latency = 20e-3;

    soc.switch_energy_cost = 1e-4;
    soc.switch_time_cost = 50e-6;
    soc.uncore_power = 0.6;
    soc.noise_amplitude = 0.02;
    return soc;
}

namespace {

using nlohmann::json;

std::vector<double> read_levels(const json &j, const char *key)
{
    return j.at(key).get<std::vector<double>>();
}

}  // namespace

SocDescriptor parse_soc(const std::string &json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    }
    catch (const json::parse_error &ex) {
        throw IoError(std::string("descriptor is not valid JSON: ") + ex.what());
    }
    SocDescriptor soc;
    try {
        for (const auto &jc : j.at("clusters")) {
            ClusterDescriptor cl;
            cl.name = jc.at("name").get<std::string>();
            cl.core_count = jc.at("core_count").get<int>();
            cl.freq_levels = read_levels(jc, "freq_levels");
            cl.volt_levels = read_levels(jc, "volt_levels");
            cl.ipc_max = jc.at("ipc_max").get<double>();
            cl.c_eff = jc.at("c_eff").get<double>();
            cl.p_static_coeff = jc.at("p_static_coeff").get<double>();
            soc.clusters.push_back(std::move(cl));
        }
        const auto &jg = j.at("gpu");
        soc.gpu.slice_count = jg.at("slice_count").get<int>();
        soc.gpu.freq_levels = read_levels(jg, "freq_levels");
        soc.gpu.volt_levels = read_levels(jg, "volt_levels");
        soc.gpu.c_eff = jg.at("c_eff").get<double>();
        soc.gpu.p_static_coeff = jg.at("p_static_coeff").get<double>();
        soc.gpu.slice_switch_energy = jg.at("slice_switch_energy").get<double>();
        soc.gpu.slice_switch_latency = jg.at("slice_switch_latency").get<double>();
        soc.switch_energy_cost = j.at("switch_energy_cost").get<double>();
        soc.switch_time_cost = j.at("switch_time_cost").get<double>();
        soc.uncore_power = j.value("uncore_power", 0.0);
        soc.noise_amplitude = j.value("noise_amplitude", 0.02);
    }
    catch (const json::exception &ex) {
        throw std::invalid_argument(std::string("invalid descriptor: ") + ex.what());
    }
    validate(soc);
    return soc;
}

SocDescriptor load_soc(const std::string &path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open descriptor file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_soc(ss.str());
}

std::string dump_soc(const SocDescriptor &soc)
{
    json j;
    j["clusters"] = json::array();
    for (const auto &cl : soc.clusters) {
        j["clusters"].push_back({{"name", cl.name},
                                 {"core_count", cl.core_count},
                                 {"freq_levels", cl.freq_levels},
                                 {"volt_levels", cl.volt_levels},
                                 {"ipc_max", cl.ipc_max},
                                 {"c_eff", cl.c_eff},
                                 {"p_static_coeff", cl.p_static_coeff}});
    }
    j["gpu"] = {{"slice_count", soc.gpu.slice_count},
                {"freq_levels", soc.gpu.freq_levels},
                {"volt_levels", soc.gpu.volt_levels},
                {"c_eff", soc.gpu.c_eff},
                {"p_static_coeff", soc.gpu.p_static_coeff},
                {"slice_switch_energy", soc.gpu.slice_switch_energy},
                {"slice_switch_latency", soc.gpu.slice_switch_latency}};
    j["switch_energy_cost"] = soc.switch_energy_cost;
    j["switch_time_cost"] = soc.switch_time_cost;
    j["uncore_power"] = soc.uncore_power;
    j["noise_amplitude"] = soc.noise_amplitude;
    return j.dump(2);
}

}  // namespace socrm
