// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "socrm/enmpc.hpp"
#include "socrm/harness.hpp"
#include "socrm/il_governor.hpp"
#include "socrm/io.hpp"
#include "socrm/oracle.hpp"
#include "socrm/policy.hpp"
#include "socrm/rls.hpp"
#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"
#include "socrm/suite.hpp"
#include "socrm/thermal.hpp"
#include "test_util.hpp"

#ifndef SOCRM_CLI_PATH
#error "SOCRM_CLI_PATH must name the socrm executable"
#endif

namespace fs = std::filesystem;
using socrm::Configuration;
using socrm::SocDescriptor;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

double elapsed_seconds(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Eigen::VectorXd with_bias(const Eigen::VectorXd &x)
{
    Eigen::VectorXd z(x.size() + 1);
    z << x, 1.0;
    return z;
}

// Weighted normal equations including the prior lambda^n P0^-1 on the zero start.
Eigen::VectorXd weighted_least_squares(const std::vector<Eigen::VectorXd> &xs, const std::vector<double> &ys,
                                       double lambda, double p0)
{
    const int d = static_cast<int>(xs[0].size()) + 1;
    const std::size_t n = xs.size();
    Eigen::MatrixXd a = std::pow(lambda, static_cast<double>(n)) / p0 * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double wt = std::pow(lambda, static_cast<double>(n - 1 - i));
        const Eigen::VectorXd z = with_bias(xs[i]);
        a += wt * z * z.transpose();
        b += wt * z * ys[i];
    }
    return a.ldlt().solve(b);
}

Outcome criterion_rls()
{
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 gen(101);
    std::normal_distribution<double> nd;
    double worst_weighted = 0.0;
    double worst_ols = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::VectorXd> xs;
        std::vector<double> ys;
        socrm::RlsEstimator weighted(4, 0.95, 1e3);
        for (int i = 0; i < 50; ++i) {
            Eigen::VectorXd x(4);
            for (int j = 0; j < 4; ++j) {
                x(j) = nd(gen);
            }
            const double y = x.sum() * 0.7 - 2.0 + 0.3 * nd(gen);
            weighted.update(x, y);
            xs.push_back(x);
            ys.push_back(y);
        }
        worst_weighted = std::max(
            worst_weighted, (weighted.weights() - weighted_least_squares(xs, ys, 0.95, 1e3)).cwiseAbs().maxCoeff());

        socrm::RlsEstimator ols(4, 1.0, 1e8);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            ols.update(xs[i], ys[i]);
        }
        Eigen::MatrixXd design(xs.size(), 5);
        Eigen::VectorXd target(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            design.row(i) = with_bias(xs[i]).transpose();
            target(i) = ys[i];
        }
        const Eigen::VectorXd w = design.colPivHouseholderQr().solve(target);
        worst_ols = std::max(worst_ols, (ols.weights() - w).norm() / w.norm());
    }
    const double secs = elapsed_seconds(start);
    return {worst_weighted < 1e-6 && worst_ols < 1e-4 && secs < 1.0,
            "weighted max err " + fmt(worst_weighted) + ", OLS rel err " + fmt(worst_ols) + ", " + fmt(secs) + " s"};
}

Outcome criterion_model_accuracy()
{
    const SocDescriptor soc = socrm::default_soc();
    if (soc.noise_amplitude != 0.02) {
        return {false, "default descriptor noise is not 2%"};
    }
    const auto configs = socrm::enumerate_cpu_configurations(soc);
    socrm::SuiteOptions opts;
    opts.applications = 8;
    opts.snippets_per_application = 50;
    opts.seed = 31;
    std::vector<socrm::SnippetSpec> snippets = socrm::generate_suite(soc, socrm::family_a(), opts).snippets;
    opts.seed = 32;
    for (const auto &s : socrm::generate_suite(soc, socrm::family_b(), opts).snippets) {
        snippets.push_back(s);
    }
    std::mt19937_64 gen(33);
    std::shuffle(snippets.begin(), snippets.end(), gen);

    // CPU power and execution time: 200 training observations, held-out rest.
    socrm::ModelBank models(soc);
    const std::size_t train = 200;
    for (std::size_t i = 0; i < train; ++i) {
        const Configuration cfg = configs[gen() % configs.size()];
        const auto out = socrm::simulate_snippet(soc, snippets[i], cfg);
        models.update(out.counters, cfg, out.exec_time, out.avg_power);
    }
    double time_err = 0.0;
    double power_err = 0.0;
    std::size_t n = 0;
    for (std::size_t i = train; i < snippets.size(); ++i) {
        const auto observe = socrm::simulate_snippet(soc, snippets[i], socrm::max_configuration(soc));
        const Configuration cfg = configs[gen() % configs.size()];
        const auto truth = socrm::simulate_snippet(soc, snippets[i], cfg);
        const auto pred = models.predict(observe.counters, cfg);
        time_err += std::abs(pred.exec_time - truth.exec_time) / truth.exec_time;
        power_err += std::abs(pred.power - truth.avg_power) / truth.avg_power;
        ++n;
    }
    time_err /= n;
    power_err /= n;

    // GPU frame time and energy with +-2% multiplicative noise on the observations.
    socrm::SensitivityModel gpu(soc);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double peak = soc.gpu.freq_levels.back() * std::pow(soc.gpu.slice_count, 0.9) / 60.0;
    auto draw = [&](double &w, int &f, int &s) {
        w = (0.05 + u(gen)) * peak;
        f = static_cast<int>(gen() % soc.gpu.freq_levels.size());
        s = 1 + static_cast<int>(gen() % soc.gpu.slice_count);
    };
    for (int i = 0; i < 200; ++i) {
        double w;
        int f;
        int s;
        draw(w, f, s);
        const auto out = socrm::simulate_gpu_frame(soc, w, f, s);
        gpu.update(w, f, s, out.frame_time * (0.98 + 0.04 * u(gen)), out.energy * (0.98 + 0.04 * u(gen)));
    }
    double frame_err = 0.0;
    double energy_err = 0.0;
    for (int i = 0; i < 500; ++i) {
        double w;
        int f;
        int s;
        draw(w, f, s);
        const auto truth = socrm::simulate_gpu_frame(soc, w, f, s);
        const auto pred = gpu.predict(w, f, s);
        frame_err += std::abs(pred.frame_time - truth.frame_time) / truth.frame_time / 500.0;
        energy_err += std::abs(pred.energy - truth.energy) / truth.energy / 500.0;
    }
    const double worst = std::max({time_err, power_err, frame_err, energy_err});
    return {worst < 0.05, "MAPE exec time " + fmt(100 * time_err) + "%, power " + fmt(100 * power_err) +
                              "%, frame time " + fmt(100 * frame_err) + "%, frame energy " +
                              fmt(100 * energy_err) + "%"};
}

Outcome criterion_oracle()
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    if (socrm::count_configurations(soc) > 200) {
        return {false, "descriptor too large"};
    }
    const auto configs = socrm::enumerate_cpu_configurations(soc);
    std::vector<socrm::SnippetSpec> snippets;
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        snippets.push_back(socrm_test::snippet(u(gen), u(gen), 0.1 + 0.8 * u(gen), gen()));
    }
    const auto table = socrm::build_oracle(soc, snippets, socrm::Objective{});
    int beaten = 0;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const double stored = socrm::simulate_snippet(soc, snippets[i], table.entries[i].config).energy;
        for (const auto &c : configs) {
            beaten += socrm::simulate_snippet(soc, snippets[i], c).energy < stored;
        }
    }

    // Sequence DP on a single-cluster descriptor with four CPU configurations.
    SocDescriptor four = socrm_test::small_soc(0.02);
    four.clusters.resize(1);
    four.clusters[0].freq_levels = {0.8e9, 1.6e9};
    four.clusters[0].volt_levels = {0.9, 1.2};
    four.clusters[0].c_eff = 0.4e-9;
    four.clusters[0].p_static_coeff = 0.2;
    const auto four_configs = socrm::enumerate_cpu_configurations(four);
    if (four_configs.size() != 4) {
        return {false, "DP descriptor does not have 4 configurations"};
    }
    int dp_mismatch = 0;
    socrm::Objective obj;
    obj.transition_costs = true;
    for (double cost : {0.002, 0.01, 0.03, 0.1}) {
        four.switch_energy_cost = cost;
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<socrm::SnippetSpec> seq;
            for (int i = 0; i < 3; ++i) {
                socrm::SnippetSpec s;
                s.mem_intensity = u(gen);
                s.parallel_fraction = u(gen);
                s.cluster_affinity = {1.0};
                s.seed = gen();
                seq.push_back(s);
            }
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    for (int c = 0; c < 4; ++c) {
                        best = std::min(best, socrm::schedule_energy(four, seq,
                                                                     {four_configs[a], four_configs[b],
                                                                      four_configs[c]}));
                    }
                }
            }
            dp_mismatch += socrm::schedule_energy(four, seq, socrm::build_oracle_dp(four, seq, obj)) != best;
        }
    }
    return {beaten == 0 && dp_mismatch == 0,
            std::to_string(beaten) + " configurations beat a stored optimum over 50 snippets; " +
                std::to_string(dp_mismatch) + " of 40 DP schedules differ from enumeration"};
}

Outcome criterion_gradient()
{
    const SocDescriptor soc = socrm::default_soc();
    const auto configs = socrm::enumerate_cpu_configurations(soc);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<std::vector<double>> x;
        std::vector<std::vector<int>> y;
        socrm::IlPolicy policy(soc, socrm::PolicyKind::Mlp, seed);
        for (int i = 0; i < 12; ++i) {
            const auto s = socrm_test::snippet(u(gen), u(gen), 0.1 + 0.8 * u(gen), gen());
            x.push_back(socrm::policy_features(socrm::simulate_snippet(soc, s, socrm::max_configuration(soc)).counters));
            y.push_back(policy.encode(configs[gen() % configs.size()]));
        }
        policy.fit_normalization(x);
        std::normal_distribution<double> nd(0.0, 0.5);
        Eigen::VectorXd theta(policy.parameter_count());
        for (int i = 0; i < theta.size(); ++i) {
            theta(i) = nd(gen);
        }
        policy.set_parameters(theta);
        Eigen::VectorXd analytic;
        policy.loss_and_gradient(x, y, analytic);
        Eigen::VectorXd numeric(theta.size());
        const double eps = 1e-5;
        for (int i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd t = theta;
            t(i) += eps;
            policy.set_parameters(t);
            const double up = policy.loss(x, y);
            t(i) = theta(i) - eps;
            policy.set_parameters(t);
            numeric(i) = (up - policy.loss(x, y)) / (2.0 * eps);
        }
        worst = std::max(worst, (analytic - numeric).norm() / std::max(analytic.norm(), numeric.norm()));
    }
    return {worst < 1e-4, "worst relative error over 10 seeds " + fmt(worst)};
}

Outcome criterion_thermal()
{
    std::mt19937_64 gen(1001);
    double worst_residual = 0.0;
    int flag_mismatch = 0;
    double worst_budget = 0.0;
    for (int k = 0; k < 100; ++k) {
        const bool stable = k % 2 == 0;
        const int hotspots = 1 + k % 3;
        const socrm::ThermalModel tm = socrm_test::random_model(gen, hotspots, stable);
        const Eigen::VectorXd p = Eigen::VectorXd::Constant(hotspots, 1.5);
        const auto fp = socrm::thermal_fixed_point(tm, p);
        flag_mismatch += fp.stable != stable;
        flag_mismatch += socrm_test::iterates_converge(tm, p, gen) != stable;
        if (!stable) {
            continue;
        }
        worst_residual = std::max(
            worst_residual, (socrm::thermal_step(tm, fp.temperature, p) - fp.temperature).cwiseAbs().maxCoeff());
        const Eigen::VectorXd dist = Eigen::VectorXd::Constant(hotspots, 1.0 / hotspots);
        const double t_limit = fp.temperature.maxCoeff() + 20.0;
        auto fits = [&](double s) {
            return socrm::thermal_fixed_point(tm, s * dist).temperature.maxCoeff() <= t_limit;
        };
        double lo = 0.0;
        double hi = 1.0;
        while (fits(hi)) {
            hi *= 2.0;
        }
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (fits(mid) ? lo : hi) = mid;
        }
        worst_budget = std::max(worst_budget, std::abs(lo - socrm::power_budget(tm, t_limit, dist)));
    }
    return {worst_residual < 1e-9 && flag_mismatch == 0 && worst_budget < 1e-6,
            "fixed-point residual " + fmt(worst_residual) + ", " + std::to_string(flag_mismatch) +
                " stability disagreements, budget error " + fmt(worst_budget)};
}

Outcome criterion_buffer()
{
    const SocDescriptor soc = socrm::default_soc();
    socrm::AggregationBuffer buffer;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (!buffer.full()) {
        const auto s = socrm_test::snippet(u(gen), u(gen), u(gen), gen());
        buffer.push(socrm::simulate_snippet(soc, s, socrm::max_configuration(soc)).counters,
                    socrm::max_configuration(soc));
    }
    const std::size_t bytes = buffer.serialize().size();
    return {bytes < 20 * 1024, std::to_string(buffer.size()) + " samples serialize to " + std::to_string(bytes) +
                                   " bytes"};
}

struct TimedReport {
    socrm::ExperimentPlan plan;
    socrm::RunReport report;
    double seconds = 0.0;
};

Outcome criterion_offline_gap(const TimedReport &run)
{
    const double a = run.report.sequence("il_offline", "A").normalized_energy;
    const double b = run.report.sequence("il_offline", "B").normalized_energy;
    return {a <= 1.05 && b - a > 0.05, "offline policy normalized energy A " + fmt(a) + ", B " + fmt(b)};
}

Outcome criterion_online_convergence(const TimedReport &run)
{
    const auto &seq = run.report.sequence("il_online", "B");
    const bool long_enough = seq.agreement.size() >= 2000;
    const bool converged = seq.convergence >= 0 && seq.convergence < 200;
    return {long_enough && converged && seq.wall_seconds < 60.0,
            std::to_string(seq.agreement.size()) + " snippets, converged at snippet " +
                std::to_string(seq.convergence) + ", governor runtime " + fmt(seq.wall_seconds) + " s"};
}

Outcome criterion_il_vs_rl(const TimedReport &run)
{
    const double il = run.report.sequence("il_online", "B").normalized_energy;
    const double q = run.report.sequence("q_learning", "B").normalized_energy;
    return {il <= 1.10 && q >= il, "online IL " + fmt(il) + ", Q-learning " + fmt(q)};
}

Outcome criterion_explicit_fidelity(const TimedReport &run)
{
    const SocDescriptor soc = socrm::plan_soc(run.plan);
    const auto &gp = run.plan.gpu;
    const auto train = socrm::sample_nmpc_states(soc, gp.mrc, gp.samples);
    const auto ec = socrm::fit_explicit(soc, train, gp.kind, gp.max_depth);
    socrm::ExplicitSampleOptions held_opts = gp.samples;
    held_opts.count = 500;
    held_opts.seed = gp.samples.seed + 7919;
    const auto held = socrm::sample_nmpc_states(soc, gp.mrc, held_opts);
    int ok = 0;
    for (const auto &s : held) {
        const auto d = ec.decide(s.features);
        ok += d.slices == s.decision.slices && std::abs(d.freq_idx - s.decision.freq_idx) <= 1;
    }
    const double agreement = ok / 500.0;
    double worst_energy = 0.0;
    double worst_fps = 0.0;
    std::size_t traces = 0;
    for (const auto &n : run.report.gpu) {
        if (n.metrics.governor != "nmpc") {
            continue;
        }
        for (const auto &e : run.report.gpu) {
            if (e.trace == n.trace && e.metrics.governor == "enmpc") {
                worst_energy = std::max(worst_energy,
                                        std::abs(e.metrics.total_energy - n.metrics.total_energy) /
                                            n.metrics.total_energy);
                worst_fps = std::max(worst_fps, (n.metrics.mean_fps - e.metrics.mean_fps) / n.metrics.mean_fps);
                ++traces;
            }
        }
    }
    return {agreement >= 0.90 && traces > 0 && worst_energy <= 0.05 && worst_fps <= 0.005,
            "held-out agreement " + fmt(agreement) + ", max energy gap " + fmt(100 * worst_energy) +
                "%, max FPS loss " + fmt(100 * worst_fps) + "% over " + std::to_string(traces) + " traces"};
}

Outcome criterion_enmpc_vs_ondemand(const TimedReport &run)
{
    std::size_t traces = 0;
    bool all = true;
    double worst_saving = std::numeric_limits<double>::infinity();
    double worst_miss = -std::numeric_limits<double>::infinity();
    for (const auto &o : run.report.gpu) {
        if (o.metrics.governor != "ondemand") {
            continue;
        }
        for (const auto &e : run.report.gpu) {
            if (e.trace == o.trace && e.metrics.governor == "enmpc") {
                ++traces;
                const double saving = 1.0 - e.metrics.total_energy / o.metrics.total_energy;
                const double miss = e.metrics.miss_rate - o.metrics.miss_rate;
                all = all && e.metrics.total_energy < o.metrics.total_energy && miss <= 0.01;
                worst_saving = std::min(worst_saving, saving);
                worst_miss = std::max(worst_miss, miss);
            }
        }
    }
    return {all && traces >= 5, std::to_string(traces) + " traces, smallest saving " + fmt(100 * worst_saving) +
                                    "%, largest miss increase " + fmt(100 * worst_miss) + "%"};
}

std::vector<fs::path> csv_files(const fs::path &root)
{
    std::vector<fs::path> out;
    for (const auto &entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            out.push_back(fs::relative(entry.path(), root));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Outcome criterion_determinism()
{
    const fs::path root = fs::temp_directory_path() / "socrm_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path a = root / "a";
    const fs::path b = root / "b";
    for (const auto &dir : {a, b}) {
        const std::string cmd = std::string("\"") + SOCRM_CLI_PATH + "\" run --seed 1 --out \"" + dir.string() +
                                "\" > \"" + (root / "log.txt").string() + "\" 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            return {false, "socrm run failed: " + socrm::read_file((root / "log.txt").string())};
        }
    }
    const auto files_a = csv_files(a);
    const auto files_b = csv_files(b);
    if (files_a.empty() || files_a != files_b) {
        return {false, "CSV file sets differ or are empty"};
    }
    for (const auto &f : files_a) {
        if (socrm::read_file((a / f).string()) != socrm::read_file((b / f).string())) {
            return {false, f.string() + " differs between runs"};
        }
    }
    fs::remove_all(root);
    return {true, std::to_string(files_a.size()) + " CSV files identical across two runs"};
}

}  // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const std::string &name, const std::function<Outcome()> &fn) {
        Outcome out;
        try {
            out = fn();
        }
        catch (const std::exception &ex) {
            out = {false, std::string("exception: ") + ex.what()};
        }
        failures += !out.pass;
        std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << out.detail
                  << std::endl;
    };

    report(1, "RLS correctness", criterion_rls);
    report(2, "model accuracy", criterion_model_accuracy);
    report(3, "oracle optimality", criterion_oracle);

    TimedReport run;
    std::string run_error;
    try {
        run.plan = socrm::default_plan(1);
        const auto start = std::chrono::steady_clock::now();
        run.report = socrm::run_experiment(run.plan);
        run.seconds = elapsed_seconds(start);
    }
    catch (const std::exception &ex) {
        run_error = ex.what();
    }
    auto with_run = [&](const std::function<Outcome(const TimedReport &)> &fn) {
        return [&, fn]() -> Outcome {
            if (!run_error.empty()) {
                return {false, "experiment failed: " + run_error};
            }
            return fn(run);
        };
    };

    report(4, "offline IL generalization gap", with_run(criterion_offline_gap));
    report(5, "online IL convergence", with_run(criterion_online_convergence));
    report(6, "online IL vs Q-learning", with_run(criterion_il_vs_rl));
    report(7, "backprop gradient check", criterion_gradient);
    report(8, "explicit NMPC fidelity", with_run(criterion_explicit_fidelity));
    report(9, "explicit NMPC vs ondemand", with_run(criterion_enmpc_vs_ondemand));
    report(10, "thermal fixed point and budget", criterion_thermal);
    report(11, "aggregation buffer size", criterion_buffer);
    report(12, "run determinism", criterion_determinism);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
