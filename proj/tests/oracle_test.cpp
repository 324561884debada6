#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"

#include "socrm/oracle.hpp"
#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"
#include "test_util.hpp"

using socrm::Configuration;
using socrm::Objective;
using socrm::SnippetSpec;
using socrm::SocDescriptor;

namespace {

std::vector<SnippetSpec> random_snippets(std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SnippetSpec> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(socrm_test::snippet(u(gen), u(gen), 0.05 + 0.9 * u(gen), gen()));
    }
    return out;
}

// One cluster with two frequency levels and two cores: four CPU configurations.
SocDescriptor four_config_soc(double switch_energy)
{
    SocDescriptor soc = socrm_test::small_soc(0.02);
    soc.clusters.resize(1);
    soc.clusters[0].freq_levels = {0.8e9, 1.6e9};
    soc.clusters[0].volt_levels = {0.9, 1.2};
    soc.clusters[0].c_eff = 0.4e-9;
    soc.clusters[0].p_static_coeff = 0.2;
    soc.gpu.slice_count = 1;
    soc.gpu.freq_levels = {300e6};
    soc.gpu.volt_levels = {0.7};
    soc.switch_energy_cost = switch_energy;
    return soc;
}

SnippetSpec single_cluster_snippet(double mu, double parallel, std::uint64_t seed)
{
    SnippetSpec s;
    s.mem_intensity = mu;
    s.parallel_fraction = parallel;
    s.cluster_affinity = {1.0};
    s.seed = seed;
    return s;
}

}  // namespace

TEST(OracleTest, single_configuration_descriptor)
{
    const SocDescriptor soc = socrm_test::trivial_soc();
    SnippetSpec s = single_cluster_snippet(0.3, 0.2, 1);
    const auto table = socrm::build_oracle(soc, {s, s, s}, Objective{});
    ASSERT_EQ(3u, table.entries.size());
    for (const auto &e : table.entries) {
        EXPECT_EQ(socrm::max_configuration(soc).cpu_freq_idx, e.config.cpu_freq_idx);
        EXPECT_EQ(socrm::max_configuration(soc).cpu_active_cores, e.config.cpu_active_cores);
    }
}

TEST(OracleTest, dominated_configuration_never_chosen)
{
    // Equal power at both levels (no dynamic term), so the faster level dominates.
    SocDescriptor soc = socrm_test::trivial_soc();
    soc.clusters[0].freq_levels = {1e9, 2e9};
    soc.clusters[0].volt_levels = {1.0, 1.0};
    soc.clusters[0].c_eff = 0.0;
    std::vector<SnippetSpec> snippets;
    for (int i = 0; i < 10; ++i) {
        snippets.push_back(single_cluster_snippet(0.1 * i, 0.5, i));
    }
    for (const auto &e : socrm::build_oracle(soc, snippets, Objective{}).entries) {
        EXPECT_EQ(1, e.config.cpu_freq_idx[0]);
    }
}

TEST(OracleTest, empty_snippet_list_is_an_error)
{
    EXPECT_THROW(socrm::build_oracle(socrm_test::small_soc(), {}, Objective{}), std::invalid_argument);
    EXPECT_THROW(socrm::build_oracle_dp(socrm_test::small_soc(), {}, Objective{}),
                 std::invalid_argument);
}

TEST(OracleTest, table_equals_independent_resweep)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto snippets = random_snippets(20, 3);
    const auto table = socrm::build_oracle(soc, snippets, Objective{}, 2);
    const auto configs = socrm::enumerate_cpu_configurations(soc);
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto &c : configs) {
            best = std::min(best, socrm::simulate_snippet(soc, snippets[i], c).energy);
        }
        EXPECT_EQ(best, table.entries[i].objective_value);
        EXPECT_EQ(best, socrm::simulate_snippet(soc, snippets[i], table.entries[i].config).energy);
        EXPECT_EQ(static_cast<int>(i), table.entries[i].snippet_id);
    }
}

TEST(OracleTest, ppw_objective_maximizes_instructions_per_joule)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto snippets = random_snippets(10, 8);
    Objective obj;
    obj.kind = socrm::ObjectiveKind::MaxPpw;
    const auto table = socrm::build_oracle(soc, snippets, obj);
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        double best = 0.0;
        for (const auto &c : socrm::enumerate_cpu_configurations(soc)) {
            const auto out = socrm::simulate_snippet(soc, snippets[i], c);
            best = std::max(best, out.counters.instructions_retired / out.energy);
        }
        EXPECT_EQ(best, table.entries[i].objective_value);
    }
}

TEST(OracleTest, time_constraint_is_respected)
{
    const SocDescriptor soc = socrm_test::small_soc(0.0);
    const auto snippets = random_snippets(10, 4);
    Objective obj;
    obj.max_exec_time = 0.08;
    const auto table = socrm::build_oracle(soc, snippets, obj);
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const auto out = socrm::simulate_snippet(soc, snippets[i], table.entries[i].config);
        double fastest = std::numeric_limits<double>::infinity();
        for (const auto &c : socrm::enumerate_cpu_configurations(soc)) {
            fastest = std::min(fastest, socrm::simulate_snippet(soc, snippets[i], c).exec_time);
        }
        if (fastest <= obj.max_exec_time) {
            EXPECT_LE(out.exec_time, obj.max_exec_time);
        }
        else {
            EXPECT_EQ(fastest, out.exec_time);
        }
    }
}

TEST(OracleTest, tie_break_prefers_lower_frequency_then_fewer_cores)
{
    // No power at all: every configuration costs zero energy.
    SocDescriptor soc = socrm_test::small_soc(0.0);
    soc.uncore_power = 0.0;
    for (auto &cl : soc.clusters) {
        cl.c_eff = 0.0;
        cl.p_static_coeff = 0.0;
    }
    const auto table = socrm::build_oracle(soc, random_snippets(3, 2), Objective{});
    for (const auto &e : table.entries) {
        EXPECT_EQ(socrm::min_configuration(soc), e.config);
    }
    EXPECT_TRUE(socrm::prefer_on_tie(socrm_test::cpu_config({0, 1}, {2, 2}),
                                     socrm_test::cpu_config({1, 1}, {1, 1})));
    EXPECT_TRUE(socrm::prefer_on_tie(socrm_test::cpu_config({1, 0}, {1, 1}),
                                     socrm_test::cpu_config({0, 1}, {2, 1})));
}

TEST(OracleTest, repeated_builds_are_identical)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto snippets = random_snippets(30, 12);
    const auto a = socrm::build_oracle(soc, snippets, Objective{}, 1);
    const auto b = socrm::build_oracle(soc, snippets, Objective{}, 4);
    EXPECT_EQ(socrm::oracle_table_to_csv(soc, a), socrm::oracle_table_to_csv(soc, b));
}

TEST(OracleTest, csv_round_trip)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto table = socrm::build_oracle(soc, random_snippets(15, 6), Objective{});
    const std::string text = socrm::oracle_table_to_csv(soc, table);
    EXPECT_EQ(0u, text.find("snippet_id,"));
    EXPECT_NE(std::string::npos, text.find(",cfg_little_f,cfg_big_f,cfg_little_n,cfg_big_n,objective_value\n"));
    const auto back = socrm::oracle_table_from_csv(soc, text);
    ASSERT_EQ(table.entries.size(), back.entries.size());
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        EXPECT_EQ(table.entries[i].config, back.entries[i].config);
        EXPECT_EQ(table.entries[i].objective_value, back.entries[i].objective_value);
        EXPECT_EQ(table.entries[i].features, back.entries[i].features);
    }
    EXPECT_EQ(text, socrm::oracle_table_to_csv(soc, back));
}

TEST(OracleDpTest, zero_transition_cost_reduces_to_per_snippet)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto snippets = random_snippets(12, 5);
    const auto table = socrm::build_oracle(soc, snippets, Objective{});
    Objective off;
    const auto plain = socrm::build_oracle_dp(soc, snippets, off);
    SocDescriptor free = soc;
    free.switch_energy_cost = 0.0;
    free.gpu.slice_switch_energy = 0.0;
    Objective on;
    on.transition_costs = true;
    const auto dp = socrm::build_oracle_dp(free, snippets, on);
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        EXPECT_EQ(table.entries[i].config, plain[i]);
        EXPECT_EQ(table.entries[i].config, dp[i]);
    }
}

TEST(OracleDpTest, huge_transition_cost_holds_best_single_configuration)
{
    const SocDescriptor soc = four_config_soc(1e6);
    std::vector<SnippetSpec> seq;
    for (int i = 0; i < 6; ++i) {
        seq.push_back(single_cluster_snippet(i % 2 ? 0.9 : 0.0, i % 2 ? 0.0 : 1.0, i));
    }
    Objective obj;
    obj.transition_costs = true;
    const auto dp = socrm::build_oracle_dp(soc, seq, obj);
    const auto configs = socrm::enumerate_cpu_configurations(soc);
    double best = std::numeric_limits<double>::infinity();
    Configuration best_cfg;
    for (const auto &c : configs) {
        double total = 0.0;
        for (const auto &s : seq) {
            total += socrm::simulate_snippet(soc, s, c).energy;
        }
        if (total < best) {
            best = total;
            best_cfg = c;
        }
    }
    for (const auto &c : dp) {
        EXPECT_EQ(best_cfg, c);
    }
}

TEST(OracleDpTest, matches_full_enumeration_of_three_snippets)
{
    const auto configs = socrm::enumerate_cpu_configurations(four_config_soc(0.0));
    ASSERT_EQ(4u, configs.size());
    for (double cost : {0.002, 0.01, 0.03, 0.1}) {
        const SocDescriptor soc = four_config_soc(cost);
        for (std::uint64_t trial = 0; trial < 10; ++trial) {
            std::mt19937_64 gen(trial);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::vector<SnippetSpec> seq;
            for (int i = 0; i < 3; ++i) {
                seq.push_back(single_cluster_snippet(u(gen), u(gen), gen()));
            }
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    for (int c = 0; c < 4; ++c) {
                        const Configuration s[3] = {configs[a], configs[b], configs[c]};
                        double total = 0.0;
                        for (int t = 0; t < 3; ++t) {
                            total += socrm::simulate_snippet(soc, seq[t], s[t]).energy;
                            if (t > 0) {
                                total += socrm::apply_transition(s[t - 1], s[t], soc).energy;
                            }
                        }
                        best = std::min(best, total);
                    }
                }
            }
            Objective obj;
            obj.transition_costs = true;
            const auto dp = socrm::build_oracle_dp(soc, seq, obj);
            EXPECT_NEAR(best, socrm::schedule_energy(soc, seq, dp), 1e-12 * best);
        }
    }
}

TEST(OracleDpTest, never_worse_than_greedy)
{
    SocDescriptor soc = socrm_test::small_soc(0.02);
    soc.switch_energy_cost = 0.01;
    const auto snippets = random_snippets(40, 9);
    Objective obj;
    obj.transition_costs = true;
    const auto dp = socrm::build_oracle_dp(soc, snippets, obj);
    const auto table = socrm::build_oracle(soc, snippets, Objective{});
    std::vector<Configuration> greedy;
    for (const auto &e : table.entries) {
        greedy.push_back(e.config);
    }
    EXPECT_LE(socrm::schedule_energy(soc, snippets, dp), socrm::schedule_energy(soc, snippets, greedy));
}

TEST(FitInitialPolicyTest, single_label_gives_constant_policy)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    auto table = socrm::build_oracle(soc, random_snippets(40, 1), Objective{});
    const Configuration label = socrm_test::cpu_config({1, 2}, {2, 1});
    for (auto &e : table.entries) {
        e.config = label;
    }
    const auto policy = socrm::fit_initial_policy(soc, table, socrm::PolicyKind::Mlp);
    for (const auto &s : random_snippets(20, 77)) {
        const auto counters = socrm::simulate_snippet(soc, s, socrm::reference_configuration(soc)).counters;
        const auto d = policy.decide(counters);
        EXPECT_EQ(label.cpu_freq_idx, d.cpu_freq_idx);
        EXPECT_EQ(label.cpu_active_cores, d.cpu_active_cores);
    }
}

TEST(FitInitialPolicyTest, linearly_separable_labels_are_learned_exactly)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto snippets = random_snippets(80, 2);
    auto table = socrm::build_oracle(soc, snippets, Objective{});
    const Configuration lo = socrm_test::cpu_config({0, 0}, {1, 1});
    const Configuration hi = socrm_test::cpu_config({2, 2}, {2, 2});
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const bool memory = snippets[i].mem_intensity > 0.5;
        table.entries[i].config = memory ? lo : hi;
        xs.push_back(socrm::policy_features(table.entries[i].features));
        ys.push_back(memory ? 1 : -1);
    }
    // Perceptron certificate that the labels are linearly separable in feature space.
    std::vector<double> w(xs[0].size() + 1, 0.0);
    bool separated = false;
    for (int epoch = 0; epoch < 100000 && !separated; ++epoch) {
        separated = true;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double s = w.back();
            for (std::size_t j = 0; j < xs[i].size(); ++j) {
                s += w[j] * xs[i][j] * 100.0;
            }
            if (s * ys[i] <= 0.0) {
                separated = false;
                for (std::size_t j = 0; j < xs[i].size(); ++j) {
                    w[j] += ys[i] * xs[i][j] * 100.0;
                }
                w.back() += ys[i];
            }
        }
    }
    ASSERT_TRUE(separated);
    // The default stopping rule ends at 95%; ask for every sample.
    socrm::FitOptions fit;
    fit.train.target_agreement = 1.0;
    const auto policy = socrm::fit_initial_policy(soc, table, socrm::PolicyKind::Linear, fit);
    std::vector<socrm::LabeledSample> samples;
    for (const auto &e : table.entries) {
        samples.push_back({e.features, e.config});
    }
    EXPECT_EQ(1.0, policy.agreement(samples));
}

TEST(OracleTest, no_configuration_beats_stored_optimum)
{
    const SocDescriptor soc = socrm_test::small_soc(0.02);
    const auto snippets = random_snippets(50, 31);
    const auto table = socrm::build_oracle(soc, snippets, Objective{});
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        for (const auto &c : socrm::enumerate_cpu_configurations(soc)) {
            EXPECT_GE(socrm::simulate_snippet(soc, snippets[i], c).energy,
                      table.entries[i].objective_value);
        }
    }
}
