#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socrm/policy.hpp"
#include "socrm/rls.hpp"
#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"

namespace socrm {

/// Fixed-capacity store of (counters, label) pairs gathered between retrains.
class AggregationBuffer {
  public:
    static constexpr std::size_t kDefaultCapacity = 100;

    explicit AggregationBuffer(std::size_t capacity = kDefaultCapacity);

    /// Returns true when the buffer has reached capacity.
    bool push(const CounterSample &counters, const Configuration &label);
    bool full() const { return m_samples.size() >= m_capacity; }
    std::size_t size() const { return m_samples.size(); }
    std::size_t capacity() const { return m_capacity; }
    const std::vector<LabeledSample> &samples() const { return m_samples; }
    void clear() { m_samples.clear(); }

    /// Packed binary form: 8-byte counters (power excluded) and 4-byte label knobs.
    std::string serialize() const;
    static AggregationBuffer deserialize(const std::string &bytes);

  private:
    std::size_t m_capacity;
    std::vector<LabeledSample> m_samples;
};

/// Workload parameters recovered from counters.
struct WorkloadEstimate {
    double mem_intensity = 0.0;
    double parallel_fraction = 0.5;
    std::vector<double> affinity;
};

struct Prediction {
    /// False when either model predicts a non-positive rate or power.
    bool valid = false;
    double exec_time = 0.0;
    double power = 0.0;
    double energy = 0.0;
};

/// Online power and performance models. Both are RLS estimators over
/// features built from the candidate configuration and the workload
/// estimate; prediction for one configuration costs two dot products.
class ModelBank {
  public:
    static constexpr double kDefaultForgetting = 0.999;

    explicit ModelBank(const SocDescriptor &soc, double forgetting = kDefaultForgetting);

    const SocDescriptor &soc() const { return m_soc; }

    /// Estimate from counters. The parallel fraction needs two active big
    /// cores; otherwise the last observed value is used.
    WorkloadEstimate estimate(const CounterSample &counters) const;

    std::vector<double> power_features(const WorkloadEstimate &w, const Configuration &cfg) const;
    std::vector<double> throughput_features(const WorkloadEstimate &w,
                                            const Configuration &cfg) const;

    Prediction predict(const CounterSample &counters, const Configuration &cfg) const;
    Prediction predict(const WorkloadEstimate &w, double instructions,
                       const Configuration &cfg) const;

    /// One observation of a snippet run at cfg.
    void update(const CounterSample &counters, const Configuration &cfg, double exec_time,
                double avg_power);

    /// Offline warm-up on snippets run at pseudo-random configurations.
    void pretrain(const std::vector<SnippetSpec> &snippets, std::uint64_t seed);

    const RlsEstimator &power_model() const { return m_power; }
    const RlsEstimator &throughput_model() const { return m_throughput; }
    long long update_count() const { return m_power.update_count(); }

  private:
    SocDescriptor m_soc;
    RlsEstimator m_power;
    RlsEstimator m_throughput;
    double m_parallel_hint = 0.5;
};

/// Configurations within one frequency step and one core of cfg in every
/// cluster (cfg included), clipped to the descriptor, in lexicographic order.
std::vector<Configuration> candidate_neighborhood(const SocDescriptor &soc,
                                                  const Configuration &cfg);

struct LabelResult {
    Configuration config;
    double predicted_energy = 0.0;
};

/// Candidate with the lowest predicted energy; ties go to lower frequency,
/// then fewer cores. Candidates with invalid predictions are skipped; throws
/// ModelError when every candidate is skipped.
LabelResult runtime_oracle_label(const ModelBank &models, const CounterSample &counters,
                                 const std::vector<Configuration> &candidates);

/// Repeats runtime_oracle_label over the neighborhood of the previous answer
/// until it stops moving (at most max_iterations rounds). A move is taken only
/// when the neighborhood optimum is predicted to save more than `tolerance`
/// (relative) over staying put, so near-ties inside the model error keep the
/// current configuration.
LabelResult model_guided_label(const ModelBank &models, const CounterSample &counters,
                               const Configuration &start, int max_iterations = 16,
                               double tolerance = 0.0);

struct IlOptions {
    std::size_t buffer_capacity = AggregationBuffer::kDefaultCapacity;
    int max_label_iterations = 16;
    double label_tolerance = 0.01;
    bool online = true;
    TrainOptions train{0.05, 100, 0.0};
};

struct IlStep {
    Configuration chosen;
    Configuration label;
    bool agreement = false;
    bool retrained = false;
    double predicted_energy = 0.0;
    double true_energy = 0.0;
};

/// Imitation-learning governor. After each snippet it updates the models,
/// labels the snippet with the model-guided oracle, buffers the pair,
/// retrains the policy when the buffer fills, and picks the next
/// configuration with the (possibly updated) policy.
class IlGovernor {
  public:
    IlGovernor(const SocDescriptor &soc, IlPolicy policy, ModelBank models,
               IlOptions options = {});

    /// Configuration for the very first snippet (all CPU knobs at maximum).
    Configuration initial_configuration() const;

    IlStep online_step(const SnippetOutcome &observed, const Configuration &ran);

    const IlPolicy &policy() const { return m_policy; }
    const ModelBank &models() const { return m_models; }
    const AggregationBuffer &buffer() const { return m_buffer; }
    int retrain_count() const { return m_retrains; }

  private:
    SocDescriptor m_soc;
    IlPolicy m_policy;
    ModelBank m_models;
    IlOptions m_options;
    AggregationBuffer m_buffer;
    Configuration m_last_label;
    bool m_have_label = false;
    int m_retrains = 0;
};

}  // namespace socrm
