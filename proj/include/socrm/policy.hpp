#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"

namespace socrm {

/// Workload features the policy reads from a counter sample: per-instruction
/// rates of the Table-1 event counters plus utilizations. Cycles and the raw
/// instruction count are left out because they move with the knob being chosen.
inline constexpr int kPolicyFeatureCount = 7;
std::vector<double> policy_features(const CounterSample &counters);
std::vector<std::string> policy_feature_names();

/// One (features, target configuration) pair for supervised training.
struct LabeledSample {
    CounterSample counters;
    Configuration label;
};

enum class PolicyKind { Mlp, Linear };
PolicyKind policy_kind_from_string(const std::string &name);
std::string to_string(PolicyKind kind);

struct TrainOptions {
    double learning_rate = 0.05;
    int epochs = 100;
    /// Stop early once training agreement reaches this fraction (<= 0 disables).
    double target_agreement = 0.0;
};

struct TrainReport {
    int epochs_run = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double final_learning_rate = 0.0;
    double agreement = 0.0;
    std::vector<double> loss_history;
};

/// Feed-forward policy: standardized features -> tanh hidden layer -> one
/// softmax head per knob (frequency index and active-core count per cluster).
/// With PolicyKind::Linear the hidden layer is skipped.
class IlPolicy {
  public:
    static constexpr int kDefaultHidden = 16;

    IlPolicy(const SocDescriptor &soc, PolicyKind kind = PolicyKind::Mlp,
             std::uint64_t seed = 1, int hidden = kDefaultHidden);

    PolicyKind kind() const { return m_kind; }
    int hidden() const { return m_hidden; }
    int head_count() const { return static_cast<int>(m_head_sizes.size()); }
    const std::vector<int> &head_sizes() const { return m_head_sizes; }

    /// Freezes the input standardization from a sample of features.
    void fit_normalization(const std::vector<std::vector<double>> &features);
    const std::vector<double> &feature_mean() const { return m_mean; }
    const std::vector<double> &feature_scale() const { return m_scale; }

    /// Softmax output per head for one raw feature vector.
    std::vector<Eigen::VectorXd> head_probabilities(const std::vector<double> &features) const;

    /// Class index per head (argmax, lowest index on ties).
    std::vector<int> classify(const std::vector<double> &features) const;

    /// Throws ModelError for non-finite counters.
    Configuration decide(const CounterSample &counters) const;

    std::vector<int> encode(const Configuration &cfg) const;
    Configuration decode(const std::vector<int> &classes) const;

    /// Summed cross-entropy over samples and heads, and its gradient with
    /// respect to parameters() (computed by backpropagation).
    double loss(const std::vector<std::vector<double>> &features,
                const std::vector<std::vector<int>> &labels) const;
    double loss_and_gradient(const std::vector<std::vector<double>> &features,
                             const std::vector<std::vector<int>> &labels,
                             Eigen::VectorXd &gradient) const;

    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd &theta);
    int parameter_count() const;

    /// Full-batch gradient descent. A step that raises the loss by more than
    /// 1e-9 is retried with half the learning rate, so the recorded loss
    /// history never increases. Keeps the iterate with the highest training
    /// agreement (the latest one on ties).
    TrainReport train(const std::vector<LabeledSample> &samples, const TrainOptions &options);

    double agreement(const std::vector<LabeledSample> &samples) const;

    /// Versioned text checkpoint (normalization and all weight matrices).
    std::string serialize() const;
    static IlPolicy deserialize(const std::string &text);

  private:
    IlPolicy() = default;
    Eigen::VectorXd normalize(const std::vector<double> &features) const;
    void forward(const Eigen::VectorXd &x, Eigen::VectorXd &hidden,
                 std::vector<Eigen::VectorXd> &probs) const;

    PolicyKind m_kind = PolicyKind::Mlp;
    int m_inputs = kPolicyFeatureCount;
    int m_hidden = kDefaultHidden;
    int m_clusters = 0;
    std::uint64_t m_seed = 1;
    std::vector<int> m_head_sizes;
    std::vector<double> m_mean;
    std::vector<double> m_scale;
    Eigen::MatrixXd m_w1;  // hidden x inputs
    Eigen::VectorXd m_b1;
    std::vector<Eigen::MatrixXd> m_w2;  // per head: classes x (hidden or inputs)
    std::vector<Eigen::VectorXd> m_b2;
};

/// policy_update: retrain on one aggregation buffer's worth of samples.
TrainReport policy_update(IlPolicy &policy, const std::vector<LabeledSample> &buffer,
                          const TrainOptions &options = {});

}  // namespace socrm
