#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace socrm {

/// Recursive least squares with exponential forgetting.
///
/// The model is y = w^T [x; 1]: a bias term is appended to every feature
/// vector, so weights() has num_features() + 1 entries with the bias last.
/// Each update applies
///
///     k = P x / (lambda + x^T P x)
///     w = w + k (y - w^T x)
///     P = (P - k x^T P) / lambda,   then P = (P + P^T) / 2
///
/// Updates must be serialized by the caller; predict() is const and may run
/// concurrently with other predictions.
class RlsEstimator {
  public:
    static constexpr double kDefaultForgetting = 0.95;
    static constexpr double kDefaultInitialCovariance = 1e3;

    explicit RlsEstimator(int num_features, double forgetting = kDefaultForgetting,
                          double initial_covariance = kDefaultInitialCovariance);

    /// Throws ModelError (estimator unchanged) when x or y is not finite,
    /// std::invalid_argument when x has the wrong dimension.
    void update(const Eigen::VectorXd &x, double y);
    void update(const std::vector<double> &x, double y);

    double predict(const Eigen::VectorXd &x) const;
    double predict(const std::vector<double> &x) const;

    int num_features() const { return static_cast<int>(m_weights.size()) - 1; }
    double forgetting() const { return m_forgetting; }
    const Eigen::VectorXd &weights() const { return m_weights; }
    const Eigen::MatrixXd &covariance() const { return m_covariance; }
    long long update_count() const { return m_updates; }

    /// Counter fields this estimator was built on; bookkeeping only.
    const std::vector<int> &feature_indices() const { return m_feature_indices; }
    void set_feature_indices(std::vector<int> indices) { m_feature_indices = std::move(indices); }

    void set_weights(const Eigen::VectorXd &w);
    void set_covariance(const Eigen::MatrixXd &p);

    double asymmetry() const;             // max |P - P^T|
    double min_covariance_eigenvalue() const;

    /// Flat key=value text: version, lambda, dim, weights, covariance (row-major), features.
    std::string serialize() const;
    static RlsEstimator deserialize(const std::string &text);

  private:
    Eigen::VectorXd augment(const Eigen::VectorXd &x) const;

    double m_forgetting;
    Eigen::VectorXd m_weights;
    Eigen::MatrixXd m_covariance;
    std::vector<int> m_feature_indices;
    long long m_updates = 0;
};

/// Value-semantics form of RlsEstimator::update.
RlsEstimator rls_update(RlsEstimator est, const Eigen::VectorXd &x, double y);
double rls_predict(const RlsEstimator &est, const Eigen::VectorXd &x);

}  // namespace socrm
