#pragma once

#include <deque>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "socrm/simulator.hpp"

namespace socrm {

/// Flattens a counter sample into the numeric feature vector used by
/// feature selection: every counter field except total_chip_power, big-core
/// utilizations expanded per core.
std::vector<double> counter_feature_vector(const CounterSample &sample);
std::vector<std::string> counter_feature_names(int big_core_count);

/// Residual sum of squares of an OLS fit (with intercept) of y on the given columns of x.
double ols_residual(const Eigen::MatrixXd &x, const Eigen::VectorXd &y,
                    const std::vector<int> &columns);

/// Greedy forward selection of k columns minimizing OLS residual; ties go to the
/// lowest column index. Throws std::invalid_argument if k exceeds the column count
/// or the history is shorter than 10 k rows.
std::vector<int> select_features(const Eigen::MatrixXd &x, const Eigen::VectorXd &y, int k);
std::vector<int> select_features(const std::vector<std::pair<CounterSample, double>> &history,
                                 int k);

/// Sliding-window wrapper around select_features.
class FeatureSelectionWindow {
  public:
    static constexpr std::size_t kDefaultWindow = 256;

    explicit FeatureSelectionWindow(std::size_t window = kDefaultWindow) : m_window(window) {}

    void push(const CounterSample &sample, double target);
    std::size_t size() const { return m_history.size(); }
    std::vector<int> select(int k) const;

  private:
    std::size_t m_window;
    std::deque<std::pair<CounterSample, double>> m_history;
};

}  // namespace socrm
