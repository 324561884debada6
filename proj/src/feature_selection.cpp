#include "socrm/feature_selection.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace socrm {

std::vector<double> counter_feature_vector(const CounterSample &s)
{
    std::vector<double> v = {s.instructions_retired,   s.cpu_cycles,
                             s.branch_mispredictions,  s.l2_cache_misses,
                             s.data_memory_accesses,   s.noncache_ext_mem_requests,
                             s.little_util_total};
    v.insert(v.end(), s.big_util_per_core.begin(), s.big_util_per_core.end());
    return v;
}

std::vector<std::string> counter_feature_names(int big_core_count)
{
    std::vector<std::string> names = {"instructions_retired",  "cpu_cycles",
                                      "branch_mispredictions", "l2_cache_misses",
                                      "data_memory_accesses",  "noncache_ext_mem_requests",
                                      "little_util_total"};
    for (int i = 0; i < big_core_count; ++i) {
        names.push_back("big_util_" + std::to_string(i));
    }
    return names;
}

double ols_residual(const Eigen::MatrixXd &x, const Eigen::VectorXd &y,
                    const std::vector<int> &columns)
{
    const auto rows = x.rows();
    Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(columns.size()) + 1);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        design.col(static_cast<Eigen::Index>(j)) = x.col(columns[j]);
    }
    design.col(design.cols() - 1).setOnes();
    // Column scaling keeps raw counter magnitudes (1e8) from hurting the QR rank test.
    Eigen::VectorXd scale = design.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
        if (scale(j) > 0.0) {
            design.col(j) /= scale(j);
        }
    }
    Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
    return (y - design * beta).squaredNorm();
}

std::vector<int> select_features(const Eigen::MatrixXd &x, const Eigen::VectorXd &y, int k)
{
    const int total = static_cast<int>(x.cols());
    if (k < 0 || k > total) {
        throw std::invalid_argument("select_features: k=" + std::to_string(k) +
                                    " exceeds feature count " + std::to_string(total));
    }
    if (x.rows() < 10 * static_cast<Eigen::Index>(k) || x.rows() != y.size()) {
        throw std::invalid_argument("select_features: history must hold at least 10 k rows");
    }
    std::vector<int> chosen;
    std::vector<bool> used(total, false);
    while (static_cast<int>(chosen.size()) < k) {
        int best = -1;
        double best_rss = std::numeric_limits<double>::infinity();
        for (int j = 0; j < total; ++j) {
            if (used[j]) {
                continue;
            }
            auto trial = chosen;
            trial.push_back(j);
            const double rss = ols_residual(x, y, trial);
            const double tol = 1e-12 * std::max(1.0, std::abs(best_rss));
            if (best < 0 || rss < best_rss - tol) {
                best = j;
                best_rss = rss;
            }
        }
        used[best] = true;
        chosen.push_back(best);
    }
    return chosen;
}

std::vector<int> select_features(const std::vector<std::pair<CounterSample, double>> &history,
                                 int k)
{
    if (history.empty()) {
        throw std::invalid_argument("select_features: empty history");
    }
    const auto width = counter_feature_vector(history.front().first).size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(history.size()), static_cast<Eigen::Index>(width));
    Eigen::VectorXd y(static_cast<Eigen::Index>(history.size()));
    for (std::size_t i = 0; i < history.size(); ++i) {
        auto row = counter_feature_vector(history[i].first);
        if (row.size() != width) {
            throw std::invalid_argument("select_features: inconsistent counter widths");
        }
        for (std::size_t j = 0; j < width; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
        y(static_cast<Eigen::Index>(i)) = history[i].second;
    }
    return select_features(x, y, k);
}

void FeatureSelectionWindow::push(const CounterSample &sample, double target)
{
    m_history.emplace_back(sample, target);
    while (m_history.size() > m_window) {
        m_history.pop_front();
    }
}

std::vector<int> FeatureSelectionWindow::select(int k) const
{
    return select_features(std::vector<std::pair<CounterSample, double>>(m_history.begin(),
                                                                         m_history.end()),
                           k);
}

}  // namespace socrm
