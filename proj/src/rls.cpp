#include "socrm/rls.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "socrm/error.hpp"

namespace socrm {

RlsEstimator::RlsEstimator(int num_features, double forgetting, double initial_covariance)
    : m_forgetting(forgetting)
    , m_weights(Eigen::VectorXd::Zero(num_features + 1))
    , m_covariance(Eigen::MatrixXd::Identity(num_features + 1, num_features + 1) *
                   initial_covariance)
{
    if (num_features < 0) {
        throw std::invalid_argument("RLS feature count must be non-negative");
    }
    if (!(forgetting > 0.0 && forgetting <= 1.0)) {
        throw std::invalid_argument("RLS forgetting factor must lie in (0, 1]");
    }
    if (!(initial_covariance > 0.0)) {
        throw std::invalid_argument("RLS initial covariance must be positive");
    }
}

Eigen::VectorXd RlsEstimator::augment(const Eigen::VectorXd &x) const
{
    if (x.size() != num_features()) {
        throw std::invalid_argument("RLS expects " + std::to_string(num_features()) +
                                    " features, got " + std::to_string(x.size()));
    }
    Eigen::VectorXd xa(x.size() + 1);
    xa.head(x.size()) = x;
    xa(x.size()) = 1.0;
    return xa;
}

void RlsEstimator::update(const Eigen::VectorXd &x, double y)
{
    Eigen::VectorXd xa = augment(x);
    if (!xa.allFinite() || !std::isfinite(y)) {
        throw ModelError("RLS update rejected non-finite sample");
    }
    const Eigen::VectorXd px = m_covariance * xa;
    const double denom = m_forgetting + xa.dot(px);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw ModelError("RLS gain denominator is not positive");
    }
    const Eigen::VectorXd gain = px / denom;
    const double innovation = y - m_weights.dot(xa);
    Eigen::VectorXd w = m_weights + gain * innovation;
    // k x^T P == k (P x)^T because P is symmetric.
    Eigen::MatrixXd p = (m_covariance - gain * px.transpose()) / m_forgetting;
    p = 0.5 * (p + p.transpose()).eval();
    if (!w.allFinite() || !p.allFinite()) {
        throw ModelError("RLS update produced non-finite state");
    }
    m_weights = std::move(w);
    m_covariance = std::move(p);
    ++m_updates;
}

void RlsEstimator::update(const std::vector<double> &x, double y)
{
    update(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())), y);
}

double RlsEstimator::predict(const Eigen::VectorXd &x) const
{
    return m_weights.dot(augment(x));
}

double RlsEstimator::predict(const std::vector<double> &x) const
{
    return predict(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

void RlsEstimator::set_weights(const Eigen::VectorXd &w)
{
    if (w.size() != m_weights.size()) {
        throw std::invalid_argument("RLS weight vector has wrong dimension");
    }
    m_weights = w;
}

void RlsEstimator::set_covariance(const Eigen::MatrixXd &p)
{
    if (p.rows() != m_covariance.rows() || p.cols() != m_covariance.cols()) {
        throw std::invalid_argument("RLS covariance has wrong dimension");
    }
    m_covariance = 0.5 * (p + p.transpose());
}

double RlsEstimator::asymmetry() const
{
    return (m_covariance - m_covariance.transpose()).cwiseAbs().maxCoeff();
}

double RlsEstimator::min_covariance_eigenvalue() const
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_covariance, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

namespace {

template <typename Range>
std::string join(const Range &values)
{
    std::ostringstream os;
    os << std::setprecision(17);
    bool first = true;
    for (const auto &v : values) {
        if (!first) {
            os << ',';
        }
        os << v;
        first = false;
    }
    return os.str();
}

std::vector<double> split_doubles(const std::string &text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(std::stod(item));
        }
    }
    return out;
}

}  // namespace

std::string RlsEstimator::serialize() const
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "version=1\n";
    os << "lambda=" << m_forgetting << '\n';
    os << "dim=" << m_weights.size() << '\n';
    os << "updates=" << m_updates << '\n';
    os << "weights=" << join(std::vector<double>(m_weights.data(), m_weights.data() + m_weights.size()))
       << '\n';
    std::vector<double> rows;
    for (Eigen::Index r = 0; r < m_covariance.rows(); ++r) {
        for (Eigen::Index c = 0; c < m_covariance.cols(); ++c) {
            rows.push_back(m_covariance(r, c));
        }
    }
    os << "covariance=" << join(rows) << '\n';
    os << "features=" << join(m_feature_indices) << '\n';
    return os.str();
}

RlsEstimator RlsEstimator::deserialize(const std::string &text)
{
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (kv["version"] != "1") {
        throw IoError("unsupported RLS checkpoint version");
    }
    try {
        const int dim = std::stoi(kv.at("dim"));
        RlsEstimator est(dim - 1, std::stod(kv.at("lambda")));
        auto w = split_doubles(kv.at("weights"));
        auto p = split_doubles(kv.at("covariance"));
        if (static_cast<int>(w.size()) != dim || static_cast<int>(p.size()) != dim * dim) {
            throw IoError("RLS checkpoint has inconsistent dimensions");
        }
        est.m_weights = Eigen::Map<Eigen::VectorXd>(w.data(), dim);
        est.m_covariance = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(p.data(), dim, dim);
        for (double f : split_doubles(kv["features"])) {
            est.m_feature_indices.push_back(static_cast<int>(f));
        }
        est.m_updates = kv.count("updates") ? std::stoll(kv["updates"]) : 0;
        return est;
    }
    catch (const std::out_of_range &) {
        throw IoError("RLS checkpoint is missing a required key");
    }
    catch (const std::invalid_argument &) {
        throw IoError("RLS checkpoint has a malformed value");
    }
}

RlsEstimator rls_update(RlsEstimator est, const Eigen::VectorXd &x, double y)
{
    est.update(x, y);
    return est;
}

double rls_predict(const RlsEstimator &est, const Eigen::VectorXd &x)
{
    return est.predict(x);
}

}  // namespace socrm
