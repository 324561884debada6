#include "socrm/policy.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "socrm/error.hpp"
#include "socrm/random.hpp"

namespace socrm {

namespace {

constexpr const char *kCheckpointMagic = "socrm-il-policy";
constexpr int kCheckpointVersion = 1;
constexpr double kLossIncreaseTolerance = 1e-9;
constexpr double kMinLearningRate = 1e-12;

void check_finite(const CounterSample &s)
{
    auto bad = [](double x) { return !std::isfinite(x); };
    bool fail = bad(s.instructions_retired) || bad(s.cpu_cycles) ||
                bad(s.branch_mispredictions) || bad(s.l2_cache_misses) ||
                bad(s.data_memory_accesses) || bad(s.noncache_ext_mem_requests) ||
                bad(s.little_util_total) || bad(s.total_chip_power);
    for (double u : s.big_util_per_core) {
        fail = fail || bad(u);
    }
    if (fail) {
        throw ModelError("counter sample holds non-finite values");
    }
}

Eigen::VectorXd softmax(const Eigen::VectorXd &logits)
{
    const double top = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - top).exp().matrix();
    return e / e.sum();
}

int argmax(const Eigen::VectorXd &v)
{
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

void write_vector(std::ostream &os, const std::string &key, const double *data, Eigen::Index n)
{
    os << key << ' ' << n;
    for (Eigen::Index i = 0; i < n; ++i) {
        os << ' ' << data[i];
    }
    os << '\n';
}

std::vector<double> read_vector(std::istream &is, const std::string &key)
{
    std::string got;
    Eigen::Index n = 0;
    if (!(is >> got >> n) || got != key || n < 0) {
        throw IoError("policy checkpoint: expected field '" + key + "'");
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto &x : v) {
        if (!(is >> x)) {
            throw IoError("policy checkpoint: truncated field '" + key + "'");
        }
    }
    return v;
}

}  // namespace

std::vector<double> policy_features(const CounterSample &s)
{
    check_finite(s);
    const double instr = s.instructions_retired;
    auto rate = [instr](double x) { return instr > 0.0 ? x / instr : 0.0; };
    double big_lead = 0.0;
    double big_rest = 0.0;
    if (!s.big_util_per_core.empty()) {
        big_lead = s.big_util_per_core.front();
        for (std::size_t i = 1; i < s.big_util_per_core.size(); ++i) {
            big_rest = std::max(big_rest, s.big_util_per_core[i]);
        }
    }
    return {rate(s.l2_cache_misses),      rate(s.noncache_ext_mem_requests),
            rate(s.branch_mispredictions), rate(s.data_memory_accesses),
            s.little_util_total,           big_lead,
            big_rest};
}

std::vector<std::string> policy_feature_names()
{
    return {"l2_per_instr",   "ext_mem_per_instr", "branch_miss_per_instr", "data_per_instr",
            "little_util",    "big_util_lead",     "big_util_rest_max"};
}

PolicyKind policy_kind_from_string(const std::string &name)
{
    if (name == "mlp") {
        return PolicyKind::Mlp;
    }
    if (name == "linear") {
        return PolicyKind::Linear;
    }
    throw std::invalid_argument("unknown policy kind '" + name + "' (expected mlp or linear)");
}

std::string to_string(PolicyKind kind)
{
    return kind == PolicyKind::Mlp ? "mlp" : "linear";
}

IlPolicy::IlPolicy(const SocDescriptor &soc, PolicyKind kind, std::uint64_t seed, int hidden)
    : m_kind(kind), m_hidden(kind == PolicyKind::Mlp ? hidden : 0),
      m_clusters(soc.cluster_count()), m_seed(seed)
{
    validate(soc);
    if (kind == PolicyKind::Mlp && hidden < 1) {
        throw std::invalid_argument("policy hidden layer must have at least one unit");
    }
    for (const auto &cl : soc.clusters) {
        m_head_sizes.push_back(static_cast<int>(cl.freq_levels.size()));
        m_head_sizes.push_back(cl.core_count);
    }
    m_mean.assign(m_inputs, 0.0);
    m_scale.assign(m_inputs, 1.0);

    Rng rng(mix_seed(seed, 0x1157));
    auto init = [&rng](Eigen::MatrixXd &w, int rows, int cols) {
        const double r = std::sqrt(6.0 / (rows + cols));
        w.resize(rows, cols);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                w(i, j) = rng.uniform(-r, r);
            }
        }
    };
    const int penultimate = m_kind == PolicyKind::Mlp ? m_hidden : m_inputs;
    if (m_kind == PolicyKind::Mlp) {
        init(m_w1, m_hidden, m_inputs);
        m_b1 = Eigen::VectorXd::Zero(m_hidden);
    }
    for (int k : m_head_sizes) {
        Eigen::MatrixXd w;
        init(w, k, penultimate);
        m_w2.push_back(w);
        m_b2.push_back(Eigen::VectorXd::Zero(k));
    }
}

void IlPolicy::fit_normalization(const std::vector<std::vector<double>> &features)
{
    if (features.empty()) {
        throw std::invalid_argument("fit_normalization: no samples");
    }
    const double n = static_cast<double>(features.size());
    for (int j = 0; j < m_inputs; ++j) {
        double sum = 0.0;
        for (const auto &f : features) {
            sum += f.at(j);
        }
        const double mean = sum / n;
        double var = 0.0;
        for (const auto &f : features) {
            var += (f[j] - mean) * (f[j] - mean);
        }
        const double sd = std::sqrt(var / n);
        m_mean[j] = mean;
        // A floor keeps near-constant features from being blown up into noise.
        m_scale[j] = std::max({sd, 0.05 * std::abs(mean), 1e-12});
    }
}

Eigen::VectorXd IlPolicy::normalize(const std::vector<double> &features) const
{
    if (static_cast<int>(features.size()) != m_inputs) {
        throw std::invalid_argument("policy expects " + std::to_string(m_inputs) + " features");
    }
    Eigen::VectorXd x(m_inputs);
    for (int j = 0; j < m_inputs; ++j) {
        if (!std::isfinite(features[j])) {
            throw ModelError("policy feature is not finite");
        }
        x(j) = (features[j] - m_mean[j]) / m_scale[j];
    }
    return x;
}

void IlPolicy::forward(const Eigen::VectorXd &x, Eigen::VectorXd &hidden,
                       std::vector<Eigen::VectorXd> &probs) const
{
    if (m_kind == PolicyKind::Mlp) {
        hidden = (m_w1 * x + m_b1).array().tanh().matrix();
    }
    else {
        hidden = x;
    }
    probs.resize(m_w2.size());
    for (std::size_t h = 0; h < m_w2.size(); ++h) {
        probs[h] = softmax(m_w2[h] * hidden + m_b2[h]);
    }
}

std::vector<Eigen::VectorXd> IlPolicy::head_probabilities(const std::vector<double> &features) const
{
    Eigen::VectorXd hidden;
    std::vector<Eigen::VectorXd> probs;
    forward(normalize(features), hidden, probs);
    return probs;
}

std::vector<int> IlPolicy::classify(const std::vector<double> &features) const
{
    std::vector<int> out;
    for (const auto &p : head_probabilities(features)) {
        out.push_back(argmax(p));
    }
    return out;
}

Configuration IlPolicy::decide(const CounterSample &counters) const
{
    return decode(classify(policy_features(counters)));
}

std::vector<int> IlPolicy::encode(const Configuration &cfg) const
{
    if (static_cast<int>(cfg.cpu_freq_idx.size()) != m_clusters ||
        static_cast<int>(cfg.cpu_active_cores.size()) != m_clusters) {
        throw BoundsError("policy label has the wrong cluster count");
    }
    std::vector<int> classes;
    for (int c = 0; c < m_clusters; ++c) {
        const int f = cfg.cpu_freq_idx[c];
        const int n = cfg.cpu_active_cores[c] - 1;
        if (f < 0 || f >= m_head_sizes[2 * c] || n < 0 || n >= m_head_sizes[2 * c + 1]) {
            throw BoundsError("policy label " + to_string(cfg) + " is out of range");
        }
        classes.push_back(f);
        classes.push_back(n);
    }
    return classes;
}

Configuration IlPolicy::decode(const std::vector<int> &classes) const
{
    Configuration cfg;
    for (int c = 0; c < m_clusters; ++c) {
        cfg.cpu_freq_idx.push_back(classes.at(2 * c));
        cfg.cpu_active_cores.push_back(classes.at(2 * c + 1) + 1);
    }
    return cfg;
}

int IlPolicy::parameter_count() const
{
    int count = static_cast<int>(m_w1.size() + m_b1.size());
    for (std::size_t h = 0; h < m_w2.size(); ++h) {
        count += static_cast<int>(m_w2[h].size() + m_b2[h].size());
    }
    return count;
}

Eigen::VectorXd IlPolicy::parameters() const
{
    Eigen::VectorXd theta(parameter_count());
    Eigen::Index at = 0;
    auto put = [&](const double *data, Eigen::Index n) {
        theta.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
        at += n;
    };
    put(m_w1.data(), m_w1.size());
    put(m_b1.data(), m_b1.size());
    for (std::size_t h = 0; h < m_w2.size(); ++h) {
        put(m_w2[h].data(), m_w2[h].size());
        put(m_b2[h].data(), m_b2[h].size());
    }
    return theta;
}

void IlPolicy::set_parameters(const Eigen::VectorXd &theta)
{
    if (theta.size() != parameter_count()) {
        throw std::invalid_argument("set_parameters: wrong parameter count");
    }
    Eigen::Index at = 0;
    auto get = [&](double *data, Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd>(data, n) = theta.segment(at, n);
        at += n;
    };
    get(m_w1.data(), m_w1.size());
    get(m_b1.data(), m_b1.size());
    for (std::size_t h = 0; h < m_w2.size(); ++h) {
        get(m_w2[h].data(), m_w2[h].size());
        get(m_b2[h].data(), m_b2[h].size());
    }
}

double IlPolicy::loss(const std::vector<std::vector<double>> &features,
                      const std::vector<std::vector<int>> &labels) const
{
    double total = 0.0;
    Eigen::VectorXd hidden;
    std::vector<Eigen::VectorXd> probs;
    for (std::size_t i = 0; i < features.size(); ++i) {
        forward(normalize(features[i]), hidden, probs);
        for (std::size_t h = 0; h < probs.size(); ++h) {
            total -= std::log(std::max(probs[h](labels[i][h]), 1e-300));
        }
    }
    return total;
}

double IlPolicy::loss_and_gradient(const std::vector<std::vector<double>> &features,
                                   const std::vector<std::vector<int>> &labels,
                                   Eigen::VectorXd &gradient) const
{
    if (features.size() != labels.size()) {
        throw std::invalid_argument("loss_and_gradient: features and labels differ in length");
    }
    Eigen::MatrixXd g_w1 = Eigen::MatrixXd::Zero(m_w1.rows(), m_w1.cols());
    Eigen::VectorXd g_b1 = Eigen::VectorXd::Zero(m_b1.size());
    std::vector<Eigen::MatrixXd> g_w2;
    std::vector<Eigen::VectorXd> g_b2;
    for (std::size_t h = 0; h < m_w2.size(); ++h) {
        g_w2.push_back(Eigen::MatrixXd::Zero(m_w2[h].rows(), m_w2[h].cols()));
        g_b2.push_back(Eigen::VectorXd::Zero(m_b2[h].size()));
    }

    double total = 0.0;
    Eigen::VectorXd hidden;
    std::vector<Eigen::VectorXd> probs;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Eigen::VectorXd x = normalize(features[i]);
        forward(x, hidden, probs);
        Eigen::VectorXd d_hidden = Eigen::VectorXd::Zero(hidden.size());
        for (std::size_t h = 0; h < probs.size(); ++h) {
            const int y = labels[i].at(h);
            total -= std::log(std::max(probs[h](y), 1e-300));
            Eigen::VectorXd d_logits = probs[h];
            d_logits(y) -= 1.0;
            g_w2[h] += d_logits * hidden.transpose();
            g_b2[h] += d_logits;
            if (m_kind == PolicyKind::Mlp) {
                d_hidden += m_w2[h].transpose() * d_logits;
            }
        }
        if (m_kind == PolicyKind::Mlp) {
            const Eigen::VectorXd d_pre =
                (d_hidden.array() * (1.0 - hidden.array().square())).matrix();
            g_w1 += d_pre * x.transpose();
            g_b1 += d_pre;
        }
    }

    gradient.resize(parameter_count());
    Eigen::Index at = 0;
    auto put = [&](const double *data, Eigen::Index n) {
        gradient.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
        at += n;
    };
    put(g_w1.data(), g_w1.size());
    put(g_b1.data(), g_b1.size());
    for (std::size_t h = 0; h < g_w2.size(); ++h) {
        put(g_w2[h].data(), g_w2[h].size());
        put(g_b2[h].data(), g_b2[h].size());
    }
    return total;
}

double IlPolicy::agreement(const std::vector<LabeledSample> &samples) const
{
    if (samples.empty()) {
        return 0.0;
    }
    int hits = 0;
    for (const auto &s : samples) {
        const Configuration got = decide(s.counters);
        hits += got.cpu_freq_idx == s.label.cpu_freq_idx &&
                got.cpu_active_cores == s.label.cpu_active_cores;
    }
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TrainReport IlPolicy::train(const std::vector<LabeledSample> &samples, const TrainOptions &options)
{
    if (samples.empty()) {
        throw std::invalid_argument("train: no samples");
    }
    std::vector<std::vector<double>> features;
    std::vector<std::vector<int>> labels;
    for (const auto &s : samples) {
        features.push_back(policy_features(s.counters));
        labels.push_back(encode(s.label));
    }

    TrainReport report;
    Eigen::VectorXd theta = parameters();
    Eigen::VectorXd grad;
    double current = loss_and_gradient(features, labels, grad);
    double lr = options.learning_rate;
    report.initial_loss = current;
    report.loss_history.push_back(current);
    Eigen::VectorXd best_theta = theta;
    double best_agreement = agreement(samples);
    double best_loss = current;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        if (options.target_agreement > 0.0 && best_agreement >= options.target_agreement) {
            break;
        }
        bool accepted = false;
        while (lr >= kMinLearningRate) {
            const Eigen::VectorXd trial = theta - lr * grad;
            set_parameters(trial);
            const double trial_loss = loss(features, labels);
            if (std::isfinite(trial_loss) && trial_loss <= current + kLossIncreaseTolerance) {
                theta = trial;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        set_parameters(theta);
        if (!accepted) {
            break;
        }
        current = loss_and_gradient(features, labels, grad);
        report.loss_history.push_back(current);
        ++report.epochs_run;
        const double agree = agreement(samples);
        if (agree >= best_agreement) {
            best_agreement = agree;
            best_theta = theta;
            best_loss = current;
        }
    }
    set_parameters(best_theta);
    report.final_loss = best_loss;
    report.final_learning_rate = lr;
    report.agreement = best_agreement;
    return report;
}

std::string IlPolicy::serialize() const
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    os << "kind " << to_string(m_kind) << '\n';
    os << "inputs " << m_inputs << '\n';
    os << "hidden " << m_hidden << '\n';
    os << "clusters " << m_clusters << '\n';
    os << "seed " << m_seed << '\n';
    os << "heads " << m_head_sizes.size();
    for (int k : m_head_sizes) {
        os << ' ' << k;
    }
    os << '\n';
    write_vector(os, "mean", m_mean.data(), static_cast<Eigen::Index>(m_mean.size()));
    write_vector(os, "scale", m_scale.data(), static_cast<Eigen::Index>(m_scale.size()));
    write_vector(os, "w1", m_w1.data(), m_w1.size());
    write_vector(os, "b1", m_b1.data(), m_b1.size());
    for (std::size_t h = 0; h < m_w2.size(); ++h) {
        write_vector(os, "w2", m_w2[h].data(), m_w2[h].size());
        write_vector(os, "b2", m_b2[h].data(), m_b2[h].size());
    }
    return os.str();
}

IlPolicy IlPolicy::deserialize(const std::string &text)
{
    std::istringstream is(text);
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != kCheckpointMagic) {
        throw IoError("not a policy checkpoint");
    }
    if (version != kCheckpointVersion) {
        throw IoError("policy checkpoint version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    IlPolicy p;
    auto expect = [&is](const std::string &key) {
        std::string got;
        if (!(is >> got) || got != key) {
            throw IoError("policy checkpoint: expected field '" + key + "'");
        }
    };
    std::string kind;
    expect("kind");
    is >> kind;
    p.m_kind = policy_kind_from_string(kind);
    expect("inputs");
    is >> p.m_inputs;
    expect("hidden");
    is >> p.m_hidden;
    expect("clusters");
    is >> p.m_clusters;
    expect("seed");
    is >> p.m_seed;
    expect("heads");
    std::size_t heads = 0;
    is >> heads;
    p.m_head_sizes.resize(heads);
    for (auto &k : p.m_head_sizes) {
        is >> k;
    }
    if (!is || p.m_inputs != kPolicyFeatureCount || heads != 2 * static_cast<std::size_t>(p.m_clusters)) {
        throw IoError("policy checkpoint header is malformed");
    }
    p.m_mean = read_vector(is, "mean");
    p.m_scale = read_vector(is, "scale");
    const int penultimate = p.m_kind == PolicyKind::Mlp ? p.m_hidden : p.m_inputs;
    auto read_matrix = [&is](const std::string &key, int rows, int cols) {
        auto v = read_vector(is, key);
        if (static_cast<int>(v.size()) != rows * cols) {
            throw IoError("policy checkpoint: field '" + key + "' has the wrong size");
        }
        return Eigen::MatrixXd(Eigen::Map<Eigen::MatrixXd>(v.data(), rows, cols));
    };
    p.m_w1 = read_matrix("w1", p.m_kind == PolicyKind::Mlp ? p.m_hidden : 0, p.m_inputs);
    p.m_b1 = read_matrix("b1", p.m_kind == PolicyKind::Mlp ? p.m_hidden : 0, 1);
    for (int k : p.m_head_sizes) {
        p.m_w2.push_back(read_matrix("w2", k, penultimate));
        p.m_b2.push_back(read_matrix("b2", k, 1));
    }
    if (static_cast<int>(p.m_mean.size()) != p.m_inputs ||
        static_cast<int>(p.m_scale.size()) != p.m_inputs) {
        throw IoError("policy checkpoint: normalization has the wrong size");
    }
    return p;
}

TrainReport policy_update(IlPolicy &policy, const std::vector<LabeledSample> &buffer,
                          const TrainOptions &options)
{
    return policy.train(buffer, options);
}

}  // namespace socrm
