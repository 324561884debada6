#include "socrm/enmpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "socrm/error.hpp"
#include "socrm/io.hpp"
#include "socrm/random.hpp"

namespace socrm {

namespace {

int gpu_levels(const SocDescriptor &soc)
{
    return static_cast<int>(soc.gpu.freq_levels.size());
}

/// Peak GPU throughput in cycles per second (top frequency, every slice).
double gpu_peak_rate(const SocDescriptor &soc)
{
    return soc.gpu.freq_levels.back() * std::pow(soc.gpu.slice_count, kSliceEfficiencyExponent);
}

TransitionCost gpu_transition(const SocDescriptor &soc, const GpuKnobs &from, const GpuKnobs &to)
{
    Configuration a = min_configuration(soc);
    Configuration b = a;
    a.gpu_freq_idx = from.freq_idx;
    a.gpu_active_slices = from.slices;
    b.gpu_freq_idx = to.freq_idx;
    b.gpu_active_slices = to.slices;
    return apply_transition(a, b, soc);
}

}  // namespace

void FrameTrace::validate() const
{
    if (work.size() != target_fps.size()) {
        throw std::invalid_argument("frame trace: work and fps columns differ in length");
    }
    for (std::size_t i = 0; i < work.size(); ++i) {
        if (!(work[i] > 0.0) || !std::isfinite(work[i])) {
            throw std::invalid_argument("frame trace: work must be positive (frame " +
                                        std::to_string(i) + ")");
        }
        if (!(target_fps[i] > 0.0) || !std::isfinite(target_fps[i])) {
            throw std::invalid_argument("frame trace: target fps must be positive (frame " +
                                        std::to_string(i) + ")");
        }
    }
}

FrameTrace generate_frame_trace(const SocDescriptor &soc, const TraceOptions &options)
{
    validate(soc);
    if (options.frames < 0 || options.min_phase < 1 || options.max_phase < options.min_phase ||
        !(options.fps > 0.0) || !(options.demand_lo > 0.0) ||
        !(options.demand_hi >= options.demand_lo) || !(options.jitter >= 0.0 && options.jitter < 1.0)) {
        throw std::invalid_argument("frame trace options are out of range");
    }
    Rng rng(mix_seed(options.seed, 0xf4a3e));
    const double capacity = gpu_peak_rate(soc) / options.fps;
    FrameTrace trace;
    while (static_cast<int>(trace.work.size()) < options.frames) {
        const int span = options.min_phase +
                         static_cast<int>(rng.below(options.max_phase - options.min_phase + 1));
        const double level = capacity * rng.uniform(options.demand_lo, options.demand_hi);
        for (int k = 0; k < span && static_cast<int>(trace.work.size()) < options.frames; ++k) {
            trace.work.push_back(level * rng.uniform(1.0 - options.jitter, 1.0 + options.jitter));
            trace.target_fps.push_back(options.fps);
        }
    }
    return trace;
}

std::string frame_trace_to_csv(const FrameTrace &trace)
{
    std::ostringstream os;
    os << "frame_id,work_cycles,target_fps\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        os << i << ',' << format_double(trace.work[i]) << ',' << format_double(trace.target_fps[i])
           << '\n';
    }
    return os.str();
}

FrameTrace frame_trace_from_csv(const std::string &text)
{
    const CsvTable csv = parse_csv(text);
    const int c_work = csv.column("work_cycles");
    const int c_fps = csv.column("target_fps");
    FrameTrace trace;
    for (const auto &row : csv.rows) {
        trace.work.push_back(parse_double(row[c_work], "work_cycles"));
        trace.target_fps.push_back(parse_double(row[c_fps], "target_fps"));
    }
    try {
        trace.validate();
    }
    catch (const std::invalid_argument &ex) {
        throw IoError(ex.what());
    }
    return trace;
}

void MultiRateConfig::validate() const
{
    if (slow_period < 1 || horizon < 1) {
        throw std::invalid_argument("multi-rate config needs slow_period >= 1 and horizon >= 1");
    }
    if (!(slack_target > 0.0 && slack_target <= 1.0) || !(fast_gain > 0.0)) {
        throw std::invalid_argument("multi-rate config: slack target in (0, 1], gain > 0");
    }
}

GpuKnobs nmpc_solve(const NmpcState &state, const std::vector<double> &predicted_work,
                    const SocDescriptor &soc, const MultiRateConfig &mrc,
                    const FrameEvaluator &evaluate)
{
    mrc.validate();
    if (predicted_work.empty()) {
        throw std::invalid_argument("nmpc_solve: empty horizon");
    }
    const double inf = std::numeric_limits<double>::infinity();
    GpuKnobs best;
    bool best_feasible = false;
    double best_violation = inf;
    double best_energy = inf;
    bool have = false;
    for (int f = 0; f < gpu_levels(soc); ++f) {
        for (int s = 1; s <= soc.gpu.slice_count; ++s) {
            const GpuKnobs cand{f, s};
            const TransitionCost trans =
                state.has_current ? gpu_transition(soc, state.current, cand) : TransitionCost{};
            double energy = trans.energy;
            double violation = -inf;
            // The switch delays the first frame of the horizon.
            double delay = trans.time;
            for (double w : predicted_work) {
                const FrameOutcome out = evaluate(w, f, s);
                energy += out.energy;
                violation = std::max(violation, out.frame_time + delay - state.deadline);
                delay = 0.0;
            }
            const bool feasible = violation <= 0.0;
            bool better = false;
            if (!have) {
                better = true;
            }
            else if (feasible != best_feasible) {
                better = feasible;
            }
            else if (feasible) {
                better = energy < best_energy;
            }
            else {
                better = violation < best_violation ||
                         (violation == best_violation && energy < best_energy);
            }
            if (better) {
                best = cand;
                best_feasible = feasible;
                best_violation = violation;
                best_energy = energy;
                have = true;
            }
        }
    }
    return best;
}

GpuKnobs nmpc_solve(const NmpcState &state, const std::vector<double> &predicted_work,
                    const SocDescriptor &soc, const MultiRateConfig &mrc)
{
    return nmpc_solve(state, predicted_work, soc, mrc, [&soc](double w, int f, int s) {
        return simulate_gpu_frame(soc, w, f, s);
    });
}

SensitivityModel::SensitivityModel(const SocDescriptor &soc, double forgetting)
    : m_soc(soc), m_time(1, forgetting), m_energy(2, forgetting)
{
}

std::vector<double> SensitivityModel::time_features(double work, int f, int s) const
{
    // Milliseconds, so the bias term stays small next to the signal.
    return {work / (m_soc.gpu.freq_levels.at(f) * std::pow(s, kSliceEfficiencyExponent)) * 1e3};
}

std::vector<double> SensitivityModel::energy_features(double work, int f, int s) const
{
    const double ghz = m_soc.gpu.freq_levels.at(f) * 1e-9;
    const double v = m_soc.gpu.volt_levels.at(f);
    // Mega-cycles, so the features are O(1..100) like the millijoule target.
    const double scale = work * 1e-6 * std::pow(s, 1.0 - kSliceEfficiencyExponent);
    return {v * v * scale, v * scale / ghz};
}

double SensitivityModel::predict_time(double work, int f, int s) const
{
    return m_time.predict(time_features(work, f, s)) * 1e-3;
}

double SensitivityModel::predict_energy(double work, int f, int s) const
{
    return m_energy.predict(energy_features(work, f, s)) * 1e-3;
}

FrameOutcome SensitivityModel::predict(double work, int f, int s) const
{
    return {predict_time(work, f, s), predict_energy(work, f, s)};
}

void SensitivityModel::update(double work, int f, int s, double frame_time, double energy)
{
    m_time.update(time_features(work, f, s), frame_time * 1e3);
    m_energy.update(energy_features(work, f, s), energy * 1e3);
    refresh_sensitivities(work, f, s);
}

void SensitivityModel::refresh_sensitivities(double work, int f, int s)
{
    const int top = gpu_levels(m_soc) - 1;
    const int f_hi = std::min(f + 1, top);
    const int f_lo = f_hi - 1 >= 0 ? f_hi - 1 : 0;
    const int s_hi = std::min(s + 1, m_soc.gpu.slice_count);
    const int s_lo = std::max(s_hi - 1, 1);
    m_sens = {};
    if (f_hi != f_lo) {
        m_sens.time_per_freq_step = predict_time(work, f_hi, s) - predict_time(work, f_lo, s);
        m_sens.energy_per_freq_step = predict_energy(work, f_hi, s) - predict_energy(work, f_lo, s);
    }
    if (s_hi != s_lo) {
        m_sens.time_per_slice = predict_time(work, f, s_hi) - predict_time(work, f, s_lo);
        m_sens.energy_per_slice = predict_energy(work, f, s_hi) - predict_energy(work, f, s_lo);
    }
}

std::vector<double> controller_features(double predicted_work, double deadline,
                                        const GpuKnobs &current, double last_slack)
{
    return {predicted_work / deadline * 1e-9, static_cast<double>(current.freq_idx),
            static_cast<double>(current.slices), last_slack};
}

std::vector<std::string> controller_feature_names()
{
    return {"demand_ghz", "current_freq_idx", "current_slices", "last_slack"};
}

RegressionTree RegressionTree::fit(const std::vector<std::vector<double>> &x,
                                   const std::vector<double> &y, int max_depth, int min_leaf)
{
    if (x.empty() || x.size() != y.size()) {
        throw std::invalid_argument("regression tree: need matching non-empty x and y");
    }
    RegressionTree tree;
    std::vector<int> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    tree.build(x, y, idx, 0, static_cast<int>(idx.size()), 0, max_depth, std::max(1, min_leaf));
    return tree;
}

int RegressionTree::build(const std::vector<std::vector<double>> &x, const std::vector<double> &y,
                          std::vector<int> &idx, int begin, int end, int depth, int max_depth,
                          int min_leaf)
{
    const int id = static_cast<int>(m_nodes.size());
    m_nodes.emplace_back();
    const int n = end - begin;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = begin; i < end; ++i) {
        sum += y[idx[i]];
        sq += y[idx[i]] * y[idx[i]];
    }
    m_nodes[id].value = sum / n;
    const double sse = sq - sum * sum / n;
    if (depth >= max_depth || n < 2 * min_leaf || sse <= 1e-12 * std::max(1.0, sq)) {
        return id;
    }

    const int width = static_cast<int>(x[idx[begin]].size());
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_sse = sse;
    std::vector<int> order(idx.begin() + begin, idx.begin() + end);
    for (int j = 0; j < width; ++j) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return x[a][j] < x[b][j] || (x[a][j] == x[b][j] && a < b);
        });
        double left_sum = 0.0;
        double left_sq = 0.0;
        for (int k = 0; k < n - 1; ++k) {
            const double v = y[order[k]];
            left_sum += v;
            left_sq += v * v;
            const int nl = k + 1;
            const int nr = n - nl;
            if (nl < min_leaf || nr < min_leaf || x[order[k]][j] == x[order[k + 1]][j]) {
                continue;
            }
            const double right_sum = sum - left_sum;
            const double right_sq = sq - left_sq;
            const double split_sse =
                (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
            if (split_sse < best_sse - 1e-12 * std::max(1.0, sq)) {
                best_sse = split_sse;
                best_feature = j;
                best_threshold = 0.5 * (x[order[k]][j] + x[order[k + 1]][j]);
            }
        }
    }
    if (best_feature < 0) {
        return id;
    }
    const auto mid = std::stable_partition(idx.begin() + begin, idx.begin() + end, [&](int i) {
        return x[i][best_feature] <= best_threshold;
    });
    const int split = static_cast<int>(mid - idx.begin());
    m_nodes[id].feature = best_feature;
    m_nodes[id].threshold = best_threshold;
    const int left = build(x, y, idx, begin, split, depth + 1, max_depth, min_leaf);
    const int right = build(x, y, idx, split, end, depth + 1, max_depth, min_leaf);
    m_nodes[id].left = left;
    m_nodes[id].right = right;
    return id;
}

double RegressionTree::predict(const std::vector<double> &x) const
{
    if (m_nodes.empty()) {
        throw ModelError("regression tree is not fitted");
    }
    int node = 0;
    while (m_nodes[node].feature >= 0) {
        node = x.at(m_nodes[node].feature) <= m_nodes[node].threshold ? m_nodes[node].left
                                                                      : m_nodes[node].right;
    }
    return m_nodes[node].value;
}

int RegressionTree::depth_of(int node) const
{
    if (m_nodes[node].feature < 0) {
        return 0;
    }
    return 1 + std::max(depth_of(m_nodes[node].left), depth_of(m_nodes[node].right));
}

int RegressionTree::depth() const
{
    return m_nodes.empty() ? 0 : depth_of(0);
}

void RegressionTree::dump_node(std::ostringstream &os, int node, int indent,
                               const std::vector<std::string> &names,
                               const std::string &output) const
{
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const Node &nd = m_nodes[node];
    if (nd.feature < 0) {
        os << pad << output << " = " << format_double(nd.value) << '\n';
        return;
    }
    const std::string name = nd.feature < static_cast<int>(names.size())
                                 ? names[nd.feature]
                                 : "x" + std::to_string(nd.feature);
    os << pad << "if " << name << " <= " << format_double(nd.threshold) << ":\n";
    dump_node(os, nd.left, indent + 1, names, output);
    os << pad << "else:\n";
    dump_node(os, nd.right, indent + 1, names, output);
}

std::string RegressionTree::dump(const std::vector<std::string> &names,
                                 const std::string &output) const
{
    std::ostringstream os;
    if (!m_nodes.empty()) {
        dump_node(os, 0, 0, names, output);
    }
    return os.str();
}

ExplicitKind explicit_kind_from_string(const std::string &name)
{
    if (name == "tree") {
        return ExplicitKind::Tree;
    }
    if (name == "linear") {
        return ExplicitKind::Linear;
    }
    throw std::invalid_argument("unknown explicit controller kind '" + name +
                                "' (expected tree or linear)");
}

GpuKnobs ExplicitController::decide(const std::vector<double> &features) const
{
    if (m_constant) {
        return m_constant_value;
    }
    double f = 0.0;
    double s = 0.0;
    if (m_kind == ExplicitKind::Tree) {
        f = m_freq_tree.predict(features);
        s = m_slice_tree.predict(features);
    }
    else {
        const auto n = static_cast<Eigen::Index>(features.size());
        if (n + 1 != m_freq_coef.size()) {
            throw std::invalid_argument("explicit controller: wrong feature count");
        }
        const Eigen::Map<const Eigen::VectorXd> x(features.data(), n);
        f = m_freq_coef.head(n).dot(x) + m_freq_coef(n);
        s = m_slice_coef.head(n).dot(x) + m_slice_coef(n);
    }
    GpuKnobs k;
    k.freq_idx = std::clamp(static_cast<int>(std::lround(f)), 0, m_levels - 1);
    k.slices = std::clamp(static_cast<int>(std::lround(s)), 1, m_max_slices);
    return k;
}

std::string ExplicitController::dump() const
{
    std::ostringstream os;
    const auto names = controller_feature_names();
    if (m_constant) {
        os << "constant freq_idx = " << m_constant_value.freq_idx
           << ", slices = " << m_constant_value.slices << '\n';
        return os.str();
    }
    if (m_kind == ExplicitKind::Tree) {
        os << "# freq_idx\n" << m_freq_tree.dump(names, "freq_idx");
        os << "# slices\n" << m_slice_tree.dump(names, "slices");
        return os.str();
    }
    auto linear = [&](const char *label, const Eigen::VectorXd &c) {
        os << label << " =";
        for (std::size_t j = 0; j < names.size(); ++j) {
            os << ' ' << format_double(c(static_cast<Eigen::Index>(j))) << '*' << names[j] << " +";
        }
        os << ' ' << format_double(c(c.size() - 1)) << '\n';
    };
    linear("freq_idx", m_freq_coef);
    linear("slices", m_slice_coef);
    return os.str();
}

ExplicitController fit_explicit(const SocDescriptor &soc, const std::vector<ExplicitSample> &samples,
                                ExplicitKind kind, int max_depth)
{
    if (samples.size() < 200) {
        throw std::invalid_argument("fit_explicit needs at least 200 samples");
    }
    ExplicitController ec;
    ec.m_kind = kind;
    ec.m_levels = gpu_levels(soc);
    ec.m_max_slices = soc.gpu.slice_count;

    std::vector<std::vector<double>> x;
    std::vector<double> yf;
    std::vector<double> ys;
    bool single = true;
    for (const auto &s : samples) {
        x.push_back(s.features);
        yf.push_back(s.decision.freq_idx);
        ys.push_back(s.decision.slices);
        single = single && s.decision == samples.front().decision;
    }
    if (single) {
        ec.m_constant = true;
        ec.m_constant_value = samples.front().decision;
    }
    else if (kind == ExplicitKind::Tree) {
        ec.m_freq_tree = RegressionTree::fit(x, yf, max_depth);
        ec.m_slice_tree = RegressionTree::fit(x, ys, max_depth);
    }
    else {
        const auto rows = static_cast<Eigen::Index>(x.size());
        const auto cols = static_cast<Eigen::Index>(x.front().size()) + 1;
        Eigen::MatrixXd a(rows, cols);
        Eigen::VectorXd bf(rows);
        Eigen::VectorXd bs(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j + 1 < cols; ++j) {
                a(i, j) = x[i][j];
            }
            a(i, cols - 1) = 1.0;
            bf(i) = yf[i];
            bs(i) = ys[i];
        }
        const auto qr = a.colPivHouseholderQr();
        ec.m_freq_coef = qr.solve(bf);
        ec.m_slice_coef = qr.solve(bs);
    }

    int exact = 0;
    int close = 0;
    for (const auto &s : samples) {
        const GpuKnobs got = ec.decide(s.features);
        exact += got == s.decision;
        close += got.slices == s.decision.slices && std::abs(got.freq_idx - s.decision.freq_idx) <= 1;
    }
    ec.m_training_agreement = static_cast<double>(exact) / samples.size();
    ec.m_training_freq_agreement = static_cast<double>(close) / samples.size();
    return ec;
}

std::vector<ExplicitSample> sample_nmpc_states(const SocDescriptor &soc, const MultiRateConfig &mrc,
                                               const ExplicitSampleOptions &options, int threads)
{
    (void)threads;
    Rng rng(mix_seed(options.seed, 0xe4c));
    const double deadline = 1.0 / options.fps;
    const double peak = gpu_peak_rate(soc);
    std::vector<ExplicitSample> out;
    out.reserve(static_cast<std::size_t>(std::max(0, options.count)));
    for (int i = 0; i < options.count; ++i) {
        const double work = rng.uniform(0.0, options.max_demand) * peak * deadline;
        GpuKnobs cur;
        cur.freq_idx = static_cast<int>(rng.below(gpu_levels(soc)));
        cur.slices = 1 + static_cast<int>(rng.below(soc.gpu.slice_count));
        const double slack = rng.uniform(-0.2, 0.6);
        NmpcState st{cur, true, mrc.slack_target * deadline};
        const GpuKnobs decision =
            nmpc_solve(st, std::vector<double>(mrc.horizon, work), soc, mrc);
        out.push_back({controller_features(work, deadline, cur, slack), decision});
    }
    return out;
}

GpuKnobs slow_rate_step(ControllerState &state, const SocDescriptor &soc,
                        const MultiRateConfig &mrc, const ExplicitController *controller,
                        const FrameEvaluator &evaluate)
{
    GpuKnobs next;
    if (!state.have_observation) {
        next = {gpu_levels(soc) - 1, soc.gpu.slice_count};
    }
    else if (controller != nullptr) {
        const double slack = 1.0 - state.last_frame_time / state.last_deadline;
        next = controller->decide(
            controller_features(state.last_work, state.next_deadline, state.applied, slack));
    }
    else {
        const NmpcState st{state.applied, true, mrc.slack_target * state.next_deadline};
        const std::vector<double> horizon(mrc.horizon, state.last_work);
        next = evaluate ? nmpc_solve(st, horizon, soc, mrc, evaluate)
                        : nmpc_solve(st, horizon, soc, mrc);
    }
    state.slow = next;
    state.applied = next;
    state.accumulator = 0.0;
    return next;
}

int fast_rate_step(ControllerState &state, const SocDescriptor &soc, const MultiRateConfig &mrc,
                   double last_frame_time, double deadline)
{
    const int levels = gpu_levels(soc);
    const double error = mrc.slack_target * deadline - last_frame_time;
    const double limit = levels / mrc.fast_gain * deadline;
    state.accumulator = std::clamp(state.accumulator + error, -limit, limit);
    const int trim = static_cast<int>(std::lround(mrc.fast_gain * state.accumulator / deadline));
    state.applied.freq_idx = std::clamp(state.slow.freq_idx - trim, 0, levels - 1);
    state.applied.slices = state.slow.slices;
    return state.applied.freq_idx;
}

int fast_rate_recover(ControllerState &state, const SocDescriptor &soc, const MultiRateConfig &mrc,
                      const SensitivityModel &model)
{
    const int top = gpu_levels(soc) - 1;
    int f = top;
    if (model.update_count() > 0) {
        const double target = mrc.slack_target * state.next_deadline;
        for (f = state.applied.freq_idx; f < top; ++f) {
            if (model.predict_time(state.last_work, f, state.applied.slices) <= target) {
                break;
            }
        }
    }
    state.slow.freq_idx = std::max(f, state.applied.freq_idx);
    state.applied.freq_idx = state.slow.freq_idx;
    state.accumulator = 0.0;
    return state.applied.freq_idx;
}

MaxFrequencyGpuGovernor::MaxFrequencyGpuGovernor(const SocDescriptor &soc)
    : m_knobs{gpu_levels(soc) - 1, soc.gpu.slice_count}
{
}

GpuKnobs MaxFrequencyGpuGovernor::decide(std::size_t, double)
{
    return m_knobs;
}

OndemandGpuGovernor::OndemandGpuGovernor(const SocDescriptor &soc)
    : m_soc(soc), m_state(GpuOndemandState::initial(soc))
{
}

GpuKnobs OndemandGpuGovernor::decide(std::size_t, double)
{
    return {m_state.freq_idx, m_state.slices};
}

void OndemandGpuGovernor::observe(const FrameObservation &obs)
{
    gpu_ondemand_step(m_state, m_soc, obs.frame_time / obs.deadline);
}

MultiRateGpuGovernor::MultiRateGpuGovernor(const SocDescriptor &soc, const MultiRateConfig &mrc,
                                           std::shared_ptr<const ExplicitController> controller)
    : m_soc(soc), m_mrc(mrc), m_controller(std::move(controller)), m_model(soc)
{
    mrc.validate();
}

GpuKnobs MultiRateGpuGovernor::decide(std::size_t frame, double deadline)
{
    m_state.next_deadline = deadline;
    if (frame % static_cast<std::size_t>(m_mrc.slow_period) == 0) {
        return slow_rate_step(m_state, m_soc, m_mrc, m_controller.get());
    }
    if (m_state.have_observation && m_state.last_frame_time > m_state.last_deadline) {
        fast_rate_recover(m_state, m_soc, m_mrc, m_model);
    }
    else if (m_state.have_observation) {
        const int held = m_state.applied.freq_idx;
        const int f = fast_rate_step(m_state, m_soc, m_mrc, m_state.last_frame_time, m_state.last_deadline);
        // Do not trim down into a predicted miss; quantized levels would otherwise limit-cycle.
        if (f < held && m_model.update_count() > 0 &&
            m_model.predict_time(m_state.last_work, f, m_state.applied.slices) > deadline) {
            m_state.applied.freq_idx = held;
        }
    }
    return m_state.applied;
}

void MultiRateGpuGovernor::observe(const FrameObservation &obs)
{
    m_model.update(obs.work, m_state.applied.freq_idx, m_state.applied.slices, obs.frame_time,
                   obs.energy);
    m_state.last_work = obs.work;
    m_state.last_frame_time = obs.frame_time;
    m_state.last_deadline = obs.deadline;
    m_state.have_observation = true;
}

GpuMetrics evaluate_governor(const FrameTrace &trace, GpuGovernor &governor,
                             const SocDescriptor &soc)
{
    trace.validate();
    if (trace.size() == 0) {
        throw std::invalid_argument("evaluate_governor: empty trace");
    }
    GpuMetrics m;
    m.governor = governor.name();
    GpuKnobs prev;
    double displayed = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double deadline = trace.deadline(k);
        const GpuKnobs knobs = governor.decide(k, deadline);
        TransitionCost trans;
        if (k > 0) {
            trans = gpu_transition(soc, prev, knobs);
            if (knobs.slices != prev.slices) {
                m.slice_changes.push_back(k);
            }
        }
        const FrameOutcome out = simulate_gpu_frame(soc, trace.work[k], knobs.freq_idx, knobs.slices);
        const double wall = out.frame_time + trans.time;
        m.total_energy += out.energy + trans.energy;
        if (wall > deadline) {
            ++m.misses;
        }
        displayed += std::max(wall, deadline);
        governor.observe({trace.work[k], out.frame_time, wall, deadline, out.energy});
        prev = knobs;
    }
    m.frames = trace.size();
    m.miss_rate = static_cast<double>(m.misses) / static_cast<double>(m.frames);
    m.mean_fps = static_cast<double>(m.frames) / displayed;
    return m;
}

std::string gpu_metrics_to_csv(const std::vector<GpuMetrics> &metrics)
{
    std::ostringstream os;
    os << "governor,total_energy_j,miss_rate,mean_fps\n";
    for (const auto &m : metrics) {
        os << m.governor << ',' << format_double(m.total_energy) << ',' << format_double(m.miss_rate)
           << ',' << format_double(m.mean_fps) << '\n';
    }
    return os.str();
}

}  // namespace socrm
