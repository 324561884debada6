#include "socrm/thermal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "socrm/error.hpp"

namespace socrm {

void ThermalModel::validate() const
{
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || b.cols() != n || c.size() != n) {
        throw std::invalid_argument("thermal model dimensions are inconsistent");
    }
}

Eigen::MatrixXd ThermalModel::loop_matrix() const
{
    return a + leak_p1 * b;
}

double ThermalModel::spectral_radius() const
{
    validate();
    Eigen::EigenSolver<Eigen::MatrixXd> es(loop_matrix(), false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

ThermalModel ThermalModel::scalar(double a, double b, double c, double p0, double p1)
{
    ThermalModel tm;
    tm.a = Eigen::MatrixXd::Constant(1, 1, a);
    tm.b = Eigen::MatrixXd::Constant(1, 1, b);
    tm.c = Eigen::VectorXd::Constant(1, c);
    tm.leak_p0 = p0;
    tm.leak_p1 = p1;
    return tm;
}

Eigen::VectorXd thermal_step(const ThermalModel &tm, const Eigen::VectorXd &temperature,
                             const Eigen::VectorXd &power)
{
    tm.validate();
    if (temperature.size() != tm.hotspots() || power.size() != tm.hotspots()) {
        throw std::invalid_argument("thermal_step: vector dimension mismatch");
    }
    Eigen::VectorXd leak = (tm.leak_p0 + tm.leak_p1 * temperature.array()).matrix();
    return tm.a * temperature + tm.b * (power + leak) + tm.c;
}

FixedPoint thermal_fixed_point(const ThermalModel &tm, const Eigen::VectorXd &avg_power)
{
    tm.validate();
    const auto n = tm.hotspots();
    if (avg_power.size() != n) {
        throw std::invalid_argument("thermal_fixed_point: power dimension mismatch");
    }
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - tm.loop_matrix();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) {
        throw ModelError("thermal model has no fixed point (I - A - p1 B is singular)");
    }
    const Eigen::VectorXd rhs =
        tm.b * (avg_power + Eigen::VectorXd::Constant(n, tm.leak_p0)) + tm.c;
    FixedPoint fp;
    fp.temperature = lu.solve(rhs);
    fp.stable = tm.spectral_radius() < 1.0;
    return fp;
}

double power_budget(const ThermalModel &tm, double t_limit, const Eigen::VectorXd &distribution)
{
    tm.validate();
    if (!(tm.spectral_radius() < 1.0)) {
        throw ModelError("power_budget requires a stable thermal model");
    }
    // The fixed point is affine in the power scale s: T(s) = base + s * gain.
    const auto n = tm.hotspots();
    const Eigen::VectorXd base = thermal_fixed_point(tm, Eigen::VectorXd::Zero(n)).temperature;
    const Eigen::VectorXd gain = thermal_fixed_point(tm, distribution).temperature - base;
    double budget = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (base(i) > t_limit) {
            return 0.0;
        }
        if (gain(i) > 0.0) {
            budget = std::min(budget, (t_limit - base(i)) / gain(i));
        }
    }
    return std::max(budget, 0.0);
}

double power_budget(const ThermalModel &tm, double t_limit)
{
    return power_budget(tm, t_limit, Eigen::VectorXd::Ones(tm.hotspots()));
}

}  // namespace socrm
