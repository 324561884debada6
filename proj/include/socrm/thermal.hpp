#pragma once

#include <Eigen/Dense>

namespace socrm {

/// Discrete power-temperature dynamics with linearized leakage:
///
///     T' = A T + B (P + p0 + p1 T) + c
///
/// A and B are n x n (one power source per hotspot); leakage is applied elementwise.
struct ThermalModel {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::VectorXd c;
    double leak_p0 = 0.0;
    double leak_p1 = 0.0;

    int hotspots() const { return static_cast<int>(a.rows()); }
    void validate() const;

    /// Closed-loop matrix A + p1 B.
    Eigen::MatrixXd loop_matrix() const;
    double spectral_radius() const;

    static ThermalModel scalar(double a, double b, double c, double p0 = 0.0, double p1 = 0.0);
};

struct FixedPoint {
    Eigen::VectorXd temperature;
    bool stable = false;
};

Eigen::VectorXd thermal_step(const ThermalModel &tm, const Eigen::VectorXd &temperature,
                             const Eigen::VectorXd &power);

/// Throws ModelError when I - A - p1 B is singular.
FixedPoint thermal_fixed_point(const ThermalModel &tm, const Eigen::VectorXd &avg_power);

/// Largest s >= 0 with every component of the fixed point under s * distribution
/// at or below t_limit (0 when even s = 0 violates the limit, +inf when no
/// component heats up with power). Throws ModelError for unstable models.
double power_budget(const ThermalModel &tm, double t_limit, const Eigen::VectorXd &distribution);
double power_budget(const ThermalModel &tm, double t_limit);

}  // namespace socrm
