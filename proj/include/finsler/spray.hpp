#pragma once

#include "finsler/metric.hpp"

#include <functional>
#include <string>
#include <vector>

namespace finsler {

/// Geodesic spray G^i(x, y); geodesics solve x'' + 2 G(x, x') = 0.
Vec spray_coefficients(const MetricOracle& oracle, const Vec& x, const Vec& y);

struct TrajectorySample {
    double s = 0.0;
    Vec x;
    Vec y;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double step = 0.0;
    std::string oracle_name;
    Vec x0;
    Vec y0;
    /// Set when the curve left the chart; samples hold the part inside.
    bool truncated = false;
    /// max_k |F(x_k, y_k) - F(x_0, y_0)|
    double max_drift = 0.0;
};

struct IntegrationOptions {
    /// Rescale y to unit norm after every step.
    bool renormalize = false;
    /// Drift beyond this raises StepTooLarge (integrate_geodesic only).
    double max_drift = 1e-3;
};

/// Classic RK4 on (x, y) with x' = y, y' = -2 G(x, y) over parameter length
/// `length`. No speed precondition; the step is shrunk so that a whole number
/// of steps covers the length.
Trajectory integrate_spray(const MetricOracle& oracle, const Vec& x0, const Vec& y0, double length, double step,
                           const IntegrationOptions& opts = {});

/// Unit-speed geodesic. Requires F(x0, y0) = 1 within 1e-9.
Trajectory integrate_geodesic(const MetricOracle& oracle, const Vec& x0, const Vec& y0, double length, double step,
                              const IntegrationOptions& opts = {});

/// sigma_3 / sigma_1 of the point cloud (rows are points).
double planarity_defect(const std::vector<Vec>& cloud);

/// Planarity of the embedded trajectory; `embed` maps chart points to
/// homogeneous representatives.
double planarity_defect(const Trajectory& traj, const std::function<Vec(const Vec&)>& embed);

} // namespace finsler
