#include "finsler/spray.hpp"

#include "finsler/error.hpp"

#include <cmath>

namespace finsler {

Vec spray_coefficients(const MetricOracle& oracle, const Vec& x, const Vec& y)
{
    const SecondJet jet = second_jet(oracle, x, y);
    const Mat g = 0.25 * (jet.dyy + jet.dyy.transpose());
    Eigen::LDLT<Mat> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw ConvexityError("fundamental tensor of " + oracle.name() + " is not invertible", 0.0);
    }
    const Vec rhs = jet.dxy * y - jet.dx;
    return 0.25 * ldlt.solve(rhs);
}

namespace {

struct State {
    Vec x;
    Vec y;
};

State derivative(const MetricOracle& oracle, const State& s)
{
    return {s.y, -2.0 * spray_coefficients(oracle, s.x, s.y)};
}

} // namespace

Trajectory integrate_spray(const MetricOracle& oracle, const Vec& x0, const Vec& y0, double length, double step,
                           const IntegrationOptions& opts)
{
    if (!(step > 0.0) || !(length > 0.0) || step > length * (1.0 + 1e-12)) {
        throw InvalidArgument("integrate: step must lie in (0, length]");
    }
    const double f0 = eval_F(oracle, x0, y0);
    const long n = std::max(1L, static_cast<long>(std::ceil(length / step - 1e-9)));
    const double h = length / static_cast<double>(n);

    Trajectory traj;
    traj.step = h;
    traj.oracle_name = oracle.name();
    traj.x0 = x0;
    traj.y0 = y0;
    traj.samples.reserve(static_cast<std::size_t>(n) + 1);
    traj.samples.push_back({0.0, x0, y0});

    State s{x0, y0};
    for (long k = 0; k < n; ++k) {
        State next;
        try {
            const State k1 = derivative(oracle, s);
            const State k2 = derivative(oracle, {s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y});
            const State k3 = derivative(oracle, {s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y});
            const State k4 = derivative(oracle, {s.x + h * k3.x, s.y + h * k3.y});
            next.x = s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
            next.y = s.y + (h / 6.0) * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
            if (!oracle.contains(next.x) || !next.y.allFinite()) throw DomainError("left chart");
        } catch (const DomainError&) {
            traj.truncated = true;
            break;
        }
        double f = eval_F(oracle, next.x, next.y);
        if (opts.renormalize) {
            next.y *= f0 / f;
            f = f0;
        }
        traj.max_drift = std::max(traj.max_drift, std::abs(f - f0));
        s = std::move(next);
        traj.samples.push_back({h * static_cast<double>(k + 1), s.x, s.y});
    }
    return traj;
}

Trajectory integrate_geodesic(const MetricOracle& oracle, const Vec& x0, const Vec& y0, double length, double step,
                              const IntegrationOptions& opts)
{
    const double f0 = eval_F(oracle, x0, y0);
    if (std::abs(f0 - 1.0) > 1e-9) {
        throw InvalidArgument("integrate_geodesic: initial vector must have unit norm");
    }
    Trajectory traj = integrate_spray(oracle, x0, y0, length, step, opts);
    if (traj.max_drift > opts.max_drift) {
        throw StepTooLarge("unit-speed drift exceeds tolerance; reduce the step", traj.max_drift);
    }
    return traj;
}

double planarity_defect(const std::vector<Vec>& cloud)
{
    if (cloud.size() < 3) throw DegenerateCloud("planarity needs at least three points");
    const long cols = cloud.front().size();
    Mat pts(static_cast<long>(cloud.size()), cols);
    for (std::size_t r = 0; r < cloud.size(); ++r) pts.row(static_cast<long>(r)) = cloud[r].transpose();
    Eigen::JacobiSVD<Mat> svd(pts);
    const Vec sv = svd.singularValues();
    if (!(sv[0] > 1e-300)) throw DegenerateCloud("point cloud is numerically zero");
    if (sv.size() < 3) return 0.0;
    return sv[2] / sv[0];
}

double planarity_defect(const Trajectory& traj, const std::function<Vec(const Vec&)>& embed)
{
    if (traj.samples.size() < 10) throw DegenerateCloud("planarity needs at least ten samples");
    std::vector<Vec> cloud;
    cloud.reserve(traj.samples.size());
    for (const auto& s : traj.samples) cloud.push_back(embed(s.x));
    return planarity_defect(cloud);
}

} // namespace finsler
