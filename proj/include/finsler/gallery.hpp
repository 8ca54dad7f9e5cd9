#pragma once

#include "finsler/curvature.hpp"
#include "finsler/metric.hpp"

#include <cstdint>
#include <vector>

namespace finsler {

/// Phases p = (p_1, ..., p_{n+1}) of the hyperquadric
///   z0^2 + e^{i p_1} z1^2 + ... + e^{i p_{n+1}} z_{n+1}^2 = 0,
/// with 0 <= p_1 <= ... <= p_{n+1} < pi.
struct QuadricSpec {
    std::vector<double> phases;

    int n() const { return static_cast<int>(phases.size()) - 1; }
    /// Throws InvalidArgument when the ordering or the bounds fail.
    void validate() const;
};

enum class ChartKind { gnomonic, stereographic };

/// A chart of the sphere of rays S^{n+1} in R^{n+2}, built on an orthonormal
/// frame (e_0, ..., e_{n+1}).
///
/// gnomonic:      v(x) = (e_0 + x^i e_i) / |e_0 + x^i e_i|, covers the
///                open hemisphere around e_0.
/// stereographic: v(x) = ((1 - |x|^2) e_0 + 2 x^i e_i) / (1 + |x|^2), covers
///                everything except -e_0.
class SphereChart {
public:
    explicit SphereChart(int n, ChartKind kind = ChartKind::gnomonic);
    SphereChart(int n, ChartKind kind, Mat frame);

    int n() const { return n_; }
    int chart_dim() const { return n_ + 1; }
    int ambient_dim() const { return n_ + 2; }
    ChartKind kind() const { return kind_; }
    const Mat& frame() const { return frame_; }

    Vec point(const Vec& x) const;
    /// dv(x) u, tangent to the sphere at v(x).
    Vec push(const Vec& x, const Vec& u) const;
    TaylorVec point(const TaylorVec& x) const;
    TaylorVec push(const TaylorVec& x, const TaylorVec& u) const;

    bool covers(const Vec& v) const;
    /// Chart coordinates of the unit vector v (throws DomainError off-chart).
    Vec coordinates(const Vec& v) const;
    /// Chart components of an ambient tangent vector w at v(x).
    Vec pull(const Vec& x, const Vec& w) const;

private:
    int n_;
    ChartKind kind_;
    Mat frame_;
};

/// F(v, y) = |y|, Euclidean on R^m.
MetricOracle make_flat(int m);

/// Round metric of curvature 1 on S^{n+1}, in the given chart.
MetricOracle make_round_sphere(int n, ChartKind chart = ChartKind::gnomonic);

/// Sphere-level closed form for the quadric metric: v unit, y tangent at v.
/// With D = diag(1, e^{i p_1}, ...), alpha = v'Dv, beta = v'Dy, gamma = y'Dy,
/// F is the real part of the root of alpha z^2 + 2 i beta z - gamma = 0 with
/// positive real part. Falls back to the Newton oracle when the root choice
/// is ambiguous.
double quadric_F_closed(const QuadricSpec& spec, const Vec& v, const Vec& y);

struct NewtonResult {
    double F = 0.0;
    int iterations = 0;
    std::vector<double> residuals;
};

/// Newton on Re/Im[(v + i w)' D (v + i w)] = 0 with w = a y + b v, solved
/// for (1/a, b/a) after scaling by 1/a^2, started at (|y|, 0) and restarted
/// further out on the positive axis when it lands on the opposite root;
/// F = 1/a. Each start gets 50 iterations; throws NoConvergence when all fail.
NewtonResult quadric_F_newton(const QuadricSpec& spec, const Vec& v, const Vec& y);

MetricOracle make_quadric_metric(const QuadricSpec& spec, ChartKind chart = ChartKind::gnomonic);

struct ConvexBodySpec {
    enum class Kind { ball, superellipse };
    Kind kind = Kind::ball;
    int dim = 2;

    /// Defining function, negative inside: sum x_i^2 - 1 or sum x_i^4 - 1.
    double phi(const Vec& x) const;
};

/// Hilbert metric F(x, y) = (1/t+ + 1/t-) / 2 where phi(x +- t y) = 0.
MetricOracle make_hilbert_metric(const ConvexBodySpec& body);

/// Returns (t+, t-) for the chords through x along +y and -y.
std::pair<double, double> hilbert_chords(const ConvexBodySpec& body, const Vec& x, const Vec& y);

/// max over samples of |F(x, -y) - F(x, y)| / F(x, y).
double reversibility_defect(const MetricOracle& oracle, const PointSampler& region, std::size_t samples,
                            std::uint64_t seed);

/// Uniform ball of radius oracle.sample_radius() around the chart origin.
PointSampler default_region(const MetricOracle& oracle);

} // namespace finsler
