#pragma once

#include "finsler/metric.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace finsler {

/// Step settings for the nested jets of the spray.
struct CurvatureOptions {
    double relative_step = 5e-3;
    int levels = 3;
};

/// Riemann endomorphism R^i_k(x, y) built from the spray:
///   R^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
///           - dG^i/dy^j dG^j/dy^k
Mat riemann_endomorphism(const MetricOracle& oracle, const Vec& x, const Vec& y, const CurvatureOptions& opts = {});

/// K(y, V) = g_y(R V, V) / (F^2 g_y(V, V) - g_y(y, V)^2)
double flag_curvature(const MetricOracle& oracle, const Vec& x, const Vec& y, const Vec& V,
                      const CurvatureOptions& opts = {});

struct Flag {
    Vec x;
    Vec y; ///< flag pole, F(x, y) = 1
    Vec V; ///< transverse edge
};

struct FlagSample {
    Flag flag;
    double K = 0.0;
};

using Rng = std::mt19937_64;
using PointSampler = std::function<Vec(Rng&)>;
using FlagSampler = std::function<Flag(Rng&)>;

/// Base points from `region`; pole uniform in direction (normalized Gaussian,
/// then scaled onto the indicatrix); edge Gaussian projected off the pole.
FlagSampler make_flag_sampler(const MetricOracle& oracle, PointSampler region);

/// Uniform points in the Euclidean ball of the given radius around `center`.
PointSampler ball_sampler(Vec center, double radius);

struct SampleFailure {
    std::size_t index = 0;
    std::string message;
};

struct CfcReport {
    double c_estimate = 0.0;
    /// Deviations are measured against the requested c when given,
    /// otherwise against c_estimate.
    double reference = 0.0;
    double max_abs_dev = 0.0;
    double mean_abs_dev = 0.0;
    double stddev = 0.0;
    std::size_t sample_count = 0;
    std::vector<FlagSample> samples;
    std::vector<SampleFailure> failures;
};

CfcReport cfc_certify(const MetricOracle& oracle, const FlagSampler& sampler, std::size_t sample_count,
                      std::uint64_t seed, std::optional<double> c = std::nullopt, const CurvatureOptions& opts = {});

} // namespace finsler
