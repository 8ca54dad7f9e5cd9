#pragma once

#include "finsler/metric.hpp"

#include <cmath>
#include <random>

namespace test {

using finsler::Mat;
using finsler::Vec;

inline Vec vec(std::initializer_list<double> v)
{
    Vec out(static_cast<long>(v.size()));
    long i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline Vec gaussian(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> normal;
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = normal(rng);
    return out;
}

/// Uniform point in the Euclidean ball of radius r.
inline Vec in_ball(std::mt19937_64& rng, int n, double r)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec d = gaussian(rng, n);
    d.normalize();
    return r * std::pow(unit(rng), 1.0 / n) * d;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace test
