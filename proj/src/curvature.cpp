#include "finsler/curvature.hpp"

#include "finsler/error.hpp"
#include "finsler/parallel.hpp"
#include "finsler/spray.hpp"

#include <cmath>

namespace finsler {

Mat riemann_endomorphism(const MetricOracle& oracle, const Vec& x, const Vec& y, const CurvatureOptions& opts)
{
    const int m = oracle.dim();
    if (y.size() != m || x.size() != m) throw InvalidArgument("riemann_endomorphism: dimension mismatch");
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroVector();
    const Vec G0 = spray_coefficients(oracle, x, y);

    Vec z(2 * m);
    z << x, y;
    DirectionalJetRequest req;
    req.target = [&](const Vec& p) { return spray_coefficients(oracle, p.head(m), p.tail(m)); };
    req.base = z;
    req.relative_step = opts.relative_step;
    req.levels = opts.levels;
    req.domain = [&](const Vec& p) { return oracle.contains(p.head(m)) && p.tail(m).norm() > 0.0; };

    auto jet = [&](std::vector<Vec> dirs) {
        req.directions = std::move(dirs);
        return directional_jet(req).value;
    };
    Vec along_y = Vec::Zero(2 * m);
    along_y.head(m) = y;
    Vec along_G = Vec::Zero(2 * m);
    along_G.tail(m) = G0;

    Mat dGdx(m, m), dGdy(m, m), mixed_y(m, m), mixed_G(m, m); // column k
    for (int k = 0; k < m; ++k) {
        const Vec ex = Vec::Unit(2 * m, k);
        const Vec ey = Vec::Unit(2 * m, m + k);
        dGdx.col(k) = jet({ex});
        dGdy.col(k) = jet({ey});
        mixed_y.col(k) = jet({along_y, ey});
        mixed_G.col(k) = jet({along_G, ey});
    }
    return 2.0 * dGdx - mixed_y + 2.0 * mixed_G - dGdy * dGdy;
}

double flag_curvature(const MetricOracle& oracle, const Vec& x, const Vec& y, const Vec& V,
                      const CurvatureOptions& opts)
{
    const FundamentalTensor ft = fundamental_tensor(oracle, x, y);
    const Mat& g = ft.g;
    const double F2 = y.dot(g * y);
    const double gVV = V.dot(g * V);
    const double gyV = y.dot(g * V);
    const double denom = F2 * gVV - gyV * gyV;
    if (!(denom >= 1e-10 * F2 * gVV) || gVV <= 0.0) {
        throw DegenerateFlag("flag edge is (nearly) parallel to the pole");
    }
    const Mat R = riemann_endomorphism(oracle, x, y, opts);
    return (R * V).dot(g * V) / denom;
}

PointSampler ball_sampler(Vec center, double radius)
{
    return [center = std::move(center), radius](Rng& rng) {
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const long d = center.size();
        Vec dir(d);
        do {
            for (long i = 0; i < d; ++i) dir[i] = normal(rng);
        } while (dir.norm() == 0.0);
        const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(d));
        return Vec(center + r * dir / dir.norm());
    };
}

FlagSampler make_flag_sampler(const MetricOracle& oracle, PointSampler region)
{
    return [oracle, region = std::move(region)](Rng& rng) {
        std::normal_distribution<double> normal;
        const int m = oracle.dim();
        Flag f;
        f.x = region(rng);
        Vec y(m), V(m);
        do {
            for (int i = 0; i < m; ++i) y[i] = normal(rng);
        } while (y.norm() == 0.0);
        for (int i = 0; i < m; ++i) V[i] = normal(rng);
        y /= y.norm();
        V -= (V.dot(y)) * y;
        f.y = normalize(oracle, f.x, y);
        f.V = V;
        return f;
    };
}

CfcReport cfc_certify(const MetricOracle& oracle, const FlagSampler& sampler, std::size_t sample_count,
                      std::uint64_t seed, std::optional<double> c, const CurvatureOptions& opts)
{
    if (sample_count < 1) throw InvalidArgument("cfc_certify: at least one sample required");
    Rng rng(seed);
    std::vector<Flag> flags;
    flags.reserve(sample_count);
    for (std::size_t i = 0; i < sample_count; ++i) flags.push_back(sampler(rng));

    std::vector<double> K(sample_count, 0.0);
    std::vector<std::string> errors(sample_count);
    parallel_for(sample_count, [&](std::size_t i) {
        try {
            K[i] = flag_curvature(oracle, flags[i].x, flags[i].y, flags[i].V, opts);
            if (!std::isfinite(K[i])) errors[i] = "non-finite flag curvature";
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    CfcReport report;
    double sum = 0.0;
    for (std::size_t i = 0; i < sample_count; ++i) {
        if (!errors[i].empty()) {
            report.failures.push_back({i, errors[i]});
            continue;
        }
        report.samples.push_back({flags[i], K[i]});
        sum += K[i];
    }
    report.sample_count = report.samples.size();
    if (report.samples.empty()) return report;

    const double n = static_cast<double>(report.sample_count);
    report.c_estimate = sum / n;
    report.reference = c.value_or(report.c_estimate);
    double abs_sum = 0.0, sq = 0.0;
    for (const auto& s : report.samples) {
        const double dev = std::abs(s.K - report.reference);
        report.max_abs_dev = std::max(report.max_abs_dev, dev);
        abs_sum += dev;
        sq += (s.K - report.c_estimate) * (s.K - report.c_estimate);
    }
    report.mean_abs_dev = abs_sum / n;
    report.stddev = report.sample_count > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
    return report;
}

} // namespace finsler
