#include "finsler/curvature.hpp"
#include "finsler/error.hpp"
#include "finsler/gallery.hpp"
#include "finsler/spray.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace finsler;
using test::vec;

namespace {

// Klein model of the hyperbolic plane, written out directly:
// F = sqrt((x.y)^2 + (1 - |x|^2) |y|^2) / (1 - |x|^2).
MetricOracle klein_metric()
{
    auto domain = [](const Vec& x) { return x.squaredNorm() < 1.0; };
    auto norm = [](const Vec& x, const Vec& y) {
        const double d = 1.0 - x.squaredNorm();
        return std::sqrt(std::pow(x.dot(y), 2) + d * y.squaredNorm()) / d;
    };
    auto analytic = [](const TaylorVec& x, const TaylorVec& y) {
        const Taylor xy = x[0] * y[0] + x[1] * y[1];
        const Taylor d = 1.0 - (x[0] * x[0] + x[1] * x[1]);
        return sqrt(xy * xy + d * (y[0] * y[0] + y[1] * y[1])) / d;
    };
    return MetricOracle("klein", 2, domain, norm, analytic, true);
}

} // namespace

TEST_CASE("flat metric has vanishing curvature")
{
    const auto flat = make_flat(3);
    const Mat R = riemann_endomorphism(flat, vec({0.1, 0.2, 0.3}), vec({1.0, -1.0, 0.5}));
    CHECK(R.cwiseAbs().maxCoeff() < 1e-12);
    const auto report = cfc_certify(flat, make_flag_sampler(flat, default_region(flat)), 20, 1, 1.0);
    CHECK(report.max_abs_dev == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.c_estimate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("round Riemann endomorphism at the chart origin")
{
    const auto round = make_round_sphere(2);
    std::mt19937_64 rng(31);
    for (int k = 0; k < 5; ++k) {
        const Vec y = test::gaussian(rng, 3).normalized();
        const Mat R = riemann_endomorphism(round, Vec::Zero(3), y);
        const Mat expected = Mat::Identity(3, 3) - y * y.transpose();
        CHECK((R - expected).cwiseAbs().maxCoeff() < 1e-6);
    }
    // R y = 0 away from the origin too.
    const Vec x = vec({0.3, -0.5, 0.2}), y = vec({0.4, 1.0, -0.3});
    CHECK((riemann_endomorphism(round, x, y) * y).norm() < 1e-6 * y.squaredNorm());
}

TEST_CASE("round sphere has flag curvature one")
{
    for (const auto kind : {ChartKind::gnomonic, ChartKind::stereographic}) {
        const auto round = make_round_sphere(1, kind);
        const auto report = cfc_certify(round, make_flag_sampler(round, default_region(round)), 50, 2, 1.0);
        CHECK(report.failures.empty());
        CHECK(report.max_abs_dev < 1e-6);
    }
}

TEST_CASE("quadric of dimension three has flag curvature one")
{
    const auto quad = make_quadric_metric({{0.3, 0.6, 1.0}});
    const auto report = cfc_certify(quad, make_flag_sampler(quad, default_region(quad)), 100, 3, 1.0);
    CHECK(report.failures.empty());
    CHECK(report.sample_count == 100);
    CHECK(report.mean_abs_dev < 5e-4);
    CHECK(report.max_abs_dev < 5e-3);
}

TEST_CASE("Hilbert ball curvature matches the Klein model")
{
    const auto hilbert = make_hilbert_metric({ConvexBodySpec::Kind::ball, 2});
    const auto klein = klein_metric();
    std::mt19937_64 rng(32);
    for (int k = 0; k < 10; ++k) {
        const Vec x = test::in_ball(rng, 2, 0.6);
        const Vec y = test::gaussian(rng, 2);
        const Vec V = test::gaussian(rng, 2);
        CHECK(std::abs(eval_F(hilbert, x, y) - eval_F(klein, x, y)) < 1e-12 * eval_F(klein, x, y));
        const double kh = flag_curvature(hilbert, x, y, V);
        const double kk = flag_curvature(klein, x, y, V);
        CHECK(kk == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(kh == doctest::Approx(kk).epsilon(1e-6));
    }
}

TEST_CASE("flag curvature depends only on the flag")
{
    const auto quad = make_quadric_metric({{0.4, 0.9}});
    const auto hilbert = make_hilbert_metric({ConvexBodySpec::Kind::superellipse, 2});
    std::mt19937_64 rng(33);
    for (const auto& m : {quad, hilbert}) {
        CAPTURE(m.name());
        const Vec x = test::in_ball(rng, 2, 0.5);
        const Vec y = test::gaussian(rng, 2);
        const Vec V = test::gaussian(rng, 2);
        const double K = flag_curvature(m, x, y, V);
        CHECK(flag_curvature(m, x, 2.5 * y, V) == doctest::Approx(K).epsilon(1e-6));
        CHECK(flag_curvature(m, x, y, -3.0 * V + 0.7 * y) == doctest::Approx(K).epsilon(1e-6));
    }
}

TEST_CASE("degenerate flags are rejected")
{
    const auto round = make_round_sphere(1);
    const Vec x = vec({0.1, 0.2}), y = vec({1.0, 0.5});
    CHECK_THROWS_AS(flag_curvature(round, x, y, 2.0 * y), DegenerateFlag);
    CHECK_THROWS_AS(flag_curvature(round, x, y, Vec::Zero(2)), DegenerateFlag);
}

TEST_CASE("certification is deterministic and consistent")
{
    const auto quad = make_quadric_metric({{0.4, 0.9}});
    const auto sampler = make_flag_sampler(quad, default_region(quad));
    const auto a = cfc_certify(quad, sampler, 30, 99);
    const auto b = cfc_certify(quad, sampler, 30, 99);
    CHECK(a.c_estimate == b.c_estimate);
    CHECK(a.max_abs_dev == b.max_abs_dev);
    CHECK(a.mean_abs_dev <= a.max_abs_dev);
    CHECK(a.reference == a.c_estimate);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].K == b.samples[i].K);
        CHECK(eval_F(quad, a.samples[i].flag.x, a.samples[i].flag.y) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(cfc_certify(quad, sampler, 0, 1), InvalidArgument);
}

TEST_CASE("quadric geodesics from a point meet again at its antipode")
{
    // Flag curvature one forces the first conjugate point at distance pi.
    const QuadricSpec spec{{0.4, 0.9}};
    const auto quad = make_quadric_metric(spec, ChartKind::stereographic);
    const SphereChart chart(1, ChartKind::stereographic);
    const Vec x0 = vec({0.3, 0.2});
    for (const double a : {0.0, 1.0, 2.5, 4.0}) {
        const Vec y0 = normalize(quad, x0, vec({std::cos(a), std::sin(a)}));
        const auto t = integrate_geodesic(quad, x0, y0, std::numbers::pi, 1e-3);
        REQUIRE_FALSE(t.truncated);
        CHECK((chart.point(t.samples.back().x) + chart.point(x0)).norm() < 1e-6);
    }
}
