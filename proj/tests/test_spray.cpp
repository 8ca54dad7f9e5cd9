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

constexpr double kPi = std::numbers::pi;

double closure(const Trajectory& t)
{
    const auto& a = t.samples.front();
    const auto& b = t.samples.back();
    return (b.x - a.x).norm() + (b.y - a.y).norm();
}

} // namespace

TEST_CASE("flat spray vanishes and the geodesic is a straight line")
{
    const auto flat = make_flat(3);
    CHECK(spray_coefficients(flat, vec({0.2, -1.0, 3.0}), vec({1.0, 2.0, -0.5})).norm() < 1e-14);
    const Vec y0 = vec({0.6, 0.8, 0.0});
    const auto t = integrate_geodesic(flat, vec({0.0, 0.0, 0.0}), y0, 2.0, 0.1);
    CHECK((t.samples.back().x - 2.0 * y0).norm() < 1e-12);
    CHECK(t.samples.size() == 21);
    CHECK(t.max_drift < 1e-14);
}

TEST_CASE("spray is 2-homogeneous in y")
{
    std::mt19937_64 rng(21);
    const auto metrics = {make_round_sphere(1), make_quadric_metric({{0.4, 0.9}}),
                          make_hilbert_metric({ConvexBodySpec::Kind::superellipse, 2})};
    for (const auto& m : metrics) {
        CAPTURE(m.name());
        for (int k = 0; k < 10; ++k) {
            const Vec x = test::in_ball(rng, 2, 0.6);
            const Vec y = test::gaussian(rng, 2);
            const Vec g1 = spray_coefficients(m, x, y);
            const Vec g2 = spray_coefficients(m, x, 2.0 * y);
            CHECK((g2 - 4.0 * g1).norm() < 1e-10 * std::max(1.0, g1.norm()));
        }
    }
}

TEST_CASE("round gnomonic spray vanishes at the chart origin")
{
    // Great circles through the centre are straight lines in the gnomonic chart.
    const auto round = make_round_sphere(2);
    CHECK(spray_coefficients(round, vec({0.0, 0.0, 0.0}), vec({0.3, -0.4, 1.1})).norm() < 1e-14);
}

TEST_CASE("round great circles close after length 2 pi")
{
    const auto round = make_round_sphere(1, ChartKind::stereographic);
    const Vec x0 = vec({1.0, 0.0});
    const Vec y0 = normalize(round, x0, vec({0.3, 1.0}));
    const auto t = integrate_geodesic(round, x0, y0, 2.0 * kPi, 1e-2);
    CHECK_FALSE(t.truncated);
    CHECK(closure(t) < 1e-5);
}

TEST_CASE("quadric geodesics close after length 2 pi")
{
    const auto quad = make_quadric_metric({{0.4, 0.9}}, ChartKind::stereographic);
    const Vec x0 = vec({1.0, 0.0});
    const Vec y0 = normalize(quad, x0, vec({0.0, 1.0}));
    const auto t = integrate_geodesic(quad, x0, y0, 2.0 * kPi, 1e-3);
    CHECK_FALSE(t.truncated);
    CHECK(closure(t) < 1e-4);
}

TEST_CASE("planarity defect")
{
    std::vector<Vec> circle;
    for (int k = 0; k < 50; ++k) {
        const double a = 2.0 * kPi * k / 50.0;
        circle.push_back(vec({std::cos(a), std::sin(a), 0.0}));
    }
    CHECK(planarity_defect(circle) < 1e-12);

    std::mt19937_64 rng(22);
    std::vector<Vec> cloud;
    for (int k = 0; k < 50; ++k) cloud.push_back(test::gaussian(rng, 3));
    CHECK(planarity_defect(cloud) > 0.1);

    CHECK_THROWS_AS(planarity_defect(std::vector<Vec>{vec({1.0, 0.0, 0.0}), vec({0.0, 1.0, 0.0})}), DegenerateCloud);

    const QuadricSpec spec{{0.4, 0.9}};
    const SphereChart chart(1, ChartKind::stereographic);
    const auto quad = make_quadric_metric(spec, ChartKind::stereographic);
    const Vec x0 = vec({0.2, 0.1});
    const auto t = integrate_geodesic(quad, x0, normalize(quad, x0, vec({1.0, 0.4})), kPi, 1e-3);
    CHECK(planarity_defect(t, [&](const Vec& x) { return chart.point(x); }) < 1e-6);
}

TEST_CASE("unit-speed drift decreases at the RK4 rate")
{
    const auto quad = make_quadric_metric({{0.4, 0.9}});
    const Vec x0 = vec({0.1, -0.2});
    const Vec y0 = normalize(quad, x0, vec({1.0, 0.5}));
    const double d1 = integrate_geodesic(quad, x0, y0, 1.6, 0.05, {false, 1.0}).max_drift;
    const double d2 = integrate_geodesic(quad, x0, y0, 1.6, 0.025, {false, 1.0}).max_drift;
    CAPTURE(d1);
    CAPTURE(d2);
    CHECK(std::log2(d1 / d2) >= 3.5);
}

TEST_CASE("doubling the initial speed traces the same curve twice as fast")
{
    const auto quad = make_quadric_metric({{0.4, 0.9}});
    const Vec x0 = vec({0.1, -0.2});
    const Vec y0 = normalize(quad, x0, vec({1.0, 0.5}));
    const auto slow = integrate_spray(quad, x0, y0, 1.0, 1e-3);
    const auto fast = integrate_spray(quad, x0, 2.0 * y0, 0.5, 5e-4);
    REQUIRE(slow.samples.size() == fast.samples.size());
    CHECK((slow.samples.back().x - fast.samples.back().x).norm() < 1e-9);
    CHECK((2.0 * slow.samples.back().y - fast.samples.back().y).norm() < 1e-9);
}

TEST_CASE("integration errors and truncation")
{
    const auto round = make_round_sphere(1);
    const Vec x0 = vec({0.0, 0.0});
    CHECK_THROWS_AS(integrate_geodesic(round, x0, vec({2.0, 0.0}), 1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(integrate_geodesic(round, x0, vec({1.0, 0.0}), 1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(integrate_geodesic(round, x0, vec({1.0, 0.0}), 1.0, 2.0), InvalidArgument);

    const auto quad = make_quadric_metric({{0.4, 0.9}});
    const Vec y0 = normalize(quad, x0, vec({1.0, 0.3}));
    CHECK_THROWS_AS(integrate_geodesic(quad, x0, y0, 1.2, 1.2, {false, 1e-8}), StepTooLarge);

    // The gnomonic chart only sees a quarter turn in each direction.
    const auto t = integrate_spray(round, x0, vec({1.0, 0.0}), kPi, 1e-2);
    CHECK(t.truncated);
    // The discrete flow may take a step or two past the blow-up point.
    CHECK(std::abs(t.samples.back().s - kPi / 2.0) < 0.05);
}

TEST_CASE("renormalisation keeps the speed pinned")
{
    const auto quad = make_quadric_metric({{0.4, 0.9}});
    const Vec x0 = vec({0.1, -0.2});
    const Vec y0 = normalize(quad, x0, vec({1.0, 0.5}));
    const auto t = integrate_geodesic(quad, x0, y0, 1.0, 0.1, {true, 1e-3});
    CHECK(t.max_drift < 1e-14);
}
