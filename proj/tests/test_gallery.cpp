#include "finsler/error.hpp"
#include "finsler/gallery.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace finsler;
using test::vec;

namespace {

// Random unit v in R^{n+2} and a random tangent y at v.
std::pair<Vec, Vec> sphere_sample(std::mt19937_64& rng, int ambient)
{
    const Vec v = test::gaussian(rng, ambient).normalized();
    Vec y = test::gaussian(rng, ambient);
    y -= y.dot(v) * v;
    return {v, y};
}

void validate(std::vector<double> phases) { QuadricSpec{std::move(phases)}.validate(); }

} // namespace

TEST_CASE("quadric spec validation")
{
    CHECK_NOTHROW(validate({0.0, 0.0}));
    CHECK_NOTHROW(validate({0.4, 0.9, 3.1}));
    CHECK_THROWS_AS(validate({0.9, 0.4}), InvalidArgument);
    CHECK_THROWS_AS(validate({0.4, 3.2}), InvalidArgument);
    CHECK_THROWS_AS(validate({-0.1, 0.4}), InvalidArgument);
    CHECK_THROWS_AS(validate({0.4}), InvalidArgument);
    CHECK_THROWS_AS(make_quadric_metric(QuadricSpec{std::vector<double>{0.9, 0.4}}), InvalidArgument);
}

TEST_CASE("zero phases give the round metric")
{
    for (const auto kind : {ChartKind::gnomonic, ChartKind::stereographic}) {
        const auto quad = make_quadric_metric({{0.0, 0.0}}, kind);
        const auto round = make_round_sphere(1, kind);
        CHECK(quad.reversible());
        std::mt19937_64 rng(41);
        for (int k = 0; k < 50; ++k) {
            const Vec x = test::in_ball(rng, 2, 1.0);
            const Vec y = test::gaussian(rng, 2);
            CHECK(std::abs(eval_F(quad, x, y) - eval_F(round, x, y)) < 1e-12 * eval_F(round, x, y));
        }
    }
}

TEST_CASE("quadric norm at the base point")
{
    // v = e0, y = e1: the root of z^2 = e^{i p_1} is e^{i p_1 / 2}.
    const QuadricSpec spec{{0.4, 0.9}};
    const Vec v = vec({1.0, 0.0, 0.0}), y = vec({0.0, 1.0, 0.0});
    CHECK(quadric_F_closed(spec, v, y) == doctest::Approx(std::cos(0.2)).epsilon(1e-14));
    CHECK(quadric_F_newton(spec, v, y).F == doctest::Approx(std::cos(0.2)).epsilon(1e-12));
    const auto quad = make_quadric_metric(spec);
    CHECK(eval_F(quad, vec({0.0, 0.0}), vec({1.0, 0.0})) == doctest::Approx(std::cos(0.2)).epsilon(1e-14));
}

TEST_CASE("closed form agrees with Newton across the phase box")
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> phase(0.0, 3.0);
    int compared = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 1 + k % 3;
        QuadricSpec spec;
        for (int i = 0; i <= n; ++i) spec.phases.push_back(phase(rng));
        std::sort(spec.phases.begin(), spec.phases.end());
        const auto [v, y] = sphere_sample(rng, n + 2);
        const double closed = quadric_F_closed(spec, v, y);
        const double newton = quadric_F_newton(spec, v, y).F;
        CHECK(test::rel(closed, newton) < 1e-10);
        ++compared;
    }
    CHECK(compared == 1000);
}

TEST_CASE("Newton oracle behaviour")
{
    std::mt19937_64 rng(43);
    const QuadricSpec round{{0.0, 0.0, 0.0}};
    for (int k = 0; k < 20; ++k) {
        const auto [v, y] = sphere_sample(rng, 4);
        const auto r = quadric_F_newton(round, v, y);
        CHECK(r.F == doctest::Approx(y.norm()).epsilon(1e-12));
        CHECK(r.iterations <= 50);
    }
    const QuadricSpec stress{{3.0, 3.1}};
    const auto [v, y] = sphere_sample(rng, 3);
    const auto r = quadric_F_newton(stress, v, y);
    CHECK(r.F > 0.0);
    CHECK(r.residuals.back() < 1e-12);
    CHECK(test::rel(r.F, quadric_F_closed(stress, v, y)) < 1e-10);
}

TEST_CASE("quadric metric: homogeneity and convexity")
{
    std::mt19937_64 rng(44);
    const auto quad = make_quadric_metric({{0.5, 1.2, 1.5}});
    for (int k = 0; k < 500; ++k) {
        const Vec x = test::in_ball(rng, 3, quad.sample_radius());
        const Vec y = test::gaussian(rng, 3);
        CHECK(std::abs(eval_F(quad, x, 3.0 * y) - 3.0 * eval_F(quad, x, y)) < 1e-12 * eval_F(quad, x, y));
        CHECK(fundamental_tensor(quad, x, y).min_eigenvalue > 1e-8);
    }
}

TEST_CASE("quadric indicatrix loses convexity once the largest phase passes pi/2")
{
    // Observed boundary of strong convexity for the closed form: scan a
    // fixed sample set just below and just above pi/2.
    const auto min_eig = [](double p) {
        const auto quad = make_quadric_metric({{0.0, p}});
        std::mt19937_64 rng(47);
        double worst = 1e300;
        for (int k = 0; k < 400; ++k) {
            const Vec x = test::in_ball(rng, 2, 1.5);
            const Vec y = test::gaussian(rng, 2);
            worst = std::min(worst, fundamental_tensor(quad, x, y, -1e300).min_eigenvalue);
        }
        return worst;
    };
    CHECK(min_eig(1.5) > 0.0);
    CHECK(min_eig(1.65) < 0.0);
}

TEST_CASE("Hilbert metric")
{
    const ConvexBodySpec ball{ConvexBodySpec::Kind::ball, 3};
    const auto h = make_hilbert_metric(ball);
    CHECK(h.reversible());
    std::mt19937_64 rng(45);
    for (int k = 0; k < 20; ++k) {
        const Vec y = test::gaussian(rng, 3);
        CHECK(eval_F(h, Vec::Zero(3), y) == doctest::Approx(y.norm()).epsilon(1e-12));
    }
    // Klein model of the hyperbolic ball.
    for (int k = 0; k < 50; ++k) {
        const Vec x = test::in_ball(rng, 3, 0.9);
        const Vec y = test::gaussian(rng, 3);
        const double d = 1.0 - x.squaredNorm();
        const double klein = std::sqrt(std::pow(x.dot(y), 2) + d * y.squaredNorm()) / d;
        CHECK(test::rel(eval_F(h, x, y), klein) < 1e-11);
    }
    const auto [tp, tm] = hilbert_chords(ball, vec({0.5, 0.0, 0.0}), vec({1.0, 0.0, 0.0}));
    CHECK(tp == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tm == doctest::Approx(1.5).epsilon(1e-12));
    CHECK_THROWS_AS(hilbert_chords(ball, vec({1.0, 0.5, 0.0}), vec({1.0, 0.0, 0.0})), OutsideBody);
    CHECK_THROWS_AS(eval_F(h, vec({1.0, 0.5, 0.0}), vec({1.0, 0.0, 0.0})), DomainError);

    const ConvexBodySpec super{ConvexBodySpec::Kind::superellipse, 2};
    CHECK(super.phi(vec({1.0, 0.0})) == 0.0);
    const auto [sp, sm] = hilbert_chords(super, vec({0.2, 0.3}), vec({1.0, 1.0}));
    CHECK(std::abs(super.phi(vec({0.2 + sp, 0.3 + sp}))) < 1e-12);
    CHECK(std::abs(super.phi(vec({0.2 - sm, 0.3 - sm}))) < 1e-12);
}

TEST_CASE("reversibility defects")
{
    const auto check_reversible = [](const MetricOracle& m) {
        CHECK(reversibility_defect(m, default_region(m), 100, 7) < 1e-10);
    };
    check_reversible(make_round_sphere(1));
    check_reversible(make_hilbert_metric({ConvexBodySpec::Kind::ball, 2}));
    check_reversible(make_hilbert_metric({ConvexBodySpec::Kind::superellipse, 2}));
    check_reversible(make_quadric_metric({{0.0, 0.0}}));

    const auto q1 = make_quadric_metric({{0.4, 0.9}});
    const auto q2 = make_quadric_metric({{0.2, 1.3}});
    CHECK_FALSE(q1.reversible());
    const double d1 = reversibility_defect(q1, default_region(q1), 100, 7);
    const double d2 = reversibility_defect(q2, default_region(q2), 100, 7);
    CHECK(d1 > 1e-3);
    CHECK(std::abs(d1 - d2) > 1e-4);
    CHECK_THROWS_AS(reversibility_defect(q1, default_region(q1), 0, 7), InvalidArgument);
}

TEST_CASE("sphere charts")
{
    std::mt19937_64 rng(46);
    for (const auto kind : {ChartKind::gnomonic, ChartKind::stereographic}) {
        const SphereChart chart(2, kind);
        CHECK(chart.chart_dim() == 3);
        CHECK(chart.ambient_dim() == 4);
        CHECK((chart.point(Vec::Zero(3)) - Vec::Unit(4, 0)).norm() < 1e-15);
        for (int k = 0; k < 20; ++k) {
            const Vec x = test::in_ball(rng, 3, 1.5);
            const Vec u = test::gaussian(rng, 3);
            const Vec v = chart.point(x);
            const Vec w = chart.push(x, u);
            CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(std::abs(v.dot(w)) < 1e-13 * w.norm());
            CHECK((chart.coordinates(v) - x).norm() < 1e-12 * (1.0 + x.norm()));
            CHECK((chart.pull(x, w) - u).norm() < 1e-11 * u.norm());
            // push is the derivative of point
            const double h = 1e-6;
            const Vec fd = (chart.point(Vec(x + h * u)) - chart.point(Vec(x - h * u))) / (2.0 * h);
            CHECK((fd - w).norm() < 1e-7 * (1.0 + w.norm()));
        }
    }
    const SphereChart gn(1);
    CHECK_FALSE(gn.covers(vec({-1.0, 0.0, 0.0})));
    CHECK_THROWS_AS(gn.coordinates(vec({-1.0, 0.0, 0.0})), DomainError);
    const SphereChart st(1, ChartKind::stereographic);
    CHECK(st.covers(vec({0.0, 1.0, 0.0})));
    CHECK_FALSE(st.covers(vec({-1.0, 0.0, 0.0})));
}
