#include "finsler/surface.hpp"

#include "finsler/error.hpp"
#include "finsler/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace finsler {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Taylor eval(const Field& f, double u, double v, int order)
{
    if (!f) return Taylor::constant(2, order, 0.0);
    return f(u, v, order);
}

Taylor coord(int index, double value, int order) { return Taylor::variable(2, order, index, value); }

// Reference coframe theta1 = A1 du + B1 dv, theta2 = B2 dv.
struct FrameSeries {
    Taylor A1, B1, B2;
};

FrameSeries frame_series(const SurfaceData& s, double u, double v, int order)
{
    const Taylor E = eval(s.E, u, v, order);
    const Taylor F = eval(s.F, u, v, order);
    const Taylor G = eval(s.G, u, v, order);
    const Taylor A1 = sqrt(E);
    return {A1, F / A1, static_cast<double>(s.orientation) * sqrt((E * G - F * F) / E)};
}

// rho with d theta1 = -rho ^ theta2, d theta2 = rho ^ theta1.
std::array<Taylor, 2> connection_series(const FrameSeries& f)
{
    const Taylor area = f.A1 * f.B2;
    const Taylor a = (f.B1.differentiate(0) - f.A1.differentiate(1)) / area;
    const Taylor b = f.B2.differentiate(0) / area;
    return {-a * f.A1, -a * f.B1 - b * f.B2};
}

Taylor curvature_series(const SurfaceData& s, double u, double v, int order)
{
    const FrameSeries f = frame_series(s, u, v, order + 2);
    const auto rho = connection_series(f);
    return (rho[1].differentiate(0) - rho[0].differentiate(1)) / (f.A1 * f.B2);
}

// Signed area density s sqrt(EG - F^2).
double area_density(const SurfaceData& s, double u, double v)
{
    const FrameSeries f = frame_series(s, u, v, 0);
    return f.A1.value() * f.B2.value();
}

// Components of *d(log sqrt L), using the star of s.
std::array<Taylor, 2> star_dlog_sqrt(const SurfaceData& s, const Field& L, double u, double v, int order)
{
    const Taylor f = 0.5 * log(L(u, v, order + 1));
    const Field fu = [f](double, double, int) { return f.differentiate(0); };
    const Field fv = [f](double, double, int) { return f.differentiate(1); };
    return hodge_star(s, fu, fv, u, v, order);
}

// Sixth-order central first-derivative weights for offsets 1, 2, 3.
constexpr double kD6[3] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
constexpr int kMargin = 3;

struct Grid2 {
    int n;
    double u0, hu, v0, hv;
    bool periodic;

    double u(int i) const { return u0 + i * hu; }
    double v(int j) const { return v0 + j * hv; }
    int wrap(int j) const { return periodic ? (j % n + n) % n : j; }
    bool interior_v(int j) const { return periodic || (j >= kMargin && j < n - kMargin); }
};

Grid2 make_grid(const SurfaceData& s, int n)
{
    if (n < 16) throw InvalidArgument("grid size must be at least 16");
    Grid2 g{n, 0.0, 0.0, 0.0, 0.0, s.v_periodic};
    g.hu = (s.u_max - s.u_min) / (n + 1);
    g.u0 = s.u_min + g.hu;
    if (s.v_periodic) {
        g.hv = (s.v_max - s.v_min) / n;
        g.v0 = s.v_min;
    } else {
        g.hv = (s.v_max - s.v_min) / (n + 1);
        g.v0 = s.v_min + g.hv;
    }
    return g;
}

// Evaluates fn on every grid node, rows in parallel.
template <class T, class Fn>
std::vector<T> tabulate(const Grid2& g, Fn fn)
{
    std::vector<T> out(static_cast<std::size_t>(g.n) * g.n);
    parallel_for(g.n, [&](std::size_t i) {
        for (int j = 0; j < g.n; ++j) out[i * g.n + j] = fn(g.u(static_cast<int>(i)), g.v(j));
    });
    return out;
}

// max over interior nodes of |(d_u b - d_v a)/area - rhs|.
double curl_residual(const Grid2& g, const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& area, const std::vector<double>& rhs)
{
    auto at = [&](const std::vector<double>& f, int i, int j) { return f[static_cast<std::size_t>(i) * g.n + g.wrap(j)]; };
    double worst = 0.0;
    for (int i = kMargin; i < g.n - kMargin; ++i) {
        for (int j = 0; j < g.n; ++j) {
            if (!g.interior_v(j)) continue;
            double dub = 0.0, dva = 0.0;
            for (int k = 1; k <= kMargin; ++k) {
                dub += kD6[k - 1] * (at(b, i + k, j) - at(b, i - k, j));
                dva += kD6[k - 1] * (at(a, i, j + k) - at(a, i, j - k));
            }
            const double curl = dub / g.hu - dva / g.hv;
            worst = std::max(worst, std::abs(curl / at(area, i, j) - at(rhs, i, j)));
        }
    }
    return worst;
}

} // namespace

Field constant_field(double c)
{
    return [c](double, double, int order) { return Taylor::constant(2, order, c); };
}

const char* to_string(Provenance p)
{
    switch (p) {
    case Provenance::raw: return "raw";
    case Provenance::zoll_derived: return "zoll-derived";
    case Provenance::conformal: return "conformal";
    }
    return "unknown";
}

bool SurfaceData::contains(double u, double v) const
{
    if (!(u > u_min && u < u_max)) return false;
    return v_periodic ? std::isfinite(v) : (v > v_min && v < v_max);
}

SurfaceData SurfaceData::flipped() const
{
    SurfaceData out = *this;
    out.orientation = -orientation;
    auto negate = [](const Field& f) -> Field {
        if (!f) return {};
        return [f](double u, double v, int order) { return -f(u, v, order); };
    };
    out.beta_u = negate(beta_u);
    out.beta_v = negate(beta_v);
    return out;
}

SurfaceData make_round_surface(double delta)
{
    SurfaceData s;
    s.u_min = delta;
    s.u_max = std::numbers::pi - delta;
    s.v_min = 0.0;
    s.v_max = kTwoPi;
    s.v_periodic = true;
    s.E = constant_field(1.0);
    s.G = [](double u, double, int order) { return square(sin(coord(0, u, order))); };
    return s;
}

Field gauss_curvature_field(const SurfaceData& s)
{
    return [s](double u, double v, int order) { return curvature_series(s, u, v, order); };
}

double gauss_curvature(const SurfaceData& s, double u, double v)
{
    if (!s.contains(u, v)) throw DomainError("point outside the surface patch");
    return curvature_series(s, u, v, 0).value();
}

ZollProfile ZollProfile::polynomial(std::vector<double> a)
{
    return {[a = std::move(a)](const Taylor& t) {
        Taylor acc(0.0);
        for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * t + *it;
        return acc;
    }};
}

ZollProfile ZollProfile::odd_factored(std::vector<double> c)
{
    return {[c = std::move(c)](const Taylor& t) {
        const Taylor t2 = t * t;
        Taylor acc(0.0);
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t2 + *it;
        return (1.0 - t2) * t * acc;
    }};
}

SurfaceData make_zoll_revolution(const ZollProfile& h, double delta)
{
    if (!h.h) throw InvalidProfile("profile h is empty");
    if (!(delta > 0.0 && delta < 0.5)) throw InvalidArgument("chart margin delta must lie in (0, 0.5)");
    constexpr int kSamples = 200;
    constexpr double kTol = 1e-12;
    for (int i = 0; i <= kSamples; ++i) {
        const double t = -1.0 + 2.0 * i / kSamples;
        const double ht = h(t), hm = h(-t);
        std::ostringstream os;
        if (!std::isfinite(ht)) {
            os << "h(" << t << ") is not finite";
        } else if (std::abs(ht + hm) > kTol) {
            os << "h is not odd: h(" << t << ") + h(" << -t << ") = " << ht + hm;
        } else if (std::abs(ht) >= 1.0) {
            os << "|h(" << t << ")| = " << std::abs(ht) << " is not below 1";
        }
        if (!os.str().empty()) throw InvalidProfile(os.str());
    }
    for (double end : {-1.0, 1.0}) {
        if (std::abs(h(end)) > kTol) {
            std::ostringstream os;
            os << "h(" << end << ") = " << h(end) << " must vanish";
            throw InvalidProfile(os.str());
        }
    }
    SurfaceData s = make_round_surface(delta);
    s.E = [h](double u, double, int order) { return square(1.0 + h.h(cos(coord(0, u, order)))); };
    return s;
}

std::array<Taylor, 2> hodge_star(const SurfaceData& s, const Field& a, const Field& b, double u, double v, int order)
{
    const Taylor E = eval(s.E, u, v, order);
    const Taylor F = eval(s.F, u, v, order);
    const Taylor G = eval(s.G, u, v, order);
    const Taylor A = eval(a, u, v, order);
    const Taylor B = eval(b, u, v, order);
    const Taylor det = E * G - F * F;
    // raised components alpha^u, alpha^v; *alpha = s sqrt(det) (-alpha^v du + alpha^u dv)
    const Taylor scale = static_cast<double>(s.orientation) / sqrt(det);
    const Taylor up_u = G * A - F * B;
    const Taylor up_v = E * B - F * A;
    return {-scale * up_v, scale * up_u};
}

SurfaceData zoll_to_cfc_data(const SurfaceData& s, int check_grid)
{
    const Field K0 = gauss_curvature_field(s);
    const Grid2 g = make_grid(s, check_grid);
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const double k = K0(g.u(i), g.v(j), 0).value();
            if (!(k > 0.0)) {
                std::ostringstream os;
                os << "Gauss curvature " << k << " is not positive at (u, v) = (" << g.u(i) << ", " << g.v(j) << ")";
                throw NonPositiveCurvature(os.str(), g.u(i), g.v(j));
            }
        }
    }
    SurfaceData out = s;
    auto scaled = [K0](const Field& f) -> Field {
        if (!f) return {};
        return [K0, f](double u, double v, int order) { return K0(u, v, order) * f(u, v, order); };
    };
    out.E = scaled(s.E);
    out.F = scaled(s.F);
    out.G = scaled(s.G);
    out.beta_u = [s, K0](double u, double v, int order) { return star_dlog_sqrt(s, K0, u, v, order)[0]; };
    out.beta_v = [s, K0](double u, double v, int order) { return star_dlog_sqrt(s, K0, u, v, order)[1]; };
    out.provenance = Provenance::zoll_derived;
    return out;
}

SurfaceData conformal_transform(const SurfaceData& s, const Field& L, int check_grid)
{
    if (!L) throw InvalidArgument("conformal factor is empty");
    const Grid2 g = make_grid(s, check_grid);
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const double l = L(g.u(i), g.v(j), 0).value();
            if (!(l > 0.0)) {
                std::ostringstream os;
                os << "conformal factor " << l << " is not positive at (u, v) = (" << g.u(i) << ", " << g.v(j) << ")";
                throw NonPositiveFactor(os.str());
            }
        }
    }
    SurfaceData out = s;
    auto scaled = [L](const Field& f) -> Field {
        if (!f) return {};
        return [L, f](double u, double v, int order) { return L(u, v, order) * f(u, v, order); };
    };
    out.E = scaled(s.E);
    out.F = scaled(s.F);
    out.G = scaled(s.G);
    out.beta_u = [s, L](double u, double v, int order) {
        return eval(s.beta_u, u, v, order) + star_dlog_sqrt(s, L, u, v, order)[0];
    };
    out.beta_v = [s, L](double u, double v, int order) {
        return eval(s.beta_v, u, v, order) + star_dlog_sqrt(s, L, u, v, order)[1];
    };
    out.provenance = Provenance::conformal;
    return out;
}

double magnetic_residual(const SurfaceData& s, int grid_n)
{
    const Grid2 g = make_grid(s, grid_n);
    struct Node {
        double bu, bv, area, rhs;
    };
    const auto nodes = tabulate<Node>(g, [&](double u, double v) {
        return Node{eval(s.beta_u, u, v, 0).value(), eval(s.beta_v, u, v, 0).value(), area_density(s, u, v),
                    1.0 - curvature_series(s, u, v, 0).value()};
    });
    std::vector<double> bu, bv, area, rhs;
    for (const auto& n : nodes) {
        bu.push_back(n.bu);
        bv.push_back(n.bv);
        area.push_back(n.area);
        rhs.push_back(n.rhs);
    }
    return curl_residual(g, bu, bv, area, rhs);
}

double coclosed_residual(const SurfaceData& s, int grid_n)
{
    const Grid2 g = make_grid(s, grid_n);
    struct Node {
        double su, sv, area;
    };
    const auto nodes = tabulate<Node>(g, [&](double u, double v) {
        const auto st = hodge_star(s, s.beta_u, s.beta_v, u, v, 0);
        return Node{st[0].value(), st[1].value(), area_density(s, u, v)};
    });
    std::vector<double> su, sv, area;
    for (const auto& n : nodes) {
        su.push_back(n.su);
        sv.push_back(n.sv);
        area.push_back(n.area);
    }
    return curl_residual(g, su, sv, area, std::vector<double>(su.size(), 0.0));
}

// ---------------------------------------------------------------------------
// beta-geodesics
// ---------------------------------------------------------------------------

FrameBundleCoframe::Base FrameBundleCoframe::base(double u, double v) const
{
    const FrameSeries f = frame_series(data_, u, v, 1);
    const auto rho = connection_series(f);
    Base b{};
    b.A1 = f.A1.value();
    b.B1 = f.B1.value();
    b.B2 = f.B2.value();
    b.rho_u = rho[0].value();
    b.rho_v = rho[1].value();
    const double bu = eval(data_.beta_u, u, v, 0).value();
    const double bv = eval(data_.beta_v, u, v, 0).value();
    // e1 = d_u / A1, e2 = (d_v - (B1/A1) d_u) / B2
    b.b1 = bu / b.A1;
    b.b2 = (bv - bu * b.B1 / b.A1) / b.B2;
    return b;
}

CoframeValue FrameBundleCoframe::lift(const Base& b, double phi)
{
    const double c = std::cos(phi), s = std::sin(phi);
    const CoframeValue::Form t1{b.A1, b.B1, 0.0};
    const CoframeValue::Form t2{0.0, b.B2, 0.0};
    CoframeValue out;
    for (int k = 0; k < 3; ++k) {
        out.eta1[k] = c * t1[k] + s * t2[k];
        out.eta2[k] = -s * t1[k] + c * t2[k];
    }
    out.eta12 = {b.rho_u, b.rho_v, -1.0};
    out.J = b.b1 * c + b.b2 * s;
    out.I = b.b1 * s - b.b2 * c;
    for (int k = 0; k < 3; ++k) {
        out.omega0[k] = -out.eta12[k] + out.I * out.eta2[k] - out.J * out.eta1[k];
        out.omega1[k] = out.eta2[k];
        out.theta01[k] = out.eta1[k];
    }
    return out;
}

CoframeValue FrameBundleCoframe::at(double u, double v, double phi) const { return lift(base(u, v), phi); }

namespace {

struct State {
    double u, v, chi;
};

State rhs(const FrameBundleCoframe& frame, const State& x)
{
    if (!frame.data().contains(x.u, x.v)) throw DomainError("beta-geodesic left the chart");
    const auto b = frame.base(x.u, x.v);
    const double c = std::cos(x.chi), s = std::sin(x.chi);
    const double du = c / b.A1 - s * b.B1 / (b.A1 * b.B2);
    const double dv = s / b.B2;
    // dchi/ds = beta(T) + rho(T), and beta(T) = b1 c + b2 s
    return {du, dv, b.b1 * c + b.b2 * s + b.rho_u * du + b.rho_v * dv};
}

State axpy(const State& x, double h, const State& k) { return {x.u + h * k.u, x.v + h * k.v, x.chi + h * k.chi}; }

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    return std::sqrt(square(a[0] - b[0]) + square(a[1] - b[1]) + square(a[2] - b[2]));
}

double point_segment(const std::array<double, 3>& p, const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    double ab[3], ap[3], len2 = 0.0, dot = 0.0;
    for (int k = 0; k < 3; ++k) {
        ab[k] = b[k] - a[k];
        ap[k] = p[k] - a[k];
        len2 += ab[k] * ab[k];
        dot += ab[k] * ap[k];
    }
    const double t = len2 > 0.0 ? std::clamp(dot / len2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += square(ap[k] - t * ab[k]);
    return std::sqrt(d2);
}

std::vector<std::array<double, 3>> embed(const MagneticTrajectory& t)
{
    std::vector<std::array<double, 3>> out;
    out.reserve(t.samples.size());
    for (const auto& s : t.samples) out.push_back(sphere_embedding(s.u, s.v));
    return out;
}

double directed_hausdorff(const std::vector<std::array<double, 3>>& a, const std::vector<std::array<double, 3>>& b)
{
    double max_seg = 0.0;
    for (std::size_t j = 0; j + 1 < b.size(); ++j) max_seg = std::max(max_seg, dist3(b[j], b[j + 1]));
    std::vector<double> best(a.size());
    parallel_for(a.size(), [&](std::size_t i) {
        double d = std::numeric_limits<double>::infinity();
        if (b.size() == 1) d = dist3(a[i], b[0]);
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            // a segment cannot be closer than its first vertex minus its length
            if (dist3(a[i], b[j]) - max_seg > d) continue;
            d = std::min(d, point_segment(a[i], b[j], b[j + 1]));
        }
        best[i] = d;
    });
    return *std::max_element(best.begin(), best.end());
}

} // namespace

MagneticTrajectory integrate_beta_geodesic(const SurfaceData& s, double u0, double v0, double heading, double length,
                                           double step)
{
    if (!(step > 0.0) || !(length > 0.0)) throw InvalidArgument("step and length must be positive");
    if (!s.contains(u0, v0)) throw DomainError("start point outside the surface patch");
    const FrameBundleCoframe frame(s);
    const auto steps = static_cast<long>(std::ceil(length / step - 1e-9));
    const double h = length / static_cast<double>(steps);
    MagneticTrajectory traj;
    traj.step = h;
    traj.provenance = s.provenance;
    traj.samples.reserve(static_cast<std::size_t>(steps) + 1);
    State x{u0, v0, heading};
    traj.samples.push_back({0.0, x.u, x.v, x.chi});
    for (long n = 1; n <= steps; ++n) {
        try {
            const State k1 = rhs(frame, x);
            const State k2 = rhs(frame, axpy(x, 0.5 * h, k1));
            const State k3 = rhs(frame, axpy(x, 0.5 * h, k2));
            const State k4 = rhs(frame, axpy(x, h, k3));
            x = {x.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
                 x.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
                 x.chi + h / 6.0 * (k1.chi + 2.0 * k2.chi + 2.0 * k3.chi + k4.chi)};
            if (!s.contains(x.u, x.v)) throw DomainError("beta-geodesic left the chart");
        } catch (const DomainError&) {
            traj.truncated = true;
            break;
        }
        traj.samples.push_back({n * h, x.u, x.v, x.chi});
    }
    return traj;
}

std::array<double, 3> sphere_embedding(double u, double v)
{
    return {std::sin(u) * std::cos(v), std::sin(u) * std::sin(v), std::cos(u)};
}

double closure_defect(const MagneticTrajectory& t)
{
    if (t.samples.size() < 2) throw InvalidArgument("trajectory has fewer than two samples");
    const auto& a = t.samples.front();
    const auto& b = t.samples.back();
    const double dchi = std::remainder(b.chi - a.chi, kTwoPi);
    const double dx = dist3(sphere_embedding(a.u, a.v), sphere_embedding(b.u, b.v));
    return std::sqrt(dx * dx + dchi * dchi);
}

double hausdorff_distance(const MagneticTrajectory& a, const MagneticTrajectory& b)
{
    if (a.samples.empty() || b.samples.empty()) throw InvalidArgument("hausdorff_distance: empty trajectory");
    const auto pa = embed(a);
    const auto pb = embed(b);
    return std::max(directed_hausdorff(pa, pb), directed_hausdorff(pb, pa));
}

double conformal_length(const MagneticTrajectory& t, const Field& L)
{
    double total = 0.0;
    double prev = std::sqrt(L(t.samples.front().u, t.samples.front().v, 0).value());
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
        const double cur = std::sqrt(L(t.samples[i].u, t.samples[i].v, 0).value());
        total += 0.5 * (prev + cur) * (t.samples[i].s - t.samples[i - 1].s);
        prev = cur;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Frame bundle structure equations
// ---------------------------------------------------------------------------

FrameBundleCoframe build_cfc_coframe(const SurfaceData& s)
{
    const double r = magnetic_residual(s, 64);
    if (!(r < 1e-4)) {
        std::ostringstream os;
        os << "dbeta = (1 - K) Omega fails: residual " << r << " on a 64^2 grid";
        throw MagneticEquationViolated(os.str(), r);
    }
    return FrameBundleCoframe(s);
}

StructureResidual structure_equation_residual(const FrameBundleCoframe& c, int grid_n, double i_offset)
{
    const SurfaceData& s = c.data();
    const Grid2 g = make_grid(s, grid_n);
    const int n = g.n;
    const double hphi = kTwoPi / n;
    const auto base = tabulate<FrameBundleCoframe::Base>(g, [&](double u, double v) { return c.base(u, v); });

    using Form = CoframeValue::Form;
    auto d = [](const std::array<Form, 3>& grad) {
        // grad[a][k] = d_a (form)_k; returns (uv, u phi, v phi) components
        return Form{grad[0][1] - grad[1][0], grad[0][2] - grad[2][0], grad[1][2] - grad[2][1]};
    };
    auto wedge = [](const Form& a, const Form& b) {
        return Form{a[0] * b[1] - a[1] * b[0], a[0] * b[2] - a[2] * b[0], a[1] * b[2] - a[2] * b[1]};
    };

    std::vector<StructureResidual> rows(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
        const int i = static_cast<int>(row);
        if (i < kMargin || i >= n - kMargin) return;
        StructureResidual& out = rows[row];
        auto lift = [&](int ii, int jj, int kk) {
            return FrameBundleCoframe::lift(base[static_cast<std::size_t>(ii) * n + g.wrap(jj)], kk * hphi);
        };
        for (int j = 0; j < n; ++j) {
            if (!g.interior_v(j)) continue;
            for (int k = 0; k < n; ++k) {
                const CoframeValue x = lift(i, j, k);
                // gradients of omega0, omega1, theta01 along u, v, phi
                std::array<std::array<Form, 3>, 3> grad{};
                for (int axis = 0; axis < 3; ++axis) {
                    const double h = axis == 0 ? g.hu : axis == 1 ? g.hv : hphi;
                    for (int m = 1; m <= kMargin; ++m) {
                        const int di[3] = {m, 0, 0}, dj[3] = {0, m, 0}, dk[3] = {0, 0, m};
                        const CoframeValue p = lift(i + di[axis], j + dj[axis], (k + dk[axis]) % n);
                        const CoframeValue q = lift(i - di[axis], j - dj[axis], (k - dk[axis] + n) % n);
                        for (int comp = 0; comp < 3; ++comp) {
                            const double w = kD6[m - 1] / h;
                            grad[0][axis][comp] += w * (p.omega0[comp] - q.omega0[comp]);
                            grad[1][axis][comp] += w * (p.omega1[comp] - q.omega1[comp]);
                            grad[2][axis][comp] += w * (p.theta01[comp] - q.theta01[comp]);
                        }
                    }
                }
                const double I = x.I + i_offset;
                Form bracket;
                for (int comp = 0; comp < 3; ++comp) {
                    bracket[comp] = x.omega0[comp] - I * x.omega1[comp] + x.J * x.theta01[comp];
                }
                const Form d0 = d(grad[0]), d1 = d(grad[1]), d2 = d(grad[2]);
                const Form w0 = wedge(x.theta01, x.omega1);
                const Form w1 = wedge(bracket, x.theta01);
                const Form w2 = wedge(bracket, x.omega1);
                for (int comp = 0; comp < 3; ++comp) {
                    out.r[0] = std::max(out.r[0], std::abs(d0[comp] + w0[comp]));
                    out.r[1] = std::max(out.r[1], std::abs(d1[comp] + w1[comp]));
                    out.r[2] = std::max(out.r[2], std::abs(d2[comp] - w2[comp]));
                }
            }
        }
    });
    StructureResidual total;
    for (const auto& r : rows) {
        for (int m = 0; m < 3; ++m) total.r[m] = std::max(total.r[m], r.r[m]);
    }
    return total;
}

} // namespace finsler
