#include "finsler/gallery.hpp"

#include "finsler/error.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace finsler {

using std::cos;
using std::sin;
using std::sqrt;

void QuadricSpec::validate() const
{
    if (phases.size() < 2) throw InvalidArgument("quadric spec needs at least two phases (n >= 1)");
    double prev = 0.0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const double p = phases[i];
        if (!std::isfinite(p)) throw InvalidArgument("quadric phase is not finite");
        if (p < prev) {
            std::ostringstream os;
            os << "quadric phases must satisfy 0 = p0 <= p1 <= ... <= p_{n+1} < pi; p" << i + 1 << " = " << p
               << " breaks the ordering";
            throw InvalidArgument(os.str());
        }
        if (p >= std::numbers::pi) {
            std::ostringstream os;
            os << "quadric phases must satisfy 0 = p0 <= p1 <= ... <= p_{n+1} < pi; p" << i + 1 << " = " << p
               << " is not below pi";
            throw InvalidArgument(os.str());
        }
        prev = p;
    }
}

// ---------------------------------------------------------------------------
// Sphere charts
// ---------------------------------------------------------------------------

SphereChart::SphereChart(int n, ChartKind kind) : SphereChart(n, kind, Mat::Identity(n + 2, n + 2)) {}

SphereChart::SphereChart(int n, ChartKind kind, Mat frame) : n_(n), kind_(kind), frame_(std::move(frame))
{
    if (n_ < 1) throw InvalidArgument("sphere chart needs n >= 1");
    if (frame_.rows() != n_ + 2 || frame_.cols() != n_ + 2) throw InvalidArgument("sphere chart frame has wrong size");
    if (!(frame_.transpose() * frame_).isIdentity(1e-12)) throw InvalidArgument("sphere chart frame is not orthonormal");
}

namespace {

template <class S>
std::vector<S> chart_point(const SphereChart& chart, const std::vector<S>& x)
{
    const int m = chart.chart_dim();
    const int a = chart.ambient_dim();
    const Mat& e = chart.frame();
    S r2 = S(0.0);
    for (int i = 0; i < m; ++i) r2 = r2 + x[i] * x[i];
    std::vector<S> v(a, S(0.0));
    if (chart.kind() == ChartKind::gnomonic) {
        for (int k = 0; k < a; ++k) {
            S p = S(e(k, 0));
            for (int i = 0; i < m; ++i) p = p + e(k, i + 1) * x[i];
            v[k] = p;
        }
        const S inv = 1.0 / sqrt(1.0 + r2);
        for (auto& c : v) c = c * inv;
    } else {
        const S inv = 1.0 / (1.0 + r2);
        for (int k = 0; k < a; ++k) {
            S p = (1.0 - r2) * e(k, 0);
            for (int i = 0; i < m; ++i) p = p + 2.0 * e(k, i + 1) * x[i];
            v[k] = p * inv;
        }
    }
    return v;
}

template <class S>
std::vector<S> chart_push(const SphereChart& chart, const std::vector<S>& x, const std::vector<S>& u)
{
    const int m = chart.chart_dim();
    const int a = chart.ambient_dim();
    const Mat& e = chart.frame();
    S r2 = S(0.0), xu = S(0.0);
    for (int i = 0; i < m; ++i) {
        r2 = r2 + x[i] * x[i];
        xu = xu + x[i] * u[i];
    }
    std::vector<S> w(a, S(0.0));
    if (chart.kind() == ChartKind::gnomonic) {
        // v = P/|P|, dv(u) = (U - (v.U) v)/|P|, with |P|^2 = 1 + |x|^2 and P.U = x.u
        const S norm2 = 1.0 + r2;
        const S inv = 1.0 / sqrt(norm2);
        for (int k = 0; k < a; ++k) {
            S P = S(e(k, 0)), U = S(0.0);
            for (int i = 0; i < m; ++i) {
                P = P + e(k, i + 1) * x[i];
                U = U + e(k, i + 1) * u[i];
            }
            w[k] = (U - (xu / norm2) * P) * inv;
        }
    } else {
        // v = N/D with N = (1-|x|^2) e0 + 2x, D = 1 + |x|^2
        const S D = 1.0 + r2;
        const S invD2 = 1.0 / (D * D);
        for (int k = 0; k < a; ++k) {
            S N = (1.0 - r2) * e(k, 0), dN = -2.0 * xu * e(k, 0);
            for (int i = 0; i < m; ++i) {
                N = N + 2.0 * e(k, i + 1) * x[i];
                dN = dN + 2.0 * e(k, i + 1) * u[i];
            }
            w[k] = (dN * D - N * (2.0 * xu)) * invD2;
        }
    }
    return w;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())); }

} // namespace

Vec SphereChart::point(const Vec& x) const { return to_vec(chart_point(*this, to_std(x))); }

Vec SphereChart::push(const Vec& x, const Vec& u) const { return to_vec(chart_push(*this, to_std(x), to_std(u))); }

TaylorVec SphereChart::point(const TaylorVec& x) const { return chart_point(*this, x); }

TaylorVec SphereChart::push(const TaylorVec& x, const TaylorVec& u) const { return chart_push(*this, x, u); }

bool SphereChart::covers(const Vec& v) const
{
    const double a0 = frame_.col(0).dot(v);
    return kind_ == ChartKind::gnomonic ? a0 > 0.0 : a0 > -1.0 + 1e-12;
}

Vec SphereChart::coordinates(const Vec& v) const
{
    if (v.size() != ambient_dim()) throw InvalidArgument("sphere chart: ambient vector has wrong size");
    const Vec unit = v / v.norm();
    if (!covers(unit)) throw DomainError("point is not covered by the sphere chart");
    const Vec a = frame_.transpose() * unit;
    const double denom = kind_ == ChartKind::gnomonic ? a[0] : 1.0 + a[0];
    return a.tail(chart_dim()) / denom;
}

Vec SphereChart::pull(const Vec& x, const Vec& w) const
{
    const int m = chart_dim();
    Mat J(ambient_dim(), m);
    for (int i = 0; i < m; ++i) J.col(i) = push(x, Vec::Unit(m, i));
    return J.colPivHouseholderQr().solve(w);
}

// ---------------------------------------------------------------------------
// Flat and round metrics
// ---------------------------------------------------------------------------

MetricOracle make_flat(int m)
{
    auto norm = [](const Vec&, const Vec& y) { return y.norm(); };
    auto analytic = [](const TaylorVec&, const TaylorVec& y) {
        Taylor s(0.0);
        for (const auto& c : y) s += c * c;
        return sqrt(s);
    };
    return MetricOracle("flat", m, {}, norm, analytic, true).with_sample_radius(1.0);
}

namespace {

// Both charts are global on their open sets, but far from the origin the
// pushed-forward vectors lose all precision.
MetricOracle::Domain chart_domain()
{
    return [](const Vec& x) { return x.squaredNorm() < 1e12; };
}

} // namespace

MetricOracle make_round_sphere(int n, ChartKind kind)
{
    SphereChart chart(n, kind);
    auto norm = [chart](const Vec& x, const Vec& y) { return chart.push(x, y).norm(); };
    auto analytic = [chart](const TaylorVec& x, const TaylorVec& y) {
        const TaylorVec w = chart.push(x, y);
        Taylor s(0.0);
        for (const auto& c : w) s += c * c;
        return sqrt(s);
    };
    const double radius = kind == ChartKind::gnomonic ? 1.5 : 1.0;
    return MetricOracle("round-sphere", n + 1, chart_domain(), norm, analytic, true).with_sample_radius(radius);
}

// ---------------------------------------------------------------------------
// Quadric metrics
// ---------------------------------------------------------------------------

namespace {

template <class S>
struct Cx {
    S re;
    S im;
};

template <class S>
Cx<S> operator+(const Cx<S>& a, const Cx<S>& b)
{
    return {a.re + b.re, a.im + b.im};
}

template <class S>
Cx<S> operator-(const Cx<S>& a, const Cx<S>& b)
{
    return {a.re - b.re, a.im - b.im};
}

template <class S>
Cx<S> operator*(const Cx<S>& a, const Cx<S>& b)
{
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

template <class S>
Cx<S> operator/(const Cx<S>& a, const Cx<S>& b)
{
    const S inv = 1.0 / (b.re * b.re + b.im * b.im);
    return {(a.re * b.re + a.im * b.im) * inv, (a.im * b.re - a.re * b.im) * inv};
}

template <class S>
Cx<S> principal_sqrt(const Cx<S>& z)
{
    // valid (and smooth) for Re z >= 0, z != 0
    const S r = sqrt(z.re * z.re + z.im * z.im);
    const S a = sqrt(0.5 * (r + z.re));
    return {a, z.im / (2.0 * a)};
}

// A square root that is smooth near z; the caller only relies on the pair +-.
template <class S>
Cx<S> smooth_sqrt(const Cx<S>& z)
{
    if (value_of(z.re) >= 0.0) return principal_sqrt(z);
    const Cx<S> w = principal_sqrt(Cx<S>{-z.re, -z.im});
    return {-w.im, w.re}; // i * sqrt(-z)
}

template <class S>
std::array<Cx<S>, 2> quadric_roots(const std::vector<double>& phases, const std::vector<S>& v, const std::vector<S>& y)
{
    Cx<S> alpha{S(0.0), S(0.0)}, beta{S(0.0), S(0.0)}, gamma{S(0.0), S(0.0)};
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double p = k == 0 ? 0.0 : phases[k - 1];
        const double c = std::cos(p), s = std::sin(p);
        const S vv = v[k] * v[k], vy = v[k] * y[k], yy = y[k] * y[k];
        alpha = alpha + Cx<S>{c * vv, s * vv};
        beta = beta + Cx<S>{c * vy, s * vy};
        gamma = gamma + Cx<S>{c * yy, s * yy};
    }
    const Cx<S> root = smooth_sqrt(alpha * gamma - beta * beta);
    const Cx<S> minus_i_beta{beta.im, -beta.re};
    return {(minus_i_beta + root) / alpha, (minus_i_beta - root) / alpha};
}

constexpr double kRootFloor = 1e-12;
constexpr int kNewtonIterations = 50;

// Index of the unique root with positive real part, or -1.
template <class S>
int positive_root(const std::array<Cx<S>, 2>& roots)
{
    const bool a = value_of(roots[0].re) > kRootFloor;
    const bool b = value_of(roots[1].re) > kRootFloor;
    if (a == b) return -1;
    return a ? 0 : 1;
}

void check_sphere_pair(const QuadricSpec& spec, const Vec& v, const Vec& y)
{
    if (v.size() != static_cast<long>(spec.phases.size()) + 1 || y.size() != v.size()) {
        throw InvalidArgument("quadric: vectors must live in R^{n+2}");
    }
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroVector();
}

} // namespace

NewtonResult quadric_F_newton(const QuadricSpec& spec, const Vec& v, const Vec& y)
{
    check_sphere_pair(spec, v, y);
    using C = std::complex<double>;
    const long a_dim = v.size();
    std::vector<C> d(a_dim);
    for (long k = 0; k < a_dim; ++k) d[k] = std::polar(1.0, k == 0 ? 0.0 : spec.phases[k - 1]);

    // Unknowns (sigma, tau) = (1/a, b/a). Scaling the membership equation by
    // sigma^2 gives q = sum d_k (sigma v_k + i (y_k + tau v_k))^2, which is a
    // holomorphic quadratic in sigma + i tau, so plain Newton converges to
    // the root nearest the start.
    auto residual = [&](double sigma, double tau) {
        C q = 0.0;
        for (long k = 0; k < a_dim; ++k) {
            const C z{sigma * v[k], y[k] + tau * v[k]};
            q += d[k] * z * z;
        }
        return q;
    };
    const double scale = y.squaredNorm();

    auto solve_from = [&](double sigma, double tau, NewtonResult& out) {
        C q = residual(sigma, tau);
        out.residuals.push_back(std::abs(q));
        for (int it = 1; it <= kNewtonIterations; ++it) {
            C qs = 0.0, qt = 0.0;
            for (long k = 0; k < a_dim; ++k) {
                const C z{sigma * v[k], y[k] + tau * v[k]};
                qs += 2.0 * d[k] * z * v[k];
                qt += 2.0 * d[k] * z * C{0.0, v[k]};
            }
            Eigen::Matrix2d J;
            J << qs.real(), qt.real(), qs.imag(), qt.imag();
            const Eigen::Vector2d step = J.fullPivLu().solve(Eigen::Vector2d(-q.real(), -q.imag()));
            if (!step.allFinite()) return false;
            sigma += step[0];
            tau += step[1];
            q = residual(sigma, tau);
            out.residuals.push_back(std::abs(q));
            ++out.iterations;
            if (std::abs(q) <= 1e-12 * scale && step.norm() <= 1e-12 * std::hypot(sigma, tau)) {
                out.F = sigma;
                return sigma > 0.0;
            }
        }
        return false;
    };

    // The two roots have real parts of opposite sign; from a start far out on
    // the positive real axis the positive one is the nearer.
    NewtonResult out;
    double start = std::sqrt(scale);
    for (int attempt = 0; attempt < 6; ++attempt, start *= 8.0) {
        NewtonResult r;
        if (solve_from(start, 0.0, r)) return r;
        out.iterations += r.iterations;
        out.residuals.insert(out.residuals.end(), r.residuals.begin(), r.residuals.end());
    }
    throw NoConvergence("quadric Newton oracle did not converge", out.residuals);
}

double quadric_F_closed(const QuadricSpec& spec, const Vec& v, const Vec& y)
{
    check_sphere_pair(spec, v, y);
    const auto roots = quadric_roots(spec.phases, to_std(v), to_std(y));
    const int idx = positive_root(roots);
    if (idx < 0) return quadric_F_newton(spec, v, y).F;
    return roots[idx].re;
}

MetricOracle make_quadric_metric(const QuadricSpec& spec, ChartKind kind)
{
    spec.validate();
    const int n = spec.n();
    SphereChart chart(n, kind);
    auto norm = [spec, chart](const Vec& x, const Vec& u) {
        return quadric_F_closed(spec, chart.point(x), chart.push(x, u));
    };
    auto analytic = [spec, chart](const TaylorVec& x, const TaylorVec& u) {
        const TaylorVec v = chart.point(x);
        const TaylorVec w = chart.push(x, u);
        const auto roots = quadric_roots(spec.phases, v, w);
        int idx = positive_root(roots);
        if (idx < 0) {
            // Let the Newton oracle decide the branch.
            Vec vd(v.size()), wd(w.size());
            for (std::size_t k = 0; k < v.size(); ++k) {
                vd[static_cast<long>(k)] = v[k].value();
                wd[static_cast<long>(k)] = w[k].value();
            }
            const double f = quadric_F_newton(spec, vd, wd).F;
            for (int r = 0; r < 2; ++r) {
                if (std::abs(roots[r].re.value() - f) <= 1e-8 * f) idx = r;
            }
            if (idx < 0) throw BranchAmbiguity("quadric metric: no root matches the Newton oracle");
        }
        return roots[idx].re;
    };
    std::ostringstream name;
    name << "quadric(";
    for (std::size_t i = 0; i < spec.phases.size(); ++i) name << (i ? "," : "") << spec.phases[i];
    name << ")";
    const double radius = kind == ChartKind::gnomonic ? 1.5 : 1.0;
    bool zero = true;
    for (double p : spec.phases) zero = zero && p == 0.0;
    return MetricOracle(name.str(), n + 1, chart_domain(), norm, analytic, zero).with_sample_radius(radius);
}

// ---------------------------------------------------------------------------
// Hilbert metrics
// ---------------------------------------------------------------------------

namespace {

template <class S>
S body_phi(const ConvexBodySpec& body, const std::vector<S>& p)
{
    S s = S(0.0);
    for (const auto& c : p) {
        const S c2 = c * c;
        s = s + (body.kind == ConvexBodySpec::Kind::ball ? c2 : c2 * c2);
    }
    return s - 1.0;
}

// grad(phi)(p) . dir
template <class S>
S body_slope(const ConvexBodySpec& body, const std::vector<S>& p, const std::vector<S>& dir)
{
    S s = S(0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const S g = body.kind == ConvexBodySpec::Kind::ball ? 2.0 * p[i] : 4.0 * p[i] * p[i] * p[i];
        s = s + g * dir[i];
    }
    return s;
}

double chord(const ConvexBodySpec& body, const Vec& x, const Vec& y)
{
    auto f = [&](double t) { return body.phi(x + t * y); };
    double lo = 0.0, hi = 1.0;
    int grow = 0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 200) throw Error("hilbert chord: body is not bounded along the ray");
    }
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    const std::vector<double> ys = to_std(y);
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
        const Vec p = x + t * y;
        double next = t - f(t) / body_slope(body, to_std(p), ys);
        const bool newton = next >= lo && next <= hi;
        if (!newton) next = 0.5 * (lo + hi);
        const double fn = f(next);
        if (fn == 0.0) return next;
        (fn < 0.0 ? lo : hi) = next;
        const bool done = (newton && std::abs(next - t) <= 1e-15 * t) || hi - lo <= 4e-16 * hi;
        t = next;
        if (done) break;
    }
    return t;
}

} // namespace

double ConvexBodySpec::phi(const Vec& x) const { return body_phi(*this, to_std(x)); }

std::pair<double, double> hilbert_chords(const ConvexBodySpec& body, const Vec& x, const Vec& y)
{
    if (x.size() != body.dim || y.size() != body.dim) throw InvalidArgument("hilbert: dimension mismatch");
    if (!(body.phi(x) < 0.0)) throw OutsideBody("point is not inside the convex body");
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroVector();
    return {chord(body, x, y), chord(body, x, -y)};
}

MetricOracle make_hilbert_metric(const ConvexBodySpec& body)
{
    if (body.dim < 1) throw InvalidArgument("hilbert: dimension must be positive");
    auto domain = [body](const Vec& x) { return body.phi(x) < 0.0; };
    auto norm = [body](const Vec& x, const Vec& y) {
        const auto [tp, tm] = hilbert_chords(body, x, y);
        return 0.5 * (1.0 / tp + 1.0 / tm);
    };
    auto analytic = [body](const TaylorVec& x, const TaylorVec& y) {
        Vec xd(x.size()), yd(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            xd[static_cast<long>(i)] = x[i].value();
            yd[static_cast<long>(i)] = y[i].value();
        }
        const auto [tp, tm] = hilbert_chords(body, xd, yd);
        // Newton on the series: each pass doubles the number of exact orders.
        auto polish = [&](double t0, double sign) {
            Taylor t(t0);
            std::vector<Taylor> dir(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) dir[i] = sign * y[i];
            for (int it = 0; it < 3; ++it) {
                std::vector<Taylor> p(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) p[i] = x[i] + t * dir[i];
                t = t - body_phi(body, p) / body_slope(body, p, dir);
            }
            return t;
        };
        return 0.5 * (1.0 / polish(tp, 1.0) + 1.0 / polish(tm, -1.0));
    };
    const char* kind = body.kind == ConvexBodySpec::Kind::ball ? "hilbert-ball" : "hilbert-superellipse";
    return MetricOracle(kind, body.dim, domain, norm, analytic, true).with_sample_radius(0.7);
}

// ---------------------------------------------------------------------------

double reversibility_defect(const MetricOracle& oracle, const PointSampler& region, std::size_t samples,
                            std::uint64_t seed)
{
    if (samples < 1) throw InvalidArgument("reversibility_defect: at least one sample required");
    Rng rng(seed);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec x = region(rng);
        Vec y(oracle.dim());
        do {
            for (int i = 0; i < oracle.dim(); ++i) y[i] = normal(rng);
        } while (y.norm() == 0.0);
        const double f = eval_F(oracle, x, y);
        const double b = eval_F(oracle, x, -y);
        worst = std::max(worst, std::abs(b - f) / f);
    }
    return worst;
}

PointSampler default_region(const MetricOracle& oracle)
{
    return ball_sampler(Vec::Zero(oracle.dim()), oracle.sample_radius());
}

} // namespace finsler
