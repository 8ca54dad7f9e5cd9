#include "finsler/metric.hpp"

#include "finsler/error.hpp"

#include <cmath>

namespace finsler {

MetricOracle::MetricOracle(std::string name, int dim, Domain domain, Norm norm, AnalyticNorm analytic,
                           bool reversible)
    : name_(std::move(name)), dim_(dim), domain_(std::move(domain)), norm_(std::move(norm)),
      analytic_(std::move(analytic)), reversible_(reversible)
{
    if (dim_ < 1) throw InvalidArgument("MetricOracle: dimension must be positive");
    if (!norm_) throw InvalidArgument("MetricOracle: norm callable is required");
}

MetricOracle MetricOracle::with_sample_radius(double r) const
{
    MetricOracle copy = *this;
    copy.sample_radius_ = r;
    return copy;
}

bool MetricOracle::contains(const Vec& x) const
{
    if (x.size() != dim_ || !x.allFinite()) return false;
    return !domain_ || domain_(x);
}

double CartanTensorValue::norm() const
{
    double s = 0.0;
    for (double v : c) s += v * v;
    return std::sqrt(s);
}

double CartanTensorValue::contraction_defect(const Vec& y) const
{
    double worst = 0.0;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += (*this)(i, j, k) * y[k];
            worst = std::max(worst, std::abs(s));
        }
    }
    return worst;
}

namespace {

void check_point(const MetricOracle& oracle, const Vec& x, const Vec& y)
{
    if (x.size() != oracle.dim() || y.size() != oracle.dim()) {
        throw InvalidArgument("dimension mismatch for metric " + oracle.name());
    }
    if (!oracle.contains(x)) throw DomainError("point outside the chart domain of " + oracle.name());
    if (!y.allFinite()) throw InvalidArgument("tangent vector is not finite");
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroVector();
}

TaylorVec seed(const Vec& v, int nvars, int order, int offset)
{
    TaylorVec out;
    out.reserve(v.size());
    for (int i = 0; i < v.size(); ++i) out.push_back(Taylor::variable(nvars, order, offset + i, v[i]));
    return out;
}

TaylorVec constants(const Vec& v)
{
    TaylorVec out;
    out.reserve(v.size());
    for (int i = 0; i < v.size(); ++i) out.emplace_back(v[i]);
    return out;
}

} // namespace

double eval_F(const MetricOracle& oracle, const Vec& x, const Vec& y)
{
    check_point(oracle, x, y);
    const double f = oracle.norm(x, y);
    if (!std::isfinite(f) || f <= 0.0) {
        throw Error("metric " + oracle.name() + " returned a non-positive norm");
    }
    return f;
}

SecondJet second_jet(const MetricOracle& oracle, const Vec& x, const Vec& y, const DerivativeOptions& opts)
{
    check_point(oracle, x, y);
    const int m = oracle.dim();
    SecondJet jet;
    jet.dy.resize(m);
    jet.dx.resize(m);
    jet.dyy.resize(m, m);
    jet.dxy.resize(m, m);

    if (oracle.has_analytic()) {
        const int nv = 2 * m;
        const Taylor F = oracle.analytic(seed(x, nv, 2, 0), seed(y, nv, 2, m));
        const Taylor L = F * F;
        jet.F2 = L.value();
        for (int i = 0; i < m; ++i) {
            jet.dx[i] = L.d(i);
            jet.dy[i] = L.d(m + i);
            for (int j = 0; j < m; ++j) {
                jet.dyy(i, j) = L.d(m + i, m + j);
                jet.dxy(i, j) = L.d(m + i, j);
            }
        }
        return jet;
    }

    const double f = eval_F(oracle, x, y);
    jet.F2 = f * f;
    Vec z(2 * m);
    z << x, y;
    JetRequest req;
    req.target = [&](const Vec& p) {
        const double v = oracle.norm(p.head(m), p.tail(m));
        return v * v;
    };
    req.base = z;
    req.relative_step = opts.relative_step;
    req.levels = opts.levels;
    req.domain = [&](const Vec& p) { return oracle.contains(p.head(m)) && p.tail(m).norm() > 0.0; };
    auto partial = [&](int a, int b) {
        req.multi_index.assign(2 * m, 0);
        req.multi_index[a] += 1;
        if (b >= 0) req.multi_index[b] += 1;
        return numeric_jet(req).value;
    };
    for (int i = 0; i < m; ++i) {
        jet.dx[i] = partial(i, -1);
        jet.dy[i] = partial(m + i, -1);
        for (int j = 0; j < m; ++j) {
            jet.dxy(i, j) = partial(m + i, j);
            if (j >= i) {
                jet.dyy(i, j) = partial(m + i, m + j);
                jet.dyy(j, i) = jet.dyy(i, j);
            }
        }
    }
    return jet;
}

FundamentalTensor fundamental_tensor(const MetricOracle& oracle, const Vec& x, const Vec& y, double floor,
                                     const DerivativeOptions& opts)
{
    const int m = oracle.dim();
    Mat g(m, m);
    if (oracle.has_analytic()) {
        check_point(oracle, x, y);
        // Only y-derivatives are needed here.
        const Taylor F = oracle.analytic(constants(x), seed(y, m, 2, 0));
        const Taylor L = F * F;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) g(i, j) = 0.5 * L.d(i, j);
        }
    } else {
        g = 0.5 * second_jet(oracle, x, y, opts).dyy;
    }
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmin > floor)) {
        throw ConvexityError("fundamental tensor of " + oracle.name() + " is not positive definite", lmin);
    }
    return {g, lmin};
}

CartanTensorValue cartan_tensor(const MetricOracle& oracle, const Vec& x, const Vec& y, const DerivativeOptions& opts)
{
    check_point(oracle, x, y);
    const int m = oracle.dim();
    CartanTensorValue out;
    out.dim = m;
    out.c.assign(static_cast<std::size_t>(m * m * m), 0.0);
    auto set = [&](int i, int j, int k, double v) {
        const int idx[3] = {i, j, k};
        // write all permutations
        static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (const auto& p : perms) out.c[(idx[p[0]] * m + idx[p[1]]) * m + idx[p[2]]] = v;
    };

    if (oracle.has_analytic()) {
        const Taylor F = oracle.analytic(constants(x), seed(y, m, 3, 0));
        const Taylor L = F * F;
        for (int i = 0; i < m; ++i) {
            for (int j = i; j < m; ++j) {
                for (int k = j; k < m; ++k) set(i, j, k, 0.25 * L.d(i, j, k));
            }
        }
        return out;
    }

    JetRequest req;
    req.target = [&](const Vec& p) {
        const double v = oracle.norm(x, p);
        return v * v;
    };
    req.base = y;
    req.relative_step = opts.relative_step;
    req.levels = opts.levels;
    req.domain = [](const Vec& p) { return p.norm() > 0.0; };
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            for (int k = j; k < m; ++k) {
                req.multi_index.assign(m, 0);
                req.multi_index[i] += 1;
                req.multi_index[j] += 1;
                req.multi_index[k] += 1;
                set(i, j, k, 0.25 * numeric_jet(req).value);
            }
        }
    }
    return out;
}

Vec normalize(const MetricOracle& oracle, const Vec& x, const Vec& y)
{
    return y / eval_F(oracle, x, y);
}

MetricOracle numeric_only(const MetricOracle& oracle)
{
    return MetricOracle(
        oracle.name(), oracle.dim(), [oracle](const Vec& x) { return oracle.contains(x); },
        [oracle](const Vec& x, const Vec& y) { return oracle.norm(x, y); }, {}, oracle.reversible())
        .with_sample_radius(oracle.sample_radius());
}

} // namespace finsler
