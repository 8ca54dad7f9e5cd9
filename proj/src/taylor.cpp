#include "finsler/taylor.hpp"

#include "finsler/error.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace finsler {

namespace detail {

struct TaylorLayout {
    int nvars = 0;
    int order = 0;
    std::vector<std::vector<int>> exponents;
    std::vector<int> degree;
    std::map<std::vector<int>, int> index;
    // (i, j, k): c[k] += a[i] * b[j]
    std::vector<std::array<int, 3>> products;
    // derivative[var][k] = source index of the coefficient that lands on k
    // (k ranges over the monomials of degree < order).
    std::vector<std::vector<int>> derivative_source;
    std::size_t size() const { return exponents.size(); }
};

namespace {

void monomials_of_degree(int nvars, int degree, std::vector<int>& current, int var,
                         std::vector<std::vector<int>>& out)
{
    if (var == nvars - 1) {
        current[var] = degree;
        out.push_back(current);
        current[var] = 0;
        return;
    }
    for (int e = degree; e >= 0; --e) {
        current[var] = e;
        monomials_of_degree(nvars, degree - e, current, var + 1, out);
    }
    current[var] = 0;
}

std::shared_ptr<const TaylorLayout> build_layout(int nvars, int order)
{
    auto layout = std::make_shared<TaylorLayout>();
    layout->nvars = nvars;
    layout->order = order;
    std::vector<int> current(nvars, 0);
    for (int deg = 0; deg <= order; ++deg) {
        monomials_of_degree(nvars, deg, current, 0, layout->exponents);
    }
    for (std::size_t k = 0; k < layout->exponents.size(); ++k) {
        const auto& e = layout->exponents[k];
        layout->degree.push_back(std::accumulate(e.begin(), e.end(), 0));
        layout->index.emplace(e, static_cast<int>(k));
    }
    const int n = static_cast<int>(layout->size());
    std::vector<int> sum(nvars);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (layout->degree[i] + layout->degree[j] > order) continue;
            for (int v = 0; v < nvars; ++v) {
                sum[v] = layout->exponents[i][v] + layout->exponents[j][v];
            }
            layout->products.push_back({i, j, layout->index.at(sum)});
        }
    }
    layout->derivative_source.resize(nvars);
    for (int v = 0; v < nvars; ++v) {
        for (int k = 0; k < n && layout->degree[k] < order; ++k) {
            auto e = layout->exponents[k];
            e[v] += 1;
            layout->derivative_source[v].push_back(layout->index.at(e));
        }
    }
    return layout;
}

std::shared_ptr<const TaylorLayout> layout_for(int nvars, int order)
{
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const TaylorLayout>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{nvars, order}];
    if (!slot) slot = build_layout(nvars, order);
    return slot;
}

} // namespace
} // namespace detail

Taylor::Taylor(double value) : coeffs_{value} {}

Taylor Taylor::constant(int nvars, int order, double value)
{
    if (nvars < 1 || order < 0) throw InvalidArgument("Taylor: invalid layout");
    Taylor t;
    t.layout_ = detail::layout_for(nvars, order);
    t.coeffs_.assign(t.layout_->size(), 0.0);
    t.coeffs_[0] = value;
    return t;
}

Taylor Taylor::variable(int nvars, int order, int index, double value)
{
    if (index < 0 || index >= nvars) throw InvalidArgument("Taylor: variable index out of range");
    Taylor t = constant(nvars, order, value);
    if (order >= 1) t.coeffs_[1 + index] = 1.0;
    return t;
}

int Taylor::nvars() const { return layout_ ? layout_->nvars : 0; }
int Taylor::order() const { return layout_ ? layout_->order : 0; }

double Taylor::coeff(std::span<const int> exponents) const
{
    if (!layout_) {
        for (int e : exponents) {
            if (e != 0) return 0.0;
        }
        return coeffs_[0];
    }
    std::vector<int> key(exponents.begin(), exponents.end());
    if (static_cast<int>(key.size()) != layout_->nvars) {
        throw InvalidArgument("Taylor: exponent vector has wrong length");
    }
    auto it = layout_->index.find(key);
    return it == layout_->index.end() ? 0.0 : coeffs_[it->second];
}

double Taylor::derivative(std::span<const int> exponents) const
{
    double factor = 1.0;
    for (int e : exponents) {
        for (int k = 2; k <= e; ++k) factor *= k;
    }
    const int total = std::accumulate(exponents.begin(), exponents.end(), 0);
    if (layout_ && total > layout_->order) {
        throw InvalidArgument("Taylor: derivative beyond truncation order");
    }
    return factor * coeff(exponents);
}

double Taylor::d(int i) const
{
    std::vector<int> e(nvars(), 0);
    if (!layout_) return 0.0;
    e.at(i) += 1;
    return derivative(e);
}

double Taylor::d(int i, int j) const
{
    if (!layout_) return 0.0;
    std::vector<int> e(nvars(), 0);
    e.at(i) += 1;
    e.at(j) += 1;
    return derivative(e);
}

double Taylor::d(int i, int j, int k) const
{
    if (!layout_) return 0.0;
    std::vector<int> e(nvars(), 0);
    e.at(i) += 1;
    e.at(j) += 1;
    e.at(k) += 1;
    return derivative(e);
}

Taylor Taylor::truncated(int order) const
{
    if (!layout_ || order >= layout_->order) return *this;
    if (order < 0) throw InvalidArgument("Taylor: negative order");
    Taylor t;
    t.layout_ = detail::layout_for(layout_->nvars, order);
    t.coeffs_.assign(coeffs_.begin(), coeffs_.begin() + static_cast<long>(t.layout_->size()));
    return t;
}

Taylor Taylor::differentiate(int var) const
{
    if (!layout_) return Taylor(0.0);
    if (var < 0 || var >= layout_->nvars) throw InvalidArgument("Taylor: variable index out of range");
    if (layout_->order == 0) return constant(layout_->nvars, 0, 0.0);
    Taylor t = constant(layout_->nvars, layout_->order - 1, 0.0);
    const auto& src = layout_->derivative_source[var];
    for (std::size_t k = 0; k < t.coeffs_.size(); ++k) {
        const int s = src[k];
        t.coeffs_[k] = coeffs_[s] * layout_->exponents[s][var];
    }
    return t;
}

namespace {

// Bring two operands onto one layout.
std::shared_ptr<const detail::TaylorLayout> common_layout(const std::shared_ptr<const detail::TaylorLayout>& a,
                                                         const std::shared_ptr<const detail::TaylorLayout>& b)
{
    if (!a) return b;
    if (!b) return a;
    if (a->nvars != b->nvars) throw InvalidArgument("Taylor: mismatched variable counts");
    return a->order <= b->order ? a : b;
}

} // namespace

Taylor& Taylor::operator+=(const Taylor& rhs)
{
    auto layout = common_layout(layout_, rhs.layout_);
    if (layout != layout_) {
        if (!layout_) {
            const double c = coeffs_[0];
            coeffs_.assign(layout->size(), 0.0);
            coeffs_[0] = c;
        } else {
            coeffs_.resize(layout->size());
        }
        layout_ = layout;
    }
    const std::size_t n = std::min(coeffs_.size(), rhs.coeffs_.size());
    for (std::size_t k = 0; k < n; ++k) coeffs_[k] += rhs.coeffs_[k];
    return *this;
}

Taylor& Taylor::operator-=(const Taylor& rhs) { return *this += -rhs; }

Taylor& Taylor::operator*=(const Taylor& rhs)
{
    *this = *this * rhs;
    return *this;
}

Taylor& Taylor::operator/=(const Taylor& rhs)
{
    *this = *this / rhs;
    return *this;
}

Taylor operator-(const Taylor& a)
{
    Taylor r = a;
    for (double& c : r.coeffs_) c = -c;
    return r;
}

Taylor operator+(const Taylor& a, const Taylor& b)
{
    Taylor r = a;
    r += b;
    return r;
}

Taylor operator-(const Taylor& a, const Taylor& b)
{
    Taylor r = a;
    r += -b;
    return r;
}

Taylor operator*(const Taylor& a, const Taylor& b)
{
    if (!a.layout_) {
        Taylor r = b;
        for (double& c : r.coeffs_) c *= a.coeffs_[0];
        return r;
    }
    if (!b.layout_) {
        Taylor r = a;
        for (double& c : r.coeffs_) c *= b.coeffs_[0];
        return r;
    }
    auto layout = common_layout(a.layout_, b.layout_);
    Taylor r;
    r.layout_ = layout;
    r.coeffs_.assign(layout->size(), 0.0);
    for (const auto& [i, j, k] : layout->products) {
        r.coeffs_[k] += a.coeffs_[i] * b.coeffs_[j];
    }
    return r;
}

Taylor compose(const Taylor& a, std::span<const double> derivatives)
{
    if (derivatives.empty()) throw InvalidArgument("Taylor: compose needs at least f(a0)");
    if (!a.layout_) return Taylor(derivatives[0]);
    const int order = a.layout_->order;
    if (static_cast<int>(derivatives.size()) < order + 1) {
        throw InvalidArgument("Taylor: compose needs derivatives up to the truncation order");
    }
    Taylor delta = a;
    delta.coeffs_[0] = 0.0;
    // Horner in delta with coefficients f^(k)(a0) / k!
    std::vector<double> scaled(order + 1);
    double fact = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k > 0) fact *= k;
        scaled[k] = derivatives[k] / fact;
    }
    Taylor r = Taylor::constant(a.layout_->nvars, order, scaled[order]);
    for (int k = order - 1; k >= 0; --k) {
        r = r * delta;
        r.coeffs_[0] += scaled[k];
    }
    return r;
}

Taylor operator/(const Taylor& a, const Taylor& b)
{
    if (!b.layout_) return a * (1.0 / b.coeffs_[0]);
    return a * pow(b, -1.0);
}

Taylor pow(const Taylor& a, double r)
{
    const double x = a.value();
    const int order = a.order();
    std::vector<double> ds(order + 1);
    double falling = 1.0;
    for (int k = 0; k <= order; ++k) {
        ds[k] = falling * std::pow(x, r - k);
        falling *= (r - k);
    }
    return compose(a, ds);
}

Taylor sqrt(const Taylor& a) { return pow(a, 0.5); }

Taylor square(const Taylor& a) { return a * a; }

Taylor exp(const Taylor& a)
{
    std::vector<double> ds(a.order() + 1, std::exp(a.value()));
    return compose(a, ds);
}

Taylor log(const Taylor& a)
{
    const double x = a.value();
    std::vector<double> ds(a.order() + 1);
    ds[0] = std::log(x);
    double fact = 1.0; // (k-1)!
    for (int k = 1; k <= a.order(); ++k) {
        if (k > 1) fact *= (k - 1);
        ds[k] = ((k % 2 == 1) ? 1.0 : -1.0) * fact / std::pow(x, k);
    }
    return compose(a, ds);
}

Taylor sin(const Taylor& a)
{
    const double s = std::sin(a.value()), c = std::cos(a.value());
    const std::array<double, 4> cycle{s, c, -s, -c};
    std::vector<double> ds(a.order() + 1);
    for (int k = 0; k <= a.order(); ++k) ds[k] = cycle[k % 4];
    return compose(a, ds);
}

Taylor cos(const Taylor& a)
{
    const double s = std::sin(a.value()), c = std::cos(a.value());
    const std::array<double, 4> cycle{c, -s, -c, s};
    std::vector<double> ds(a.order() + 1);
    for (int k = 0; k <= a.order(); ++k) ds[k] = cycle[k % 4];
    return compose(a, ds);
}

} // namespace finsler
