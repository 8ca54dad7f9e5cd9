#pragma once

#include <memory>
#include <span>
#include <vector>

namespace finsler {

namespace detail {
struct TaylorLayout;
}

/// Truncated multivariate Taylor polynomial (forward-mode automatic
/// differentiation of arbitrary order).
///
/// Stores the coefficients c_a of  sum_a c_a dz^a  over multi-indices a with
/// |a| <= order, where dz is the offset from the expansion point. Hence
/// c_a = (d^a f)(z0) / a!. Monomials are graded by degree, and the ordering
/// inside one degree does not depend on the truncation order, so lowering the
/// order is a prefix copy.
///
/// A default-constructed Taylor is a plain constant with no variables; it
/// promotes to any layout in mixed arithmetic. Operands with different
/// truncation orders combine at the smaller order.
class Taylor {
public:
    Taylor() = default;
    Taylor(double value); // NOLINT(google-explicit-constructor): scalars promote

    static Taylor constant(int nvars, int order, double value);
    static Taylor variable(int nvars, int order, int index, double value);

    int nvars() const;
    int order() const;
    std::size_t size() const { return coeffs_.size(); }

    double value() const { return coeffs_[0]; }

    /// Raw coefficient c_a.
    double coeff(std::span<const int> exponents) const;
    /// Partial derivative d^a f at the expansion point (c_a * a!).
    double derivative(std::span<const int> exponents) const;
    double d(int i) const;
    double d(int i, int j) const;
    double d(int i, int j, int k) const;

    /// Series of the partial derivative along one variable (order drops by one).
    Taylor differentiate(int var) const;
    Taylor truncated(int order) const;

    const std::vector<double>& coefficients() const { return coeffs_; }

    Taylor& operator+=(const Taylor& rhs);
    Taylor& operator-=(const Taylor& rhs);
    Taylor& operator*=(const Taylor& rhs);
    Taylor& operator/=(const Taylor& rhs);

    friend Taylor operator-(const Taylor& a);
    friend Taylor operator+(const Taylor& a, const Taylor& b);
    friend Taylor operator-(const Taylor& a, const Taylor& b);
    friend Taylor operator*(const Taylor& a, const Taylor& b);
    friend Taylor operator/(const Taylor& a, const Taylor& b);

    /// f(a) from the derivatives f(a0), f'(a0), ..., f^(order)(a0).
    friend Taylor compose(const Taylor& a, std::span<const double> derivatives);

private:
    std::shared_ptr<const detail::TaylorLayout> layout_;
    std::vector<double> coeffs_{0.0};
};

Taylor sqrt(const Taylor& a);
Taylor exp(const Taylor& a);
Taylor log(const Taylor& a);
Taylor sin(const Taylor& a);
Taylor cos(const Taylor& a);
/// a^r for real r (a > 0 unless r is a non-negative integer).
Taylor pow(const Taylor& a, double r);
Taylor square(const Taylor& a);

inline double value_of(double x) { return x; }
inline double value_of(const Taylor& x) { return x.value(); }
inline double square(double x) { return x * x; }

} // namespace finsler
