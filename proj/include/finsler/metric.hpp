#pragma once

#include "finsler/numeric_jet.hpp"
#include "finsler/taylor.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using TaylorVec = std::vector<Taylor>;

/// A Finsler norm F(x, y) on one coordinate chart of dimension m.
///
/// The norm is always available in double precision. Constructors that know
/// a closed form also supply an evaluator over Taylor arithmetic, from which
/// exact derivatives of F^2 are obtained; otherwise the derivative layer
/// falls back to central differences. Oracles are immutable after
/// construction and may be shared across threads.
class MetricOracle {
public:
    using Norm = std::function<double(const Vec& x, const Vec& y)>;
    using AnalyticNorm = std::function<Taylor(const TaylorVec& x, const TaylorVec& y)>;
    using Domain = std::function<bool(const Vec& x)>;

    MetricOracle(std::string name, int dim, Domain domain, Norm norm, AnalyticNorm analytic = {},
                 bool reversible = false);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    /// Reversibility claimed by the constructor (tested, never assumed).
    bool reversible() const { return reversible_; }
    bool has_analytic() const { return static_cast<bool>(analytic_); }
    /// Radius of a ball around the chart origin where sampling is safe.
    double sample_radius() const { return sample_radius_; }
    MetricOracle with_sample_radius(double r) const;

    bool contains(const Vec& x) const;
    double norm(const Vec& x, const Vec& y) const { return norm_(x, y); }
    Taylor analytic(const TaylorVec& x, const TaylorVec& y) const { return analytic_(x, y); }

private:
    std::string name_;
    int dim_;
    Domain domain_;
    Norm norm_;
    AnalyticNorm analytic_;
    bool reversible_;
    double sample_radius_ = 1.0;
};

/// Derivatives of L = F^2 up to second order.
struct SecondJet {
    double F2 = 0.0;
    Vec dy;  ///< dL/dy^i
    Vec dx;  ///< dL/dx^i
    Mat dyy; ///< d2L/dy^i dy^j
    Mat dxy; ///< (i, j) = d2L/dy^i dx^j
};

struct FundamentalTensor {
    Mat g;
    double min_eigenvalue = 0.0;
};

/// C_ijk = 1/4 d3(F^2)/dy^i dy^j dy^k, stored flat with index (i*m + j)*m + k.
struct CartanTensorValue {
    int dim = 0;
    std::vector<double> c;

    double operator()(int i, int j, int k) const { return c[(i * dim + j) * dim + k]; }
    double norm() const;
    /// max_ij |C_ijk y^k|
    double contraction_defect(const Vec& y) const;
};

struct DerivativeOptions {
    double relative_step = 1e-2;
    int levels = 3;
};

inline constexpr double kConvexityFloor = 1e-8;

double eval_F(const MetricOracle& oracle, const Vec& x, const Vec& y);

SecondJet second_jet(const MetricOracle& oracle, const Vec& x, const Vec& y, const DerivativeOptions& opts = {});

FundamentalTensor fundamental_tensor(const MetricOracle& oracle, const Vec& x, const Vec& y,
                                     double floor = kConvexityFloor, const DerivativeOptions& opts = {});

CartanTensorValue cartan_tensor(const MetricOracle& oracle, const Vec& x, const Vec& y,
                                const DerivativeOptions& opts = {});

/// Rescales y so that F(x, y) = 1.
Vec normalize(const MetricOracle& oracle, const Vec& x, const Vec& y);

/// Drops the analytic evaluator, forcing the finite-difference path.
MetricOracle numeric_only(const MetricOracle& oracle);

} // namespace finsler
