#pragma once

#include "finsler/taylor.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace finsler {

/// A scalar field on a (u, v) patch, returned as its local Taylor expansion
/// in (du, dv) of the requested order.
using Field = std::function<Taylor(double u, double v, int order)>;

Field constant_field(double c);

enum class Provenance { raw, zoll_derived, conformal };

const char* to_string(Provenance p);

/// Metric E du^2 + 2 F du dv + G dv^2, area form Omega = s sqrt(EG - F^2) du^dv
/// with orientation sign s, and a 1-form beta = beta_u du + beta_v dv.
/// Empty F, beta_u, beta_v fields stand for zero.
struct SurfaceData {
    double u_min = 0.0;
    double u_max = 1.0;
    double v_min = 0.0;
    double v_max = 1.0;
    bool v_periodic = false;

    Field E;
    Field F;
    Field G;
    int orientation = 1;
    Field beta_u;
    Field beta_v;
    Provenance provenance = Provenance::raw;

    bool contains(double u, double v) const;
    /// Same data with Omega and beta both negated (same beta-geodesics).
    SurfaceData flipped() const;
};

/// Unit round sphere E = 1, G = sin^2 u on u in (delta, pi - delta), v periodic.
SurfaceData make_round_surface(double delta = 0.05);

/// Gauss curvature as a field (exact, computed on the series).
Field gauss_curvature_field(const SurfaceData& s);
double gauss_curvature(const SurfaceData& s, double u, double v);

/// Odd profile h on [-1, 1] for the rotational Zoll normal form.
struct ZollProfile {
    std::function<Taylor(const Taylor& t)> h;

    double operator()(double t) const { return h(Taylor(t)).value(); }

    /// h(t) = sum_k a_k t^k, no constraint enforced.
    static ZollProfile polynomial(std::vector<double> a);
    /// h(t) = (1 - t^2) sum_k c_k t^(2k+1): odd with h(+-1) = 0 by construction.
    static ZollProfile odd_factored(std::vector<double> c);
};

/// dsigma_0^2 = (1 + h(cos u))^2 du^2 + sin^2 u dv^2 on u in (delta, pi - delta).
/// Throws InvalidProfile when sampled checks of oddness, h(+-1) = 0 or
/// |h| < 1 fail.
SurfaceData make_zoll_revolution(const ZollProfile& h, double delta = 0.05);

/// (K0 dsigma^2, K0 Omega, *d log sqrt K0). Throws NonPositiveCurvature.
SurfaceData zoll_to_cfc_data(const SurfaceData& s, int check_grid = 64);

/// (L dsigma^2, L Omega, beta + *d log sqrt L). Throws NonPositiveFactor.
SurfaceData conformal_transform(const SurfaceData& s, const Field& L, int check_grid = 64);

/// Hodge star of the 1-form (a du + b dv), *theta1 = theta2 for an oriented
/// orthonormal coframe. Returns the two components at order `order`.
std::array<Taylor, 2> hodge_star(const SurfaceData& s, const Field& a, const Field& b, double u, double v, int order);

/// max over the interior grid of |dbeta/Omega - (1 - K)|, with dbeta from
/// sixth-order central differences.
double magnetic_residual(const SurfaceData& s, int grid_n);

/// max over the interior grid of |d(*beta)/Omega|.
double coclosed_residual(const SurfaceData& s, int grid_n);

struct MagneticSample {
    double s;
    double u;
    double v;
    double chi;
};

struct MagneticTrajectory {
    std::vector<MagneticSample> samples;
    double step = 0.0;
    Provenance provenance = Provenance::raw;
    bool truncated = false;
};

/// RK4 for kappa ds = beta at unit speed. chi is the heading against the
/// reference frame e1 = d_u / sqrt(E), e2 its oriented rotation.
MagneticTrajectory integrate_beta_geodesic(const SurfaceData& s, double u0, double v0, double heading, double length,
                                           double step);

/// Distance between initial and final states: position on the unit sphere
/// embedding plus the wrapped heading difference.
double closure_defect(const MagneticTrajectory& t);

/// Point (sin u cos v, sin u sin v, cos u).
std::array<double, 3> sphere_embedding(double u, double v);

/// Symmetric Hausdorff distance between the two polylines in the sphere
/// embedding, using point-to-segment distances.
double hausdorff_distance(const MagneticTrajectory& a, const MagneticTrajectory& b);

/// Integral of sqrt(L) ds along a trajectory (trapezoid rule): the length of
/// the same curve in the metric L dsigma^2.
double conformal_length(const MagneticTrajectory& t, const Field& L);

/// Coefficients of every form against (du, dv, dphi) at one point.
struct CoframeValue {
    using Form = std::array<double, 3>;
    Form eta1{}, eta2{}, eta12{};
    Form omega0{}, omega1{}, theta01{};
    double I = 0.0;
    double J = 0.0;
};

/// The coframing on the oriented orthonormal frame bundle: phi rotates the
/// reference frame, eta12 = rho - dphi with rho the reference connection
/// form, beta = -I eta2 + J eta1, and
///   omega0 = -eta12 + I eta2 - J eta1, omega1 = eta2, theta01 = eta1.
class FrameBundleCoframe {
public:
    struct Base {
        double A1, B1, B2;   // theta1 = A1 du + B1 dv, theta2 = B2 dv
        double rho_u, rho_v; // reference connection form
        double b1, b2;       // beta(e1), beta(e2)
    };

    explicit FrameBundleCoframe(SurfaceData data) : data_(std::move(data)) {}

    const SurfaceData& data() const { return data_; }
    Base base(double u, double v) const;
    CoframeValue at(double u, double v, double phi) const;
    static CoframeValue lift(const Base& b, double phi);

private:
    SurfaceData data_;
};

/// Checks magnetic_residual < 1e-4 on a 64^2 grid, else throws
/// MagneticEquationViolated.
FrameBundleCoframe build_cfc_coframe(const SurfaceData& s);

struct StructureResidual {
    std::array<double, 3> r{};
};

/// Residuals of
///   d omega0 + theta01 ^ omega1,
///   d omega1 + (omega0 - I omega1 + J theta01) ^ theta01,
///   d theta01 - (omega0 - I omega1 + J theta01) ^ omega1
/// on an n^3 grid over (u, v, phi) with sixth-order central differences.
/// `i_offset` is added to I in the bracket only (negative controls).
StructureResidual structure_equation_residual(const FrameBundleCoframe& c, int grid_n, double i_offset = 0.0);

} // namespace finsler
