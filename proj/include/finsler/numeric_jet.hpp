#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace finsler {

/// Mixed partial derivative request for a scalar function on R^N.
struct JetRequest {
    std::function<double(const Eigen::VectorXd&)> target;
    Eigen::VectorXd base;
    /// Derivative order along each axis; the total must be 1, 2 or 3.
    std::vector<int> multi_index;
    /// Step relative to max(1, |base|_inf).
    double relative_step = 1e-2;
    int levels = 3;
    /// Optional domain predicate; every stencil point must satisfy it.
    std::function<bool(const Eigen::VectorXd&)> domain;
};

struct JetValue {
    double value = 0.0;
    double error = 0.0;
};

/// Central differences with Richardson extrapolation over `levels` halvings.
/// Throws StencilOutsideDomain or NoisyDerivative.
JetValue numeric_jet(const JetRequest& req);

/// Derivative of a vector-valued function along up to three (possibly
/// repeated) directions: d/dt1 ... d/dtk f(base + t1 d1 + ... + tk dk).
struct DirectionalJetRequest {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> target;
    Eigen::VectorXd base;
    std::vector<Eigen::VectorXd> directions;
    double relative_step = 1e-2;
    int levels = 3;
    std::function<bool(const Eigen::VectorXd&)> domain;
};

struct VectorJetValue {
    Eigen::VectorXd value;
    Eigen::VectorXd error;
};

VectorJetValue directional_jet(const DirectionalJetRequest& req);

} // namespace finsler
