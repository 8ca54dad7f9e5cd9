#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace finsler {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on user-supplied parameters failed.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ZeroVector : public Error {
public:
    ZeroVector() : Error("tangent vector is zero") {}
};

class ConvexityError : public Error {
public:
    ConvexityError(const std::string& what, double min_eigenvalue)
        : Error(what), min_eigenvalue(min_eigenvalue) {}
    double min_eigenvalue;
};

class StencilOutsideDomain : public Error {
public:
    using Error::Error;
};

class NoisyDerivative : public Error {
public:
    using Error::Error;
};

class StepTooLarge : public Error {
public:
    StepTooLarge(const std::string& what, double drift) : Error(what), drift(drift) {}
    double drift;
};

class DegenerateCloud : public Error {
public:
    using Error::Error;
};

class DegenerateFlag : public Error {
public:
    using Error::Error;
};

class BranchAmbiguity : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, std::vector<double> residuals)
        : Error(what), residual_history(std::move(residuals)) {}
    std::vector<double> residual_history;
};

class OutsideBody : public DomainError {
public:
    using DomainError::DomainError;
};

class InvalidProfile : public Error {
public:
    using Error::Error;
};

class NonPositiveCurvature : public Error {
public:
    NonPositiveCurvature(const std::string& what, double u, double v)
        : Error(what), u(u), v(v) {}
    double u, v;
};

class NonPositiveFactor : public Error {
public:
    using Error::Error;
};

class MagneticEquationViolated : public Error {
public:
    MagneticEquationViolated(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

} // namespace finsler
