#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace qsb {

// Base for everything thrown by this library. `code()` is a stable
// machine-readable tag; `violation()` carries the measured residual where
// one exists (NaN otherwise).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message,
          double violation = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(message), code_(std::move(code)), violation_(violation) {}

    const std::string& code() const noexcept { return code_; }
    double violation() const noexcept { return violation_; }

private:
    std::string code_;
    double violation_;
};

// Bad inputs: malformed specs, invalid matrices, infeasible problems.
// The CLI maps these to exit code 1.
class InputError : public Error {
    using Error::Error;
};

// A solve ran but an identity the theory guarantees failed to hold at
// tolerance, or an iteration did not converge. CLI exit code 2.
class VerificationError : public Error {
    using Error::Error;
};

struct NotHermitian : InputError {
    explicit NotHermitian(double v)
        : InputError("NotHermitian", "matrix is not Hermitian (relative violation " +
                                         std::to_string(v) + ")", v) {}
};

struct NotPositive : InputError {
    explicit NotPositive(double min_eig)
        : InputError("NotPositive", "matrix is not positive semidefinite (min eigenvalue " +
                                        std::to_string(min_eig) + ")", min_eig) {}
};

struct TraceNotOne : InputError {
    explicit TraceNotOne(double v)
        : InputError("TraceNotOne", "trace deviates from one by " + std::to_string(v), v) {}
};

struct DimensionMismatch : InputError {
    DimensionMismatch(long a, long b)
        : InputError("DimensionMismatch", "dimension mismatch: " + std::to_string(a) +
                                              " vs " + std::to_string(b)) {}
};

struct SingularBelowFloor : InputError {
    explicit SingularBelowFloor(double eig)
        : InputError("SingularBelowFloor",
                     "eigenvalue " + std::to_string(eig) +
                         " below the positivity floor; inverse square root refused", eig) {}
};

struct SpecInvalid : InputError {
    explicit SpecInvalid(const std::string& why) : InputError("SpecInvalid", why) {}
};

struct PriorDegenerate : InputError {
    explicit PriorDegenerate(const std::string& what, double v)
        : InputError("PriorDegenerate", what, v) {}
};

struct NoSplitChannel : InputError {
    NoSplitChannel() : InputError("NoSplitChannel", "operation requires a split channel") {}
};

struct SupportViolation : InputError {
    SupportViolation() : InputError("SupportViolation",
                                    "q assigns mass where the prior has none") {}
};

struct ZeroConditional : InputError {
    explicit ZeroConditional(double v)
        : InputError("ZeroConditional", "pre/post pair is unreachable (normalizer " +
                                            std::to_string(v) + ")", v) {}
};

struct ZeroOverlap : InputError {
    explicit ZeroOverlap(double v)
        : InputError("ZeroOverlap", "weak-value denominator below floor (" +
                                        std::to_string(v) + ")", v) {}
};

struct AssumptionViolated : InputError {
    explicit AssumptionViolated(const std::string& why, double v)
        : InputError("AssumptionViolated", why, v) {}
};

struct InfeasibleMarginals : InputError {
    explicit InfeasibleMarginals(const std::string& why)
        : InputError("InfeasibleMarginals", why) {}
};

struct TooLarge : InputError {
    explicit TooLarge(const std::string& why) : InputError("TooLarge", why) {}
};

struct NoConvergence : VerificationError {
    NoConvergence(int iters, double residual)
        : VerificationError("NoConvergence",
                            "no convergence after " + std::to_string(iters) +
                                " iterations (residual " + std::to_string(residual) + ")",
                            residual) {}
};

struct ConsistencyViolation : VerificationError {
    ConsistencyViolation(const std::string& what, double v)
        : VerificationError("ConsistencyViolation", what, v) {}
};

struct EquivalenceViolation : VerificationError {
    EquivalenceViolation(const std::string& what, double v)
        : VerificationError("EquivalenceViolation", what, v) {}
};

struct QuadratureTolExceeded : VerificationError {
    explicit QuadratureTolExceeded(double v)
        : VerificationError("QuadratureTolExceeded",
                            "quadrature normalization error " + std::to_string(v), v) {}
};

}  // namespace qsb
