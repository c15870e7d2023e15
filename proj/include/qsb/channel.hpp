#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qsb/linalg.hpp"
#include "qsb/types.hpp"

namespace qsb {

// A finite Kraus family {K_k} with sum_k K_k^dag K_k = I.
struct KrausChannel {
    std::vector<Matrix> ops;

    long dim() const { return ops.empty() ? 0 : ops.front().rows(); }
    double completeness_violation() const;

    // Throws SpecInvalid if empty/ragged, channel_completeness exceeded.
    void validate(double completeness_tol = tol::channel_completeness) const;

    static KrausChannel identity(long n);
};

// rho -> sum_k K_k rho K_k^dag, for any operator list (channels, selected
// families, legs).
Matrix apply_ops(std::span<const Matrix> ops, const Matrix& rho);
// X -> sum_k K_k^dag X K_k.
Matrix apply_adjoint_ops(std::span<const Matrix> ops, const Matrix& x);

Matrix apply_channel(const KrausChannel& ch, const Matrix& rho);
DensityMatrix apply_channel(const KrausChannel& ch, const DensityMatrix& rho);
Matrix apply_adjoint_channel(const KrausChannel& ch, const Matrix& x);

double completeness_violation(std::span<const Matrix> ops);

// Operators {B_j A_i} for all pairs: apply `first`, then `second`.
KrausChannel compose_channels(const KrausChannel& first, const KrausChannel& second);

// Two operator lists act identically as maps: checked on the matrix-unit
// basis E_{rs}.
double map_distance(std::span<const Matrix> lhs, std::span<const Matrix> rhs, long n);

// Markov family of channels indexed by a time interval: K(t,t) is the
// identity channel and K(t3,t2) after K(t2,t1) equals K(t3,t1) as maps.
struct TimedChannelFamily {
    long dim = 0;
    std::function<KrausChannel(double t1, double t2)> make;

    KrausChannel operator()(double t1, double t2) const;
};

TimedChannelFamily identity_family(long n);
// Two-level decay |1> -> |0> in the computational basis with probability
// lambda(t2-t1) = 1 - exp(-gamma (t2-t1)).
TimedChannelFamily amplitude_damping_family(double gamma);
// rho -> (1-lambda) rho + lambda I/n with lambda(dt) = 1 - exp(-gamma dt),
// realized through the Heisenberg-Weyl Kraus family.
TimedChannelFamily depolarizing_family(long n, double gamma);

}  // namespace qsb
