#include "qsb/channel.hpp"

#include <cmath>
#include <numbers>

namespace qsb {

double completeness_violation(std::span<const Matrix> ops) {
    if (ops.empty()) return std::numeric_limits<double>::infinity();
    long n = ops.front().rows();
    Matrix sum = Matrix::Zero(n, n);
    for (const Matrix& k : ops) sum += k.adjoint() * k;
    return (sum - Matrix::Identity(n, n)).norm();
}

double KrausChannel::completeness_violation() const {
    return qsb::completeness_violation(ops);
}

void KrausChannel::validate(double completeness_tol) const {
    if (ops.empty()) throw SpecInvalid("Kraus channel has no operators");
    long n = ops.front().rows();
    for (const Matrix& k : ops) {
        require_square(k);
        if (k.rows() != n) throw DimensionMismatch(k.rows(), n);
    }
    double dev = completeness_violation();
    if (dev > completeness_tol)
        throw SpecInvalid("Kraus completeness violated by " + std::to_string(dev));
}

KrausChannel KrausChannel::identity(long n) {
    return KrausChannel{{Matrix::Identity(n, n)}};
}

Matrix apply_ops(std::span<const Matrix> ops, const Matrix& rho) {
    if (ops.empty()) throw SpecInvalid("empty operator list");
    require_same_dim(ops.front(), rho);
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const Matrix& k : ops) out += k * rho * k.adjoint();
    return out;
}

Matrix apply_adjoint_ops(std::span<const Matrix> ops, const Matrix& x) {
    if (ops.empty()) throw SpecInvalid("empty operator list");
    require_same_dim(ops.front(), x);
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (const Matrix& k : ops) out += k.adjoint() * x * k;
    return out;
}

Matrix apply_channel(const KrausChannel& ch, const Matrix& rho) {
    return apply_ops(ch.ops, rho);
}

DensityMatrix apply_channel(const KrausChannel& ch, const DensityMatrix& rho) {
    return DensityMatrix{apply_ops(ch.ops, rho.mat)};
}

Matrix apply_adjoint_channel(const KrausChannel& ch, const Matrix& x) {
    return apply_adjoint_ops(ch.ops, x);
}

KrausChannel compose_channels(const KrausChannel& first, const KrausChannel& second) {
    if (first.dim() != second.dim())
        throw DimensionMismatch(first.dim(), second.dim());
    KrausChannel out;
    out.ops.reserve(first.ops.size() * second.ops.size());
    for (const Matrix& b : second.ops)
        for (const Matrix& a : first.ops) out.ops.push_back(b * a);
    return out;
}

double map_distance(std::span<const Matrix> lhs, std::span<const Matrix> rhs, long n) {
    double worst = 0.0;
    Matrix unit = Matrix::Zero(n, n);
    for (long r = 0; r < n; ++r) {
        for (long s = 0; s < n; ++s) {
            unit.setZero();
            unit(r, s) = 1.0;
            worst = std::max(worst, (apply_ops(lhs, unit) - apply_ops(rhs, unit)).norm());
        }
    }
    return worst;
}

KrausChannel TimedChannelFamily::operator()(double t1, double t2) const {
    if (!(t1 >= 0.0 && t2 >= t1))
        throw SpecInvalid("channel family interval requires 0 <= t1 <= t2");
    return make(t1, t2);
}

TimedChannelFamily identity_family(long n) {
    return {n, [n](double, double) { return KrausChannel::identity(n); }};
}

TimedChannelFamily amplitude_damping_family(double gamma) {
    if (gamma < 0.0) throw SpecInvalid("decay constant must be nonnegative");
    return {2, [gamma](double t1, double t2) {
                double lambda = 1.0 - std::exp(-gamma * (t2 - t1));
                Matrix k0(2, 2), k1(2, 2);
                k0 << 1.0, 0.0, 0.0, std::sqrt(1.0 - lambda);
                k1 << 0.0, std::sqrt(lambda), 0.0, 0.0;
                if (lambda == 0.0) return KrausChannel{{k0}};
                return KrausChannel{{k0, k1}};
            }};
}

namespace {

// Heisenberg-Weyl displacement X^a Z^b on C^n.
Matrix weyl(long n, long a, long b) {
    Matrix w = Matrix::Zero(n, n);
    const double two_pi = 2.0 * std::numbers::pi;
    for (long k = 0; k < n; ++k) {
        Complex phase = std::polar(1.0, two_pi * static_cast<double>(b * k) / n);
        w((k + a) % n, k) = phase;
    }
    return w;
}

}  // namespace

TimedChannelFamily depolarizing_family(long n, double gamma) {
    if (gamma < 0.0) throw SpecInvalid("depolarizing rate must be nonnegative");
    if (n < 2) throw SpecInvalid("depolarizing channel needs dim >= 2");
    return {n, [n, gamma](double t1, double t2) {
                double lambda = 1.0 - std::exp(-gamma * (t2 - t1));
                KrausChannel ch;
                double id_weight = 1.0 - lambda + lambda / static_cast<double>(n * n);
                ch.ops.push_back(std::sqrt(id_weight) * Matrix::Identity(n, n));
                double w = std::sqrt(lambda) / static_cast<double>(n);
                for (long a = 0; a < n; ++a)
                    for (long b = 0; b < n; ++b) {
                        if (a == 0 && b == 0) continue;
                        if (w > 0.0) ch.ops.push_back(w * weyl(n, a, b));
                    }
                return ch;
            }};
}

}  // namespace qsb
