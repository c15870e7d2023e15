#include "qsb/linalg.hpp"

#include <cmath>

namespace qsb {

double frobenius(const Matrix& a) { return a.norm(); }

double hermiticity_violation(const Matrix& a) {
    double ref = a.norm();
    if (ref == 0.0) return 0.0;
    return (a - a.adjoint()).norm() / ref;
}

void require_square(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch(a.rows(), a.cols());
    if (a.rows() < 1) throw SpecInvalid("matrix dimension must be >= 1");
    if (!a.allFinite()) throw SpecInvalid("matrix has non-finite entries");
}

void require_same_dim(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch(a.rows(), b.rows());
}

DensityMatrix validate_density(const Matrix& m, double herm_tol, double eig_floor,
                               double trace_tol) {
    require_square(m);
    double herm = hermiticity_violation(m);
    if (herm > herm_tol) throw NotHermitian(herm);

    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()),
                                             Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < eig_floor) throw NotPositive(min_eig);

    double trace_dev = std::abs(m.trace() - Complex(1.0, 0.0));
    if (trace_dev > trace_tol) throw TraceNotOne(trace_dev);

    return DensityMatrix{m};
}

namespace {

struct EigSystem {
    RealVector values;
    Matrix vectors;
};

EigSystem hermitian_eig(const Matrix& a, double herm_tol) {
    require_square(a);
    double herm = hermiticity_violation(a);
    if (herm > herm_tol) throw NotHermitian(herm);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
    return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

Matrix hermitian_sqrt(const Matrix& a, double herm_tol) {
    auto [values, vectors] = hermitian_eig(a, herm_tol);
    double max_eig = values.cwiseAbs().maxCoeff();
    double floor = tol::positivity_floor_rel * max_eig;
    RealVector roots(values.size());
    for (long i = 0; i < values.size(); ++i) {
        double v = values[i];
        if (v < -floor) throw NotPositive(v);
        roots[i] = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    return vectors * roots.asDiagonal() * vectors.adjoint();
}

Matrix hermitian_inv_sqrt(const Matrix& a, bool pseudo_inverse, double herm_tol) {
    auto [values, vectors] = hermitian_eig(a, herm_tol);
    double max_eig = values.maxCoeff();
    if (max_eig <= 0.0) throw SingularBelowFloor(max_eig);
    double floor = tol::positivity_floor_rel * max_eig;
    RealVector inv_roots(values.size());
    for (long i = 0; i < values.size(); ++i) {
        double v = values[i];
        if (v <= floor) {
            if (!pseudo_inverse) throw SingularBelowFloor(v);
            inv_roots[i] = 0.0;
        } else {
            inv_roots[i] = 1.0 / std::sqrt(v);
        }
    }
    return vectors * inv_roots.asDiagonal() * vectors.adjoint();
}

Matrix hermitian_inverse(const Matrix& a, bool pseudo_inverse) {
    Matrix r = hermitian_inv_sqrt(a, pseudo_inverse);
    return r * r;
}

OrthonormalBasis::OrthonormalBasis(Matrix vectors, double gram_tol)
    : vectors_(std::move(vectors)) {
    require_square(vectors_);
    Matrix gram = vectors_.adjoint() * vectors_;
    double dev = (gram - Matrix::Identity(dim(), dim())).norm();
    if (dev > gram_tol)
        throw SpecInvalid("basis is not orthonormal (Gram deviation " +
                          std::to_string(dev) + ")");
}

Matrix OrthonormalBasis::projector(long i) const {
    Vector v = vectors_.col(i);
    return v * v.adjoint();
}

OrthonormalBasis OrthonormalBasis::computational(long n) {
    return OrthonormalBasis(Matrix::Identity(n, n));
}

PositiveDiagonalOperator::PositiveDiagonalOperator(OrthonormalBasis b, RealVector w)
    : basis(std::move(b)), weights(std::move(w)) {
    if (weights.size() != basis.dim())
        throw DimensionMismatch(weights.size(), basis.dim());
    if (weights.minCoeff() <= 0.0)
        throw SpecInvalid("diagonal operator weights must be strictly positive");
}

Matrix PositiveDiagonalOperator::power(double exponent) const {
    long n = basis.dim();
    Matrix out = Matrix::Zero(n, n);
    for (long i = 0; i < n; ++i)
        out += std::pow(weights[i], exponent) * basis.projector(i);
    return out;
}

}  // namespace qsb
