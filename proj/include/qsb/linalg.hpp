#pragma once

#include "qsb/errors.hpp"
#include "qsb/tolerances.hpp"
#include "qsb/types.hpp"

namespace qsb {

double frobenius(const Matrix& a);

// Relative Frobenius distance to the Hermitian part, ||A - A^dag|| / ||A||.
double hermiticity_violation(const Matrix& a);

void require_square(const Matrix& a);
void require_same_dim(const Matrix& a, const Matrix& b);

// A density matrix: Hermitian, positive semidefinite, unit trace.
struct DensityMatrix {
    Matrix mat;

    long dim() const { return mat.rows(); }
};

// Validates the three density-matrix invariants; throws NotHermitian,
// NotPositive or TraceNotOne with the measured violation.
DensityMatrix validate_density(const Matrix& m,
                               double herm_tol = tol::hermiticity,
                               double eig_floor = tol::psd_min_eigenvalue,
                               double trace_tol = tol::unit_trace);

// A^{1/2} for Hermitian positive semidefinite A, via eigendecomposition.
Matrix hermitian_sqrt(const Matrix& a, double herm_tol = tol::hermiticity * 100);

// A^{-1/2}. Eigenvalues below positivity_floor_rel * max_eig are treated as
// zero: with pseudo_inverse they are dropped, otherwise SingularBelowFloor.
Matrix hermitian_inv_sqrt(const Matrix& a, bool pseudo_inverse = false,
                          double herm_tol = tol::hermiticity * 100);

// A^{-1} with the same floor semantics.
Matrix hermitian_inverse(const Matrix& a, bool pseudo_inverse = false);

// Column vectors forming an orthonormal set.
class OrthonormalBasis {
public:
    OrthonormalBasis() = default;  // empty; fill via the validating constructor
    explicit OrthonormalBasis(Matrix vectors, double gram_tol = tol::basis_gram);

    long dim() const { return vectors_.rows(); }
    Vector vector(long i) const { return vectors_.col(i); }
    Matrix projector(long i) const;
    const Matrix& vectors() const { return vectors_; }

    static OrthonormalBasis computational(long n);

private:
    Matrix vectors_;
};

// sum_i w_i |v_i><v_i| with strictly positive weights. Powers are exact on
// the weights, which keeps phi^{+-1/2} free of eigensolver noise.
struct PositiveDiagonalOperator {
    OrthonormalBasis basis;
    RealVector weights;

    PositiveDiagonalOperator() = default;
    PositiveDiagonalOperator(OrthonormalBasis b, RealVector w);

    Matrix materialize() const { return power(1.0); }
    Matrix power(double exponent) const;
};

}  // namespace qsb
