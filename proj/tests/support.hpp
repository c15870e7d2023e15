#pragma once

#include <random>

#include "qsb/inference.hpp"

// Shared builders for the test suites: the two-level amplitude-damping
// experiment, random well-conditioned instances, and small helpers.
namespace qsb::testing {

inline OrthonormalBasis x_basis() {
    Matrix v(2, 2);
    double s = 1.0 / std::sqrt(2.0);
    v << s, s, s, -s;
    return OrthonormalBasis(v);
}

inline OrthonormalBasis rotation_basis(double theta) {
    Matrix v(2, 2);
    v << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    return OrthonormalBasis(v);
}

inline Observable sigma_z() {
    RealVector eig(2);
    eig << 1.0, -1.0;
    return Observable(OrthonormalBasis::computational(2), eig);
}

inline RealVector vec2(double a, double b) {
    RealVector v(2);
    v << a, b;
    return v;
}

// Two-level amplitude-damping experiment: x-basis preparation
// with weights (2/3, 1/3), z-basis post-selection reporting (3/4, 1/4),
// gamma = 1.5, and an intervening z measurement at tau.
inline ExperimentSpec damping_spec(double tau = 0.5, bool weak_slot = false,
                                   double gamma = 1.5) {
    IntermediateMeasurement meas;
    if (weak_slot)
        meas = WeakMeasurement{sigma_z(), 0.0};
    else
        meas = ProjectiveMeasurement{sigma_z()};
    return ExperimentSpec{2,
                          x_basis(),
                          OrthonormalBasis::computational(2),
                          vec2(2.0 / 3.0, 1.0 / 3.0),
                          SplitChannel{amplitude_damping_family(gamma),
                                       amplitude_damping_family(gamma), meas, tau},
                          vec2(2.0 / 3.0, 1.0 / 3.0),
                          vec2(0.75, 0.25)};
}

// All bases aligned with Z, depolarizing dynamics: the configuration where
// the intervening distribution interpolates alpha~ -> beta~.
inline ExperimentSpec aligned_spec(double tau = 0.5, double gamma = 1.2) {
    return ExperimentSpec{2,
                          OrthonormalBasis::computational(2),
                          OrthonormalBasis::computational(2),
                          vec2(0.5, 0.5),
                          SplitChannel{depolarizing_family(2, gamma),
                                       depolarizing_family(2, gamma),
                                       ProjectiveMeasurement{sigma_z()}, tau},
                          vec2(0.7, 0.3),
                          vec2(0.4, 0.6)};
}

// Identity dynamics, x-basis preparation, rotated post-selection: the
// pure-state pair whose weak value is tan(theta + pi/4).
inline ExperimentSpec anomalous_spec(double theta, double tau = 0.5) {
    return ExperimentSpec{2,
                          x_basis(),
                          rotation_basis(theta),
                          vec2(0.5, 0.5),
                          SplitChannel{identity_family(2), identity_family(2),
                                       WeakMeasurement{sigma_z(), 0.0}, tau},
                          vec2(0.5, 0.5),
                          vec2(0.5, 0.5)};
}

inline Matrix random_complex_matrix(std::mt19937_64& rng, long n) {
    std::normal_distribution<double> gauss;
    Matrix m(n, n);
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c) m(r, c) = Complex(gauss(rng), gauss(rng));
    return m;
}

inline OrthonormalBasis random_basis(std::mt19937_64& rng, long n) {
    Eigen::HouseholderQR<Matrix> qr(random_complex_matrix(rng, n));
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return OrthonormalBasis(q, 1e-10);
}

inline KrausChannel random_channel(std::mt19937_64& rng, long n, int op_count = 2) {
    std::vector<Matrix> raw;
    Matrix gram = Matrix::Zero(n, n);
    for (int k = 0; k < op_count; ++k) {
        raw.push_back(random_complex_matrix(rng, n));
        gram += raw.back().adjoint() * raw.back();
    }
    Matrix fix = hermitian_inv_sqrt(gram);
    KrausChannel ch;
    for (Matrix& g : raw) ch.ops.push_back(g * fix);
    return ch;
}

inline RealVector random_distribution(std::mt19937_64& rng, long n,
                                      double min_weight = 0.08) {
    std::uniform_real_distribution<double> u(min_weight, 1.0);
    RealVector v(n);
    for (long i = 0; i < n; ++i) v[i] = u(rng);
    return v / v.sum();
}

inline DensityMatrix random_density(std::mt19937_64& rng, long n) {
    Matrix g = random_complex_matrix(rng, n);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace();
    return validate_density(rho);
}

// Random unsplit experiment with a strictly positive prior joint.
inline ExperimentSpec random_spec(std::mt19937_64& rng, long n) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        ExperimentSpec spec{n,
                            random_basis(rng, n),
                            random_basis(rng, n),
                            random_distribution(rng, n),
                            random_channel(rng, n),
                            random_distribution(rng, n),
                            random_distribution(rng, n)};
        try {
            PriorModel prior = prior_joint(spec);
            if (prior.joint.minCoeff() > 1e-6) return spec;
        } catch (const PriorDegenerate&) {
        }
    }
    throw std::runtime_error("no well-conditioned random spec found");
}

// Unitary Markov family exp(-i H (t2 - t1)) from a random Hamiltonian.
inline TimedChannelFamily unitary_family(const Matrix& hamiltonian) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hamiltonian);
    Matrix v = es.eigenvectors();
    RealVector w = es.eigenvalues();
    long n = hamiltonian.rows();
    return {n, [v, w, n](double t1, double t2) {
                Vector phases(n);
                for (long k = 0; k < n; ++k)
                    phases[k] = std::polar(1.0, -w[k] * (t2 - t1));
                Matrix u = v * phases.asDiagonal() * v.adjoint();
                return KrausChannel{{u}};
            }};
}

inline Matrix fix_hamiltonian(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Random split experiment with a projective slot and strictly positive prior.
inline ExperimentSpec random_split_spec(std::mt19937_64& rng, long n,
                                        double tau = 0.4) {
    std::uniform_real_distribution<double> gamma_dist(0.6, 1.8);
    for (int attempt = 0; attempt < 64; ++attempt) {
        TimedChannelFamily pre, post;
        if (attempt % 2 == 0) {
            pre = depolarizing_family(n, gamma_dist(rng));
            post = unitary_family(fix_hamiltonian(random_complex_matrix(rng, n)));
        } else {
            pre = unitary_family(fix_hamiltonian(random_complex_matrix(rng, n)));
            post = depolarizing_family(n, gamma_dist(rng));
        }
        RealVector zeig(n);
        for (long k = 0; k < n; ++k) zeig[k] = static_cast<double>(n - 1 - 2 * k);
        ExperimentSpec spec{
            n,
            random_basis(rng, n),
            random_basis(rng, n),
            random_distribution(rng, n),
            SplitChannel{pre, post,
                         ProjectiveMeasurement{Observable(random_basis(rng, n), zeig)},
                         tau},
            random_distribution(rng, n),
            random_distribution(rng, n)};
        try {
            PriorModel prior = prior_joint(spec);
            RealVector ptau = prior_projective_distribution(spec);
            if (prior.joint.minCoeff() > 1e-6 && ptau.minCoeff() > 1e-6) return spec;
        } catch (const PriorDegenerate&) {
        }
    }
    throw std::runtime_error("no well-conditioned random split spec found");
}

}  // namespace qsb::testing
