#pragma once

// Numerical tolerances, collected here so tests and callers agree on one set
// of numbers. Operations take these as defaulted parameters; override per
// call when an experiment needs something else.
namespace qsb::tol {

inline constexpr double hermiticity = 1e-12;          // relative Frobenius
inline constexpr double psd_min_eigenvalue = -1e-12;  // absolute
inline constexpr double unit_trace = 1e-12;
inline constexpr double basis_gram = 1e-12;

inline constexpr double channel_completeness = 1e-10;
inline constexpr double channel_markov = 1e-10;
inline constexpr double generalized_completeness = 1e-8;  // quadrature families

// Eigenvalues below positivity_floor_rel * max_eigenvalue count as zero.
inline constexpr double positivity_floor_rel = 1e-12;
inline constexpr double sqrt_multiply_back = 1e-9;

inline constexpr double sinkhorn_residual = 1e-12;  // default marginal tolerance
inline constexpr int sinkhorn_max_iter = 10000;
inline constexpr double probability_sum = 1e-12;

inline constexpr double consistency = 1e-10;        // Schrodinger-system identities
inline constexpr double endpoint_bridging = 1e-9;   // updated channel maps rho0~ -> rho1~
inline constexpr double reversal_operator = 1e-9;   // operator-level time-reversal match

inline constexpr double quadrature_norm = 1e-6;     // weak-family normalization
inline constexpr double overlap_floor = 1e-12;      // weak-value denominator guard

}  // namespace qsb::tol
