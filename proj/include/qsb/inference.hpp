#pragma once

#include "qsb/reversal.hpp"

namespace qsb {

// P_tau(z | x_i, y_j) for a projective split: conditional probability of the
// intervening outcome given the endpoint pair. ZeroConditional when the pair
// is unreachable.
RealVector conditional_outcome_prob(const ExperimentSpec& spec, long i, long j);

struct IntermediateDistribution {
    double tau = 0.0;
    RealVector outcomes;    // eigenvalues of Z
    RealVector probs;       // P~*_tau(z)
    RealVector varphi;      // backward factor phi(tau, z)
    RealVector varphi_hat;  // forward factor phihat(tau, z)
};

// Most likely intervening projective statistics: the product form
// phi(tau,z) phihat(tau,z), verified against the disintegration
// sum_ij p~*_ij P_tau(z|i,j).
IntermediateDistribution most_likely_projective_distribution(
    const ExperimentSpec& spec, const BridgeSolution& bridge,
    double disintegration_tol = 1e-12);

struct SplitUpdatedChannel {
    DensityMatrix rho_tau;               // sum_z P~*(z) |z><z|
    std::vector<SelectedOp> first_leg;   // maps rho0~ -> rho_tau~
    std::vector<SelectedOp> second_leg;  // maps rho_tau~ -> rho1~
    double residual_first = 0.0;
    double residual_second = 0.0;
    double residual_composition = 0.0;  // legs composed vs full updated map
};

SplitUpdatedChannel intermediate_state_and_split(const ExperimentSpec& spec,
                                                 const BridgeSolution& bridge);

struct ReversedIntermediateReport {
    IntermediateDistribution dist;  // from psi, psihat
    RealVector psi, psi_hat;
    double residual_rev1 = 0.0;      // P~* vs psi P_tau phi
    double residual_rev2 = 0.0;      // P~* vs phihat P_tau^{-1} psihat
    double residual_forward = 0.0;   // reversed product vs forward product
    double residual_leg1 = 0.0;      // N~(tau,1) maps rho1~ -> rho_tau~
    double residual_leg0 = 0.0;      // N~(0,tau) maps rho_tau~ -> rho0~
    double residual_equiv = 0.0;     // reversed legs vs transformed forward legs
};

// Time-reversed route to the same distribution via the per-segment reversed
// families, with every identity the construction promises checked.
ReversedIntermediateReport reversed_projective_distribution(
    const ExperimentSpec& spec, const PriorModel& prior, const BridgeSolution& bridge,
    const ReversedBridge& reversed, double check_tol = tol::consistency);

struct GeneralizedOutcomeDistribution {
    std::vector<double> outcomes;
    std::vector<double> weights;    // quadrature weights (1 for discrete)
    RealVector density_forward;     // tr{phi_tau2 Omega phihat_tau1 Omega^dag}
    RealVector density_reversed;    // via the time-reversed maps
    double total_forward = 0.0;
    double total_reversed = 0.0;
    bool continuous = false;
};

// Most likely generalized-measurement outcome distribution. The experiment.s
// channel must carry the same family so the bridge was solved on the matching
// prior. QuadratureTolExceeded when the probability mass misses 1 beyond
// quad_tol (continuous families).
GeneralizedOutcomeDistribution generalized_distribution(
    const ExperimentSpec& spec, const PriorModel& prior, const BridgeSolution& bridge,
    double quad_tol = tol::quadrature_norm, double route_tol = 1e-8);

// Omega^delta_zbar = (delta/2pi)^{1/4} sum_z exp(-delta (z - zbar)^2 / 4) P_z.
Matrix weak_operator(const Observable& z, double delta, double zbar);

// Quadrature grid for zbar integrals: uniform trapezoid on
// [min_z - 8/sqrt(delta) max(1, spread), max_z + 8/sqrt(delta) max(1, spread)].
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureGrid weak_quadrature_grid(const RealVector& eigenvalues, double delta,
                                    int node_count);

// The weak family discretized on that grid, as a continuous
// GeneralizedMeasurement.
GeneralizedMeasurement weak_family(const Observable& z, double delta, int node_count);

// Weak value of the split spec's observable for the pre/post pair (i, j):
// Re tr{sigma_tau^j Z sigmahat_tau^i} / tr{sigma_tau^j sigmahat_tau^i}.
double weak_value(const ExperimentSpec& spec, long i, long j);

// Finite-strength conditional average int zbar P_delta(zbar | i, j) dzbar by
// quadrature; converges to weak_value at rate O(delta).
double finite_delta_weak_average(const ExperimentSpec& spec, long i, long j,
                                 double delta, int node_count = 2001);

struct WeakValueResult {
    double value = 0.0;        // the agreed most-likely weak value
    double tau = 0.0;
    double delta_used = 0.0;   // 0 = analytic limit
    double quadrature_error_estimate = 0.0;
    double forward = 0.0;        // Re tr(phi_tau Z phihat_tau)
    double reversed = 0.0;       // Re tr(psi_tau Z_rev psihat_tau)
    double disintegration = 0.0; // sum_ij p~*_ij Z_W^ij
};

// Most likely weak value, computed through the forward potentials, through
// the time-reversed maps, and through the coupling disintegration; the three
// routes must agree.
WeakValueResult most_likely_weak_value(const ExperimentSpec& spec,
                                       const PriorModel& prior,
                                       const BridgeSolution& bridge,
                                       double agree_tol = 1e-9);

}  // namespace qsb
