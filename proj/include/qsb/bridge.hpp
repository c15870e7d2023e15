#pragma once

#include "qsb/experiment.hpp"

namespace qsb {

struct ScalingPotentials {
    RealVector a;  // initial-side, indexed like alpha
    RealVector b;  // final-side, indexed like beta; gauge sum(b) = 1
};

struct SinkhornDiagnostics {
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> residuals;  // per-sweep marginal residual
};

struct CouplingSolution {
    RealMatrix coupling;  // p~*, rows sum to alpha_tilde, cols to beta_tilde
    ScalingPotentials potentials;
    double kl = 0.0;  // KL(p~* || p)
    SinkhornDiagnostics diagnostics;
};

// Classical one-step bridge: the coupling (b_j / a_i)(alpha~_i / alpha_i) p_ij
// matching the observed marginals, found by alternating the two scaling
// updates from b = 1. Row sums of `prior` are used as alpha.
CouplingSolution solve_coupling(const RealMatrix& prior, const RealVector& alpha_tilde,
                                const RealVector& beta_tilde,
                                double tolerance = tol::sinkhorn_residual,
                                int max_iter = tol::sinkhorn_max_iter);

// sum_ij q_ij log(q_ij / p_ij), with 0 log 0 = 0. SupportViolation when q
// puts mass where p has none.
double rate_function(const RealMatrix& q, const RealMatrix& p);

struct SchrodingerSystem {
    PositiveDiagonalOperator phi0;  // sum_i a_i P0^i
    PositiveDiagonalOperator phi1;  // sum_j b_j P1^j
    Matrix phihat0;                 // phi0^{-1/2} rho0~ phi0^{-1/2}
    Matrix phihat1;                 // phi1^{-1/2} rho1~ phi1^{-1/2}
    double residual_backward = 0.0;  // phi0 vs adjoint-evolved phi1
    double residual_forward = 0.0;   // phihat1 vs forward-evolved phihat0
};

SchrodingerSystem schrodinger_system(const ExperimentSpec& spec, const PriorModel& prior,
                                     const ScalingPotentials& pot,
                                     double check_tol = tol::consistency);

// L~_ikj = phi1^{1/2} L_ikj phi0^{-1/2}.
std::vector<SelectedOp> updated_channel(const PriorModel& prior,
                                        const PositiveDiagonalOperator& phi0,
                                        const PositiveDiagonalOperator& phi1);

struct BridgeSolution {
    RealMatrix coupling;
    ScalingPotentials potentials;
    double kl = 0.0;
    SinkhornDiagnostics diagnostics;
    SchrodingerSystem system;
    std::vector<SelectedOp> updated_kraus;
    DensityMatrix rho0_tilde, rho1_tilde;
    double bridging_residual = 0.0;      // updated map on rho0~ vs rho1~
    double completeness_residual = 0.0;  // sum L~^dag L~ vs I
};

// Full pipeline: coupling, Schrodinger system, updated Kraus family, with the
// bridging and completeness identities verified.
BridgeSolution solve_bridge(const ExperimentSpec& spec, const PriorModel& prior,
                            double tolerance = tol::sinkhorn_residual,
                            int max_iter = tol::sinkhorn_max_iter);

}  // namespace qsb
