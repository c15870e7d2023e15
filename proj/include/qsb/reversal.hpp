#pragma once

#include "qsb/bridge.hpp"

namespace qsb {

// M_k = rho_in^{1/2} L_k^dag rho_out^{-1/2}. The anchors must be channel
// consistent (rho_out is the image of rho_in); that is what makes the
// reversed family complete. SingularBelowFloor if rho_out is singular.
std::vector<Matrix> reverse_channel(std::span<const Matrix> ops, const Matrix& rho_in,
                                    const Matrix& rho_out);

std::vector<SelectedOp> reverse_selected(std::span<const SelectedOp> ops,
                                         const Matrix& rho_in, const Matrix& rho_out);

struct ReversedBridge {
    std::vector<SelectedOp> reversed_kraus;          // M_ikj(0,1)
    RealVector c, d;                                 // reverse potentials
    PositiveDiagonalOperator psi0, psi1;
    Matrix psihat0, psihat1;
    std::vector<SelectedOp> updated_reversed_kraus;  // M~_ikj(0,1)
    double residual_bridging = 0.0;     // M~ maps rho1~ -> rho0~
    double residual_adjoint = 0.0;      // psi1 vs adjoint-reversed psi0
    double residual_forward = 0.0;      // psihat0 vs reversed-evolved psihat1
    double residual_completeness = 0.0;
    double residual_coupling_match = 0.0;  // reversed closed form vs forward p~*
};

// Closed-form reverse solve: c_i = alpha~_i / (a_i alpha_i), d_j =
// beta~_j / (b_j beta_j), plus the reversed Kraus update and the identity
// checks the construction guarantees. With cross_check_sinkhorn an
// independent Sinkhorn solve of the time-reversed problem must agree with
// the closed form within cross_tol.
ReversedBridge solve_reverse_bridge(const ExperimentSpec& spec, const PriorModel& prior,
                                    const BridgeSolution& forward,
                                    bool cross_check_sinkhorn = false,
                                    double cross_tol = 1e-9);

struct EquivalenceReport {
    double operator_residual = 0.0;   // M~ vs rho0~^{1/2} L~^dag rho1~^{-1/2}
    double sym_rho0 = 0.0;            // rho0~ vs psi0 rho0 phi0
    double sym_rho1 = 0.0;
    double hat_rho0 = 0.0;            // rho0~ vs psihat0 rho0^{-1} phihat0
    double hat_rho1 = 0.0;
    double coefficient_identity = 0.0;  // alpha~ = a c alpha, beta~ = b d beta
};

// Verifies the forward/reverse equivalence identities; throws
// EquivalenceViolation with the failing residual if any exceeds tolerance.
EquivalenceReport check_equivalence(const ExperimentSpec& spec, const PriorModel& prior,
                                    const BridgeSolution& forward,
                                    const ReversedBridge& reversed,
                                    double op_tol = tol::reversal_operator,
                                    double state_tol = tol::consistency);

}  // namespace qsb
