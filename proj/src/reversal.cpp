#include "qsb/reversal.hpp"

namespace qsb {

std::vector<Matrix> reverse_channel(std::span<const Matrix> ops, const Matrix& rho_in,
                                    const Matrix& rho_out) {
    Matrix in_half = hermitian_sqrt(rho_in);
    Matrix out_invhalf = hermitian_inv_sqrt(rho_out);
    std::vector<Matrix> out;
    out.reserve(ops.size());
    for (const Matrix& k : ops) out.push_back(in_half * k.adjoint() * out_invhalf);
    return out;
}

std::vector<SelectedOp> reverse_selected(std::span<const SelectedOp> ops,
                                         const Matrix& rho_in, const Matrix& rho_out) {
    Matrix in_half = hermitian_sqrt(rho_in);
    Matrix out_invhalf = hermitian_inv_sqrt(rho_out);
    std::vector<SelectedOp> out;
    out.reserve(ops.size());
    for (const SelectedOp& s : ops)
        out.push_back({s.i, s.j, s.k, in_half * s.op.adjoint() * out_invhalf});
    return out;
}

ReversedBridge solve_reverse_bridge(const ExperimentSpec& spec, const PriorModel& prior,
                                    const BridgeSolution& forward,
                                    bool cross_check_sinkhorn, double cross_tol) {
    long n = spec.dim;
    const RealVector& a = forward.potentials.a;
    const RealVector& b = forward.potentials.b;

    RealVector c = spec.alpha_tilde.cwiseQuotient(a.cwiseProduct(spec.alpha));
    RealVector d = spec.beta_tilde.cwiseQuotient(b.cwiseProduct(prior.beta));

    ReversedBridge out{
        reverse_selected(prior.selected_kraus, prior.rho0.mat, prior.rho1.mat),
        c,
        d,
        PositiveDiagonalOperator(spec.basis0, c),
        PositiveDiagonalOperator(spec.basis1, d),
        Matrix(),
        Matrix(),
        {}};

    out.residual_completeness = completeness_violation(out.reversed_kraus);
    if (out.residual_completeness > tol::channel_completeness)
        throw ConsistencyViolation("reversed Kraus family is not complete",
                                   out.residual_completeness);

    // M~_ikj = psi0^{1/2} M_ikj psi1^{-1/2}
    Matrix left = out.psi0.power(0.5);
    Matrix right = out.psi1.power(-0.5);
    out.updated_reversed_kraus.reserve(out.reversed_kraus.size());
    for (const SelectedOp& s : out.reversed_kraus)
        out.updated_reversed_kraus.push_back({s.i, s.j, s.k, left * s.op * right});

    out.psihat0 = out.psi0.power(-0.5) * forward.rho0_tilde.mat * out.psi0.power(-0.5);
    out.psihat1 = out.psi1.power(-0.5) * forward.rho1_tilde.mat * out.psi1.power(-0.5);

    out.residual_bridging =
        (apply_selected(out.updated_reversed_kraus, forward.rho1_tilde.mat) -
         forward.rho0_tilde.mat)
            .norm();
    out.residual_adjoint =
        (out.psi1.materialize() -
         apply_selected_adjoint(out.reversed_kraus, out.psi0.materialize()))
            .norm();
    out.residual_forward =
        (out.psihat0 - apply_selected(out.reversed_kraus, out.psihat1)).norm();

    if (out.residual_bridging > tol::endpoint_bridging)
        throw ConsistencyViolation("reversed update does not bridge rho1~ -> rho0~",
                                   out.residual_bridging);
    if (out.residual_adjoint > tol::consistency)
        throw ConsistencyViolation("adjoint identity for psi failed",
                                   out.residual_adjoint);
    if (out.residual_forward > tol::consistency)
        throw ConsistencyViolation("reversed-evolution identity for psihat failed",
                                   out.residual_forward);

    // Reversed closed-form coupling (c_i / d_j)(beta~_j / beta_j) p_ij must
    // reproduce the forward optimum entrywise.
    RealMatrix q_rev = prior.joint;
    for (long i = 0; i < n; ++i) q_rev.row(i) *= c[i];
    for (long j = 0; j < n; ++j) q_rev.col(j) *= spec.beta_tilde[j] / (d[j] * prior.beta[j]);
    out.residual_coupling_match = (q_rev - forward.coupling).cwiseAbs().maxCoeff();
    if (out.residual_coupling_match > tol::consistency)
        throw ConsistencyViolation("reversed coupling deviates from the forward optimum",
                                   out.residual_coupling_match);

    if (cross_check_sinkhorn) {
        // Independent route: solve the time-reversed problem (final marginal
        // first) and compare the transposed optimum.
        CouplingSolution rev = solve_coupling(prior.joint.transpose(), spec.beta_tilde,
                                              spec.alpha_tilde);
        double dev =
            (rev.coupling.transpose() - forward.coupling).cwiseAbs().maxCoeff();
        if (dev > cross_tol)
            throw ConsistencyViolation(
                "independent reversed Sinkhorn solve disagrees with the closed form", dev);
    }
    return out;
}

EquivalenceReport check_equivalence(const ExperimentSpec& spec, const PriorModel& prior,
                                    const BridgeSolution& forward,
                                    const ReversedBridge& reversed, double op_tol,
                                    double state_tol) {
    EquivalenceReport rep;

    Matrix rho0t_half = hermitian_sqrt(forward.rho0_tilde.mat);
    Matrix rho1t_invhalf = hermitian_inv_sqrt(forward.rho1_tilde.mat);
    for (std::size_t k = 0; k < reversed.updated_reversed_kraus.size(); ++k) {
        Matrix expected =
            rho0t_half * forward.updated_kraus[k].op.adjoint() * rho1t_invhalf;
        rep.operator_residual =
            std::max(rep.operator_residual,
                     (reversed.updated_reversed_kraus[k].op - expected).norm());
    }

    Matrix phi0 = forward.system.phi0.materialize();
    Matrix phi1 = forward.system.phi1.materialize();
    Matrix psi0 = reversed.psi0.materialize();
    Matrix psi1 = reversed.psi1.materialize();

    rep.sym_rho0 = (forward.rho0_tilde.mat - psi0 * prior.rho0.mat * phi0).norm();
    rep.sym_rho1 = (forward.rho1_tilde.mat - psi1 * prior.rho1.mat * phi1).norm();

    Matrix rho0_inv = hermitian_inverse(prior.rho0.mat);
    Matrix rho1_inv = hermitian_inverse(prior.rho1.mat);
    rep.hat_rho0 =
        (forward.rho0_tilde.mat - reversed.psihat0 * rho0_inv * forward.system.phihat0)
            .norm();
    rep.hat_rho1 =
        (forward.rho1_tilde.mat - reversed.psihat1 * rho1_inv * forward.system.phihat1)
            .norm();

    RealVector ca = forward.potentials.a.cwiseProduct(reversed.c).cwiseProduct(spec.alpha);
    RealVector db =
        forward.potentials.b.cwiseProduct(reversed.d).cwiseProduct(prior.beta);
    rep.coefficient_identity =
        std::max((ca - spec.alpha_tilde).cwiseAbs().maxCoeff(),
                 (db - spec.beta_tilde).cwiseAbs().maxCoeff());

    if (rep.operator_residual > op_tol)
        throw EquivalenceViolation("operator-level time-reversal identity failed",
                                   rep.operator_residual);
    for (double r : {rep.sym_rho0, rep.sym_rho1, rep.hat_rho0, rep.hat_rho1,
                     rep.coefficient_identity})
        if (r > state_tol)
            throw EquivalenceViolation("time-symmetric state identity failed", r);
    return rep;
}

}  // namespace qsb
