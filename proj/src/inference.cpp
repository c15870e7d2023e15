#include "qsb/inference.hpp"

#include <cmath>
#include <numbers>

namespace qsb {

namespace {

const ProjectiveMeasurement& projective_slot(const ExperimentSpec& spec) {
    const auto* proj = std::get_if<ProjectiveMeasurement>(&spec.split().measurement);
    if (proj == nullptr) throw SpecInvalid("projective intervening measurement required");
    return *proj;
}

const WeakMeasurement& weak_slot(const ExperimentSpec& spec) {
    const auto* weak = std::get_if<WeakMeasurement>(&spec.split().measurement);
    if (weak == nullptr) throw SpecInvalid("weak intervening measurement required");
    return *weak;
}

// |<b_out| K |b_in>|^2 summed over a segment's operators, tabulated for all
// (out, in) pairs.
RealMatrix transition_table(const KrausChannel& segment, const OrthonormalBasis& out_basis,
                            const OrthonormalBasis& in_basis) {
    long n = out_basis.dim();
    RealMatrix t = RealMatrix::Zero(n, n);
    for (const Matrix& k : segment.ops) {
        Matrix amps = out_basis.vectors().adjoint() * k * in_basis.vectors();
        t += amps.cwiseAbs2();
    }
    return t;
}

void check_positive_factors(const RealVector& v, const char* name) {
    double floor = tol::positivity_floor_rel * v.maxCoeff();
    if (v.minCoeff() <= floor)
        throw AssumptionViolated(std::string(name) + " has a vanishing entry",
                                 v.minCoeff());
}

Matrix diag_in_basis(const OrthonormalBasis& basis, const RealVector& w) {
    Matrix out = Matrix::Zero(basis.dim(), basis.dim());
    for (long i = 0; i < basis.dim(); ++i) out += w[i] * basis.projector(i);
    return out;
}

}  // namespace

RealVector conditional_outcome_prob(const ExperimentSpec& spec, long i, long j) {
    const auto& proj = projective_slot(spec);
    const SplitChannel& sc = spec.split();
    // post(z -> y) and pre(x -> z) transition weights
    RealMatrix post_t = transition_table(sc.post(sc.tau, 1.0), spec.basis1, proj.z.basis);
    RealMatrix pre_t = transition_table(sc.pre(0.0, sc.tau), proj.z.basis, spec.basis0);

    RealVector joint(spec.dim);
    for (long z = 0; z < spec.dim; ++z) joint[z] = post_t(j, z) * pre_t(z, i);
    double norm = joint.sum();
    if (norm <= tol::positivity_floor_rel)
        throw ZeroConditional(norm);
    return joint / norm;
}

IntermediateDistribution most_likely_projective_distribution(
    const ExperimentSpec& spec, const BridgeSolution& bridge,
    double disintegration_tol) {
    const auto& proj = projective_slot(spec);
    const SplitChannel& sc = spec.split();

    RealMatrix pre_t = transition_table(sc.pre(0.0, sc.tau), proj.z.basis, spec.basis0);
    RealMatrix post_t = transition_table(sc.post(sc.tau, 1.0), spec.basis1, proj.z.basis);

    IntermediateDistribution dist;
    dist.tau = sc.tau;
    dist.outcomes = proj.z.eigenvalues;
    dist.varphi_hat =
        pre_t * spec.alpha_tilde.cwiseQuotient(bridge.potentials.a).matrix();
    dist.varphi = post_t.transpose() * bridge.potentials.b;
    check_positive_factors(dist.varphi, "varphi");
    check_positive_factors(dist.varphi_hat, "varphi_hat");
    dist.probs = dist.varphi.cwiseProduct(dist.varphi_hat);

    // Disintegration of measure: the same distribution through the coupling
    // and the conditional bridges.
    RealVector via_coupling = RealVector::Zero(spec.dim);
    for (long i = 0; i < spec.dim; ++i)
        for (long j = 0; j < spec.dim; ++j) {
            RealVector cond(spec.dim);
            for (long z = 0; z < spec.dim; ++z) cond[z] = post_t(j, z) * pre_t(z, i);
            double norm = cond.sum();
            if (norm <= tol::positivity_floor_rel) throw ZeroConditional(norm);
            via_coupling += bridge.coupling(i, j) / norm * cond;
        }
    double dev = (via_coupling - dist.probs).cwiseAbs().maxCoeff();
    if (dev > disintegration_tol)
        throw ConsistencyViolation("product form disagrees with the disintegration", dev);
    return dist;
}

SplitUpdatedChannel intermediate_state_and_split(const ExperimentSpec& spec,
                                                 const BridgeSolution& bridge) {
    const auto& proj = projective_slot(spec);
    const SplitChannel& sc = spec.split();
    IntermediateDistribution dist =
        most_likely_projective_distribution(spec, bridge);

    PositiveDiagonalOperator phi_tau(proj.z.basis, dist.varphi);
    Matrix phi_tau_half = phi_tau.power(0.5);
    Matrix phi_tau_invhalf = phi_tau.power(-0.5);
    Matrix phi0_invhalf = bridge.system.phi0.power(-0.5);
    Matrix phi1_half = bridge.system.phi1.power(0.5);

    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);

    SplitUpdatedChannel out;
    out.rho_tau = validate_density(diag_in_basis(proj.z.basis, dist.probs));

    for (long i = 0; i < spec.dim; ++i) {
        Matrix p0 = spec.basis0.projector(i);
        for (std::size_t l = 0; l < pre.ops.size(); ++l)
            for (long z = 0; z < spec.dim; ++z)
                out.first_leg.push_back(
                    {i, z, static_cast<long>(l),
                     phi_tau_half * proj.z.basis.projector(z) * pre.ops[l] * p0 *
                         phi0_invhalf});
    }
    for (long z = 0; z < spec.dim; ++z) {
        Matrix pz = proj.z.basis.projector(z);
        for (std::size_t l = 0; l < post.ops.size(); ++l)
            for (long j = 0; j < spec.dim; ++j)
                out.second_leg.push_back(
                    {z, j, static_cast<long>(l),
                     phi1_half * spec.basis1.projector(j) * post.ops[l] * pz *
                         phi_tau_invhalf});
    }

    out.residual_first =
        (apply_selected(out.first_leg, bridge.rho0_tilde.mat) - out.rho_tau.mat).norm();
    out.residual_second =
        (apply_selected(out.second_leg, out.rho_tau.mat) - bridge.rho1_tilde.mat).norm();
    if (out.residual_first > tol::endpoint_bridging)
        throw ConsistencyViolation("first leg does not reach rho_tau~",
                                   out.residual_first);
    if (out.residual_second > tol::endpoint_bridging)
        throw ConsistencyViolation("second leg does not reach rho1~",
                                   out.residual_second);

    // Composition of the two legs equals the full updated channel as a map.
    std::vector<Matrix> composed;
    composed.reserve(out.first_leg.size() * out.second_leg.size());
    for (const SelectedOp& s2 : out.second_leg)
        for (const SelectedOp& s1 : out.first_leg) composed.push_back(s2.op * s1.op);
    std::vector<Matrix> full;
    full.reserve(bridge.updated_kraus.size());
    for (const SelectedOp& s : bridge.updated_kraus) full.push_back(s.op);
    out.residual_composition = map_distance(composed, full, spec.dim);
    if (out.residual_composition > tol::endpoint_bridging)
        throw ConsistencyViolation("leg composition deviates from the updated channel",
                                   out.residual_composition);
    return out;
}

ReversedIntermediateReport reversed_projective_distribution(
    const ExperimentSpec& spec, const PriorModel& prior, const BridgeSolution& bridge,
    const ReversedBridge& reversed, double check_tol) {
    const auto& proj = projective_slot(spec);
    const SplitChannel& sc = spec.split();

    RealVector p_tau = prior_projective_distribution(spec);
    Matrix rho_tau_prior = diag_in_basis(proj.z.basis, p_tau);

    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);

    // Per-segment time reversal anchored on the prior states (III.C).
    std::vector<Matrix> n_post =
        reverse_channel(post.ops, rho_tau_prior, prior.rho1.mat);  // N_l'(tau, 1)
    std::vector<Matrix> n_pre =
        reverse_channel(pre.ops, prior.rho0.mat, rho_tau_prior);   // N_l(0, tau)

    ReversedIntermediateReport rep;
    RealMatrix npre_t = transition_table(KrausChannel{n_pre}, spec.basis0, proj.z.basis);
    RealMatrix npost_t =
        transition_table(KrausChannel{n_post}, proj.z.basis, spec.basis1);

    rep.psi = npre_t.transpose() * reversed.c;  // sum_{i,l} c_i |<x_i|N_l|z>|^2
    rep.psi_hat =
        npost_t * spec.beta_tilde.cwiseQuotient(reversed.d).matrix();
    check_positive_factors(rep.psi, "psi");
    check_positive_factors(rep.psi_hat, "psi_hat");

    IntermediateDistribution fwd = most_likely_projective_distribution(spec, bridge);
    rep.dist.tau = sc.tau;
    rep.dist.outcomes = proj.z.eigenvalues;
    rep.dist.varphi = rep.psi;
    rep.dist.varphi_hat = rep.psi_hat;
    rep.dist.probs = rep.psi.cwiseProduct(rep.psi_hat);

    rep.residual_rev1 =
        (fwd.probs - rep.psi.cwiseProduct(p_tau).cwiseProduct(fwd.varphi))
            .cwiseAbs()
            .maxCoeff();
    rep.residual_rev2 = (fwd.probs - fwd.varphi_hat.cwiseQuotient(p_tau).cwiseProduct(
                                         rep.psi_hat))
                            .cwiseAbs()
                            .maxCoeff();
    rep.residual_forward = (rep.dist.probs - fwd.probs).cwiseAbs().maxCoeff();

    // Updated reversed legs.
    PositiveDiagonalOperator psi_tau(proj.z.basis, rep.psi);
    Matrix psi_tau_half = psi_tau.power(0.5);
    Matrix psi_tau_invhalf = psi_tau.power(-0.5);
    Matrix psi0_half = reversed.psi0.power(0.5);
    Matrix psi1_invhalf = reversed.psi1.power(-0.5);

    std::vector<SelectedOp> leg_from_end;   // N~_{z l' j}(tau, 1)
    for (long z = 0; z < spec.dim; ++z) {
        Matrix pz = proj.z.basis.projector(z);
        for (std::size_t l = 0; l < n_post.size(); ++l)
            for (long j = 0; j < spec.dim; ++j)
                leg_from_end.push_back(
                    {z, j, static_cast<long>(l),
                     psi_tau_half * pz * n_post[l] * spec.basis1.projector(j) *
                         psi1_invhalf});
    }
    std::vector<SelectedOp> leg_to_start;   // N~_{i l z}(0, tau)
    for (long i = 0; i < spec.dim; ++i) {
        Matrix p0 = spec.basis0.projector(i);
        for (std::size_t l = 0; l < n_pre.size(); ++l)
            for (long z = 0; z < spec.dim; ++z)
                leg_to_start.push_back(
                    {i, z, static_cast<long>(l),
                     psi0_half * p0 * n_pre[l] * proj.z.basis.projector(z) *
                         psi_tau_invhalf});
    }

    Matrix rho_tau_tilde = diag_in_basis(proj.z.basis, fwd.probs);
    rep.residual_leg1 =
        (apply_selected(leg_from_end, bridge.rho1_tilde.mat) - rho_tau_tilde).norm();
    rep.residual_leg0 =
        (apply_selected(leg_to_start, rho_tau_tilde) - bridge.rho0_tilde.mat).norm();

    // Reversed legs are the forward legs transported through the
    // operator-level equivalence.
    SplitUpdatedChannel split = intermediate_state_and_split(spec, bridge);
    Matrix rho_tau_half = hermitian_sqrt(rho_tau_tilde);
    Matrix rho_tau_invhalf = hermitian_inv_sqrt(rho_tau_tilde);
    Matrix rho0_half = hermitian_sqrt(bridge.rho0_tilde.mat);
    Matrix rho1_invhalf = hermitian_inv_sqrt(bridge.rho1_tilde.mat);

    // Align index orders: forward second leg is (z, l', j), reversed
    // leg_from_end is (z, l', j); forward first leg (i, l, z) matches
    // leg_to_start.
    for (std::size_t k = 0; k < leg_from_end.size(); ++k) {
        Matrix expected = rho_tau_half * split.second_leg[k].op.adjoint() * rho1_invhalf;
        rep.residual_equiv =
            std::max(rep.residual_equiv, (leg_from_end[k].op - expected).norm());
    }
    for (std::size_t k = 0; k < leg_to_start.size(); ++k) {
        Matrix expected = rho0_half * split.first_leg[k].op.adjoint() * rho_tau_invhalf;
        rep.residual_equiv =
            std::max(rep.residual_equiv, (leg_to_start[k].op - expected).norm());
    }

    for (double r : {rep.residual_rev1, rep.residual_rev2, rep.residual_forward})
        if (r > check_tol)
            throw ConsistencyViolation("reversed intermediate identity failed", r);
    for (double r : {rep.residual_leg1, rep.residual_leg0, rep.residual_equiv})
        if (r > tol::endpoint_bridging)
            throw ConsistencyViolation("reversed leg identity failed", r);
    return rep;
}

GeneralizedOutcomeDistribution generalized_distribution(const ExperimentSpec& spec,
                                                        const PriorModel& prior,
                                                        const BridgeSolution& bridge,
                                                        double quad_tol,
                                                        double route_tol) {
    const SplitChannel& sc = spec.split();
    const auto* gen = std::get_if<GeneralizedMeasurement>(&sc.measurement);
    if (gen == nullptr) throw SpecInvalid("generalized intervening measurement required");

    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);

    Matrix phi1 = bridge.system.phi1.materialize();
    Matrix phi_tau2 = apply_adjoint_ops(post.ops, phi1);
    Matrix phihat_tau1 = apply_ops(pre.ops, bridge.system.phihat0);

    GeneralizedOutcomeDistribution out;
    out.outcomes = gen->outcomes;
    out.weights = gen->weights;
    out.continuous = gen->continuous;
    long q_count = static_cast<long>(gen->operators.size());
    out.density_forward.resize(q_count);
    out.density_reversed.resize(q_count);

    for (long q = 0; q < q_count; ++q) {
        const Matrix& om = gen->operators[q];
        out.density_forward[q] =
            (phi_tau2 * om * phihat_tau1 * om.adjoint()).trace().real();
        out.total_forward += gen->weights[q] * out.density_forward[q];
    }

    // Time-reversed route through the reversed per-segment maps.
    Matrix rho0 = prior.rho0.mat;
    Matrix rho_tau1 = apply_ops(pre.ops, rho0);
    Matrix rho_tau2 = Matrix::Zero(spec.dim, spec.dim);
    for (long q = 0; q < q_count; ++q)
        rho_tau2 +=
            gen->weights[q] * (gen->operators[q] * rho_tau1 * gen->operators[q].adjoint());

    std::vector<Matrix> n_post = reverse_channel(post.ops, rho_tau2, prior.rho1.mat);
    std::vector<Matrix> n_pre = reverse_channel(pre.ops, rho0, rho_tau1);
    Matrix rho_tau1_half = hermitian_sqrt(rho_tau1);
    Matrix rho_tau2_invhalf = hermitian_inv_sqrt(rho_tau2);

    RealVector c =
        spec.alpha_tilde.cwiseQuotient(bridge.potentials.a.cwiseProduct(spec.alpha));
    Matrix psi0 = diag_in_basis(spec.basis0, c);
    RealVector bhat = bridge.potentials.b.cwiseProduct(prior.beta);
    Matrix psihat1 = diag_in_basis(spec.basis1, bhat);

    Matrix psi_tau1 = apply_adjoint_ops(n_pre, psi0);
    Matrix psihat_tau2 = apply_ops(n_post, psihat1);

    for (long q = 0; q < q_count; ++q) {
        Matrix om_rev = rho_tau1_half * gen->operators[q].adjoint() * rho_tau2_invhalf;
        out.density_reversed[q] =
            (psi_tau1 * om_rev * psihat_tau2 * om_rev.adjoint()).trace().real();
        out.total_reversed += gen->weights[q] * out.density_reversed[q];
    }

    double mass_dev = std::abs(out.total_forward - 1.0);
    if (mass_dev > quad_tol) throw QuadratureTolExceeded(mass_dev);
    double route_dev =
        (out.density_forward - out.density_reversed).cwiseAbs().maxCoeff();
    if (route_dev > route_tol)
        throw ConsistencyViolation("forward and reversed trace forms disagree",
                                   route_dev);
    return out;
}

Matrix weak_operator(const Observable& z, double delta, double zbar) {
    if (delta <= 0.0) throw SpecInvalid("weak operator requires delta > 0");
    long n = z.basis.dim();
    double amp = std::pow(delta / (2.0 * std::numbers::pi), 0.25);
    Matrix out = Matrix::Zero(n, n);
    for (long k = 0; k < n; ++k) {
        double dev = z.eigenvalues[k] - zbar;
        out += amp * std::exp(-delta * dev * dev / 4.0) * z.basis.projector(k);
    }
    return out;
}

QuadratureGrid weak_quadrature_grid(const RealVector& eigenvalues, double delta,
                                    int node_count) {
    if (node_count < 3) throw SpecInvalid("quadrature needs at least 3 nodes");
    double lo = eigenvalues.minCoeff(), hi = eigenvalues.maxCoeff();
    double spread = hi - lo;
    double pad = 8.0 / std::sqrt(delta) * std::max(1.0, spread);
    double a = lo - pad, b = hi + pad;
    double h = (b - a) / (node_count - 1);

    QuadratureGrid grid;
    grid.nodes.resize(node_count);
    grid.weights.assign(node_count, h);
    for (int q = 0; q < node_count; ++q) grid.nodes[q] = a + h * q;
    grid.weights.front() = 0.5 * h;
    grid.weights.back() = 0.5 * h;
    return grid;
}

GeneralizedMeasurement weak_family(const Observable& z, double delta, int node_count) {
    QuadratureGrid grid = weak_quadrature_grid(z.eigenvalues, delta, node_count);
    GeneralizedMeasurement fam;
    fam.outcomes = grid.nodes;
    fam.weights = grid.weights;
    fam.continuous = true;
    fam.operators.reserve(grid.nodes.size());
    for (double zbar : grid.nodes) fam.operators.push_back(weak_operator(z, delta, zbar));
    return fam;
}

double weak_value(const ExperimentSpec& spec, long i, long j) {
    const auto& weak = weak_slot(spec);
    const SplitChannel& sc = spec.split();
    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);

    Matrix sigma = apply_adjoint_ops(post.ops, spec.basis1.projector(j));
    Matrix sigma_hat = apply_ops(pre.ops, spec.basis0.projector(i));
    Matrix z = weak.z.materialize();

    double den = (sigma * sigma_hat).trace().real();
    if (den <= tol::overlap_floor) throw ZeroOverlap(den);
    return (sigma * z * sigma_hat).trace().real() / den;
}

double finite_delta_weak_average(const ExperimentSpec& spec, long i, long j,
                                 double delta, int node_count) {
    if (delta <= 0.0) throw SpecInvalid("finite-delta average requires delta > 0");
    const auto& weak = weak_slot(spec);
    const SplitChannel& sc = spec.split();
    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);

    QuadratureGrid grid = weak_quadrature_grid(weak.z.eigenvalues, delta, node_count);
    Vector xi = spec.basis0.vector(i);
    Vector yj = spec.basis1.vector(j);

    // Precompute segment amplitudes through each eigenprojector of Z.
    long n = spec.dim;
    std::vector<Complex> amp(pre.ops.size() * post.ops.size() * n);
    long idx = 0;
    for (const Matrix& kl : pre.ops) {
        Vector evolved = kl * xi;
        for (const Matrix& kp : post.ops) {
            Vector back = kp.adjoint() * yj;  // <y_j| K_l' as a ket
            for (long z = 0; z < n; ++z) {
                Vector zvec = weak.z.basis.vector(z);
                amp[idx++] = back.dot(zvec) * zvec.dot(evolved);
            }
        }
    }

    double norm_check = 0.0, num = 0.0, den = 0.0;
    double gauss_amp = std::sqrt(delta / (2.0 * std::numbers::pi));
    for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
        double zbar = grid.nodes[q];
        RealVector g(n);
        for (long z = 0; z < n; ++z) {
            double dev = weak.z.eigenvalues[z] - zbar;
            g[z] = std::exp(-delta * dev * dev / 4.0);
        }
        double f = 0.0;
        long base = 0;
        for (std::size_t lk = 0; lk < pre.ops.size() * post.ops.size(); ++lk) {
            Complex a(0, 0);
            for (long z = 0; z < n; ++z) a += g[z] * amp[base + z];
            f += std::norm(a);
            base += n;
        }
        f *= gauss_amp;
        num += grid.weights[q] * zbar * f;
        den += grid.weights[q] * f;
        norm_check += grid.weights[q] * gauss_amp * g.cwiseAbs2().sum();
    }
    // Family normalization on this grid: integral of each eigen-Gaussian is 1.
    if (std::abs(norm_check / n - 1.0) > tol::quadrature_norm)
        throw QuadratureTolExceeded(std::abs(norm_check / n - 1.0));
    if (den <= tol::overlap_floor) throw ZeroOverlap(den);
    return num / den;
}

WeakValueResult most_likely_weak_value(const ExperimentSpec& spec,
                                       const PriorModel& prior,
                                       const BridgeSolution& bridge, double agree_tol) {
    const auto& weak = weak_slot(spec);
    const SplitChannel& sc = spec.split();
    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);
    Matrix z = weak.z.materialize();

    // Forward route through the evolved potentials.
    Matrix phi_tau = apply_adjoint_ops(post.ops, bridge.system.phi1.materialize());
    Matrix phihat_tau = apply_ops(pre.ops, bridge.system.phihat0);
    double forward = (phi_tau * z * phihat_tau).trace().real();

    // Reversed route through the per-segment reversed maps and Z_rev.
    Matrix rho_tau = apply_ops(pre.ops, prior.rho0.mat);
    Matrix rho_tau_half = hermitian_sqrt(rho_tau);
    Matrix rho_tau_invhalf = hermitian_inv_sqrt(rho_tau);
    std::vector<Matrix> n_pre = reverse_channel(pre.ops, prior.rho0.mat, rho_tau);
    std::vector<Matrix> n_post = reverse_channel(post.ops, rho_tau, prior.rho1.mat);

    RealVector c =
        spec.alpha_tilde.cwiseQuotient(bridge.potentials.a.cwiseProduct(spec.alpha));
    Matrix psi0 = diag_in_basis(spec.basis0, c);
    Matrix psihat1 =
        diag_in_basis(spec.basis1, bridge.potentials.b.cwiseProduct(prior.beta));
    Matrix psi_tau = apply_adjoint_ops(n_pre, psi0);
    Matrix psihat_tau = apply_ops(n_post, psihat1);
    Matrix z_rev = rho_tau_half * z * rho_tau_invhalf;
    double reversed = (psi_tau * z_rev * psihat_tau).trace().real();

    // Disintegration through the coupling and per-pair weak values.
    double disintegration = 0.0;
    for (long i = 0; i < spec.dim; ++i)
        for (long j = 0; j < spec.dim; ++j)
            disintegration += bridge.coupling(i, j) * weak_value(spec, i, j);

    WeakValueResult out;
    out.value = forward;
    out.tau = sc.tau;
    out.delta_used = weak.delta;
    out.forward = forward;
    out.reversed = reversed;
    out.disintegration = disintegration;
    double spread = std::max(std::abs(forward - reversed),
                             std::abs(forward - disintegration));
    if (spread > agree_tol)
        throw ConsistencyViolation("weak-value routes disagree", spread);
    return out;
}

}  // namespace qsb
