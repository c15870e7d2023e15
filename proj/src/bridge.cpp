#include "qsb/bridge.hpp"

#include <cmath>

namespace qsb {

namespace {

RealMatrix scaled_coupling(const RealMatrix& p, const RealVector& alpha,
                           const RealVector& alpha_tilde, const RealVector& a,
                           const RealVector& b) {
    RealMatrix q = p;
    for (long i = 0; i < p.rows(); ++i)
        q.row(i) *= alpha_tilde[i] / (a[i] * alpha[i]);
    for (long j = 0; j < p.cols(); ++j) q.col(j) *= b[j];
    return q;
}

double marginal_residual(const RealMatrix& q, const RealVector& alpha_tilde,
                         const RealVector& beta_tilde) {
    double row = (q.rowwise().sum() - alpha_tilde).cwiseAbs().maxCoeff();
    double col = (q.colwise().sum().transpose() - beta_tilde).cwiseAbs().maxCoeff();
    return row + col;
}

}  // namespace

CouplingSolution solve_coupling(const RealMatrix& prior, const RealVector& alpha_tilde,
                                const RealVector& beta_tilde, double tolerance,
                                int max_iter) {
    long n = prior.rows(), m = prior.cols();
    if (alpha_tilde.size() != n || beta_tilde.size() != m)
        throw DimensionMismatch(alpha_tilde.size(), n);
    if (prior.minCoeff() <= 0.0)
        throw PriorDegenerate("Sinkhorn requires a strictly positive prior",
                              prior.minCoeff());
    if (alpha_tilde.minCoeff() <= 0.0 || beta_tilde.minCoeff() <= 0.0)
        throw SpecInvalid("observed marginals must be strictly positive");

    RealVector alpha = prior.rowwise().sum();
    RealVector a = RealVector::Ones(n);
    RealVector b = RealVector::Ones(m);

    SinkhornDiagnostics diag;
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iter; ++it) {
        // sum_j p~_ij = alpha~_i  =>  a_i = sum_j b_j p_ij / alpha_i
        a = (prior * b).cwiseQuotient(alpha);
        // sum_i p~_ij = beta~_j  =>  b_j = beta~_j / sum_i (alpha~_i / a_i alpha_i) p_ij
        RealVector w = alpha_tilde.cwiseQuotient(a.cwiseProduct(alpha));
        b = beta_tilde.cwiseQuotient(prior.transpose() * w);

        residual = marginal_residual(scaled_coupling(prior, alpha, alpha_tilde, a, b),
                                     alpha_tilde, beta_tilde);
        diag.residuals.push_back(residual);
        if (residual <= tolerance) {
            ++it;
            break;
        }
    }
    if (residual > tolerance) throw NoConvergence(max_iter, residual);

    double gauge = b.sum();
    a /= gauge;
    b /= gauge;

    CouplingSolution out;
    out.coupling = scaled_coupling(prior, alpha, alpha_tilde, a, b);
    out.potentials = {a, b};
    out.kl = rate_function(out.coupling, prior);
    diag.iterations = it;
    diag.final_residual = residual;
    out.diagnostics = std::move(diag);
    return out;
}

double rate_function(const RealMatrix& q, const RealMatrix& p) {
    if (q.rows() != p.rows() || q.cols() != p.cols())
        throw DimensionMismatch(q.rows(), p.rows());
    double kl = 0.0;
    for (long i = 0; i < q.rows(); ++i)
        for (long j = 0; j < q.cols(); ++j) {
            double qij = q(i, j);
            if (qij <= 0.0) continue;  // 0 log 0 = 0
            if (p(i, j) <= 0.0) throw SupportViolation();
            kl += qij * std::log(qij / p(i, j));
        }
    return std::max(kl, 0.0);
}

SchrodingerSystem schrodinger_system(const ExperimentSpec& spec, const PriorModel& prior,
                                     const ScalingPotentials& pot, double check_tol) {
    PositiveDiagonalOperator phi0(spec.basis0, pot.a);
    PositiveDiagonalOperator phi1(spec.basis1, pot.b);

    Matrix phi0_m = phi0.materialize();
    Matrix phi1_m = phi1.materialize();
    double back = (phi0_m - apply_selected_adjoint(prior.selected_kraus, phi1_m)).norm();

    Matrix rho0t = Matrix::Zero(spec.dim, spec.dim);
    Matrix rho1t = Matrix::Zero(spec.dim, spec.dim);
    for (long i = 0; i < spec.dim; ++i)
        rho0t += spec.alpha_tilde[i] * spec.basis0.projector(i);
    for (long j = 0; j < spec.dim; ++j)
        rho1t += spec.beta_tilde[j] * spec.basis1.projector(j);

    Matrix phi0_mh = phi0.power(-0.5);
    Matrix phi1_mh = phi1.power(-0.5);
    SchrodingerSystem sys{std::move(phi0), std::move(phi1),
                          phi0_mh * rho0t * phi0_mh, phi1_mh * rho1t * phi1_mh,
                          back, 0.0};
    sys.residual_forward =
        (sys.phihat1 - apply_selected(prior.selected_kraus, sys.phihat0)).norm();

    if (sys.residual_backward > check_tol)
        throw ConsistencyViolation("adjoint-evolution identity for phi failed",
                                   sys.residual_backward);
    if (sys.residual_forward > check_tol)
        throw ConsistencyViolation("forward-evolution identity for phihat failed",
                                   sys.residual_forward);
    return sys;
}

std::vector<SelectedOp> updated_channel(const PriorModel& prior,
                                        const PositiveDiagonalOperator& phi0,
                                        const PositiveDiagonalOperator& phi1) {
    Matrix left = phi1.power(0.5);
    Matrix right = phi0.power(-0.5);
    std::vector<SelectedOp> out;
    out.reserve(prior.selected_kraus.size());
    for (const SelectedOp& s : prior.selected_kraus)
        out.push_back({s.i, s.j, s.k, left * s.op * right});
    return out;
}

BridgeSolution solve_bridge(const ExperimentSpec& spec, const PriorModel& prior,
                            double tolerance, int max_iter) {
    CouplingSolution cs =
        solve_coupling(prior.joint, spec.alpha_tilde, spec.beta_tilde, tolerance, max_iter);

    BridgeSolution out;
    out.coupling = std::move(cs.coupling);
    out.potentials = std::move(cs.potentials);
    out.kl = cs.kl;
    out.diagnostics = std::move(cs.diagnostics);
    out.system = schrodinger_system(spec, prior, out.potentials);
    out.updated_kraus = updated_channel(prior, out.system.phi0, out.system.phi1);

    Matrix rho0t = Matrix::Zero(spec.dim, spec.dim);
    Matrix rho1t = Matrix::Zero(spec.dim, spec.dim);
    for (long i = 0; i < spec.dim; ++i)
        rho0t += spec.alpha_tilde[i] * spec.basis0.projector(i);
    for (long j = 0; j < spec.dim; ++j)
        rho1t += spec.beta_tilde[j] * spec.basis1.projector(j);
    out.rho0_tilde = validate_density(rho0t);
    out.rho1_tilde = validate_density(rho1t);

    out.completeness_residual = completeness_violation(out.updated_kraus);
    out.bridging_residual =
        (apply_selected(out.updated_kraus, rho0t) - rho1t).norm();
    if (out.completeness_residual > tol::channel_completeness)
        throw ConsistencyViolation("updated channel completeness failed",
                                   out.completeness_residual);
    if (out.bridging_residual > tol::endpoint_bridging)
        throw ConsistencyViolation("updated channel does not bridge the endpoints",
                                   out.bridging_residual);
    return out;
}

}  // namespace qsb
