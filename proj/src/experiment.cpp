#include "qsb/experiment.hpp"

#include <cmath>

namespace qsb {

namespace {

void require_probability_vector(const RealVector& v, const char* name) {
    if (v.size() < 1) throw SpecInvalid(std::string(name) + " is empty");
    if (v.minCoeff() <= 0.0)
        throw SpecInvalid(std::string(name) + " must be strictly positive");
    double dev = std::abs(v.sum() - 1.0);
    if (dev > tol::probability_sum)
        throw SpecInvalid(std::string(name) + " does not sum to 1 (deviation " +
                          std::to_string(dev) + ")");
}

double positivity_floor(const RealMatrix& m) {
    return tol::positivity_floor_rel * m.maxCoeff();
}

}  // namespace

Observable::Observable(OrthonormalBasis b, RealVector vals)
    : basis(std::move(b)), eigenvalues(std::move(vals)) {
    if (eigenvalues.size() != basis.dim())
        throw DimensionMismatch(eigenvalues.size(), basis.dim());
    for (long i = 0; i < eigenvalues.size(); ++i)
        for (long k = i + 1; k < eigenvalues.size(); ++k)
            if (eigenvalues[i] == eigenvalues[k])
                throw SpecInvalid("observable must be non-degenerate");
}

Matrix Observable::materialize() const {
    Matrix out = Matrix::Zero(basis.dim(), basis.dim());
    for (long i = 0; i < basis.dim(); ++i)
        out += eigenvalues[i] * basis.projector(i);
    return out;
}

double GeneralizedMeasurement::completeness_violation(long n) const {
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t q = 0; q < operators.size(); ++q)
        sum += weights[q] * (operators[q].adjoint() * operators[q]);
    return (sum - Matrix::Identity(n, n)).norm();
}

void ExperimentSpec::validate() const {
    if (dim < 1) throw SpecInvalid("dim must be >= 1");
    if (basis0.dim() != dim || basis1.dim() != dim)
        throw SpecInvalid("basis dimensions inconsistent with dim");
    if (alpha.size() != dim || alpha_tilde.size() != dim || beta_tilde.size() != dim)
        throw SpecInvalid("weight vector dimensions inconsistent with dim");
    require_probability_vector(alpha, "alpha");
    require_probability_vector(alpha_tilde, "alpha_tilde");
    require_probability_vector(beta_tilde, "beta_tilde");
    if (const auto* plain = std::get_if<KrausChannel>(&channel)) {
        plain->validate();
        if (plain->dim() != dim) throw SpecInvalid("channel dimension mismatch");
    } else {
        const auto& sc = std::get<SplitChannel>(channel);
        if (!(sc.tau > 0.0 && sc.tau < 1.0))
            throw SpecInvalid("tau must lie strictly inside (0,1)");
        if (sc.pre.dim != dim || sc.post.dim != dim)
            throw SpecInvalid("split segment dimension mismatch");
        if (const auto* gen = std::get_if<GeneralizedMeasurement>(&sc.measurement)) {
            if (gen->operators.empty())
                throw SpecInvalid("generalized measurement has no operators");
            double dev = gen->completeness_violation(dim);
            if (dev > tol::generalized_completeness)
                throw SpecInvalid("generalized family completeness violated by " +
                                  std::to_string(dev));
        }
        if (const auto* w = std::get_if<WeakMeasurement>(&sc.measurement)) {
            if (w->delta < 0.0) throw SpecInvalid("weak delta must be >= 0");
            if (w->z.basis.dim() != dim) throw SpecInvalid("weak observable dim mismatch");
        }
        if (const auto* p = std::get_if<ProjectiveMeasurement>(&sc.measurement)) {
            if (p->z.basis.dim() != dim)
                throw SpecInvalid("projective observable dim mismatch");
        }
    }
}

const SplitChannel& ExperimentSpec::split() const {
    if (!has_split()) throw NoSplitChannel();
    return std::get<SplitChannel>(channel);
}

ExperimentSpec ExperimentSpec::with_tau(double tau) const {
    ExperimentSpec out = *this;
    std::get<SplitChannel>(out.channel).tau = tau;
    return out;
}

RealVector alpha_from_state(const DensityMatrix& rho_pre, const OrthonormalBasis& basis0) {
    if (rho_pre.dim() != basis0.dim())
        throw DimensionMismatch(rho_pre.dim(), basis0.dim());
    RealVector out(basis0.dim());
    for (long i = 0; i < basis0.dim(); ++i) {
        Vector v = basis0.vector(i);
        out[i] = (v.adjoint() * rho_pre.mat * v).value().real();
    }
    return out;
}

Matrix apply_selected(std::span<const SelectedOp> ops, const Matrix& rho) {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const SelectedOp& s : ops) out += s.op * rho * s.op.adjoint();
    return out;
}

Matrix apply_selected_adjoint(std::span<const SelectedOp> ops, const Matrix& x) {
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (const SelectedOp& s : ops) out += s.op.adjoint() * x * s.op;
    return out;
}

double completeness_violation(std::span<const SelectedOp> ops) {
    if (ops.empty()) return std::numeric_limits<double>::infinity();
    long n = ops.front().op.rows();
    Matrix sum = Matrix::Zero(n, n);
    for (const SelectedOp& s : ops) sum += s.op.adjoint() * s.op;
    return (sum - Matrix::Identity(n, n)).norm();
}

std::vector<Matrix> full_interval_ops(const ExperimentSpec& spec) {
    if (const auto* plain = std::get_if<KrausChannel>(&spec.channel)) return plain->ops;

    const SplitChannel& sc = spec.split();
    KrausChannel pre = sc.pre(0.0, sc.tau);
    KrausChannel post = sc.post(sc.tau, 1.0);

    std::vector<Matrix> middle;
    std::vector<double> scale;
    if (std::holds_alternative<std::monostate>(sc.measurement) ||
        std::holds_alternative<WeakMeasurement>(sc.measurement)) {
        // Trivial-width weak slot: the delta -> 0 family acts as the identity
        // on the prior, so the composed channel carries no middle operator.
        middle.push_back(Matrix::Identity(spec.dim, spec.dim));
        scale.push_back(1.0);
    } else if (const auto* proj = std::get_if<ProjectiveMeasurement>(&sc.measurement)) {
        for (long z = 0; z < spec.dim; ++z) {
            middle.push_back(proj->z.basis.projector(z));
            scale.push_back(1.0);
        }
    } else {
        const auto& gen = std::get<GeneralizedMeasurement>(sc.measurement);
        for (std::size_t q = 0; q < gen.operators.size(); ++q) {
            middle.push_back(gen.operators[q]);
            scale.push_back(std::sqrt(gen.weights[q]));
        }
    }

    std::vector<Matrix> out;
    out.reserve(pre.ops.size() * middle.size() * post.ops.size());
    for (std::size_t l = 0; l < pre.ops.size(); ++l)
        for (std::size_t m = 0; m < middle.size(); ++m)
            for (std::size_t lp = 0; lp < post.ops.size(); ++lp)
                out.push_back(scale[m] * (post.ops[lp] * middle[m] * pre.ops[l]));
    return out;
}

std::vector<SelectedOp> build_selected_kraus(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<Matrix> base = full_interval_ops(spec);
    std::vector<SelectedOp> out;
    out.reserve(static_cast<std::size_t>(spec.dim) * spec.dim * base.size());
    for (long i = 0; i < spec.dim; ++i) {
        Matrix p0 = spec.basis0.projector(i);
        for (std::size_t k = 0; k < base.size(); ++k) {
            Matrix mid = base[k] * p0;
            for (long j = 0; j < spec.dim; ++j)
                out.push_back({i, j, static_cast<long>(k),
                               spec.basis1.projector(j) * mid});
        }
    }
    return out;
}

PriorModel prior_joint(const ExperimentSpec& spec, bool epsilon_regularize,
                       double epsilon) {
    spec.validate();
    long n = spec.dim;
    std::vector<Matrix> base = full_interval_ops(spec);

    RealMatrix p = RealMatrix::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        Vector xi = spec.basis0.vector(i);
        for (const Matrix& k : base) {
            Vector evolved = k * xi;
            for (long j = 0; j < n; ++j)
                p(i, j) += spec.alpha[i] * std::norm(spec.basis1.vector(j).dot(evolved));
        }
    }

    double floor = positivity_floor(p);
    if (p.minCoeff() <= floor) {
        if (!epsilon_regularize)
            throw PriorDegenerate("prior joint probability has a vanishing entry",
                                  p.minCoeff());
        p.array() += epsilon;
        p /= p.sum();
    }

    PriorModel model;
    model.joint = p;
    model.beta = p.colwise().sum();

    Matrix rho0 = Matrix::Zero(n, n), rho1 = Matrix::Zero(n, n);
    for (long i = 0; i < n; ++i) rho0 += spec.alpha[i] * spec.basis0.projector(i);
    for (long j = 0; j < n; ++j) rho1 += model.beta[j] * spec.basis1.projector(j);
    model.rho0 = validate_density(rho0);
    model.rho1 = validate_density(rho1);
    model.selected_kraus = build_selected_kraus(spec);
    return model;
}

DensityMatrix prior_intermediate_state(const ExperimentSpec& spec, double t) {
    const SplitChannel& sc = spec.split();
    if (!(t >= 0.0 && t <= sc.tau))
        throw SpecInvalid("t must lie in [0, tau] for the first segment");
    Matrix rho0 = Matrix::Zero(spec.dim, spec.dim);
    for (long i = 0; i < spec.dim; ++i)
        rho0 += spec.alpha[i] * spec.basis0.projector(i);
    KrausChannel seg = sc.pre(0.0, t);
    return validate_density(apply_ops(seg.ops, rho0));
}

RealVector prior_projective_distribution(const ExperimentSpec& spec) {
    const SplitChannel& sc = spec.split();
    const auto* proj = std::get_if<ProjectiveMeasurement>(&sc.measurement);
    if (proj == nullptr) throw SpecInvalid("projective split required");
    KrausChannel pre = sc.pre(0.0, sc.tau);

    RealVector p = RealVector::Zero(spec.dim);
    for (long i = 0; i < spec.dim; ++i) {
        Vector xi = spec.basis0.vector(i);
        for (const Matrix& k : pre.ops) {
            Vector evolved = k * xi;
            for (long z = 0; z < spec.dim; ++z)
                p[z] += spec.alpha[i] * std::norm(proj->z.basis.vector(z).dot(evolved));
        }
    }
    double floor = tol::positivity_floor_rel * p.maxCoeff();
    if (p.minCoeff() <= floor)
        throw PriorDegenerate("prior intermediate distribution has a vanishing entry",
                              p.minCoeff());
    return p;
}

}  // namespace qsb
