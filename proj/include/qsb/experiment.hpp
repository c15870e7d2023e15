#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "qsb/channel.hpp"
#include "qsb/linalg.hpp"

namespace qsb {

// Non-degenerate observable fixed by its eigenbasis and eigenvalues.
struct Observable {
    OrthonormalBasis basis;
    RealVector eigenvalues;

    Observable(OrthonormalBasis b, RealVector vals);
    Matrix materialize() const;
};

struct ProjectiveMeasurement {
    Observable z;
};

// Weak slot: observable plus measurement strength. delta = 0 stands for the
// analytic trivial-width limit, where the slot leaves the prior untouched.
struct WeakMeasurement {
    Observable z;
    double delta = 0.0;
};

// Outcome-indexed operator family, discrete (weights 1, summed) or a
// quadrature discretization of a continuous family (trapezoid weights,
// integrated). sum/integral of Omega^dag Omega must be I.
struct GeneralizedMeasurement {
    std::vector<double> outcomes;
    std::vector<double> weights;
    std::vector<Matrix> operators;
    bool continuous = false;

    double completeness_violation(long n) const;
};

using IntermediateMeasurement =
    std::variant<std::monostate, ProjectiveMeasurement, GeneralizedMeasurement,
                 WeakMeasurement>;

struct SplitChannel {
    TimedChannelFamily pre;   // (0, tau)
    TimedChannelFamily post;  // (tau, 1)
    IntermediateMeasurement measurement;
    double tau = 0.5;
};

struct ExperimentSpec {
    long dim = 0;
    OrthonormalBasis basis0;  // X0 eigenbasis
    OrthonormalBasis basis1;  // Y1 eigenbasis
    RealVector alpha;         // prior initial weights
    std::variant<KrausChannel, SplitChannel> channel;
    RealVector alpha_tilde;   // observed initial marginal
    RealVector beta_tilde;    // observed final marginal

    void validate() const;
    bool has_split() const { return std::holds_alternative<SplitChannel>(channel); }
    const SplitChannel& split() const;
    ExperimentSpec with_tau(double tau) const;
};

// Born-rule entry point for alpha when only the pre-measurement state is known.
RealVector alpha_from_state(const DensityMatrix& rho_pre, const OrthonormalBasis& basis0);

// One operator of the selected family, with its endpoint indices kept
// explicit so later updates can regroup by (i, j).
struct SelectedOp {
    long i = 0;  // initial outcome index
    long j = 0;  // final outcome index
    long k = 0;  // channel operator index (flattened over split parts)
    Matrix op;
};

Matrix apply_selected(std::span<const SelectedOp> ops, const Matrix& rho);
Matrix apply_selected_adjoint(std::span<const SelectedOp> ops, const Matrix& x);
double completeness_violation(std::span<const SelectedOp> ops);

// The channel operators L_k(1,0) over the full interval. For a split channel
// this is K_{l'}(1,tau) M K_l(tau,0) with M the intervening projector /
// scaled generalized operator; a weak slot in the trivial-width limit
// contributes nothing.
std::vector<Matrix> full_interval_ops(const ExperimentSpec& spec);

// L_ikj = P1^j L_k P0^i for every (i, k, j).
std::vector<SelectedOp> build_selected_kraus(const ExperimentSpec& spec);

struct PriorModel {
    RealMatrix joint;              // p_ij, strictly positive
    RealVector beta;               // column sums
    DensityMatrix rho0, rho1;
    std::vector<SelectedOp> selected_kraus;
};

// p_ij = sum_k alpha_i |<y_j| L_k |x_i>|^2 plus the endpoint states.
// PriorDegenerate when an entry falls at/below the positivity floor; with
// epsilon_regularize the joint is shifted by epsilon and renormalized
// instead (off by default; it changes the optimization problem).
PriorModel prior_joint(const ExperimentSpec& spec, bool epsilon_regularize = false,
                       double epsilon = 1e-12);

// rho_t = sum_l K_l(t,0) rho_0 K_l(t,0)^dag for 0 <= t <= tau.
DensityMatrix prior_intermediate_state(const ExperimentSpec& spec, double t);

// P_tau(z) = sum_{i,l} alpha_i |<z| K_l(tau,0) |x_i>|^2, for a projective
// split; PriorDegenerate if an entry is at/below the floor.
RealVector prior_projective_distribution(const ExperimentSpec& spec);

}  // namespace qsb
