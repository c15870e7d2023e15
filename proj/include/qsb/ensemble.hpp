#pragma once

#include <cstdint>

#include "qsb/bridge.hpp"
#include "qsb/rng.hpp"

namespace qsb {

struct TrajectoryCounts {
    std::uint64_t n_trials = 0;
    CountMatrix counts;  // empirical joint occurrences of (i, j)
    std::uint64_t seed = 0;

    RealVector empirical_rows() const;
    RealVector empirical_cols() const;
    RealMatrix empirical_joint() const;
};

// N i.i.d. endpoint pairs from the prior coupling; deterministic in
// (seed, trial index) regardless of worker count.
TrajectoryCounts sample_experiment(const PriorModel& prior, std::uint64_t n_trials,
                                   std::uint64_t seed, int workers = 1);

// Same sampler against an arbitrary coupling (e.g. p~*, simulating the
// assistant's selection protocol).
TrajectoryCounts sample_from_coupling(const RealMatrix& coupling, std::uint64_t n_trials,
                                      std::uint64_t seed, int workers = 1);

struct ExhaustiveCoupling {
    CountMatrix table;     // arg max multinomial probability
    double log_prob = 0.0; // log P(table) under the prior
    long tables_enumerated = 0;
};

// Enumerates every nonnegative integer matrix with row sums N alpha~ and
// column sums N beta~ (the transportation-polytope lattice points) and
// returns the multinomial-probability maximizer under p.
// InfeasibleMarginals when N alpha~ / N beta~ are not integral; TooLarge when
// the enumeration would exceed the table budget.
ExhaustiveCoupling exhaustive_most_likely_coupling(const RealMatrix& p,
                                                   const RealVector& alpha_tilde,
                                                   const RealVector& beta_tilde, long n,
                                                   long max_tables = 5'000'000);

struct SanovReport {
    std::vector<long> n_ladder;
    RealVector alpha_tilde, beta_tilde;
    double bridge_kl = 0.0;                 // KL(p~* || p)
    std::vector<double> event_log_prob;     // log P_N of the marginal event
    std::vector<double> rate_estimates;     // -log(P_N) / N
    std::vector<double> best_empirical_kl;  // KL(argmax/N || p~*)
};

// Exact Sanov check: total multinomial probability of the marginal event per
// ladder point, against the bridge rate KL(p~* || p).
SanovReport sanov_decay_check(const RealMatrix& p, const RealVector& alpha_tilde,
                              const RealVector& beta_tilde,
                              const std::vector<long>& n_ladder);

// log N! / (prod T_ij!) + sum T_ij log p_ij via lgamma.
double multinomial_log_prob(const CountMatrix& table, const RealMatrix& p);

}  // namespace qsb
