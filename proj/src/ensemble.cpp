#include "qsb/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace qsb {

RealVector TrajectoryCounts::empirical_rows() const {
    RealVector out = counts.cast<double>().rowwise().sum();
    if (n_trials > 0) out /= static_cast<double>(n_trials);
    return out;
}

RealVector TrajectoryCounts::empirical_cols() const {
    RealVector out = counts.cast<double>().colwise().sum().transpose();
    if (n_trials > 0) out /= static_cast<double>(n_trials);
    return out;
}

RealMatrix TrajectoryCounts::empirical_joint() const {
    RealMatrix out = counts.cast<double>();
    if (n_trials > 0) out /= static_cast<double>(n_trials);
    return out;
}

namespace {

TrajectoryCounts sample_counts(const RealMatrix& coupling, std::uint64_t n_trials,
                               std::uint64_t seed, int workers) {
    long n = coupling.rows(), m = coupling.cols();
    if (workers < 1) workers = 1;

    // Flattened CDF for inverse sampling; the last entry is clamped so a
    // uniform draw of 1-eps cannot fall off the end.
    std::vector<double> cdf(static_cast<std::size_t>(n * m));
    double acc = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < m; ++j) {
            acc += coupling(i, j);
            cdf[static_cast<std::size_t>(i * m + j)] = acc;
        }
    cdf.back() = std::max(cdf.back(), 1.0);

    CounterRng rng(seed);
    auto draw_cell = [&](std::uint64_t trial) {
        double u = rng.uniform(trial) * acc;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        auto cell = static_cast<long>(it - cdf.begin());
        if (cell >= n * m) cell = n * m - 1;
        return cell;
    };

    std::vector<CountMatrix> partial(static_cast<std::size_t>(workers),
                                     CountMatrix::Zero(n, m));
    auto run_range = [&](int w, std::uint64_t lo, std::uint64_t hi) {
        CountMatrix local = CountMatrix::Zero(n, m);
        for (std::uint64_t t = lo; t < hi; ++t) {
            long cell = draw_cell(t);
            local(cell / m, cell % m) += 1;
        }
        partial[static_cast<std::size_t>(w)] = std::move(local);
    };

    if (workers == 1 || n_trials < 2) {
        run_range(0, 0, n_trials);
    } else {
        std::vector<std::thread> pool;
        std::uint64_t chunk = n_trials / static_cast<std::uint64_t>(workers);
        for (int w = 0; w < workers; ++w) {
            std::uint64_t lo = chunk * static_cast<std::uint64_t>(w);
            std::uint64_t hi = (w == workers - 1) ? n_trials : lo + chunk;
            pool.emplace_back(run_range, w, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    TrajectoryCounts out;
    out.n_trials = n_trials;
    out.seed = seed;
    out.counts = CountMatrix::Zero(n, m);
    for (const CountMatrix& c : partial) out.counts += c;
    return out;
}

}  // namespace

TrajectoryCounts sample_experiment(const PriorModel& prior, std::uint64_t n_trials,
                                   std::uint64_t seed, int workers) {
    return sample_counts(prior.joint, n_trials, seed, workers);
}

TrajectoryCounts sample_from_coupling(const RealMatrix& coupling, std::uint64_t n_trials,
                                      std::uint64_t seed, int workers) {
    if (coupling.minCoeff() < 0.0)
        throw SpecInvalid("coupling entries must be nonnegative");
    if (std::abs(coupling.sum() - 1.0) > tol::probability_sum)
        throw SpecInvalid("coupling must sum to 1");
    return sample_counts(coupling, n_trials, seed, workers);
}

double multinomial_log_prob(const CountMatrix& table, const RealMatrix& p) {
    long total = table.sum();
    double lp = std::lgamma(static_cast<double>(total) + 1.0);
    for (long i = 0; i < table.rows(); ++i)
        for (long j = 0; j < table.cols(); ++j) {
            long t = table(i, j);
            lp -= std::lgamma(static_cast<double>(t) + 1.0);
            if (t > 0) {
                if (p(i, j) <= 0.0) return -std::numeric_limits<double>::infinity();
                lp += static_cast<double>(t) * std::log(p(i, j));
            }
        }
    return lp;
}

namespace {

std::vector<long> integral_targets(const RealVector& v, long n, const char* name) {
    std::vector<long> out(static_cast<std::size_t>(v.size()));
    for (long i = 0; i < v.size(); ++i) {
        double target = v[i] * static_cast<double>(n);
        double rounded = std::round(target);
        if (std::abs(target - rounded) > 1e-9)
            throw InfeasibleMarginals(std::string(name) +
                                      " scaled by N is not integral at index " +
                                      std::to_string(i));
        out[static_cast<std::size_t>(i)] = static_cast<long>(rounded);
    }
    return out;
}

// Depth-first fill of the table, row by row, cell by cell; the final cell of
// each row/column is forced by the remaining sums.
template <typename Visit>
void enumerate_tables(CountMatrix& table, std::vector<long>& col_left, long row,
                      long col, long row_left, const std::vector<long>& rows,
                      long& budget, Visit&& visit) {
    long n = table.rows(), m = table.cols();
    if (row == n) {
        if (--budget < 0) throw TooLarge("transportation-polytope enumeration budget hit");
        visit(table);
        return;
    }
    if (col == m - 1) {
        if (row_left > col_left[static_cast<std::size_t>(col)]) return;
        table(row, col) = row_left;
        col_left[static_cast<std::size_t>(col)] -= row_left;
        enumerate_tables(table, col_left, row + 1, 0,
                         row + 1 < n ? rows[static_cast<std::size_t>(row + 1)] : 0, rows,
                         budget, visit);
        col_left[static_cast<std::size_t>(col)] += row_left;
        return;
    }
    long cap = std::min(row_left, col_left[static_cast<std::size_t>(col)]);
    for (long t = 0; t <= cap; ++t) {
        table(row, col) = t;
        col_left[static_cast<std::size_t>(col)] -= t;
        enumerate_tables(table, col_left, row, col + 1, row_left - t, rows, budget,
                         visit);
        col_left[static_cast<std::size_t>(col)] += t;
    }
    table(row, col) = 0;
}

}  // namespace

ExhaustiveCoupling exhaustive_most_likely_coupling(const RealMatrix& p,
                                                   const RealVector& alpha_tilde,
                                                   const RealVector& beta_tilde, long n,
                                                   long max_tables) {
    if (n < 0) throw SpecInvalid("N must be nonnegative");
    std::vector<long> rows = integral_targets(alpha_tilde, n, "alpha_tilde");
    std::vector<long> cols = integral_targets(beta_tilde, n, "beta_tilde");

    ExhaustiveCoupling best;
    best.log_prob = -std::numeric_limits<double>::infinity();
    CountMatrix table = CountMatrix::Zero(p.rows(), p.cols());
    std::vector<long> col_left = cols;
    long budget = max_tables;
    long seen = 0;
    enumerate_tables(table, col_left, 0, 0, rows.empty() ? 0 : rows[0], rows, budget,
                     [&](const CountMatrix& t) {
                         ++seen;
                         double lp = multinomial_log_prob(t, p);
                         if (lp > best.log_prob) {
                             best.log_prob = lp;
                             best.table = t;
                         }
                     });
    if (seen == 0) throw InfeasibleMarginals("no table matches the requested marginals");
    best.tables_enumerated = seen;
    return best;
}

SanovReport sanov_decay_check(const RealMatrix& p, const RealVector& alpha_tilde,
                              const RealVector& beta_tilde,
                              const std::vector<long>& n_ladder) {
    CouplingSolution bridge = solve_coupling(p, alpha_tilde, beta_tilde);

    SanovReport rep;
    rep.n_ladder = n_ladder;
    rep.alpha_tilde = alpha_tilde;
    rep.beta_tilde = beta_tilde;
    rep.bridge_kl = bridge.kl;

    for (long n : n_ladder) {
        std::vector<long> rows = integral_targets(alpha_tilde, n, "alpha_tilde");
        std::vector<long> cols = integral_targets(beta_tilde, n, "beta_tilde");

        // log-sum-exp over every feasible table
        std::vector<double> lps;
        CountMatrix table = CountMatrix::Zero(p.rows(), p.cols());
        std::vector<long> col_left = cols;
        long budget = 5'000'000;
        double best_lp = -std::numeric_limits<double>::infinity();
        CountMatrix best_table;
        enumerate_tables(table, col_left, 0, 0, rows.empty() ? 0 : rows[0], rows, budget,
                         [&](const CountMatrix& t) {
                             double lp = multinomial_log_prob(t, p);
                             lps.push_back(lp);
                             if (lp > best_lp) {
                                 best_lp = lp;
                                 best_table = t;
                             }
                         });
        double peak = *std::max_element(lps.begin(), lps.end());
        double sum = 0.0;
        for (double lp : lps) sum += std::exp(lp - peak);
        double event_lp = peak + std::log(sum);
        rep.event_log_prob.push_back(event_lp);
        rep.rate_estimates.push_back(n > 0 ? -event_lp / static_cast<double>(n) : 0.0);

        RealMatrix empirical = best_table.cast<double>() / static_cast<double>(n);
        rep.best_empirical_kl.push_back(rate_function(empirical, bridge.coupling));
    }
    return rep;
}

}  // namespace qsb
