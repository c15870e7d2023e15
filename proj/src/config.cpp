#include "qsb/config.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace qsb {

namespace {

[[noreturn]] void bad_config(const std::string& why) { throw SpecInvalid(why); }

double require_number(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) bad_config(std::string(key) + " must be a number");
    return j[key].get<double>();
}

RealVector real_vector_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) bad_config(std::string(what) + " must be a nonempty array");
    RealVector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) bad_config(std::string(what) + " entries must be numbers");
        v[static_cast<long>(i)] = j[i].get<double>();
    }
    return v;
}

Json real_vector_to_json(const RealVector& v) {
    Json out = Json::array();
    for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Json real_matrix_to_json(const RealMatrix& m) {
    Json out = Json::array();
    for (long i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json re = Json::array(), im = Json::array();
    for (long i = 0; i < m.rows(); ++i) {
        Json re_row = Json::array(), im_row = Json::array();
        for (long j = 0; j < m.cols(); ++j) {
            re_row.push_back(m(i, j).real());
            im_row.push_back(m(i, j).imag());
        }
        re.push_back(re_row);
        im.push_back(im_row);
    }
    return Json{{"re", re}, {"im", im}};
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("re")) bad_config("matrix needs re (and optional im) arrays");
    const Json& re = j["re"];
    long n = static_cast<long>(re.size());
    if (n == 0) bad_config("matrix re array is empty");
    Matrix m(n, static_cast<long>(re[0].size()));
    for (long r = 0; r < n; ++r) {
        if (static_cast<long>(re[r].size()) != m.cols()) bad_config("ragged matrix rows");
        for (long c = 0; c < m.cols(); ++c) m(r, c) = Complex(re[r][c].get<double>(), 0.0);
    }
    if (j.contains("im")) {
        const Json& im = j["im"];
        if (static_cast<long>(im.size()) != n) bad_config("im shape mismatch");
        for (long r = 0; r < n; ++r)
            for (long c = 0; c < m.cols(); ++c)
                m(r, c) += Complex(0.0, im[r][c].get<double>());
    }
    return m;
}

namespace {

// Basis vectors are the COLUMNS of the serialized matrix.
OrthonormalBasis basis_from_json(const Json& j, long dim) {
    if (j.is_string()) {
        std::string name = j.get<std::string>();
        if (name == "computational" || name == "z")
            return OrthonormalBasis::computational(dim);
        if (name == "x") {
            if (dim != 2) bad_config("basis \"x\" is only defined for dim 2");
            Matrix v(2, 2);
            double s = 1.0 / std::sqrt(2.0);
            v << s, s, s, -s;
            return OrthonormalBasis(v);
        }
        bad_config("unknown basis name \"" + name + "\"");
    }
    if (j.is_object() && j.contains("rotation")) {
        if (dim != 2) bad_config("rotation basis is only defined for dim 2");
        double theta = j["rotation"].get<double>();
        Matrix v(2, 2);
        v << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
        return OrthonormalBasis(v);
    }
    Matrix v = matrix_from_json(j);
    if (v.rows() != dim) bad_config("basis dimension mismatch");
    return OrthonormalBasis(v);
}

TimedChannelFamily family_from_json(const Json& j, long dim) {
    if (!j.is_object() || j.size() != 1)
        bad_config("channel family must be a single-key object");
    if (j.contains("identity")) return identity_family(dim);
    if (j.contains("amplitude_damping")) {
        if (dim != 2) bad_config("amplitude_damping requires dim 2");
        return amplitude_damping_family(require_number(j["amplitude_damping"], "gamma"));
    }
    if (j.contains("depolarizing")) {
        const Json& block = j["depolarizing"];
        double gamma;
        if (block.contains("gamma")) {
            gamma = block["gamma"].get<double>();
        } else if (block.contains("p")) {
            double p = block["p"].get<double>();
            if (!(p >= 0.0 && p < 1.0)) bad_config("depolarizing p must lie in [0,1)");
            gamma = -std::log1p(-p);  // strength p over a unit interval
        } else {
            bad_config("depolarizing needs gamma or p");
        }
        return depolarizing_family(dim, gamma);
    }
    bad_config("unknown channel family " + j.begin().key());
}

Observable observable_from_json(const Json& j, long dim) {
    OrthonormalBasis basis =
        j.contains("basis") ? basis_from_json(j["basis"], dim)
                            : OrthonormalBasis::computational(dim);
    RealVector eig = j.contains("eigenvalues")
                         ? real_vector_from_json(j["eigenvalues"], "eigenvalues")
                         : RealVector();
    if (eig.size() == 0) {
        // default: z-like spectrum n-1, n-3, ..., matching sigma_z at dim 2
        eig.resize(dim);
        for (long k = 0; k < dim; ++k) eig[k] = static_cast<double>(dim - 1 - 2 * k);
    }
    return Observable(std::move(basis), std::move(eig));
}

IntermediateMeasurement measurement_from_json(const Json& j, long dim) {
    if (j.is_null() || (j.is_object() && j.contains("none"))) return std::monostate{};
    if (!j.is_object() || j.size() != 1)
        bad_config("measurement must be a single-key object");
    if (j.contains("projective"))
        return ProjectiveMeasurement{observable_from_json(j["projective"], dim)};
    if (j.contains("weak")) {
        const Json& block = j["weak"];
        WeakMeasurement w{observable_from_json(block, dim),
                          block.contains("delta") ? block["delta"].get<double>() : 0.0};
        return w;
    }
    if (j.contains("generalized")) {
        const Json& block = j["generalized"];
        if (block.contains("weak_family")) {
            const Json& wf = block["weak_family"];
            Observable z = observable_from_json(wf, dim);
            double delta = require_number(wf, "delta");
            int nodes = wf.contains("nodes") ? wf["nodes"].get<int>() : 2001;
            return weak_family(z, delta, nodes);
        }
        GeneralizedMeasurement gen;
        if (!block.contains("operators")) bad_config("generalized needs operators");
        for (const Json& op : block["operators"])
            gen.operators.push_back(matrix_from_json(op));
        std::size_t count = gen.operators.size();
        if (block.contains("outcomes"))
            gen.outcomes = block["outcomes"].get<std::vector<double>>();
        else
            for (std::size_t q = 0; q < count; ++q)
                gen.outcomes.push_back(static_cast<double>(q));
        if (block.contains("weights"))
            gen.weights = block["weights"].get<std::vector<double>>();
        else
            gen.weights.assign(count, 1.0);
        gen.continuous = block.contains("continuous") && block["continuous"].get<bool>();
        if (gen.outcomes.size() != count || gen.weights.size() != count)
            bad_config("generalized outcome/weight counts mismatch");
        return gen;
    }
    bad_config("unknown measurement kind " + j.begin().key());
}

std::variant<KrausChannel, SplitChannel> channel_from_json(const Json& j, long dim) {
    if (!j.is_object()) bad_config("channel must be an object");
    if (j.contains("split")) {
        const Json& block = j["split"];
        SplitChannel sc{family_from_json(block.at("pre"), dim),
                        family_from_json(block.at("post"), dim),
                        measurement_from_json(block.contains("measurement")
                                                  ? block["measurement"]
                                                  : Json(nullptr),
                                              dim),
                        require_number(block, "tau")};
        return sc;
    }
    if (j.contains("explicit")) {
        KrausChannel ch;
        for (const Json& op : j["explicit"].at("operators"))
            ch.ops.push_back(matrix_from_json(op));
        ch.validate();
        return ch;
    }
    return family_from_json(j, dim)(0.0, 1.0);
}

}  // namespace

ConfigDocument parse_config(const Json& doc) {
    if (!doc.is_object()) bad_config("config root must be an object");
    ConfigDocument out{
        doc.contains("schema_version") ? doc["schema_version"].get<std::string>() : "",
        ExperimentSpec{},
        {},
        {},
        {},
        doc};
    if (out.schema_version != "1" && out.schema_version != "1.0")
        bad_config("unrecognized schema_version (expected \"1\")");

    if (!doc.contains("experiment")) bad_config("config needs an experiment block");
    const Json& exp = doc["experiment"];
    long dim = exp.contains("dim") ? exp["dim"].get<long>() : 0;
    if (dim < 1) bad_config("experiment.dim must be >= 1");

    ExperimentSpec spec{
        dim,
        basis_from_json(exp.at("basis0"), dim),
        basis_from_json(exp.at("basis1"), dim),
        real_vector_from_json(exp.at("alpha"), "alpha"),
        channel_from_json(exp.at("channel"), dim),
        real_vector_from_json(exp.at("observed_alpha_tilde"), "observed_alpha_tilde"),
        real_vector_from_json(exp.at("observed_beta_tilde"), "observed_beta_tilde")};
    spec.validate();
    out.experiment = std::move(spec);

    if (doc.contains("solver")) {
        const Json& s = doc["solver"];
        if (s.contains("tol")) out.solver.tol = s["tol"].get<double>();
        if (s.contains("max_iter")) out.solver.max_iter = s["max_iter"].get<int>();
    }
    if (doc.contains("inference")) {
        const Json& s = doc["inference"];
        if (s.contains("tau_grid")) out.inference.tau_grid = s["tau_grid"].get<int>();
        if (s.contains("quadrature_nodes"))
            out.inference.quadrature_nodes = s["quadrature_nodes"].get<int>();
        if (s.contains("delta_ladder"))
            out.inference.delta_ladder = s["delta_ladder"].get<std::vector<double>>();
        if (s.contains("pair_i")) out.inference.pair_i = s["pair_i"].get<long>();
        if (s.contains("pair_j")) out.inference.pair_j = s["pair_j"].get<long>();
    }
    if (doc.contains("simulate")) {
        const Json& s = doc["simulate"];
        if (s.contains("trials")) out.simulate.trials = s["trials"].get<std::uint64_t>();
        if (s.contains("seed")) out.simulate.seed = s["seed"].get<std::uint64_t>();
        if (s.contains("workers")) out.simulate.workers = s["workers"].get<int>();
        if (s.contains("sanov_ladder"))
            out.simulate.sanov_ladder = s["sanov_ladder"].get<std::vector<long>>();
        if (s.contains("source")) out.simulate.source = s["source"].get<std::string>();
    }
    return out;
}

ConfigDocument parse_config_text(const std::string& text) {
    Json doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded()) bad_config("config is not valid JSON");
    return parse_config(doc);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

namespace {

// Echo with worker-count settings removed, so identical experiments produce
// byte-identical documents regardless of parallelism.
Json config_echo(const ConfigDocument& config) {
    Json echo = config.raw;
    if (echo.contains("simulate") && echo["simulate"].contains("workers"))
        echo["simulate"].erase("workers");
    return echo;
}

struct VerificationLog {
    Json rows = Json::array();
    bool all_pass = true;

    void add(const std::string& name, double residual, double tolerance) {
        bool pass = residual <= tolerance;
        all_pass = all_pass && pass;
        rows.push_back(Json{{"name", name},
                            {"residual", residual},
                            {"tolerance", tolerance},
                            {"pass", pass}});
    }
};

Json selected_ops_to_json(const std::vector<SelectedOp>& ops) {
    Json out = Json::array();
    for (const SelectedOp& s : ops) {
        Json entry = matrix_to_json(s.op);
        entry["i"] = s.i;
        entry["j"] = s.j;
        entry["k"] = s.k;
        out.push_back(entry);
    }
    return out;
}

Json error_to_json(const Error& e) {
    Json out{{"code", e.code()}, {"message", e.what()}};
    if (std::isfinite(e.violation())) out["violation"] = e.violation();
    return out;
}

}  // namespace

Json run_solve(const ConfigDocument& config) {
    const ExperimentSpec& spec = config.experiment;
    Json doc{{"schema_version", "1"}, {"command", "solve"}, {"config", config_echo(config)}};
    VerificationLog log;

    try {
        PriorModel prior = prior_joint(spec);
        BridgeSolution bridge =
            solve_bridge(spec, prior, config.solver.tol, config.solver.max_iter);

        doc["prior"] = Json{{"joint", real_matrix_to_json(prior.joint)},
                            {"beta", real_vector_to_json(prior.beta)}};
        doc["coupling"] = real_matrix_to_json(bridge.coupling);
        doc["kl"] = bridge.kl;
        doc["iterations"] = bridge.diagnostics.iterations;

        log.add("sinkhorn_marginal_residual", bridge.diagnostics.final_residual,
                config.solver.tol);
        log.add("updated_channel_completeness", bridge.completeness_residual,
                tol::channel_completeness);
        log.add("endpoint_bridging", bridge.bridging_residual, tol::endpoint_bridging);
        log.add("phi_backward_evolution", bridge.system.residual_backward,
                tol::consistency);
        log.add("phihat_forward_evolution", bridge.system.residual_forward,
                tol::consistency);

        ReversedBridge reversed = solve_reverse_bridge(spec, prior, bridge, true);
        log.add("reversed_completeness", reversed.residual_completeness,
                tol::channel_completeness);
        log.add("reversed_bridging", reversed.residual_bridging, tol::endpoint_bridging);
        log.add("psi_adjoint_evolution", reversed.residual_adjoint, tol::consistency);
        log.add("psihat_reversed_evolution", reversed.residual_forward, tol::consistency);
        log.add("reversed_coupling_match", reversed.residual_coupling_match,
                tol::consistency);

        EquivalenceReport eq = check_equivalence(spec, prior, bridge, reversed);
        log.add("equivalence_operator", eq.operator_residual, tol::reversal_operator);
        log.add("sym_rho0", eq.sym_rho0, tol::consistency);
        log.add("sym_rho1", eq.sym_rho1, tol::consistency);
        log.add("hat_rho0", eq.hat_rho0, tol::consistency);
        log.add("hat_rho1", eq.hat_rho1, tol::consistency);
        log.add("coefficient_identity", eq.coefficient_identity, tol::consistency);

        doc["potentials"] = Json{{"a", real_vector_to_json(bridge.potentials.a)},
                                 {"b", real_vector_to_json(bridge.potentials.b)},
                                 {"c", real_vector_to_json(reversed.c)},
                                 {"d", real_vector_to_json(reversed.d)}};
        doc["updated_kraus"] = selected_ops_to_json(bridge.updated_kraus);
        doc["updated_reversed_kraus"] =
            selected_ops_to_json(reversed.updated_reversed_kraus);
    } catch (const VerificationError& e) {
        doc["error"] = error_to_json(e);
        log.all_pass = false;
    }

    doc["verifications"] = log.rows;
    doc["all_pass"] = log.all_pass;
    return doc;
}

std::string run_intermediate_csv(const ConfigDocument& config) {
    const ExperimentSpec& spec = config.experiment;
    if (!spec.has_split() ||
        !std::holds_alternative<ProjectiveMeasurement>(spec.split().measurement))
        throw SpecInvalid("intermediate requires a split channel with a projective slot");
    int grid = config.inference.tau_grid;
    if (grid < 2) throw SpecInvalid("tau_grid must be >= 2");

    long n = spec.dim;
    std::ostringstream csv;
    csv << "tau";
    for (long z = 0; z < n; ++z) csv << ",prior_p" << z;
    for (long z = 0; z < n; ++z) csv << ",bridge_p" << z;
    csv << "\n";

    constexpr double edge = 1e-8;
    for (int g = 0; g < grid; ++g) {
        double tau = static_cast<double>(g) / (grid - 1);
        tau = std::min(std::max(tau, edge), 1.0 - edge);
        ExperimentSpec at_tau = spec.with_tau(tau);
        PriorModel prior = prior_joint(at_tau);
        BridgeSolution bridge =
            solve_bridge(at_tau, prior, config.solver.tol, config.solver.max_iter);
        RealVector prior_dist = prior_projective_distribution(at_tau);
        IntermediateDistribution dist =
            most_likely_projective_distribution(at_tau, bridge);

        csv << format_number(tau);
        for (long z = 0; z < n; ++z) csv << "," << format_number(prior_dist[z]);
        for (long z = 0; z < n; ++z) csv << "," << format_number(dist.probs[z]);
        csv << "\n";
    }
    return csv.str();
}

Json run_weak(const ConfigDocument& config) {
    const ExperimentSpec& spec = config.experiment;
    Json doc{{"schema_version", "1"}, {"command", "weak"}, {"config", config_echo(config)}};
    VerificationLog log;

    try {
        const auto* weak = std::get_if<WeakMeasurement>(&spec.split().measurement);
        if (weak == nullptr) throw SpecInvalid("weak requires a weak measurement slot");

        PriorModel prior = prior_joint(spec);
        BridgeSolution bridge =
            solve_bridge(spec, prior, config.solver.tol, config.solver.max_iter);

        Json pair_values = Json::array();
        for (long i = 0; i < spec.dim; ++i)
            for (long j = 0; j < spec.dim; ++j)
                pair_values.push_back(
                    Json{{"i", i}, {"j", j}, {"value", weak_value(spec, i, j)}});
        doc["weak_values"] = pair_values;

        WeakValueResult ml = most_likely_weak_value(spec, prior, bridge);
        doc["most_likely"] = Json{{"value", ml.value},
                                  {"forward", ml.forward},
                                  {"reversed", ml.reversed},
                                  {"disintegration", ml.disintegration},
                                  {"tau", ml.tau}};
        log.add("weak_route_forward_vs_reversed", std::abs(ml.forward - ml.reversed),
                1e-9);
        log.add("weak_route_forward_vs_disintegration",
                std::abs(ml.forward - ml.disintegration), 1e-10);

        long pi = config.inference.pair_i, pj = config.inference.pair_j;
        double reference = weak_value(spec, pi, pj);
        double worst_quad = 0.0;
        Json ladder = Json::array();
        for (double delta : config.inference.delta_ladder) {
            Observable z = weak->z;
            GeneralizedMeasurement fam =
                weak_family(z, delta, config.inference.quadrature_nodes);
            double quad_dev = fam.completeness_violation(spec.dim);
            worst_quad = std::max(worst_quad, quad_dev);
            double average = finite_delta_weak_average(spec, pi, pj, delta,
                                                       config.inference.quadrature_nodes);
            ladder.push_back(Json{{"delta", delta},
                                  {"average", average},
                                  {"abs_error", std::abs(average - reference)},
                                  {"quadrature_normalization_error", quad_dev}});
        }
        doc["delta_ladder"] = ladder;
        doc["ladder_pair"] = Json{{"i", pi}, {"j", pj}, {"weak_value", reference}};
        if (!config.inference.delta_ladder.empty())
            log.add("weak_family_quadrature_normalization", worst_quad,
                    tol::quadrature_norm);
    } catch (const VerificationError& e) {
        doc["error"] = error_to_json(e);
        log.all_pass = false;
    }

    doc["verifications"] = log.rows;
    doc["all_pass"] = log.all_pass;
    return doc;
}

Json run_simulate(const ConfigDocument& config) {
    const ExperimentSpec& spec = config.experiment;
    Json doc{{"schema_version", "1"}, {"command", "simulate"},
             {"config", config_echo(config)}};
    VerificationLog log;

    try {
        PriorModel prior = prior_joint(spec);
        RealMatrix source = prior.joint;
        if (config.simulate.source == "bridge") {
            BridgeSolution bridge =
                solve_bridge(spec, prior, config.solver.tol, config.solver.max_iter);
            source = bridge.coupling;
        } else if (config.simulate.source != "prior") {
            throw SpecInvalid("simulate.source must be \"prior\" or \"bridge\"");
        }

        TrajectoryCounts counts = sample_from_coupling(
            source, config.simulate.trials, config.simulate.seed, config.simulate.workers);
        Json counts_json = Json::array();
        for (long i = 0; i < counts.counts.rows(); ++i) {
            Json row = Json::array();
            for (long j = 0; j < counts.counts.cols(); ++j)
                row.push_back(counts.counts(i, j));
            counts_json.push_back(row);
        }
        doc["counts"] = counts_json;
        doc["trials"] = counts.n_trials;
        doc["seed"] = counts.seed;
        doc["source"] = config.simulate.source;
        doc["empirical"] = Json{
            {"joint", real_matrix_to_json(counts.empirical_joint())},
            {"rows", real_vector_to_json(counts.empirical_rows())},
            {"cols", real_vector_to_json(counts.empirical_cols())}};

        if (!config.simulate.sanov_ladder.empty()) {
            if (spec.dim != 2) {
                doc["sanov"] = Json{{"skipped", "exact enumeration is desk-scale (2x2) only"}};
            } else {
                try {
                    SanovReport rep =
                        sanov_decay_check(prior.joint, spec.alpha_tilde, spec.beta_tilde,
                                          config.simulate.sanov_ladder);
                    Json ladder = Json::array();
                    for (std::size_t k = 0; k < rep.n_ladder.size(); ++k)
                        ladder.push_back(Json{
                            {"N", rep.n_ladder[k]},
                            {"event_log_prob", rep.event_log_prob[k]},
                            {"rate_estimate", rep.rate_estimates[k]},
                            {"best_empirical_kl_to_bridge", rep.best_empirical_kl[k]}});
                    doc["sanov"] = Json{{"bridge_kl", rep.bridge_kl}, {"ladder", ladder}};
                } catch (const InfeasibleMarginals& e) {
                    doc["sanov"] = Json{{"skipped", e.what()}};
                }
            }
        }
    } catch (const VerificationError& e) {
        doc["error"] = error_to_json(e);
        log.all_pass = false;
    }

    doc["verifications"] = log.rows;
    doc["all_pass"] = log.all_pass;
    return doc;
}

}  // namespace qsb
