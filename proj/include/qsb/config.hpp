#pragma once

#include <string>

#include <json.hpp>

#include "qsb/ensemble.hpp"
#include "qsb/inference.hpp"

namespace qsb {

using Json = nlohmann::json;

// Knobs shared by the run drivers; every field maps to a config block entry
// and can be overridden by the CLI flags.
struct SolverOptions {
    double tol = tol::sinkhorn_residual;
    int max_iter = tol::sinkhorn_max_iter;
};

struct InferenceOptions {
    int tau_grid = 101;
    int quadrature_nodes = 2001;
    std::vector<double> delta_ladder{0.2, 0.1, 0.05, 0.025, 0.0125};
    long pair_i = 0;
    long pair_j = 0;
};

struct SimulateOptions {
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<long> sanov_ladder;
    std::string source = "prior";  // or "bridge"
};

struct ConfigDocument {
    std::string schema_version;
    ExperimentSpec experiment;
    SolverOptions solver;
    InferenceOptions inference;
    SimulateOptions simulate;
    Json raw;  // parsed source, echoed into results (minus worker settings)
};

ConfigDocument parse_config(const Json& doc);
ConfigDocument parse_config_text(const std::string& text);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// Result documents. Each verification row carries the measured residual, the
// tolerance it was held to, and a pass flag; all_pass drives the CLI exit
// code.
Json run_solve(const ConfigDocument& config);
std::string run_intermediate_csv(const ConfigDocument& config);
Json run_weak(const ConfigDocument& config);
Json run_simulate(const ConfigDocument& config);

// 17-significant-digit scientific notation, C locale, for the CSV contract.
std::string format_number(double v);

}  // namespace qsb
