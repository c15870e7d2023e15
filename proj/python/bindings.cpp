#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qsb/config.hpp"

namespace py = pybind11;

namespace {

qsb::ConfigDocument config_from_text(const std::string& text) {
    return qsb::parse_config_text(text);
}

py::dict coupling_result(const qsb::CouplingSolution& sol) {
    py::dict out;
    out["coupling"] = sol.coupling;
    out["a"] = sol.potentials.a;
    out["b"] = sol.potentials.b;
    out["kl"] = sol.kl;
    out["iterations"] = sol.diagnostics.iterations;
    out["residual"] = sol.diagnostics.final_residual;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Schrodinger bridges for pre- and post-selected quantum experiments";

    py::register_exception<qsb::InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<qsb::VerificationError>(m, "VerificationError",
                                                   PyExc_RuntimeError);

    m.def(
        "solve_coupling",
        [](const qsb::RealMatrix& prior, const qsb::RealVector& alpha_tilde,
           const qsb::RealVector& beta_tilde, double tol, int max_iter) {
            return coupling_result(
                qsb::solve_coupling(prior, alpha_tilde, beta_tilde, tol, max_iter));
        },
        py::arg("prior"), py::arg("alpha_tilde"), py::arg("beta_tilde"),
        py::arg("tol") = qsb::tol::sinkhorn_residual,
        py::arg("max_iter") = qsb::tol::sinkhorn_max_iter,
        "Classical one-step bridge: minimum-KL coupling with the given marginals.");

    m.def(
        "rate_function",
        [](const qsb::RealMatrix& q, const qsb::RealMatrix& p) {
            return qsb::rate_function(q, p);
        },
        py::arg("q"), py::arg("p"), "Relative entropy sum q log(q/p).");

    m.def(
        "run_solve",
        [](const std::string& config) {
            return qsb::run_solve(config_from_text(config)).dump(2);
        },
        py::arg("config"), "Full solve + verification battery; returns JSON text.");

    m.def(
        "run_intermediate",
        [](const std::string& config) {
            return qsb::run_intermediate_csv(config_from_text(config));
        },
        py::arg("config"), "Intervening-statistics CSV over the tau grid.");

    m.def(
        "run_weak",
        [](const std::string& config) {
            return qsb::run_weak(config_from_text(config)).dump(2);
        },
        py::arg("config"), "Weak-value report; returns JSON text.");

    m.def(
        "run_simulate",
        [](const std::string& config) {
            return qsb::run_simulate(config_from_text(config)).dump(2);
        },
        py::arg("config"), "Endpoint sampling and Sanov report; returns JSON text.");
}
