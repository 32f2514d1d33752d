#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>

#include "stochmat/generator.hpp"
#include "stochmat/io.hpp"
#include "stochmat/oracle.hpp"
#include "stochmat/solvers.hpp"
#include "stochmat/sylvester.hpp"

namespace py = pybind11;
using namespace stochmat;

namespace {

Algorithm parse_algorithm(const std::string& name)
{
    if (name == "ns") return Algorithm::NewtonShamanskii;
    if (name == "newton") return Algorithm::Newton;
    if (name == "fi") return Algorithm::FunctionalIteration;
    throw py::value_error("algorithm must be 'ns', 'newton' or 'fi'");
}

SolverConfig make_config(double tol, int max_outer, py::object nk, const std::string& algorithm,
                         std::optional<Matrix> initial, bool record_iterates)
{
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_outer = max_outer;
    cfg.algorithm = parse_algorithm(algorithm);
    cfg.initial = std::move(initial);
    cfg.record_iterates = record_iterates;
    if (cfg.algorithm == Algorithm::Newton) {
        cfg.inner_schedule = FixedSchedule{1};
    } else if (py::isinstance<py::str>(nk)) {
        if (nk.cast<std::string>() != "auto") throw py::value_error("nk must be an int or 'auto'");
        cfg.inner_schedule = AdaptiveSchedule{};
    } else {
        cfg.inner_schedule = FixedSchedule{nk.cast<int>()};
    }
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Newton-Shamanskii solvers for M/G/1- and GI/M/1-type matrix equations";

    static py::exception<Error> base_error(m, "StochmatError", PyExc_RuntimeError);
    static py::object not_converged = py::reinterpret_borrow<py::object>(
        PyErr_NewException("stochmat._core.NotConverged", base_error.ptr(), nullptr));
    m.attr("NotConverged") = not_converged;

    py::class_<MG1Model>(m, "MG1Model")
        .def(py::init<>())
        .def(py::init([](std::vector<Matrix> A) { return MG1Model{std::move(A)}; }), py::arg("A"))
        .def_readwrite("A", &MG1Model::A)
        .def_property_readonly("m", &MG1Model::dim)
        .def_property_readonly("N", &MG1Model::degree);

    py::class_<GIM1Model>(m, "GIM1Model")
        .def(py::init([](std::vector<Matrix> A) { return GIM1Model{std::move(A)}; }), py::arg("A"))
        .def_readwrite("A", &GIM1Model::A)
        .def_property_readonly("m", &GIM1Model::dim)
        .def_property_readonly("N", &GIM1Model::degree);

    py::class_<LowRankDownModel>(m, "LowRankDownModel")
        .def(py::init([](Matrix A0_hat, Matrix Gamma, std::vector<Matrix> upper) {
                 return LowRankDownModel{std::move(A0_hat), std::move(Gamma), std::move(upper)};
             }),
             py::arg("A0_hat"), py::arg("Gamma"), py::arg("upper"))
        .def_readwrite("A0_hat", &LowRankDownModel::A0_hat)
        .def_readwrite("Gamma", &LowRankDownModel::Gamma)
        .def_readwrite("upper", &LowRankDownModel::upper)
        .def("to_full", &LowRankDownModel::to_full);

    py::class_<LowRankUpModel>(m, "LowRankUpModel")
        .def(py::init([](Matrix A0, Matrix Gamma, std::vector<Matrix> A_hat) {
                 return LowRankUpModel{std::move(A0), std::move(Gamma), std::move(A_hat)};
             }),
             py::arg("A0"), py::arg("Gamma"), py::arg("A_hat"))
        .def_readwrite("A0", &LowRankUpModel::A0)
        .def_readwrite("Gamma", &LowRankUpModel::Gamma)
        .def_readwrite("A_hat", &LowRankUpModel::A_hat)
        .def("to_full", &LowRankUpModel::to_full);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init(&make_config), py::arg("tol") = 1e-12, py::arg("max_outer") = 100,
             py::arg("nk") = py::int_(3), py::arg("algorithm") = "ns", py::arg("initial") = std::nullopt,
             py::arg("record_iterates") = false)
        .def_readwrite("tol", &SolverConfig::tol)
        .def_readwrite("max_outer", &SolverConfig::max_outer)
        .def_readwrite("record_iterates", &SolverConfig::record_iterates);

    py::class_<SolveReport>(m, "SolveReport")
        .def_readonly("solution", &SolveReport::solution)
        .def_readonly("G", &SolveReport::G)
        .def_readonly("g_residual", &SolveReport::g_residual)
        .def_readonly("outer_count", &SolveReport::outer_count)
        .def_readonly("inner_counts", &SolveReport::inner_counts)
        .def_readonly("residual_history", &SolveReport::residual_history)
        .def_readonly("factorization_count", &SolveReport::factorization_count)
        .def_readonly("converged", &SolveReport::converged)
        .def_readonly("warnings", &SolveReport::warnings)
        .def_readonly("unknown_rows", &SolveReport::unknown_rows)
        .def_readonly("unknown_cols", &SolveReport::unknown_cols)
        .def_readonly("iterates", &SolveReport::iterates)
        .def_property_readonly("inner_total", &SolveReport::inner_total)
        .def_property_readonly("algorithm", [](const SolveReport& r) { return to_string(r.algorithm); });

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NotConverged& e) {
            py::object exc = not_converged(e.what());
            exc.attr("report") = py::cast(e.report());
            PyErr_SetObject(not_converged.ptr(), exc.ptr());
        }
    });

    m.def("drift", [](const MG1Model& model) {
        const DriftReport d = drift(model);
        py::dict out;
        out["p"] = d.p;
        out["beta"] = d.beta;
        out["rho"] = d.rho;
        out["class"] = to_string(d.recurrence);
        return out;
    });
    m.def("stationary_vector", &stationary_vector, py::arg("P"));
    m.def("poly_eval", &poly_eval, py::arg("model"), py::arg("X"));
    m.def("residual", &residual, py::arg("model"), py::arg("X"));
    m.def("trim_degree", py::overload_cast<const MG1Model&, double>(&trim_degree), py::arg("model"),
          py::arg("threshold"));
    m.def("trim_degree", py::overload_cast<const LowRankDownModel&, double>(&trim_degree), py::arg("model"),
          py::arg("threshold"));
    m.def("trim_degree", py::overload_cast<const LowRankUpModel&, double>(&trim_degree), py::arg("model"),
          py::arg("threshold"));
    m.def(
        "validate",
        [](const MG1Model& model, const std::string& mode) {
            const auto diags = validate(model, mode == "permissive" ? ValidationMode::Permissive : ValidationMode::Strict);
            std::vector<std::string> out;
            for (const auto& d : diags) out.push_back(to_string(d.kind) + ": " + d.message);
            return out;
        },
        py::arg("model"), py::arg("mode") = "strict");
    m.def("build_S", &build_S, py::arg("model"), py::arg("Gk"));

    m.def("solve_G", &solve_G, py::arg("model"), py::arg("config") = SolverConfig{});
    m.def("solve_G_lowrank_down", &solve_G_lowrank_down, py::arg("model"), py::arg("config") = SolverConfig{});
    m.def("solve_U", py::overload_cast<const MG1Model&, const SolverConfig&>(&solve_U), py::arg("model"),
          py::arg("config") = SolverConfig{});
    m.def("solve_U", py::overload_cast<const LowRankUpModel&, const SolverConfig&>(&solve_U), py::arg("model"),
          py::arg("config") = SolverConfig{});
    m.def("solve_R", &solve_R, py::arg("model"), py::arg("config") = SolverConfig{});

    m.def(
        "sylvester_solve",
        [](std::vector<Matrix> B, Matrix C, const Matrix& E) {
            return StructuredFactorization(StructuredOperator{std::move(B), std::move(C)}).solve(E);
        },
        py::arg("B"), py::arg("C"), py::arg("E"));
    m.def(
        "sylvester_apply",
        [](std::vector<Matrix> B, Matrix C, const Matrix& X) {
            return apply(StructuredOperator{std::move(B), std::move(C)}, X);
        },
        py::arg("B"), py::arg("C"), py::arg("X"));
    m.def("kron_solve", &oracle::kron_solve, py::arg("B"), py::arg("C"), py::arg("E"));
    m.def("frechet_apply", &oracle::frechet_apply, py::arg("model"), py::arg("X"), py::arg("Z"));
    m.def("jacobian_kron", &oracle::jacobian_kron, py::arg("model"), py::arg("X"));
    m.def(
        "m_matrix_check", [](const Matrix& A) { return oracle::to_string(oracle::m_matrix_check(A)); },
        py::arg("A"));
    m.def(
        "functional_oracle",
        [](const MG1Model& model, long iters, double tol) { return oracle::functional_oracle(model, iters, tol).G; },
        py::arg("model"), py::arg("iters") = 1000000L, py::arg("tol") = 1e-15);

    m.def(
        "parse_model", [](const std::string& text) { return io::parse_model(text); }, py::arg("text"));
    m.def(
        "serialize_model", [](const io::AnyModel& model) { return io::serialize_model(model); },
        py::arg("model"));
    m.def(
        "generate",
        [](Index m_, Index N, std::uint64_t seed, double decay, double mass0, const std::string& mode, Index r) {
            GeneratorParams p;
            p.m = m_;
            p.N = N;
            p.seed = seed;
            p.decay = decay;
            p.mass0 = mass0;
            p.r = r;
            if (mode == "full") p.mode = GeneratorMode::Full;
            else if (mode == "down") p.mode = GeneratorMode::Down;
            else if (mode == "up") p.mode = GeneratorMode::Up;
            else throw py::value_error("mode must be 'full', 'down' or 'up'");
            return generate(p);
        },
        py::arg("m"), py::arg("N"), py::arg("seed") = 1, py::arg("decay") = 0.5, py::arg("mass0") = 0.6,
        py::arg("mode") = "full", py::arg("r") = 1);
}
