#include "longgreeks/analytic.hpp"
#include "longgreeks/cli.hpp"
#include "longgreeks/errors.hpp"
#include "longgreeks/riccati.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace longgreeks;

namespace {

// Runs a subcommand on a config document and returns the table and reports as JSON text.
std::string run_json(const std::string& command, const std::string& config_json) {
    const cli::ExperimentConfig config = cli::parse_config(cli::Json::parse(config_json), command);
    cli::TaskResult r;
    {
        py::gil_scoped_release release;
        r = cli::run_task(command, config);
    }
    cli::Json out = {{"header", r.table.header},
                     {"rows", r.table.rows},
                     {"results", r.results},
                     {"diagnostics", r.diagnostics},
                     {"config", config.resolved}};
    if (!r.stdout_json.is_null()) out["report"] = r.stdout_json;
    return out.dump();
}

py::dict care(const Matrix& a, const Matrix& B, const Matrix& gamma) {
    const CareSolution s = solve_care({a, B, gamma});
    py::dict d;
    d["V"] = s.V;
    d["closed_loop"] = s.closed_loop;
    d["eigenvalues"] = s.closed_loop_eigenvalues;
    d["residual"] = s.residual_norm;
    d["stable"] = s.stable;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Long-maturity sensitivities of diffusion models via principal eigenpairs.";
    m.attr("__version__") = cli::kVersion;

    // Held for the life of the interpreter; the module keeps its own reference.
    static py::handle error_type = py::exception<Error>(m, "LongGreeksError", PyExc_RuntimeError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("kind") = std::string(e.kind_name());
            exc.attr("validation") = is_validation_error(e.kind());
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        } catch (const cli::Json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("run_json", &run_json, py::arg("command"), py::arg("config_json"),
          "Run price, greeks, convergence, density or riccati on a JSON config; returns JSON text.");
    m.def("solve_care", &care, py::arg("a"), py::arg("B"), py::arg("gamma"),
          "Stabilizing solution of 2 V a V - B^T V - V B - Gamma = 0.");
    m.def(
        "cir_bond_price",
        [](double theta, double a, double sigma, double r0, double T) {
            return cir_bond_price(CirParams{theta, a, sigma}, r0, T);
        },
        py::arg("theta"), py::arg("a"), py::arg("sigma"), py::arg("r0"), py::arg("T"));
    m.def(
        "selftest",
        [](std::uint64_t seed, int threads) {
            std::vector<cli::SelftestRow> rows;
            {
                py::gil_scoped_release release;
                rows = cli::selftest(seed, threads);
            }
            py::list out;
            for (const auto& r : rows) {
                out.append(py::dict(py::arg("criterion") = r.criterion, py::arg("pass") = r.pass,
                                    py::arg("measured") = r.measured, py::arg("detail") = r.detail));
            }
            return out;
        },
        py::arg("seed") = 20240601, py::arg("threads") = 0);
}
