#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blowup/closed_forms.hpp"
#include "blowup/config.hpp"
#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/runner.hpp"

namespace py = pybind11;
using namespace blowup;

PYBIND11_MODULE(_blowup, m) {
    m.doc() = "closed forms and suite runner";

    auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    (void)config_error;

    py::class_<CurvaturePointData>(m, "CurvaturePointData")
        .def(py::init<>())
        .def_static("flat", &CurvaturePointData::flat, py::arg("n"), py::arg("K"), py::arg("D"))
        .def_readwrite("n", &CurvaturePointData::n)
        .def_readwrite("K", &CurvaturePointData::K)
        .def_readwrite("H", &CurvaturePointData::H)
        .def_readwrite("hessK", &CurvaturePointData::hessK)
        .def_readwrite("hessH", &CurvaturePointData::hessH)
        .def_readwrite("pi_norm_sq", &CurvaturePointData::pi_norm_sq)
        .def_readwrite("h_ij", &CurvaturePointData::h_ij)
        .def_readwrite("ric_nu", &CurvaturePointData::ric_nu)
        .def_readwrite("rbar", &CurvaturePointData::rbar)
        .def_readwrite("s_g", &CurvaturePointData::s_g)
        .def_property_readonly("D", &CurvaturePointData::D)
        .def("validate", &CurvaturePointData::validate);

    py::class_<BubbleParams>(m, "BubbleParams")
        .def_static("from_data", &BubbleParams::from, py::arg("data"), py::arg("delta") = 1.0)
        .def_readwrite("n", &BubbleParams::n)
        .def_readwrite("Kp", &BubbleParams::Kp)
        .def_readwrite("D", &BubbleParams::D)
        .def_readwrite("delta", &BubbleParams::delta)
        .def_readwrite("center", &BubbleParams::center);

    py::class_<ReducedCoefficients>(m, "ReducedCoefficients")
        .def_readonly("E_p", &ReducedCoefficients::E_p)
        .def_readonly("A", &ReducedCoefficients::A)
        .def_readonly("B", &ReducedCoefficients::B)
        .def_readonly("C", &ReducedCoefficients::C)
        .def_readonly("f_term", &ReducedCoefficients::f_term)
        .def_readonly("d0", &ReducedCoefficients::d0)
        .def_readonly("zeta", &ReducedCoefficients::zeta);

    m.def("scaling_invariant", &scaling_invariant, py::arg("n"), py::arg("K"), py::arg("H"));
    m.def("alpha_const", &alpha_const);
    m.def("bubble_eval", &bubble_eval, py::arg("params"), py::arg("x"));
    m.def("kernel_eval", &kernel_eval, py::arg("i"), py::arg("params"), py::arg("x"));
    m.def("integral_I", &integral_I, py::arg("m"), py::arg("alpha"));
    m.def("integral_phi", &integral_phi, py::arg("m"), py::arg("D"));
    m.def("integral_phi_hat", &integral_phi_hat, py::arg("m"), py::arg("D"));
    m.def("bubble_energy", &bubble_energy);
    m.def("coeff_A", py::overload_cast<const CurvaturePointData&, double>(&coeff_A), py::arg("data"),
          py::arg("f_term") = 0.0);
    m.def("coeff_B", &coeff_B);
    m.def("coeff_C", &coeff_C);
    m.def("optimal_d", py::overload_cast<double, double>(&optimal_d), py::arg("A"), py::arg("C"));
    m.def("rho_of_eps", &rho_of_eps);
    m.def("zeta", &zeta, py::arg("n"), py::arg("eps"));
    m.def("reduced_coefficients", &reduced_coefficients, py::arg("data"), py::arg("f_term"),
          py::arg("eps"));

    // config text in, resolved config text out
    m.def("resolve_config", [](const std::string& text) { return to_json(parse_config(text)); });

    // returns (exit status, out_dir, [(check, value, relation, threshold, pass)])
    m.def(
        "run",
        [](const std::string& config_path, const std::string& out_dir, int threads) {
            RunConfig c = load_config(config_path);
            RunOutcome r;
            {
                py::gil_scoped_release release;
                r = run(c, {out_dir, threads});
            }
            py::list checks;
            for (const auto& k : r.checks)
                checks.append(py::make_tuple(k.name, k.value, k.relation, k.threshold, k.pass));
            return py::make_tuple(exit_status(r), r.out_dir, checks);
        },
        py::arg("config_path"), py::arg("out_dir") = "", py::arg("threads") = 0);
    m.def("emit_plotdata", &emit_plotdata, py::arg("run_dir"), py::arg("out_dir") = "");
    m.def("default_threads", &default_threads);
}
