// Python bindings for the Stokes one-component control laboratory. The
// module mirrors the C++ surface one-to-one: mesh and mask construction, the
// stream-function eigenbasis, window constants and their growth law, the
// closed-form modal evolution, Gramian steering, the dyadic controller, the
// penalized comparator, cost curves with blow-up exponent fits, and the
// command-line driver (callable in-process for smoke tests).
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stokeslab/cli.hpp"
#include "stokeslab/control.hpp"
#include "stokeslab/cost_analysis.hpp"
#include "stokeslab/errors.hpp"
#include "stokeslab/evolution.hpp"
#include "stokeslab/grid.hpp"
#include "stokeslab/specineq.hpp"
#include "stokeslab/spectral.hpp"

namespace py = pybind11;
using namespace stokeslab;

PYBIND11_MODULE(_stokeslab, m) {
    m.doc() =
        "Numerical laboratory for null controllability of the 2D Stokes system "
        "through one velocity component";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    // ------------------------------------------------------------- geometry
    py::class_<Grid>(m, "Grid")
        .def(py::init<int>(), py::arg("n_interior"))
        .def_readonly("n", &Grid::n)
        .def_readonly("h", &Grid::h)
        .def("nodes", &Grid::nodes)
        .def("__repr__", [](const Grid& g) {
            return "Grid(n=" + std::to_string(g.n) + ")";
        });

    py::class_<Rect>(m, "Rect")
        .def(py::init([](double x0, double x1, double y0, double y1) {
                 return Rect{x0, x1, y0, y1};
             }),
             py::arg("x0"), py::arg("x1"), py::arg("y0"), py::arg("y1"))
        .def_readonly("x0", &Rect::x0)
        .def_readonly("x1", &Rect::x1)
        .def_readonly("y0", &Rect::y0)
        .def_readonly("y1", &Rect::y1);

    m.def("parse_rect", &parse_rect, py::arg("text"),
          "Parse 'x0,x1,y0,y1' into a half-open box inside the unit square");

    py::class_<ObservationMask>(m, "ObservationMask")
        .def(py::init<const Grid&, const Rect&>(), py::arg("grid"), py::arg("rect"))
        .def_readonly("count", &ObservationMask::count);

    // ------------------------------------------------------------- spectral
    m.def("assemble_laplacian", &assemble_laplacian, py::arg("grid"),
          "Dense 5-point Dirichlet Laplacian (SPD convention)");
    m.def("laplacian_eigenvalue", &laplacian_eigenvalue, py::arg("grid"), py::arg("k"),
          py::arg("l"), "Closed-form eigenvalue of the 5-point Laplacian");

    py::class_<StokesEigenbasis>(m, "StokesEigenbasis")
        .def_readonly("grid", &StokesEigenbasis::grid)
        .def_readonly("m", &StokesEigenbasis::m)
        .def_readonly("mu", &StokesEigenbasis::mu)
        .def_readonly("psi", &StokesEigenbasis::psi)
        .def_readonly("residual", &StokesEigenbasis::residual)
        .def_readonly("resolution_limit", &StokesEigenbasis::resolution_limit)
        .def_readonly("resolved_count", &StokesEigenbasis::resolved_count)
        .def_readonly("spectrum", &StokesEigenbasis::spectrum);

    m.def("solve_buckling", &solve_buckling, py::arg("grid"), py::arg("m"),
          "Solve the stream-function buckling pencil, keeping the lowest m modes");
    m.def("component_gram", &component_gram, py::arg("basis"), py::arg("component"),
          py::arg("mask") = nullptr,
          "Gram matrix of one velocity component over the masked region");

    // --------------------------------------------------- spectral inequality
    m.def("best_constant", &best_constant, py::arg("basis"), py::arg("mask"),
          py::arg("lambda_"),
          "Smallest constant bounding window coefficient energy by the masked "
          "first-component norm");

    py::class_<LawSample>(m, "LawSample")
        .def_readonly("lambda_", &LawSample::lambda)
        .def_readonly("modes", &LawSample::modes)
        .def_readonly("c", &LawSample::c);

    m.def("spectral_law_samples", &spectral_law_samples, py::arg("basis"), py::arg("mask"),
          py::arg("max_modes") = 0,
          "Sweep the window constant over eigenvalue-midpoint cutoffs");

    py::class_<SqrtLawFit>(m, "SqrtLawFit")
        .def_readonly("log_m", &SqrtLawFit::log_m)
        .def_readonly("k", &SqrtLawFit::k)
        .def_readonly("r2", &SqrtLawFit::r2);

    m.def("fit_sqrt_law", &fit_sqrt_law, py::arg("samples"),
          "Fit log C = log_m + k*sqrt(lambda) to a sampled growth curve");
    m.def("coefficient_recovery_constant", &coefficient_recovery_constant, py::arg("basis"),
          py::arg("lambda_"), py::arg("s_samples") = std::vector<double>{},
          "Recovery constant of window coefficients from the metric image of the "
          "first component");

    // ------------------------------------------------------------ evolution
    py::class_<ModeCoeffs>(m, "ModeCoeffs")
        .def(py::init([](const Eigen::VectorXd& a) { return ModeCoeffs{a}; }),
             py::arg("a"))
        .def_readonly("a", &ModeCoeffs::a)
        .def("norm_h", &ModeCoeffs::norm_h);

    py::class_<ControlContext>(m, "ControlContext")
        .def_readonly("mu", &ControlContext::mu)
        .def_readonly("gram", &ControlContext::gram);

    m.def("make_context", &make_context, py::arg("basis"), py::arg("mask"));
    m.def("duhamel_weight", &duhamel_weight, py::arg("s"), py::arg("tau"),
          "Exact interval weight (1 - e^{-s tau})/s");
    m.def("decay", &decay, py::arg("mu"), py::arg("state"), py::arg("tau"),
          "Free modal decay over an interval");
    m.def("adjoint_observe", &adjoint_observe, py::arg("ctx"), py::arg("z0"),
          py::arg("t_final"),
          "Closed-form observation functional of the free adjoint evolution");

    // -------------------------------------------------------------- control
    py::class_<Gramian>(m, "Gramian")
        .def_readonly("lambda_", &Gramian::lambda)
        .def_readonly("tau", &Gramian::tau)
        .def_readonly("size", &Gramian::size)
        .def_readonly("mu", &Gramian::mu)
        .def_readonly("w", &Gramian::w)
        .def_readonly("lambda_min", &Gramian::lambda_min)
        .def_readonly("lambda_max", &Gramian::lambda_max);

    m.def("build_gramian",
          py::overload_cast<const StokesEigenbasis&, const ObservationMask&, double,
                            double>(&build_gramian),
          py::arg("basis"), py::arg("mask"), py::arg("lambda_"), py::arg("tau"),
          "Steering Gramian of the frequency window over one interval");

    py::class_<SteerResult>(m, "SteerResult")
        .def_readonly("cost", &SteerResult::cost)
        .def_readonly("cost_sq", &SteerResult::cost_sq);

    m.def("steer_low_modes", &steer_low_modes, py::arg("state"), py::arg("gramian"),
          py::arg("t_start") = 0.0,
          "Minimal-norm control zeroing the window block over one interval");

    py::class_<ScheduleInterval>(m, "ScheduleInterval")
        .def_readonly("active", &ScheduleInterval::active)
        .def_readonly("lambda_", &ScheduleInterval::lambda)
        .def_readonly("t_start", &ScheduleInterval::t_start)
        .def_readonly("t_end", &ScheduleInterval::t_end);

    py::class_<ControlSchedule>(m, "ControlSchedule")
        .def_readonly("horizon", &ControlSchedule::horizon)
        .def_readonly("eps", &ControlSchedule::eps)
        .def_readonly("ratio", &ControlSchedule::ratio)
        .def_readonly("lambda_max", &ControlSchedule::lambda_max)
        .def_readwrite("tol_target", &ControlSchedule::tol_target)
        .def_readonly("intervals", &ControlSchedule::intervals)
        .def("validate", &ControlSchedule::validate)
        .def("dump", &ControlSchedule::dump);

    m.def("lr_schedule", &lr_schedule, py::arg("horizon"), py::arg("eps"), py::arg("ratio"),
          py::arg("lambda_max"),
          "Dyadic steer/decay schedule with geometric stage durations");

    py::class_<ControlRunReport::ActiveInterval>(m, "ActiveInterval")
        .def_readonly("lambda_", &ControlRunReport::ActiveInterval::lambda)
        .def_readonly("t_start", &ControlRunReport::ActiveInterval::t_start)
        .def_readonly("t_end", &ControlRunReport::ActiveInterval::t_end)
        .def_readonly("cost", &ControlRunReport::ActiveInterval::cost)
        .def_readonly("spillover", &ControlRunReport::ActiveInterval::spillover);

    py::class_<ControlRunReport>(m, "ControlRunReport")
        .def_readonly("initial_norm", &ControlRunReport::initial_norm)
        .def_readonly("terminal_norm", &ControlRunReport::terminal_norm)
        .def_readonly("low_block_norm", &ControlRunReport::low_block_norm)
        .def_readonly("total_cost", &ControlRunReport::total_cost)
        .def_readonly("total_cost_sq", &ControlRunReport::total_cost_sq)
        .def_readonly("intervals", &ControlRunReport::intervals)
        .def("csv", &ControlRunReport::csv);

    m.def("run_lr", &run_lr, py::arg("state0"), py::arg("schedule"), py::arg("basis"),
          py::arg("mask"),
          "Run the alternating dyadic controller and report costs and spillover");

    py::class_<HumResult>(m, "HumResult")
        .def_readonly("cost", &HumResult::cost)
        .def_readonly("terminal_window_norm", &HumResult::terminal_window_norm)
        .def_readonly("terminal_norm", &HumResult::terminal_norm)
        .def_readonly("iterations", &HumResult::iterations)
        .def_readonly("residual_history", &HumResult::residual_history)
        .def_readonly("dual_bound", &HumResult::dual_bound);

    m.def("hum_penalized", &hum_penalized, py::arg("state0"), py::arg("horizon"),
          py::arg("eps_pen"), py::arg("basis"), py::arg("mask"), py::arg("lambda_"),
          "Penalized minimal-norm control of the window block via conjugate gradients");

    // -------------------------------------------------------- cost analysis
    py::class_<ObsConstant>(m, "ObsConstant")
        .def_readonly("value", &ObsConstant::value)
        .def_readonly("log_value", &ObsConstant::log_value)
        .def_readonly("window_size", &ObsConstant::window_size)
        .def_readonly("jittered", &ObsConstant::jittered);

    m.def("obs_constant",
          py::overload_cast<const StokesEigenbasis&, const ObservationMask&, double,
                            double>(&obs_constant),
          py::arg("basis"), py::arg("mask"), py::arg("lambda_max"), py::arg("horizon"),
          "Observability constant of the frequency window over [0, horizon]");
    m.def("window_constant",
          py::overload_cast<const StokesEigenbasis&, const ObservationMask&, double,
                            double>(&window_constant),
          py::arg("basis"), py::arg("mask"), py::arg("lambda_max"), py::arg("horizon"),
          "Datum-form window constant 1/sqrt(lambda_min) of the observation Gramian");

    py::enum_<CurveKind>(m, "CurveKind")
        .value("observability", CurveKind::observability)
        .value("lr_cost", CurveKind::lr_cost)
        .value("hum_cost", CurveKind::hum_cost);

    py::class_<CurveSample>(m, "CurveSample")
        .def_readonly("horizon", &CurveSample::horizon)
        .def_readonly("value", &CurveSample::value)
        .def_readonly("log_value", &CurveSample::log_value)
        .def_readonly("status", &CurveSample::status)
        .def_readonly("lower_bound", &CurveSample::lower_bound)
        .def_readonly("bound_ratio", &CurveSample::bound_ratio)
        .def_readonly("terminal", &CurveSample::terminal);

    py::class_<CostCurveConfig>(m, "CostCurveConfig")
        .def(py::init<>())
        .def_readwrite("lambda_max", &CostCurveConfig::lambda_max)
        .def_readwrite("kappa", &CostCurveConfig::kappa)
        .def_readwrite("eps", &CostCurveConfig::eps)
        .def_readwrite("rho", &CostCurveConfig::rho)
        .def_readwrite("tol_target", &CostCurveConfig::tol_target)
        .def_readwrite("eps_pen", &CostCurveConfig::eps_pen)
        .def_readwrite("datum", &CostCurveConfig::datum)
        .def_readwrite("mesh_n", &CostCurveConfig::mesh_n)
        .def_readwrite("omega", &CostCurveConfig::omega);

    py::class_<CostCurve>(m, "CostCurve")
        .def_readonly("kind", &CostCurve::kind)
        .def_readonly("lambda_max", &CostCurve::lambda_max)
        .def_readonly("t_min_floor", &CostCurve::t_min_floor)
        .def_readonly("samples", &CostCurve::samples)
        .def("ok_count", &CostCurve::ok_count)
        .def("csv", &CostCurve::csv);

    m.def("cost_curve", &cost_curve, py::arg("kind"), py::arg("horizons"), py::arg("basis"),
          py::arg("mask"), py::arg("config"),
          "Sweep a constant or controller cost over a horizon grid");

    py::class_<FitRow>(m, "FitRow")
        .def_readonly("p", &FitRow::p)
        .def_readonly("alpha", &FitRow::alpha)
        .def_readonly("beta", &FitRow::beta)
        .def_readonly("r2", &FitRow::r2)
        .def_readonly("ssr", &FitRow::ssr);

    py::class_<ExponentFit>(m, "ExponentFit")
        .def_readonly("model", &ExponentFit::model)
        .def_readonly("p", &ExponentFit::p)
        .def_readonly("alpha", &ExponentFit::alpha)
        .def_readonly("beta", &ExponentFit::beta)
        .def_readonly("r2", &ExponentFit::r2)
        .def_readonly("ssr", &ExponentFit::ssr)
        .def_readonly("table", &ExponentFit::table)
        .def("report", &ExponentFit::report);

    m.def("fit_exponent",
          py::overload_cast<const std::vector<double>&, const std::vector<double>&>(
              &fit_exponent),
          py::arg("horizons"), py::arg("values"),
          "Fit log C = alpha + beta * T^{-p} with exponent selection");
    m.def("fit_exponent", py::overload_cast<const CostCurve&>(&fit_exponent),
          py::arg("curve"));

    py::class_<WeightCertificate>(m, "WeightCertificate")
        .def(py::init<>())
        .def_readwrite("h0", &WeightCertificate::h0)
        .def_readwrite("g0", &WeightCertificate::g0)
        .def_readwrite("d1", &WeightCertificate::d1)
        .def_readwrite("d2", &WeightCertificate::d2)
        .def_readwrite("beta", &WeightCertificate::beta);

    py::class_<CertificateOptions>(m, "CertificateOptions")
        .def(py::init<>())
        .def_readwrite("d", &CertificateOptions::d)
        .def_readwrite("draws", &CertificateOptions::draws)
        .def_readwrite("seed", &CertificateOptions::seed);

    py::class_<CertificateRow>(m, "CertificateRow")
        .def_readonly("horizon", &CertificateRow::horizon)
        .def_readonly("h", &CertificateRow::h)
        .def_readonly("g", &CertificateRow::g)
        .def_readonly("terminal_sq", &CertificateRow::terminal_sq)
        .def_readonly("datum_sq", &CertificateRow::datum_sq)
        .def_readonly("observed", &CertificateRow::observed)
        .def_readonly("margin", &CertificateRow::margin)
        .def_readonly("cert_holds", &CertificateRow::cert_holds)
        .def_readonly("log_bound_rhs", &CertificateRow::log_bound_rhs)
        .def_readonly("log_c", &CertificateRow::log_c)
        .def_readonly("bound_holds", &CertificateRow::bound_holds);

    py::class_<CertificateReport>(m, "CertificateReport")
        .def_readonly("rows", &CertificateReport::rows)
        .def_readonly("all_cert_hold", &CertificateReport::all_cert_hold)
        .def_readonly("all_bound_hold", &CertificateReport::all_bound_hold)
        .def_readonly("d_used", &CertificateReport::d_used)
        .def_readonly("t_prime", &CertificateReport::t_prime)
        .def("csv", &CertificateReport::csv);

    m.def("verify_weight_certificate", &verify_weight_certificate, py::arg("curve"),
          py::arg("cert"), py::arg("basis"), py::arg("mask"),
          py::arg("options") = CertificateOptions{},
          "Check the two-weight observation certificate along a measured curve");

    // ------------------------------------------------------------------ cli
    m.def("seeded_unit_coeffs", &seeded_unit_coeffs, py::arg("m"), py::arg("seed"),
          "Deterministic unit coefficient vector from the documented generator");
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli_main(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"),
        "Run the command-line driver in-process; returns (exit_code, stdout, stderr)");
}
