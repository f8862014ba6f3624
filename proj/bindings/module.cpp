#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amliq/adi.hpp"
#include "amliq/calibration.hpp"
#include "amliq/data_io.hpp"
#include "amliq/explicit_fd.hpp"
#include "amliq/mc.hpp"
#include "amliq/params.hpp"

namespace py = pybind11;
using namespace amliq;

PYBIND11_MODULE(_amliq, m) {
    m.doc() = "American put pricing under stochastic illiquidity with transaction costs";

    py::register_exception<Error>(m, "AmliqError");

    py::enum_<Side>(m, "Side")
        .value("holder", Side::holder)
        .value("writer", Side::writer);
    py::enum_<Style>(m, "Style")
        .value("american", Style::american)
        .value("european", Style::european);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("mu", &ModelParams::mu)
        .def_readwrite("alpha", &ModelParams::alpha)
        .def_readwrite("theta_bar", &ModelParams::theta_bar)
        .def_readwrite("sigma_S", &ModelParams::sigma_S)
        .def_readwrite("sigma_L", &ModelParams::sigma_L)
        .def_readwrite("beta", &ModelParams::beta)
        .def_readwrite("rho1", &ModelParams::rho1)
        .def_readwrite("rho2", &ModelParams::rho2)
        .def_readwrite("rho3", &ModelParams::rho3)
        .def_readwrite("lambda_", &ModelParams::lambda)
        .def_readwrite("zeta", &ModelParams::zeta)
        .def_readwrite("r", &ModelParams::r)
        .def_readwrite("kappa", &ModelParams::kappa)
        .def_readwrite("kappa_theta", &ModelParams::kappa_theta)
        .def_readwrite("delta_t", &ModelParams::delta_t)
        .def_readwrite("K", &ModelParams::K)
        .def_readwrite("T", &ModelParams::T);

    m.def("validate_params", [](const ModelParams& p) { return validate_params(p); });
    m.def("theta_effective", &theta_effective, py::arg("l"), py::arg("params"));
    m.def("correlation_min_eigenvalue", &correlation_min_eigenvalue);

    py::class_<Grid>(m, "Grid")
        .def_readonly("n_s", &Grid::n_s)
        .def_readonly("n_l", &Grid::n_l)
        .def_readonly("n_t", &Grid::n_t)
        .def_readonly("s_max", &Grid::s_max)
        .def_readonly("l_max", &Grid::l_max)
        .def_readonly("delta_s", &Grid::delta_s)
        .def_readonly("delta_l", &Grid::delta_l)
        .def_readonly("delta_tau", &Grid::delta_tau)
        .def("s", &Grid::s)
        .def("l", &Grid::l);
    m.def("build_grid", &build_grid, py::arg("n_s"), py::arg("n_l"), py::arg("n_t"),
          py::arg("params"), py::arg("s_max_mult") = 8.0, py::arg("l_max") = 5.0);

    py::class_<ExerciseBoundary>(m, "ExerciseBoundary")
        .def_readonly("n_l", &ExerciseBoundary::n_l)
        .def_readonly("n_t", &ExerciseBoundary::n_t)
        .def("sf", &ExerciseBoundary::sf, py::arg("j"), py::arg("n"))
        .def("is_flagged", &ExerciseBoundary::is_flagged, py::arg("j"), py::arg("n"));

    py::class_<AdiOptions>(m, "AdiOptions")
        .def(py::init<>())
        .def_readwrite("eta", &AdiOptions::eta)
        .def_readwrite("refine_boundary", &AdiOptions::refine_boundary)
        .def_readwrite("relaxed_boundary", &AdiOptions::relaxed_boundary)
        .def_readwrite("boundary_tol", &AdiOptions::boundary_tol)
        .def_readwrite("jobs", &AdiOptions::jobs);

    py::class_<PricingResult>(m, "PricingResult")
        .def("price_at", &PricingResult::price_at, py::arg("s0"), py::arg("l0"))
        .def_readonly("boundary", &PricingResult::boundary)
        .def_readonly("refined_sf_final", &PricingResult::refined_sf_final)
        .def_readonly("wall_ms", &PricingResult::wall_ms)
        .def_readonly("steps", &PricingResult::steps)
        .def_readonly("max_step_delta", &PricingResult::max_step_delta)
        .def_property_readonly("surface",
                               [](const PricingResult& r) { return r.final_surface.values; });

    // the result interpolates off its grid, so the grid argument must outlive it
    m.def("price_holder", &price_holder, py::arg("params"), py::arg("grid"),
          py::arg("options") = AdiOptions{}, py::keep_alive<0, 2>());
    m.def("price_writer", &price_writer, py::arg("params"), py::arg("grid"),
          py::arg("boundary"), py::arg("options") = AdiOptions{}, py::keep_alive<0, 2>());
    m.def("price_european", &price_european, py::arg("params"), py::arg("grid"),
          py::arg("side") = Side::holder, py::arg("options") = AdiOptions{},
          py::keep_alive<0, 2>());
    m.def(
        "price_explicit",
        [](const ModelParams& p, const Grid& g, Side side, Style style,
           const ExerciseBoundary* boundary, int jobs) {
            ExplicitOptions opt;
            opt.jobs = jobs;
            return price_explicit(p, g, side, style, boundary, opt);
        },
        py::arg("params"), py::arg("grid"), py::arg("side") = Side::holder,
        py::arg("style") = Style::american, py::arg("boundary") = nullptr,
        py::arg("jobs") = 1, py::keep_alive<0, 2>());

    py::class_<McPrice>(m, "McPrice")
        .def_readonly("price", &McPrice::price)
        .def_readonly("stderr", &McPrice::stderr_)
        .def_readonly("n_paths", &McPrice::n_paths)
        .def_readonly("seed", &McPrice::seed);
    m.def(
        "price_european_mc",
        [](const ModelParams& p, double s0, double l0, int n_paths, std::uint64_t seed,
           int n_steps, int jobs) {
            McOptions opt;
            opt.n_steps = n_steps;
            opt.jobs = jobs;
            return price_european_mc(p, s0, l0, n_paths, seed, opt);
        },
        py::arg("params"), py::arg("s0"), py::arg("l0"), py::arg("n_paths"), py::arg("seed"),
        py::arg("n_steps") = 252, py::arg("jobs") = 1);

    py::class_<GbmFit>(m, "GbmFit")
        .def_readonly("mu_hat", &GbmFit::mu_hat)
        .def_readonly("sigma_hat", &GbmFit::sigma_hat)
        .def_readonly("degenerate", &GbmFit::degenerate)
        .def_readonly("mu_se", &GbmFit::mu_se)
        .def_readonly("sigma_se", &GbmFit::sigma_se);
    m.def("gbm_mle", &gbm_mle, py::arg("prices"), py::arg("dt"));
    m.def("gbm_loglik", &gbm_loglik, py::arg("prices"), py::arg("dt"), py::arg("mu"),
          py::arg("sigma"));

    m.def(
        "ekf_neg_loglik",
        [](const std::vector<double>& prices, const ModelParams& p, double dt) {
            SsmConfig cfg;
            cfg.dt = dt;
            return ekf_filter_loglik(prices, p, cfg).neg_loglik;
        },
        py::arg("prices"), py::arg("params"), py::arg("dt") = 1.0 / 252.0);

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_property_readonly("theta_hat",
                               [](const CalibrationResult& r) {
                                   return std::vector<double>(r.theta_hat.begin(),
                                                              r.theta_hat.end());
                               })
        .def_readonly("neg_loglik", &CalibrationResult::neg_loglik)
        .def_readonly("converged", &CalibrationResult::converged)
        .def_readonly("evaluations", &CalibrationResult::evaluations);
    m.def(
        "calibrate_liquidity_model",
        [](const std::vector<double>& prices, const ModelParams& base, bool fix_lambda_zeta,
           int max_evaluations, double dt) {
            CalibrateOptions opt;
            opt.fix_lambda_zeta = fix_lambda_zeta;
            opt.optim.max_evaluations = max_evaluations;
            opt.ssm.dt = dt;
            return calibrate_liquidity_model(prices, base, opt);
        },
        py::arg("prices"), py::arg("base"), py::arg("fix_lambda_zeta") = true,
        py::arg("max_evaluations") = 2000, py::arg("dt") = 1.0 / 252.0);
    m.attr("theta_names") = std::vector<std::string>(kThetaNames.begin(), kThetaNames.end());

    m.def(
        "load_futures",
        [](const std::string& path) {
            const FuturesSeries s = load_futures_csv(path);
            std::vector<std::string> dates;
            dates.reserve(s.dates.size());
            for (const Date& d : s.dates) dates.push_back(format_date(d));
            return py::make_tuple(dates, s.closes);
        },
        py::arg("path"));

    m.def("rmse", &rmse, py::arg("theoretical"), py::arg("actual"));
}
