#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "contact/bounds.hpp"
#include "contact/drift.hpp"
#include "contact/exact.hpp"
#include "contact/group.hpp"
#include "contact/kernel.hpp"
#include "contact/montecarlo.hpp"
#include "contact/version.hpp"

namespace py = pybind11;
using namespace contact;

namespace {

Site site_from_object(const py::object& obj) {
    if (py::isinstance<Site>(obj)) return obj.cast<Site>();
    if (py::isinstance<py::str>(obj)) return Site(obj.cast<std::string>());
    return Site(obj.cast<std::vector<std::int64_t>>());
}

InfectionKernel kernel_from_pairs(const GroupSpec& group, const py::iterable& pairs) {
    std::vector<std::pair<Site, double>> base;
    for (const py::handle& item : pairs) {
        const auto pair = item.cast<py::tuple>();
        base.emplace_back(site_from_object(pair[0]), pair[1].cast<double>());
    }
    return InfectionKernel::from_pairs(group, std::move(base));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact and Monte Carlo analysis of contact processes on groups";
    m.attr("__version__") = kVersion;

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalFailure", PyExc_RuntimeError);

    py::class_<Site>(m, "Site")
        .def(py::init([](const py::object& obj) { return site_from_object(obj); }))
        .def("__repr__", &Site::to_string)
        .def("__eq__", [](const Site& a, const Site& b) { return a == b; });

    py::class_<GroupSpec>(m, "GroupSpec")
        .def_static("parse", &GroupSpec::parse, py::arg("text"),
                    "Parse 'z:D', 'torus:NxD', or 'free:K'.")
        .def("__repr__", &GroupSpec::to_string)
        .def_property_readonly("finite", &GroupSpec::finite)
        .def("identity", &GroupSpec::identity)
        .def("multiply", &GroupSpec::multiply)
        .def("inverse", &GroupSpec::inverse)
        .def("size", &GroupSpec::size);

    py::class_<InfectionKernel>(m, "InfectionKernel")
        .def_static("zero", &InfectionKernel::zero, py::arg("group"))
        .def_static("nearest_neighbor", &InfectionKernel::nearest_neighbor, py::arg("group"),
                    py::arg("rate"))
        .def_static("from_pairs", &kernel_from_pairs, py::arg("group"), py::arg("pairs"))
        .def_property_readonly("total", &InfectionKernel::total)
        .def("rate",
             [](const InfectionKernel& k, const py::object& i, const py::object& j) {
                 return k.rate(site_from_object(i), site_from_object(j));
             })
        .def("reversed", &InfectionKernel::reversed);

    // ------------------------------------------------------------- exact
    py::class_<exact::EigenResult>(m, "EigenResult")
        .def_readonly("r", &exact::EigenResult::r)
        .def_readonly("nu", &exact::EigenResult::nu)
        .def_readonly("h", &exact::EigenResult::h)
        .def_readonly("residual_nu", &exact::EigenResult::residual_nu)
        .def_readonly("residual_h", &exact::EigenResult::residual_h)
        .def_readonly("normalization", &exact::EigenResult::normalization);

    py::class_<exact::ResolventMeasure>(m, "ResolventMeasure")
        .def_readonly("lambda_", &exact::ResolventMeasure::lambda)
        .def_readonly("nu", &exact::ResolventMeasure::nu)
        .def_readonly("pi", &exact::ResolventMeasure::pi)
        .def_readonly("residual", &exact::ResolventMeasure::residual);

    m.def(
        "exact_growth_rate",
        [](const GroupSpec& g, const InfectionKernel& k, double delta) {
            return exact::exact_growth_rate(exact::RestrictedGenerator(g, k, delta));
        },
        py::arg("group"), py::arg("kernel"), py::arg("delta"),
        "Perron growth rate, eigenmeasure, and eigenfunction on a finite torus.");
    m.def(
        "duality_check",
        [](const GroupSpec& g, const InfectionKernel& k, double delta, std::uint32_t a,
           std::uint32_t b, double t) {
            const auto res = exact::duality_check(g, k, delta, a, b, t);
            return py::make_tuple(res.lhs, res.rhs);
        },
        py::arg("group"), py::arg("kernel"), py::arg("delta"), py::arg("a_mask"),
        py::arg("b_mask"), py::arg("t"));
    m.def(
        "resolvent_eigenmeasure",
        [](const GroupSpec& g, const InfectionKernel& k, double delta, double lambda) {
            return exact::resolvent_eigenmeasure(exact::RestrictedGenerator(g, k, delta), lambda);
        },
        py::arg("group"), py::arg("kernel"), py::arg("delta"), py::arg("lambda_"));
    m.def(
        "submultiplicativity_check",
        [](const GroupSpec& g, const InfectionKernel& k, double delta, double s, double t) {
            const auto res =
                exact::submultiplicativity_check(exact::RestrictedGenerator(g, k, delta), s, t);
            return py::make_tuple(res.lhs, res.rhs);
        },
        py::arg("group"), py::arg("kernel"), py::arg("delta"), py::arg("s"), py::arg("t"));

    // -------------------------------------------------------- monte carlo
    py::class_<mc::SimConfig>(m, "SimConfig")
        .def(py::init<GroupSpec, InfectionKernel, double, double, std::uint32_t, std::uint64_t>(),
             py::arg("group"), py::arg("kernel"), py::arg("delta"), py::arg("horizon"),
             py::arg("replicas"), py::arg("seed"))
        .def_readwrite("delta", &mc::SimConfig::delta)
        .def_readwrite("horizon", &mc::SimConfig::horizon)
        .def_readwrite("replicas", &mc::SimConfig::replicas)
        .def_readwrite("seed", &mc::SimConfig::seed)
        .def_readwrite("size_cap", &mc::SimConfig::size_cap)
        .def_readwrite("record_grid", &mc::SimConfig::record_grid)
        .def_readwrite("threads", &mc::SimConfig::threads)
        .def("set_initial", [](mc::SimConfig& cfg, const py::iterable& sites) {
            cfg.initial.clear();
            for (const py::handle& s : sites)
                cfg.initial.push_back(site_from_object(py::reinterpret_borrow<py::object>(s)));
        });

    py::class_<mc::SurvivalStats>(m, "SurvivalStats")
        .def_readonly("survived", &mc::SurvivalStats::survived)
        .def_readonly("extinct", &mc::SurvivalStats::extinct)
        .def_readonly("capped", &mc::SurvivalStats::capped)
        .def_readonly("theta_hat", &mc::SurvivalStats::theta_hat)
        .def_readonly("ci_lo", &mc::SurvivalStats::ci_lo)
        .def_readonly("ci_hi", &mc::SurvivalStats::ci_hi)
        .def_readonly("se", &mc::SurvivalStats::se)
        .def_readonly("extinction_times", &mc::SurvivalStats::extinction_times);

    py::class_<mc::GrowthFit>(m, "GrowthFit")
        .def_readonly("grid", &mc::GrowthFit::grid)
        .def_readonly("mean_size", &mc::GrowthFit::mean_size)
        .def_readonly("r_hat", &mc::GrowthFit::r_hat)
        .def_readonly("se", &mc::GrowthFit::se)
        .def_readonly("window_lo", &mc::GrowthFit::window_lo)
        .def_readonly("window_hi", &mc::GrowthFit::window_hi);

    py::class_<mc::CriticalEstimate>(m, "CriticalEstimate")
        .def_readonly("delta_c_hat", &mc::CriticalEstimate::delta_c_hat)
        .def_readonly("lo", &mc::CriticalEstimate::lo)
        .def_readonly("hi", &mc::CriticalEstimate::hi)
        .def_readonly("p_star", &mc::CriticalEstimate::p_star);

    py::class_<mc::BoundRow>(m, "BoundRow")
        .def_readonly("gamma", &mc::BoundRow::gamma)
        .def_readonly("delta", &mc::BoundRow::delta)
        .def_readonly("phi_gamma", &mc::BoundRow::phi_gamma)
        .def_readonly("theta_hat", &mc::BoundRow::theta_hat)
        .def_readonly("pass_", &mc::BoundRow::pass);

    m.def("estimate_survival", &mc::estimate_survival, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("estimate_growth_rate", &mc::estimate_growth_rate, py::arg("config"),
          py::arg("window_lo") = -1.0, py::arg("window_hi") = -1.0,
          py::call_guard<py::gil_scoped_release>());
    m.def("bisect_critical", &mc::bisect_critical, py::arg("config"), py::arg("delta_lo"),
          py::arg("delta_hi"), py::arg("iterations"), py::arg("p_star") = 0.01,
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "pathwise_duality_check",
        [](const GroupSpec& g, const InfectionKernel& k, double delta, std::uint32_t a,
           std::uint32_t b, double t, std::uint64_t seed) {
            const auto res = mc::pathwise_duality_check(g, k, delta, a, b, t, seed);
            return py::make_tuple(res.forward_hit, res.backward_hit);
        },
        py::arg("group"), py::arg("kernel"), py::arg("delta"), py::arg("a_mask"),
        py::arg("b_mask"), py::arg("t"), py::arg("seed"));
    m.def("verify_lower_bound", &mc::verify_lower_bound, py::arg("config"),
          py::arg("delta_c_hat"), py::arg("gammas"),
          py::call_guard<py::gil_scoped_release>());

    // ------------------------------------------------------------- bounds
    py::class_<bounds::EpsParams>(m, "EpsParams")
        .def_readonly("eps", &bounds::EpsParams::eps)
        .def_readonly("eps1", &bounds::EpsParams::eps1)
        .def_readonly("eps2", &bounds::EpsParams::eps2)
        .def_readonly("gamma", &bounds::EpsParams::gamma);

    m.def("phi_eps", &bounds::phi_eps, py::arg("eps"), py::arg("z"));
    m.def("f_eps", &bounds::f_eps, py::arg("eps"), py::arg("h_value"));
    m.def("eps_params", &bounds::eps_params, py::arg("eps"));
    m.def("gamma_of_eps", &bounds::gamma_of_eps, py::arg("eps"));
    m.def("eps_of_gamma", &bounds::eps_of_gamma, py::arg("gamma"));
    m.def("phi_of_gamma", &bounds::phi_of_gamma, py::arg("gamma"));
    m.def(
        "quadratic_bound_check",
        [](double eps, std::size_t grid_points) {
            const auto rep = bounds::quadratic_bound_check(eps, grid_points);
            return py::make_tuple(rep.max_violation_pos, rep.max_violation_neg);
        },
        py::arg("eps"), py::arg("grid_points") = 10000);
    m.def(
        "submartingale_check",
        [](const std::vector<std::vector<double>>& q_rows, const std::vector<double>& h,
           double eps) {
            const std::size_t n = q_rows.size();
            std::vector<double> flat;
            flat.reserve(n * n);
            for (const auto& row : q_rows) {
                if (row.size() != n) throw UsageError("Q must be square");
                flat.insert(flat.end(), row.begin(), row.end());
            }
            const auto rep = bounds::submartingale_check(bounds::QMatrix(n, flat), h, eps);
            py::dict out;
            out["g_f"] = rep.g_f;
            out["drift"] = rep.drift;
            out["scaled"] = rep.scaled;
            out["max_rel_error"] = rep.max_rel_error;
            out["sign_equivalent"] = rep.sign_equivalent;
            return out;
        },
        py::arg("q_rows"), py::arg("h"), py::arg("eps"));
    m.def(
        "drift_certificate",
        [](const GroupSpec& g, const InfectionKernel& k, double delta, double eps,
           bool compensate_r) {
            const auto cert = bounds::drift_certificate(g, k, delta, eps, compensate_r);
            py::dict out;
            out["r"] = cert.growth_rate;
            out["eps1"] = cert.eps1;
            out["eps2"] = cert.eps2;
            out["coeff_infection"] = cert.coeff_infection;
            out["coeff_recovery"] = cert.coeff_recovery;
            out["min_drift"] = cert.min_drift;
            out["min_drift_compensated"] = cert.min_drift_compensated;
            out["identity_max_rel_error"] = cert.identity_max_rel_error;
            return out;
        },
        py::arg("group"), py::arg("kernel"), py::arg("delta"), py::arg("eps"),
        py::arg("compensate_r") = false);
}
