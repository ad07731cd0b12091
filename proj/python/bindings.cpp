#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lockform/analysis.hpp"
#include "lockform/dynamics.hpp"
#include "lockform/energy.hpp"
#include "lockform/geometry.hpp"

namespace py = pybind11;
using namespace lockform;

#ifndef LOCKFORM_VERSION
#define LOCKFORM_VERSION "dev"
#endif

PYBIND11_MODULE(_core, m) {
    m.doc() = "Distance-based formation control: gradient flows, virtual-coordinate "
              "locked systems, and equilibrium analysis.";
    m.attr("__version__") = LOCKFORM_VERSION;

    py::register_exception<EmbeddingError>(m, "EmbeddingError");
    py::register_exception<RefinementError>(m, "RefinementError");

    // --- geometry ---
    py::class_<Edge>(m, "Edge")
        .def(py::init<int, int>(), py::arg("i"), py::arg("j"))
        .def_readonly("i", &Edge::i)
        .def_readonly("j", &Edge::j)
        .def(py::self == py::self)
        .def("__repr__", [](const Edge& e) {
            return "Edge(" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")";
        });

    py::class_<FormationGraph>(m, "FormationGraph")
        .def(py::init<int, std::vector<Edge>>(), py::arg("num_vertices"), py::arg("edges"))
        .def_property_readonly("num_vertices", &FormationGraph::num_vertices)
        .def_property_readonly("edges", &FormationGraph::edges)
        .def_property_readonly("num_edges", &FormationGraph::num_edges)
        .def("has_edge", &FormationGraph::has_edge)
        .def("is_complete", &FormationGraph::is_complete);

    m.def("complete_graph", &complete_graph, py::arg("n"));

    py::class_<DistanceSpec>(m, "DistanceSpec")
        .def(py::init<FormationGraph, std::vector<std::pair<Edge, double>>, int>(),
             py::arg("graph"), py::arg("sq_distances"), py::arg("ambient_dim"))
        .def_static("k4", &DistanceSpec::k4, py::arg("sq"), py::arg("ambient_dim"))
        .def_property_readonly("graph", &DistanceSpec::graph)
        .def_property_readonly("ambient_dim", &DistanceSpec::ambient_dim)
        .def("sq_distance", &DistanceSpec::sq_distance, py::arg("a"), py::arg("b"))
        .def("sq_distances", &DistanceSpec::sq_distances)
        .def("max_sq_distance", &DistanceSpec::max_sq_distance);

    py::class_<Realization>(m, "Realization")
        .def(py::init<Eigen::VectorXd, int>(), py::arg("coords"), py::arg("dim"))
        .def_readonly("coords", &Realization::coords)
        .def_readonly("dim", &Realization::dim)
        .def_readonly("num_vertices", &Realization::num_vertices)
        .def("point", &Realization::point, py::arg("vertex"));

    py::class_<LockedState>(m, "LockedState")
        .def(py::init<Realization, int, double>(), py::arg("planar"), py::arg("virtual_vertex"),
             py::arg("virtual_coord"))
        .def_readonly("planar", &LockedState::planar)
        .def_readonly("virtual_vertex", &LockedState::virtual_vertex)
        .def_readonly("virtual_coord", &LockedState::virtual_coord);

    m.def("sq_dist", &sq_dist, py::arg("realization"), py::arg("a"), py::arg("b"));
    m.def("spec_from_realization", &spec_from_realization, py::arg("graph"), py::arg("realization"));
    m.def("triangle_feasible", &triangle_feasible, py::arg("spec"), py::arg("triple"));
    m.def("cayley_menger_det",
          py::overload_cast<const DistanceSpec&>(&cayley_menger_det), py::arg("spec"));
    m.def("cayley_menger_det",
          py::overload_cast<const std::array<double, 6>&>(&cayley_menger_det), py::arg("sq"));

    py::enum_<Realizability>(m, "Realizability")
        .value("PlanarRealizable", Realizability::PlanarRealizable)
        .value("SpatialRealizable", Realizability::SpatialRealizable)
        .value("Infeasible", Realizability::Infeasible);

    m.def("default_cm_tolerance", &default_cm_tolerance, py::arg("spec"));
    m.def("classify_realizability", &classify_realizability, py::arg("spec"),
          py::arg("tol_cm") = -1.0);
    m.def("lift_distances", &lift_distances, py::arg("spec2d"), py::arg("alpha"),
          py::arg("virtual_vertex"));
    m.def("embed_k4_planar", &embed_k4_planar, py::arg("spec"));
    m.def("lift_locked_to_3d", &lift_locked_to_3d, py::arg("state"));
    m.def("are_congruent", &are_congruent, py::arg("a"), py::arg("b"), py::arg("tol"));

    // --- energy ---
    py::enum_<EnergyMode>(m, "EnergyMode")
        .value("Plain", EnergyMode::Plain)
        .value("Locked", EnergyMode::Locked);

    py::class_<EdgeError>(m, "EdgeError")
        .def_readonly("edge", &EdgeError::edge)
        .def_readonly("value", &EdgeError::value)
        .def("__repr__", [](const EdgeError& e) {
            std::ostringstream os;
            os << "EdgeError((" << e.edge.i << "," << e.edge.j << "), " << e.value << ")";
            return os.str();
        });

    py::class_<EnergySystem>(m, "EnergySystem")
        .def_static("plain", &EnergySystem::plain, py::arg("spec"))
        .def_static("locked", &EnergySystem::locked, py::arg("spec2d"), py::arg("alpha"),
                    py::arg("virtual_vertex") = -1)
        .def_static("locked_from_lifted", &EnergySystem::locked_from_lifted, py::arg("spec3d"),
                    py::arg("alpha"), py::arg("virtual_vertex"))
        .def_property_readonly("mode", &EnergySystem::mode)
        .def_property_readonly("spec", &EnergySystem::spec)
        .def_property_readonly("num_vertices", &EnergySystem::num_vertices)
        .def_property_readonly("agent_dim", &EnergySystem::agent_dim)
        .def_property_readonly("state_size", &EnergySystem::state_size)
        .def_property_readonly("virtual_vertex", &EnergySystem::virtual_vertex)
        .def_property_readonly("alpha", &EnergySystem::alpha)
        .def("edge_errors", &EnergySystem::edge_errors, py::arg("x"))
        .def("potential", &EnergySystem::potential, py::arg("x"))
        .def("gradient", &EnergySystem::gradient, py::arg("x"))
        .def("hessian", &EnergySystem::hessian, py::arg("x"))
        .def("planar_sq_errors", &EnergySystem::planar_sq_errors, py::arg("x"))
        .def("as_locked_state", &EnergySystem::as_locked_state, py::arg("x"))
        .def("as_realization", &EnergySystem::as_realization, py::arg("x"));

    m.def("fd_gradient", &fd_gradient, py::arg("f"), py::arg("x"), py::arg("h_scale") = 1e-5);
    m.def("fd_hessian", &fd_hessian, py::arg("f"), py::arg("x"), py::arg("h_scale") = 1e-4);
    m.def("count_near_zero_eigenvalues", &count_near_zero_eigenvalues, py::arg("spectrum"),
          py::arg("tol_null") = -1.0);

    // --- dynamics ---
    py::enum_<StepMethod>(m, "StepMethod")
        .value("RK4Fixed", StepMethod::RK4Fixed)
        .value("RK45Adaptive", StepMethod::RK45Adaptive);

    py::class_<IntegratorConfig>(m, "IntegratorConfig")
        .def(py::init<>())
        .def_readwrite("dt", &IntegratorConfig::dt)
        .def_readwrite("t_max", &IntegratorConfig::t_max)
        .def_readwrite("grad_tol", &IntegratorConfig::grad_tol)
        .def_readwrite("method", &IntegratorConfig::method)
        .def_readwrite("rel_tol", &IntegratorConfig::rel_tol)
        .def_readwrite("abs_tol", &IntegratorConfig::abs_tol)
        .def_readwrite("dt_max", &IntegratorConfig::dt_max)
        .def_readwrite("record_every", &IntegratorConfig::record_every);

    py::enum_<TerminalReason>(m, "TerminalReason")
        .value("GradientBelowTol", TerminalReason::GradientBelowTol)
        .value("HorizonReached", TerminalReason::HorizonReached)
        .value("StepFailure", TerminalReason::StepFailure);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states)
        .def_readonly("potentials", &Trajectory::potentials)
        .def_readonly("terminal_reason", &Trajectory::terminal_reason)
        .def("final_state", &Trajectory::final_state)
        .def("final_time", &Trajectory::final_time)
        .def("final_potential", &Trajectory::final_potential);

    m.def("integrate", &integrate, py::arg("sys"), py::arg("x0"), py::arg("cfg"),
          py::call_guard<py::gil_scoped_release>());
    m.def("locked_initial", &locked_initial, py::arg("planar0"), py::arg("alpha"),
          py::arg("virtual_vertex") = -1);
    m.def("locked_state_vector", &locked_state_vector, py::arg("state"));
    m.def(
        "trajectory_csv",
        [](const EnergySystem& sys, const Trajectory& traj) {
            std::ostringstream os;
            write_trajectory_csv(os, sys, traj);
            return os.str();
        },
        py::arg("sys"), py::arg("trajectory"));

    // --- analysis ---
    py::enum_<EquilibriumClass>(m, "EquilibriumClass")
        .value("Correct", EquilibriumClass::Correct)
        .value("IncorrectSaddleOrUnstable", EquilibriumClass::IncorrectSaddleOrUnstable)
        .value("IncorrectNoNegativeEigenvalue", EquilibriumClass::IncorrectNoNegativeEigenvalue)
        .value("Degenerate", EquilibriumClass::Degenerate);

    py::class_<ClassifyTolerances>(m, "ClassifyTolerances")
        .def(py::init<>())
        .def_readwrite("pot_tol", &ClassifyTolerances::pot_tol)
        .def_readwrite("eig_tol_rel", &ClassifyTolerances::eig_tol_rel)
        .def_readwrite("degen_rel", &ClassifyTolerances::degen_rel);

    py::class_<EquilibriumReport>(m, "EquilibriumReport")
        .def_readonly("state", &EquilibriumReport::state)
        .def_readonly("grad_norm", &EquilibriumReport::grad_norm)
        .def_readonly("potential_value", &EquilibriumReport::potential_value)
        .def_readonly("hessian_spectrum", &EquilibriumReport::hessian_spectrum)
        .def_readonly("classification", &EquilibriumReport::classification)
        .def_readonly("degenerate", &EquilibriumReport::degenerate);

    m.def("refine_equilibrium", &refine_equilibrium, py::arg("sys"), py::arg("x_guess"),
          py::arg("newton_tol") = 1e-10, py::call_guard<py::gil_scoped_release>());
    m.def("classify", &classify, py::arg("sys"), py::arg("x_eq"),
          py::arg("tol") = ClassifyTolerances{});
    m.def("positions_degenerate", &positions_degenerate, py::arg("sys"), py::arg("x"),
          py::arg("degen_rel") = 1e-6);

    py::class_<CorrespondenceResult>(m, "CorrespondenceResult")
        .def_readonly("ok", &CorrespondenceResult::ok)
        .def_readonly("potential_match", &CorrespondenceResult::potential_match)
        .def_readonly("critical_3d", &CorrespondenceResult::critical_3d)
        .def_readonly("sign_match", &CorrespondenceResult::sign_match)
        .def_readonly("detail", &CorrespondenceResult::detail)
        .def("__bool__", [](const CorrespondenceResult& r) { return r.ok; });

    m.def("verify_locked_spatial_correspondence", &verify_locked_spatial_correspondence, py::arg("q_eq"),
          py::arg("spec3d"), py::arg("value_rel_tol") = 1e-12, py::arg("crit_tol") = 1e-8,
          py::arg("eig_tol_rel") = 1e-7);

    py::class_<InitSampler>(m, "InitSampler")
        .def("draw",
             [](const InitSampler& s, const EnergySystem& sys, std::uint64_t seed) {
                 std::mt19937_64 rng(derive_subseed(seed, 0));
                 return s(sys, rng);
             },
             py::arg("sys"), py::arg("seed"));

    m.def("sampler_uniform_box", &sampler_uniform_box, py::arg("lo"), py::arg("hi"),
          py::arg("virtual_value") = std::nullopt);
    m.def("sampler_fixed", &sampler_fixed, py::arg("x0"));

    py::class_<BasinStats>(m, "BasinStats")
        .def_readonly("n_trials", &BasinStats::n_trials)
        .def_readonly("n_correct", &BasinStats::n_correct)
        .def_readonly("n_incorrect", &BasinStats::n_incorrect)
        .def_readonly("n_unresolved", &BasinStats::n_unresolved)
        .def_readonly("incorrect_witnesses", &BasinStats::incorrect_witnesses)
        .def_readonly("seed", &BasinStats::seed);

    m.def(
        "monte_carlo_basin",
        [](const EnergySystem& sys, const InitSampler& sampler, int n_trials,
           const IntegratorConfig& cfg, std::uint64_t seed, int jobs) {
            MonteCarloOptions opts;
            opts.jobs = jobs;
            return monte_carlo_basin(sys, sampler, n_trials, cfg, seed, opts);
        },
        py::arg("sys"), py::arg("sampler"), py::arg("n_trials"), py::arg("cfg"), py::arg("seed"),
        py::arg("jobs") = 1, py::call_guard<py::gil_scoped_release>());

    m.def("derive_subseed", &derive_subseed, py::arg("master"), py::arg("index"));
}
