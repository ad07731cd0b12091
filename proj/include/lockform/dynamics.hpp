// Gradient-flow integration: x' = -grad(x), with equilibrium detection by
// gradient norm and sampled trajectory recording.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "lockform/energy.hpp"

namespace lockform {

enum class StepMethod { RK4Fixed, RK45Adaptive };

struct IntegratorConfig {
    double dt = 1e-3;        // fixed step, or initial step when adaptive
    double t_max = 100.0;
    double grad_tol = 1e-8;  // stop when ||grad||_2 falls below this
    StepMethod method = StepMethod::RK4Fixed;
    double rel_tol = 1e-9;   // adaptive only
    double abs_tol = 1e-12;  // adaptive only
    double dt_max = 1.0;     // adaptive step-size cap
    int record_every = 100;  // sampling stride in accepted steps

    void validate() const;
    bool operator==(const IntegratorConfig&) const = default;
};

enum class TerminalReason { GradientBelowTol, HorizonReached, StepFailure };

std::string to_string(TerminalReason r);

struct Trajectory {
    std::vector<double> times;             // strictly increasing
    std::vector<Eigen::VectorXd> states;   // one per sample
    std::vector<double> potentials;        // one per sample
    TerminalReason terminal_reason = TerminalReason::HorizonReached;

    const Eigen::VectorXd& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
    double final_potential() const { return potentials.back(); }
};

/// Integrate x' = -gradient(sys, x) from x0. Stops once ||grad|| <= grad_tol
/// (GradientBelowTol) or t reaches cfg.t_max (HorizonReached). A non-finite
/// state aborts with StepFailure, retaining the last valid sample. The
/// initial and final states are always recorded.
Trajectory integrate(const EnergySystem& sys, const Eigen::VectorXd& x0,
                     const IntegratorConfig& cfg);

/// Attach a virtual coordinate to a planar start. alpha must be nonzero: the
/// zero level set is invariant under the locked flow, so starting on it would
/// pin the virtual coordinate at zero forever.
LockedState locked_initial(const Realization& planar0, double alpha, int virtual_vertex = -1);

/// Flat state vector of a locked state (planar coords then virtual coord).
Eigen::VectorXd locked_state_vector(const LockedState& state);

/// CSV export: header `t,p1x,p1y,...[,pVz],V`, one row per sample, 17
/// significant digits.
void write_trajectory_csv(std::ostream& os, const EnergySystem& sys, const Trajectory& traj);

}  // namespace lockform
