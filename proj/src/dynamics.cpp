#include "lockform/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace lockform {

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be positive");
    if (!(t_max > 0.0)) throw std::invalid_argument("IntegratorConfig: t_max must be positive");
    if (!(grad_tol > 0.0)) throw std::invalid_argument("IntegratorConfig: grad_tol must be positive");
    if (record_every < 1) throw std::invalid_argument("IntegratorConfig: record_every must be >= 1");
}

std::string to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::GradientBelowTol: return "GradientBelowTol";
        case TerminalReason::HorizonReached: return "HorizonReached";
        case TerminalReason::StepFailure: return "StepFailure";
    }
    return "?";
}

namespace {

class Recorder {
public:
    Recorder(const EnergySystem& sys, Trajectory& traj, int stride)
        : sys_(sys), traj_(traj), stride_(stride) {}

    void record(double t, const Eigen::VectorXd& x) {
        traj_.times.push_back(t);
        traj_.states.push_back(x);
        traj_.potentials.push_back(sys_.potential(x));
    }

    void maybe_record(double t, const Eigen::VectorXd& x, long step_count) {
        if (step_count % stride_ == 0) record(t, x);
    }

    void record_final(double t, const Eigen::VectorXd& x) {
        if (!traj_.times.empty() && traj_.times.back() == t) return;
        record(t, x);
    }

private:
    const EnergySystem& sys_;
    Trajectory& traj_;
    int stride_;
};

Trajectory integrate_rk4(const EnergySystem& sys, const Eigen::VectorXd& x0,
                         const IntegratorConfig& cfg) {
    Trajectory traj;
    Recorder rec(sys, traj, cfg.record_every);

    Eigen::VectorXd x = x0;
    Eigen::VectorXd g(x.size()), k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size());
    Eigen::VectorXd xt(x.size()), x_next(x.size());

    sys.gradient_into(x, g);
    rec.record(0.0, x);
    if (g.norm() <= cfg.grad_tol) {
        traj.terminal_reason = TerminalReason::GradientBelowTol;
        return traj;
    }

    double t = 0.0;
    long steps = 0;
    while (t < cfg.t_max) {
        const double dt = std::min(cfg.dt, cfg.t_max - t);
        k1 = -g;
        xt = x + (0.5 * dt) * k1;
        sys.gradient_into(xt, k2);
        k2 = -k2;
        xt = x + (0.5 * dt) * k2;
        sys.gradient_into(xt, k3);
        k3 = -k3;
        xt = x + dt * k3;
        sys.gradient_into(xt, k4);
        k4 = -k4;
        x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (!x_next.allFinite()) {
            traj.terminal_reason = TerminalReason::StepFailure;
            return traj;
        }
        x = x_next;
        t += dt;
        ++steps;
        rec.maybe_record(t, x, steps);

        sys.gradient_into(x, g);
        if (g.norm() <= cfg.grad_tol) {
            rec.record_final(t, x);
            traj.terminal_reason = TerminalReason::GradientBelowTol;
            return traj;
        }
    }
    rec.record_final(t, x);
    traj.terminal_reason = TerminalReason::HorizonReached;
    return traj;
}

// Dormand-Prince 5(4) pair with FSAL; the 5th-order solution propagates.
Trajectory integrate_rk45(const EnergySystem& sys, const Eigen::VectorXd& x0,
                          const IntegratorConfig& cfg) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 5th-order minus embedded 4th-order weights, for the error estimate.
    static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                            e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                            e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

    Trajectory traj;
    Recorder rec(sys, traj, cfg.record_every);

    Eigen::VectorXd x = x0;
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), k5(x.size()),
        k6(x.size()), k7(x.size());
    Eigen::VectorXd xt(x.size()), x_next(x.size()), err(x.size());

    sys.gradient_into(x, g);
    rec.record(0.0, x);
    if (g.norm() <= cfg.grad_tol) {
        traj.terminal_reason = TerminalReason::GradientBelowTol;
        return traj;
    }

    double t = 0.0;
    double dt = std::min({cfg.dt, cfg.dt_max, cfg.t_max});
    long accepted = 0;
    double v_cur = sys.potential(x);
    k1 = -g;
    while (t < cfg.t_max) {
        dt = std::min(dt, cfg.t_max - t);

        xt = x + dt * (a21 * k1);
        sys.gradient_into(xt, k2); k2 = -k2;
        xt = x + dt * (a31 * k1 + a32 * k2);
        sys.gradient_into(xt, k3); k3 = -k3;
        xt = x + dt * (a41 * k1 + a42 * k2 + a43 * k3);
        sys.gradient_into(xt, k4); k4 = -k4;
        xt = x + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        sys.gradient_into(xt, k5); k5 = -k5;
        xt = x + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        sys.gradient_into(xt, k6); k6 = -k6;
        x_next = x + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        sys.gradient_into(x_next, k7); k7 = -k7;  // FSAL stage

        err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err_norm = 0.0;
        bool finite = x_next.allFinite() && err.allFinite();
        if (finite) {
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(x_next[i]));
                const double q = err[i] / sc;
                err_norm += q * q;
            }
            err_norm = std::sqrt(err_norm / static_cast<double>(x.size()));
        }

        // The exact flow obeys dV/dt = -|grad|^2 <= 0; a potential increase
        // means the step left the stability region (stiff modes near an
        // equilibrium), which the embedded error estimate alone misses.
        const double v_next = finite ? sys.potential(x_next) : 0.0;
        const bool descending = finite && v_next <= v_cur + (1e-9 * v_cur + 1e-30);

        if (!finite || err_norm > 1.0 || !descending) {
            const double shrink =
                finite && err_norm > 1.0 ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2)) : 0.5;
            dt *= std::min(shrink, 0.9);
            if (dt < 1e-14 * std::max(1.0, t)) {
                traj.terminal_reason = TerminalReason::StepFailure;
                rec.record_final(t, x);
                return traj;
            }
            continue;
        }

        // Curvature along the step, from the last two stages; keeps dt inside
        // the stability region so the gradient can decay below grad_tol
        // instead of hovering at the noise floor of boundary-sized steps.
        double dt_stab = cfg.dt_max;
        const double den = (x_next - xt).norm();
        const double num = (k7 - k6).norm();
        if (num > 0.0 && den > 0.0) dt_stab = 3.0 * den / num;

        x = x_next;
        v_cur = v_next;
        t += dt;
        k1 = k7;
        ++accepted;
        rec.maybe_record(t, x, accepted);

        if (k7.norm() <= cfg.grad_tol) {  // k7 = -grad(x)
            rec.record_final(t, x);
            traj.terminal_reason = TerminalReason::GradientBelowTol;
            return traj;
        }

        // Growth clamped to 2x per accepted step.
        const double grow = std::clamp(0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.2, 2.0);
        dt = std::min({dt * grow, cfg.dt_max, dt_stab});
    }
    rec.record_final(t, x);
    traj.terminal_reason = TerminalReason::HorizonReached;
    return traj;
}

}  // namespace

Trajectory integrate(const EnergySystem& sys, const Eigen::VectorXd& x0,
                     const IntegratorConfig& cfg) {
    cfg.validate();
    if (x0.size() != sys.state_size())
        throw std::invalid_argument("integrate: initial state length does not match the system");
    if (!x0.allFinite()) throw std::invalid_argument("integrate: initial state must be finite");
    return cfg.method == StepMethod::RK4Fixed ? integrate_rk4(sys, x0, cfg)
                                              : integrate_rk45(sys, x0, cfg);
}

LockedState locked_initial(const Realization& planar0, double alpha, int virtual_vertex) {
    if (alpha == 0.0)
        throw std::invalid_argument("locked_initial: virtual coordinate must start nonzero");
    if (virtual_vertex < 0) virtual_vertex = planar0.num_vertices;
    return LockedState(planar0, virtual_vertex, alpha);
}

Eigen::VectorXd locked_state_vector(const LockedState& state) {
    Eigen::VectorXd x(state.planar.coords.size() + 1);
    x.head(state.planar.coords.size()) = state.planar.coords;
    x[x.size() - 1] = state.virtual_coord;
    return x;
}

void write_trajectory_csv(std::ostream& os, const EnergySystem& sys, const Trajectory& traj) {
    static constexpr const char* kAxis[] = {"x", "y", "z"};
    os << "t";
    const int dim = sys.agent_dim();
    for (int v = 1; v <= sys.num_vertices(); ++v)
        for (int k = 0; k < dim; ++k) os << ",p" << v << kAxis[k];
    if (sys.mode() == EnergyMode::Locked) os << ",p" << sys.virtual_vertex() << "z";
    os << ",V\n";

    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf;
    };
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        put(traj.times[s]);
        const Eigen::VectorXd& x = traj.states[s];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            os << ',';
            put(x[i]);
        }
        os << ',';
        put(traj.potentials[s]);
        os << '\n';
    }
}

}  // namespace lockform
