#include "lockform/energy.hpp"

#include <cmath>

namespace lockform {

EnergySystem::EnergySystem(DistanceSpec spec, EnergyMode mode, double alpha, int virtual_vertex)
    : spec_(std::move(spec)), mode_(mode), alpha_(alpha), virtual_vertex_(virtual_vertex) {}

EnergySystem EnergySystem::plain(DistanceSpec spec) {
    return EnergySystem(std::move(spec), EnergyMode::Plain, 0.0, -1);
}

EnergySystem EnergySystem::locked(const DistanceSpec& spec2d, double alpha, int virtual_vertex) {
    if (spec2d.ambient_dim() != 2)
        throw std::invalid_argument("EnergySystem::locked: planar spec required");
    if (virtual_vertex < 0) virtual_vertex = spec2d.graph().num_vertices();
    return locked_from_lifted(lift_distances(spec2d, alpha, virtual_vertex), alpha, virtual_vertex);
}

EnergySystem EnergySystem::locked_from_lifted(DistanceSpec spec3d, double alpha, int virtual_vertex) {
    if (spec3d.ambient_dim() != 3)
        throw std::invalid_argument("EnergySystem::locked_from_lifted: lifted spec must be spatial");
    if (virtual_vertex < 1 || virtual_vertex > spec3d.graph().num_vertices())
        throw std::invalid_argument("EnergySystem::locked_from_lifted: virtual vertex out of range");
    return EnergySystem(std::move(spec3d), EnergyMode::Locked, alpha, virtual_vertex);
}

int EnergySystem::state_size() const {
    const int n = num_vertices();
    return mode_ == EnergyMode::Locked ? 2 * n + 1 : n * spec_.ambient_dim();
}

void EnergySystem::check_state(const Eigen::VectorXd& x) const {
    if (x.size() != state_size())
        throw std::invalid_argument("EnergySystem: state length does not match the system");
}

double EnergySystem::edge_error_at(const Eigen::VectorXd& x, const Edge& e) const {
    const int dim = agent_dim();
    const Eigen::Index ia = static_cast<Eigen::Index>(e.i - 1) * dim;
    const Eigen::Index ib = static_cast<Eigen::Index>(e.j - 1) * dim;
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double diff = x[ia + k] - x[ib + k];
        s += diff * diff;
    }
    if (mode_ == EnergyMode::Locked && (e.i == virtual_vertex_ || e.j == virtual_vertex_)) {
        const double z = x[x.size() - 1];
        s += z * z;
    }
    return s - spec_.sq_distance(e.i, e.j);
}

std::vector<EdgeError> EnergySystem::edge_errors(const Eigen::VectorXd& x) const {
    check_state(x);
    std::vector<EdgeError> errs;
    errs.reserve(spec_.graph().edges().size());
    for (const Edge& e : spec_.graph().edges()) errs.push_back({e, edge_error_at(x, e)});
    return errs;
}

double EnergySystem::potential(const Eigen::VectorXd& x) const {
    check_state(x);
    double s = 0.0;
    for (const Edge& e : spec_.graph().edges()) {
        const double err = edge_error_at(x, e);
        s += err * err;
    }
    return 0.25 * s;
}

Eigen::VectorXd EnergySystem::gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(x.size());
    gradient_into(x, g);
    return g;
}

void EnergySystem::gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    check_state(x);
    out.setZero(x.size());
    const int dim = agent_dim();
    const Eigen::Index zi = x.size() - 1;  // virtual coordinate slot (locked)
    for (const Edge& e : spec_.graph().edges()) {
        const double err = edge_error_at(x, e);
        const Eigen::Index ia = static_cast<Eigen::Index>(e.i - 1) * dim;
        const Eigen::Index ib = static_cast<Eigen::Index>(e.j - 1) * dim;
        for (int k = 0; k < dim; ++k) {
            const double diff = x[ia + k] - x[ib + k];
            out[ia + k] += err * diff;
            out[ib + k] -= err * diff;
        }
        if (mode_ == EnergyMode::Locked && (e.i == virtual_vertex_ || e.j == virtual_vertex_))
            out[zi] += err * x[zi];
    }
}

Eigen::MatrixXd EnergySystem::hessian(const Eigen::VectorXd& x) const {
    check_state(x);
    const int dim = agent_dim();
    const Eigen::Index n = x.size();
    const Eigen::Index zi = n - 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);

    for (const Edge& e : spec_.graph().edges()) {
        const double err = edge_error_at(x, e);
        const Eigen::Index ia = static_cast<Eigen::Index>(e.i - 1) * dim;
        const Eigen::Index ib = static_cast<Eigen::Index>(e.j - 1) * dim;

        // Per-edge block 2*r*r^T + e*I on (i,i) and (j,j), negated on (i,j).
        for (int k = 0; k < dim; ++k) {
            const double rk = x[ia + k] - x[ib + k];
            for (int l = 0; l < dim; ++l) {
                const double rl = x[ia + l] - x[ib + l];
                double b = 2.0 * rk * rl;
                if (k == l) b += err;
                h(ia + k, ia + l) += b;
                h(ib + k, ib + l) += b;
                h(ia + k, ib + l) -= b;
                h(ib + k, ia + l) -= b;
            }
        }

        if (mode_ == EnergyMode::Locked && (e.i == virtual_vertex_ || e.j == virtual_vertex_)) {
            const double z = x[zi];
            // Couplings of the virtual coordinate with both endpoints' planar
            // blocks, signed by which endpoint carries it.
            const Eigen::Index iw = (e.i == virtual_vertex_) ? ib : ia;  // non-virtual endpoint
            const Eigen::Index iv = (e.i == virtual_vertex_) ? ia : ib;
            for (int k = 0; k < dim; ++k) {
                const double rk = x[iw + k] - x[iv + k];
                h(iw + k, zi) += 2.0 * z * rk;
                h(zi, iw + k) += 2.0 * z * rk;
                h(iv + k, zi) -= 2.0 * z * rk;
                h(zi, iv + k) -= 2.0 * z * rk;
            }
            h(zi, zi) += 2.0 * z * z + err;
        }
    }
    return 0.5 * (h + h.transpose());
}

std::vector<EdgeError> EnergySystem::planar_sq_errors(const Eigen::VectorXd& x) const {
    if (mode_ != EnergyMode::Locked)
        throw std::invalid_argument("planar_sq_errors: locked systems only");
    check_state(x);
    const double a2 = alpha_ * alpha_;
    std::vector<EdgeError> errs;
    errs.reserve(spec_.graph().edges().size());
    for (const Edge& e : spec_.graph().edges()) {
        const Eigen::Index ia = static_cast<Eigen::Index>(e.i - 1) * 2;
        const Eigen::Index ib = static_cast<Eigen::Index>(e.j - 1) * 2;
        const double dx = x[ia] - x[ib];
        const double dy = x[ia + 1] - x[ib + 1];
        double target = spec_.sq_distance(e.i, e.j);
        if (e.i == virtual_vertex_ || e.j == virtual_vertex_) target -= a2;
        errs.push_back({e, dx * dx + dy * dy - target});
    }
    return errs;
}

LockedState EnergySystem::as_locked_state(const Eigen::VectorXd& x) const {
    if (mode_ != EnergyMode::Locked)
        throw std::invalid_argument("as_locked_state: locked systems only");
    check_state(x);
    Realization planar(x.head(x.size() - 1), 2);
    return LockedState(std::move(planar), virtual_vertex_, x[x.size() - 1]);
}

Realization EnergySystem::as_realization(const Eigen::VectorXd& x) const {
    if (mode_ != EnergyMode::Plain)
        throw std::invalid_argument("as_realization: plain systems only");
    check_state(x);
    return Realization(x, spec_.ambient_dim());
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h_scale) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xt = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = h_scale * (1.0 + std::abs(x[k]));
        xt[k] = x[k] + h;
        const double fp = f(xt);
        xt[k] = x[k] - h;
        const double fm = f(xt);
        xt[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double h_scale) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd xt = x;
    const double f0 = f(x);
    auto step = [&](Eigen::Index k) { return h_scale * (1.0 + std::abs(x[k])); };
    for (Eigen::Index k = 0; k < n; ++k) {
        const double hk = step(k);
        xt[k] = x[k] + hk;
        const double fp = f(xt);
        xt[k] = x[k] - hk;
        const double fm = f(xt);
        xt[k] = x[k];
        h(k, k) = (fp - 2.0 * f0 + fm) / (hk * hk);
        for (Eigen::Index l = k + 1; l < n; ++l) {
            const double hl = step(l);
            xt[k] = x[k] + hk; xt[l] = x[l] + hl;
            const double fpp = f(xt);
            xt[l] = x[l] - hl;
            const double fpm = f(xt);
            xt[k] = x[k] - hk; xt[l] = x[l] + hl;
            const double fmp = f(xt);
            xt[l] = x[l] - hl;
            const double fmm = f(xt);
            xt[k] = x[k]; xt[l] = x[l];
            const double v = (fpp - fpm - fmp + fmm) / (4.0 * hk * hl);
            h(k, l) = v;
            h(l, k) = v;
        }
    }
    return h;
}

int count_near_zero_eigenvalues(const Eigen::VectorXd& spectrum, double tol_null) {
    if (spectrum.size() == 0) return 0;
    if (tol_null < 0.0) tol_null = 1e-6 * spectrum.cwiseAbs().maxCoeff();
    int count = 0;
    for (Eigen::Index k = 0; k < spectrum.size(); ++k)
        if (std::abs(spectrum[k]) <= tol_null) ++count;
    return count;
}

}  // namespace lockform
