// Quartic distance-error potentials and their derivatives.
//
// Two flavours share one code path:
//   Plain:  N agents in the target spec's ambient dimension, state N*dim.
//   Locked: N planar agents plus one out-of-plane scalar carried by a
//           designated vertex, state length 2N+1 (the scalar is last).
//           Target distances are the lifted (spatial) ones; edges incident
//           to the virtual vertex pick up the squared scalar.
//
// The potential is (1/4) * sum of squared edge errors, so the negative
// gradient reproduces the per-agent sum (p_j - p_i) * e_ij with unit
// coefficient.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "lockform/geometry.hpp"

namespace lockform {

enum class EnergyMode { Plain, Locked };

/// Signed squared-distance error on one edge.
struct EdgeError {
    Edge edge;
    double value = 0.0;
};

class EnergySystem {
public:
    /// Potential over the spec's graph in its ambient dimension.
    static EnergySystem plain(DistanceSpec spec);

    /// Locked system built from a planar spec: targets are lifted by alpha on
    /// edges incident to virtual_vertex (default: the highest-numbered agent).
    static EnergySystem locked(const DistanceSpec& spec2d, double alpha, int virtual_vertex = -1);

    /// Locked system from an already-lifted spatial spec.
    static EnergySystem locked_from_lifted(DistanceSpec spec3d, double alpha, int virtual_vertex);

    EnergyMode mode() const { return mode_; }
    /// Target spec: the plain spec, or the lifted spatial spec when locked.
    const DistanceSpec& spec() const { return spec_; }
    int num_vertices() const { return spec_.graph().num_vertices(); }
    /// Per-agent coordinate count (2 or 3); locked systems are planar.
    int agent_dim() const { return mode_ == EnergyMode::Locked ? 2 : spec_.ambient_dim(); }
    int state_size() const;
    int virtual_vertex() const { return virtual_vertex_; }
    double alpha() const { return alpha_; }

    std::vector<EdgeError> edge_errors(const Eigen::VectorXd& x) const;
    double potential(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    /// Allocation-free gradient for integrator inner loops.
    void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
    /// Analytic Hessian, symmetrized as (H + H^T)/2.
    Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

    /// Locked only: squared-distance errors of the PLANAR formation against
    /// the planar targets (lifted targets minus alpha^2 on incident edges).
    std::vector<EdgeError> planar_sq_errors(const Eigen::VectorXd& x) const;

    /// Locked only: view a state vector as a LockedState.
    LockedState as_locked_state(const Eigen::VectorXd& x) const;
    /// Plain only: view a state vector as a Realization.
    Realization as_realization(const Eigen::VectorXd& x) const;

private:
    EnergySystem(DistanceSpec spec, EnergyMode mode, double alpha, int virtual_vertex);
    void check_state(const Eigen::VectorXd& x) const;
    double edge_error_at(const Eigen::VectorXd& x, const Edge& e) const;

    DistanceSpec spec_;
    EnergyMode mode_;
    double alpha_ = 0.0;       // locked only
    int virtual_vertex_ = -1;  // locked only, 1-based
};

/// Central-difference gradient of a scalar function, h = h_scale*(1+|x_k|).
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h_scale = 1e-5);

/// Central-difference Hessian of a scalar function (uses only f-values, so it
/// is independent of any analytic gradient).
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double h_scale = 1e-4);

/// Count of |eigenvalue| <= tol entries; tol defaults to 1e-6 * max|eigenvalue|.
int count_near_zero_eigenvalues(const Eigen::VectorXd& spectrum, double tol_null = -1.0);

}  // namespace lockform
