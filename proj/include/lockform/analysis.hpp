// Equilibrium refinement and classification, the locked/spatial critical-point
// correspondence check, and Monte Carlo basin-of-attraction estimation.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lockform/dynamics.hpp"
#include "lockform/energy.hpp"

namespace lockform {

/// splitmix64 mix of a 64-bit value; used for counter-based sub-seed
/// derivation so Monte Carlo tallies do not depend on thread scheduling.
std::uint64_t splitmix64(std::uint64_t z);
std::uint64_t derive_subseed(std::uint64_t master, std::uint64_t index);

/// Uniform double in [lo, hi) from the top 53 bits of the engine output;
/// avoids std::uniform_real_distribution, whose stream is not portable.
double uniform_double(std::mt19937_64& rng, double lo, double hi);

enum class EquilibriumClass {
    Correct,
    IncorrectSaddleOrUnstable,
    IncorrectNoNegativeEigenvalue,  // alarm class: incorrect yet no escape direction found
    Degenerate,
};

std::string to_string(EquilibriumClass c);

struct EquilibriumReport {
    Eigen::VectorXd state;
    double grad_norm = 0.0;
    double potential_value = 0.0;
    Eigen::VectorXd hessian_spectrum;  // ascending
    EquilibriumClass classification = EquilibriumClass::Correct;
    bool degenerate = false;
};

struct ClassifyTolerances {
    double pot_tol = 1e-10;     // correct vs incorrect split on the potential value
    double eig_tol_rel = 1e-7;  // negative-eigenvalue threshold, relative to spectral radius
    double degen_rel = 1e-6;    // singular-value ratio for span-deficiency
};

/// Raised when Newton refinement fails to converge; carries the best iterate.
struct RefinementError : std::runtime_error {
    RefinementError(std::string msg, Eigen::VectorXd best, double best_norm)
        : std::runtime_error(std::move(msg)), best_iterate(std::move(best)), best_grad_norm(best_norm) {}
    Eigen::VectorXd best_iterate;
    double best_grad_norm = 0.0;
};

/// Sharpen an integrator endpoint into a critical point: Newton on grad = 0
/// with a rank-revealing pseudo-inverse (nullspace cut 1e-8 * largest
/// singular value) that suppresses the rigid-motion directions, falling back
/// to gradient flow when a Newton step diverges. Requires ||grad(x_guess)||
/// <= 1e-3. Throws RefinementError after 50 iterations without convergence.
Eigen::VectorXd refine_equilibrium(const EnergySystem& sys, const Eigen::VectorXd& x_guess,
                                   double newton_tol = 1e-10);

/// Hessian spectrum, degeneracy, and correctness classification of a refined
/// critical point.
EquilibriumReport classify(const EnergySystem& sys, const Eigen::VectorXd& x_eq,
                           const ClassifyTolerances& tol = {});

/// true iff the centered agent positions span a space of lesser dimension
/// than the ambient one (locked systems use the planar positions).
bool positions_degenerate(const EnergySystem& sys, const Eigen::VectorXd& x, double degen_rel = 1e-6);

struct CorrespondenceResult {
    bool ok = false;
    bool potential_match = false;  // V(lifted q) equals the locked potential
    bool critical_3d = false;      // lifted state is a spatial critical point
    bool sign_match = false;       // negative-eigenvalue indicators agree
    std::string detail;

    explicit operator bool() const { return ok; }
};

/// Check that a refined locked equilibrium and its spatial lift tell the same
/// story: equal potential values, criticality of the lift, and agreeing
/// negative-eigenvalue indicators.
CorrespondenceResult verify_locked_spatial_correspondence(const LockedState& q_eq,
                                                  const DistanceSpec& spec3d,
                                                  double value_rel_tol = 1e-12,
                                                  double crit_tol = 1e-8,
                                                  double eig_tol_rel = 1e-7);

/// Draws initial states for Monte Carlo trials.
struct InitSampler {
    std::function<Eigen::VectorXd(const EnergySystem&, std::mt19937_64&)> sample;

    Eigen::VectorXd operator()(const EnergySystem& sys, std::mt19937_64& rng) const {
        if (!sample) throw std::invalid_argument("InitSampler: empty sampler");
        return sample(sys, rng);
    }
};

/// Coordinate-wise uniform in [lo, hi); locked systems get virtual_value
/// (default: the system's alpha) as the virtual coordinate.
InitSampler sampler_uniform_box(double lo, double hi,
                                std::optional<double> virtual_value = std::nullopt);

/// Always returns x0 (single-start runs and tests).
InitSampler sampler_fixed(Eigen::VectorXd x0);

struct BasinStats {
    int n_trials = 0;
    int n_correct = 0;
    int n_incorrect = 0;
    int n_unresolved = 0;  // horizon reached or refinement failed
    std::vector<EquilibriumReport> incorrect_witnesses;  // deduplicated up to congruence
    std::uint64_t seed = 0;
};

struct MonteCarloOptions {
    int jobs = 1;
    double newton_tol = 1e-10;
    ClassifyTolerances classify_tol;
    double dedup_tol = 1e-4;  // congruence tolerance for witness deduplication
    /// Invoked once per trial, in trial order, after all trials finish.
    std::function<void(int trial, const Trajectory&, const std::optional<EquilibriumReport>&)>
        observer;
};

/// Integrate-refine-classify from n_trials sampled starts. Deterministic for
/// a given seed: per-trial engines are derived by counter, and results are
/// merged in trial order regardless of how many jobs execute them.
BasinStats monte_carlo_basin(const EnergySystem& sys, const InitSampler& sampler, int n_trials,
                             const IntegratorConfig& cfg, std::uint64_t seed,
                             const MonteCarloOptions& opts = {});

/// Realization used for congruence comparisons (locked states are lifted).
Realization comparison_realization(const EnergySystem& sys, const Eigen::VectorXd& x);

}  // namespace lockform
