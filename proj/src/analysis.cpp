#include "lockform/analysis.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace lockform {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t derive_subseed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + 0x9E3779B97F4A7C15ull * (index + 1));
}

double uniform_double(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

std::string to_string(EquilibriumClass c) {
    switch (c) {
        case EquilibriumClass::Correct: return "Correct";
        case EquilibriumClass::IncorrectSaddleOrUnstable: return "IncorrectSaddleOrUnstable";
        case EquilibriumClass::IncorrectNoNegativeEigenvalue: return "IncorrectNoNegativeEigenvalue";
        case EquilibriumClass::Degenerate: return "Degenerate";
    }
    return "?";
}

namespace {

// Newton step through the pseudo-inverse of the (symmetric) Hessian; the
// rigid-motion null directions fall below the cut and are suppressed.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, double rel_cut) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("pinv_solve: eigensolve failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double cut = rel_cut * lam.cwiseAbs().maxCoeff();
    Eigen::VectorXd y = es.eigenvectors().transpose() * g;
    for (Eigen::Index k = 0; k < y.size(); ++k)
        y[k] = std::abs(lam[k]) > cut ? y[k] / lam[k] : 0.0;
    return es.eigenvectors() * y;
}

}  // namespace

Eigen::VectorXd refine_equilibrium(const EnergySystem& sys, const Eigen::VectorXd& x_guess,
                                   double newton_tol) {
    if (x_guess.size() != sys.state_size())
        throw std::invalid_argument("refine_equilibrium: state length mismatch");
    Eigen::VectorXd x = x_guess;
    Eigen::VectorXd g = sys.gradient(x);
    double gnorm = g.norm();
    if (gnorm > 1e-3)
        throw std::invalid_argument("refine_equilibrium: gradient too large for Newton refinement");

    Eigen::VectorXd best = x;
    double best_norm = gnorm;
    constexpr int kMaxIter = 50;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        if (gnorm <= newton_tol) return x;
        const Eigen::VectorXd dx = pinv_solve(sys.hessian(x), g, 1e-8);
        Eigen::VectorXd x_trial = x - dx;
        Eigen::VectorXd g_trial = sys.gradient(x_trial);
        double trial_norm = g_trial.norm();

        if (!x_trial.allFinite() || trial_norm > 10.0 * best_norm) {
            // Newton diverged; damp with gradient flow from the best iterate.
            IntegratorConfig flow;
            flow.method = StepMethod::RK45Adaptive;
            flow.dt = 1e-4;
            flow.t_max = 50.0;
            flow.grad_tol = std::max(newton_tol, best_norm * 0.1);
            Trajectory t = integrate(sys, best, flow);
            x_trial = t.final_state();
            g_trial = sys.gradient(x_trial);
            trial_norm = g_trial.norm();
        }

        x = std::move(x_trial);
        g = std::move(g_trial);
        gnorm = trial_norm;
        if (gnorm < best_norm) {
            best = x;
            best_norm = gnorm;
        }
    }
    if (best_norm <= newton_tol) return best;
    throw RefinementError("refine_equilibrium: no convergence within 50 iterations", best, best_norm);
}

bool positions_degenerate(const EnergySystem& sys, const Eigen::VectorXd& x, double degen_rel) {
    const int dim = sys.agent_dim();
    const int n = sys.num_vertices();
    Eigen::MatrixXd pos(n, dim);
    for (int v = 0; v < n; ++v)
        for (int k = 0; k < dim; ++k) pos(v, k) = x[static_cast<Eigen::Index>(v) * dim + k];
    pos.rowwise() -= pos.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pos);
    const Eigen::VectorXd& sv = svd.singularValues();
    return sv[sv.size() - 1] <= degen_rel * sv[0];
}

EquilibriumReport classify(const EnergySystem& sys, const Eigen::VectorXd& x_eq,
                           const ClassifyTolerances& tol) {
    EquilibriumReport rep;
    rep.state = x_eq;
    rep.grad_norm = sys.gradient(x_eq).norm();
    rep.potential_value = sys.potential(x_eq);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.hessian(x_eq), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("classify: eigensolve failed");
    rep.hessian_spectrum = es.eigenvalues();  // ascending

    rep.degenerate = positions_degenerate(sys, x_eq, tol.degen_rel);

    const double eig_tol = tol.eig_tol_rel * rep.hessian_spectrum.cwiseAbs().maxCoeff();
    const double min_eig = rep.hessian_spectrum[0];
    if (rep.potential_value <= tol.pot_tol)
        rep.classification = EquilibriumClass::Correct;
    else if (min_eig < -eig_tol)
        rep.classification = EquilibriumClass::IncorrectSaddleOrUnstable;
    else if (rep.degenerate)
        rep.classification = EquilibriumClass::Degenerate;
    else
        rep.classification = EquilibriumClass::IncorrectNoNegativeEigenvalue;
    return rep;
}

namespace {

// Orthonormal basis of the rigid-motion directions (translations plus
// rotation generators) at a spatial realization.
Eigen::MatrixXd rigid_motion_basis_3d(const Realization& r) {
    const int n = r.num_vertices;
    Eigen::MatrixXd basis(3 * n, 6);
    basis.setZero();
    for (int v = 0; v < n; ++v) {
        for (int k = 0; k < 3; ++k) basis(3 * v + k, k) = 1.0;  // translations
        const double px = r.coords[3 * v], py = r.coords[3 * v + 1], pz = r.coords[3 * v + 2];
        basis(3 * v + 0, 3) = -py;  // rotation in the x-y plane
        basis(3 * v + 1, 3) = px;
        basis(3 * v + 0, 4) = -pz;  // x-z
        basis(3 * v + 2, 4) = px;
        basis(3 * v + 1, 5) = -pz;  // y-z
        basis(3 * v + 2, 5) = py;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    return qr.householderQ() * Eigen::MatrixXd::Identity(3 * n, 6);
}

}  // namespace

CorrespondenceResult verify_locked_spatial_correspondence(const LockedState& q_eq,
                                                  const DistanceSpec& spec3d,
                                                  double value_rel_tol, double crit_tol,
                                                  double eig_tol_rel) {
    CorrespondenceResult res;
    const EnergySystem locked = EnergySystem::locked_from_lifted(spec3d, 0.0, q_eq.virtual_vertex);
    const EnergySystem spatial = EnergySystem::plain(spec3d);

    const Eigen::VectorXd q = locked_state_vector(q_eq);
    if (locked.gradient(q).norm() > 1e-3)
        throw std::invalid_argument(
            "verify_locked_spatial_correspondence: state is not a refined equilibrium");
    const Realization lifted = lift_locked_to_3d(q_eq);

    const double v_locked = locked.potential(q);
    const double v_spatial = spatial.potential(lifted.coords);
    res.potential_match =
        std::abs(v_locked - v_spatial) <= value_rel_tol * std::max({1.0, v_locked, v_spatial});

    const Eigen::VectorXd g3 = spatial.gradient(lifted.coords);
    const Eigen::MatrixXd rigid = rigid_motion_basis_3d(lifted);
    const Eigen::VectorXd g_reduced = g3 - rigid * (rigid.transpose() * g3);
    res.critical_3d = g_reduced.norm() <= crit_tol;

    auto has_negative = [&](const EnergySystem& sys, const Eigen::VectorXd& x) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.hessian(x), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("verify_locked_spatial_correspondence: eigensolve failed");
        const Eigen::VectorXd& lam = es.eigenvalues();
        return lam[0] < -eig_tol_rel * lam.cwiseAbs().maxCoeff();
    };
    const bool neg_locked = has_negative(locked, q);
    const bool neg_spatial = has_negative(spatial, lifted.coords);
    res.sign_match = neg_locked == neg_spatial;

    res.ok = res.potential_match && res.critical_3d && res.sign_match;
    if (!res.ok) {
        res.detail = "potential_match=" + std::to_string(res.potential_match) +
                     " critical_3d=" + std::to_string(res.critical_3d) +
                     " (|g_reduced|=" + std::to_string(g_reduced.norm()) + ")" +
                     " sign_match=" + std::to_string(res.sign_match) +
                     " (locked=" + std::to_string(neg_locked) +
                     ", spatial=" + std::to_string(neg_spatial) + ")";
    }
    return res;
}

InitSampler sampler_uniform_box(double lo, double hi, std::optional<double> virtual_value) {
    if (!(lo < hi)) throw std::invalid_argument("sampler_uniform_box: need lo < hi");
    return InitSampler{[lo, hi, virtual_value](const EnergySystem& sys, std::mt19937_64& rng) {
        Eigen::VectorXd x(sys.state_size());
        const Eigen::Index planar = sys.mode() == EnergyMode::Locked ? x.size() - 1 : x.size();
        for (Eigen::Index k = 0; k < planar; ++k) x[k] = uniform_double(rng, lo, hi);
        if (sys.mode() == EnergyMode::Locked) {
            const double vz = virtual_value.value_or(sys.alpha());
            if (vz == 0.0)
                throw std::invalid_argument("sampler_uniform_box: virtual coordinate must be nonzero");
            x[x.size() - 1] = vz;
        }
        return x;
    }};
}

InitSampler sampler_fixed(Eigen::VectorXd x0) {
    return InitSampler{[x0 = std::move(x0)](const EnergySystem&, std::mt19937_64&) { return x0; }};
}

Realization comparison_realization(const EnergySystem& sys, const Eigen::VectorXd& x) {
    if (sys.mode() == EnergyMode::Locked) return lift_locked_to_3d(sys.as_locked_state(x));
    return Realization(x, sys.spec().ambient_dim());
}

namespace {

struct TrialResult {
    enum class Outcome { Correct, Incorrect, Unresolved } outcome = Outcome::Unresolved;
    std::optional<EquilibriumReport> report;
    Trajectory traj;
};

TrialResult run_trial(const EnergySystem& sys, const InitSampler& sampler,
                      const IntegratorConfig& cfg, std::uint64_t master_seed, int trial,
                      const MonteCarloOptions& opts) {
    TrialResult result;
    std::mt19937_64 rng(derive_subseed(master_seed, static_cast<std::uint64_t>(trial)));
    const Eigen::VectorXd x0 = sampler(sys, rng);
    result.traj = integrate(sys, x0, cfg);
    if (result.traj.terminal_reason != TerminalReason::GradientBelowTol) return result;
    try {
        const Eigen::VectorXd x_eq = refine_equilibrium(sys, result.traj.final_state(), opts.newton_tol);
        EquilibriumReport rep = classify(sys, x_eq, opts.classify_tol);
        result.outcome = rep.classification == EquilibriumClass::Correct
                             ? TrialResult::Outcome::Correct
                             : TrialResult::Outcome::Incorrect;
        result.report = std::move(rep);
    } catch (const RefinementError&) {
        result.outcome = TrialResult::Outcome::Unresolved;
    }
    return result;
}

}  // namespace

BasinStats monte_carlo_basin(const EnergySystem& sys, const InitSampler& sampler, int n_trials,
                             const IntegratorConfig& cfg, std::uint64_t seed,
                             const MonteCarloOptions& opts) {
    if (n_trials < 1) throw std::invalid_argument("monte_carlo_basin: need at least one trial");
    cfg.validate();

    std::vector<TrialResult> results(static_cast<std::size_t>(n_trials));
    const int jobs = std::max(1, std::min(opts.jobs, n_trials));
    if (jobs == 1) {
        for (int t = 0; t < n_trials; ++t)
            results[static_cast<std::size_t>(t)] = run_trial(sys, sampler, cfg, seed, t, opts);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int t = next.fetch_add(1); t < n_trials; t = next.fetch_add(1))
                results[static_cast<std::size_t>(t)] = run_trial(sys, sampler, cfg, seed, t, opts);
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Merge in trial order so tallies and witness order are scheduling-free.
    BasinStats stats;
    stats.n_trials = n_trials;
    stats.seed = seed;
    for (int t = 0; t < n_trials; ++t) {
        TrialResult& r = results[static_cast<std::size_t>(t)];
        switch (r.outcome) {
            case TrialResult::Outcome::Correct: ++stats.n_correct; break;
            case TrialResult::Outcome::Unresolved: ++stats.n_unresolved; break;
            case TrialResult::Outcome::Incorrect: {
                ++stats.n_incorrect;
                const Realization cand = comparison_realization(sys, r.report->state);
                bool dup = false;
                for (const EquilibriumReport& w : stats.incorrect_witnesses) {
                    if (are_congruent(comparison_realization(sys, w.state), cand, opts.dedup_tol)) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) stats.incorrect_witnesses.push_back(*r.report);
                break;
            }
        }
        if (opts.observer) opts.observer(t, r.traj, r.report);
    }
    return stats;
}

}  // namespace lockform
