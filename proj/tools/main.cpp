// lockform CLI: realizability checks, distance lifting, gradient-flow
// simulation, equilibrium classification, Monte Carlo basin estimation, and
// the bundled reproduce pipeline.
//
// Exit codes: 0 success, 1 config error, 2 infeasible, 3 integration failure,
// 4 refinement failure, 5 verification failure (montecarlo under the locked
// law found incorrect equilibria).

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lockform/scenario.hpp"

namespace fs = std::filesystem;
using namespace lockform;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitIntegration = 3;
constexpr int kExitRefinement = 4;
constexpr int kExitVerification = 5;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int cmd_check(const std::string& config_path) {
    const Scenario s = load_scenario(config_path);
    DistanceSpec spec = spec_from_scenario(s);
    if (!spec.graph().is_complete_k4())
        throw ScenarioError("check: requires the four-agent complete graph");

    static constexpr std::array<std::array<int, 3>, 4> faces{
        {{1, 2, 3}, {1, 2, 4}, {1, 3, 4}, {2, 3, 4}}};
    bool triangles_ok = true;
    for (const auto& f : faces) {
        const bool ok = triangle_feasible(spec, f);
        triangles_ok = triangles_ok && ok;
        std::cout << "triangle (" << f[0] << "," << f[1] << "," << f[2] << "): "
                  << (ok ? "ok" : "violated") << "\n";
    }
    const double det = cayley_menger_det(spec);
    const Realizability cls = classify_realizability(spec);
    std::cout << "det C = " << fmt(det) << "\n";
    std::cout << "classification: " << to_string(cls) << "\n";
    return cls == Realizability::Infeasible ? kExitInfeasible : kExitOk;
}

int cmd_lift(const std::string& config_path, double alpha_flag, const std::string& out_path) {
    const Scenario s = load_scenario(config_path);
    double alpha = alpha_flag;
    if (alpha == 0.0 && s.alpha) alpha = *s.alpha;
    DistanceSpec spec = spec_from_scenario(s);
    if (spec.ambient_dim() != 2) throw ScenarioError("lift: requires a planar spec");

    DistanceSpec lifted = [&] {
        try {
            return lift_distances(spec, alpha, spec.graph().num_vertices());
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(e.what());
        }
    }();

    json fragment;
    fragment["distances_are_squared"] = true;
    fragment["alpha"] = alpha;
    json dist = json::array();
    for (const Edge& e : lifted.graph().edges())
        dist.push_back(json::array({e.i, e.j, lifted.sq_distance(e.i, e.j)}));
    fragment["distances"] = dist;
    fragment["law"] = "plain3d";

    const std::string text = fragment.dump(2);
    std::cout << text << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << text << "\n";
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
                 double tmax_flag, double dt_flag, double alpha_flag) {
    Scenario s = load_scenario(config_path);
    if (tmax_flag > 0.0) s.integrator.t_max = tmax_flag;
    if (dt_flag > 0.0) s.integrator.dt = dt_flag;
    if (alpha_flag > 0.0) s.alpha = alpha_flag;

    const EnergySystem sys = system_from_scenario(s);
    const Eigen::VectorXd x0 = initial_state(s, sys, seed);
    const Trajectory traj = integrate(sys, x0, s.integrator);

    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);
    const fs::path csv_path = dir / s.trajectory_path;
    std::ofstream csv(csv_path);
    write_trajectory_csv(csv, sys, traj);

    std::cout << "terminal: " << to_string(traj.terminal_reason) << "\n";
    std::cout << "t_final = " << fmt(traj.final_time()) << "\n";
    std::cout << "V_final = " << fmt(traj.final_potential()) << "\n";
    const auto errs = sys.mode() == EnergyMode::Locked ? sys.planar_sq_errors(traj.final_state())
                                                       : sys.edge_errors(traj.final_state());
    for (const EdgeError& e : errs)
        std::cout << "e(" << e.edge.i << "," << e.edge.j << ") = " << fmt(e.value) << "\n";
    std::cout << "trajectory: " << csv_path.string() << "\n";

    json rep;
    rep["scenario"] = s.name;
    rep["seed"] = seed;
    rep["terminal_reason"] = to_string(traj.terminal_reason);
    rep["final_time"] = traj.final_time();
    rep["final_potential"] = traj.final_potential();
    json errors = json::array();
    for (const EdgeError& e : errs) errors.push_back(json::array({e.edge.i, e.edge.j, e.value}));
    rep[sys.mode() == EnergyMode::Locked ? "planar_sq_errors" : "edge_errors"] = errors;
    std::ofstream repfile(dir / s.report_path);
    repfile << rep.dump(2) << "\n";

    return traj.terminal_reason == TerminalReason::GradientBelowTol ? kExitOk : kExitIntegration;
}

Eigen::VectorXd read_state_file(const fs::path& path, int state_size) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open state file: " + path.string());
    std::string line, last;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == 't' || line.front() == '#') {
            saw_header = true;
            continue;
        }
        last = line;
    }
    if (last.empty()) throw ScenarioError("state file has no data rows");
    std::replace(last.begin(), last.end(), ',', ' ');
    std::istringstream fields(last);
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);

    // Accept either a bare state row or a trajectory row (t, state..., V).
    if (static_cast<int>(values.size()) == state_size)
        return Eigen::Map<Eigen::VectorXd>(values.data(), state_size);
    if (static_cast<int>(values.size()) == state_size + 2)
        return Eigen::Map<Eigen::VectorXd>(values.data() + 1, state_size);
    (void)saw_header;
    throw ScenarioError("state row has " + std::to_string(values.size()) +
                        " fields, expected " + std::to_string(state_size) + " (or t-prefixed row)");
}

int cmd_classify(const std::string& config_path, const std::string& state_path) {
    const Scenario s = load_scenario(config_path);
    const EnergySystem sys = system_from_scenario(s);
    const Eigen::VectorXd x = read_state_file(state_path, sys.state_size());
    try {
        const Eigen::VectorXd x_eq = refine_equilibrium(sys, x);
        const EquilibriumReport rep = classify(sys, x_eq);
        std::cout << report_to_json(rep).dump(2) << "\n";
        return kExitOk;
    } catch (const RefinementError& e) {
        json rep;
        rep["refinement_failed"] = true;
        rep["best_grad_norm"] = e.best_grad_norm;
        rep["best_iterate"] =
            std::vector<double>(e.best_iterate.data(), e.best_iterate.data() + e.best_iterate.size());
        std::cout << rep.dump(2) << "\n";
        return kExitRefinement;
    }
}

int cmd_montecarlo(const std::string& config_path, int trials, std::uint64_t seed, int jobs,
                   const std::string& out_dir) {
    const Scenario s = load_scenario(config_path);
    if (s.init.kind != InitSpec::Kind::UniformBox)
        throw ScenarioError("montecarlo: requires a uniform_box init");
    const EnergySystem sys = system_from_scenario(s);
    const InitSampler sampler = sampler_uniform_box(s.init.lo, s.init.hi, s.init.virtual_value);

    MonteCarloOptions opts;
    opts.jobs = jobs;
    const BasinStats stats = monte_carlo_basin(sys, sampler, trials, s.integrator, seed, opts);

    const json j = basin_to_json(stats);
    std::cout << j.dump(2) << "\n";
    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);
    std::ofstream out(dir / s.report_path);
    out << j.dump(2) << "\n";

    if (s.law == LawKind::Locked && stats.n_incorrect > 0) return kExitVerification;
    return kExitOk;
}

int cmd_reproduce(const std::string& out_dir) {
    const ReproduceResult result = run_reproduce(out_dir.empty() ? "out" : out_dir);
    for (const ReproduceRun& run : result.runs)
        std::cout << run.name << ": " << to_string(run.terminal_reason)
                  << ", V = " << fmt(run.final_potential) << "\n";
    std::cout << "summary: " << result.summary_path.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distance-based formation control: simulation and equilibrium analysis"};
    app.require_subcommand(1);

    std::string config_path, out_dir, state_path, lift_out;
    std::uint64_t seed = 0;
    int trials = 100, jobs = 1;
    double alpha = 0.0, tmax = 0.0, dt = 0.0;

    CLI::App* check = app.add_subcommand("check", "triangle and realizability report for a K4 spec");
    check->add_option("--config", config_path, "scenario JSON")->required();

    CLI::App* lift = app.add_subcommand("lift", "lift planar targets to tetrahedral ones");
    lift->add_option("--config", config_path, "scenario JSON")->required();
    lift->add_option("--alpha", alpha, "lift parameter (defaults to the config's alpha)");
    lift->add_option("--out", lift_out, "write the lifted fragment to this file");

    CLI::App* simulate = app.add_subcommand("simulate", "integrate the configured gradient flow");
    simulate->add_option("--config", config_path, "scenario JSON")->required();
    simulate->add_option("--seed", seed, "RNG seed for sampled inits");
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_option("--tmax", tmax, "override integration horizon");
    simulate->add_option("--dt", dt, "override (initial) step size");
    simulate->add_option("--alpha", alpha, "override the locked-law alpha");

    CLI::App* classify_cmd = app.add_subcommand("classify", "refine and classify a stored state");
    classify_cmd->add_option("--config", config_path, "scenario JSON")->required();
    classify_cmd->add_option("--state", state_path, "state file (bare row or trajectory CSV)")
        ->required();

    CLI::App* mc = app.add_subcommand("montecarlo", "basin-of-attraction sampling");
    mc->add_option("--config", config_path, "scenario JSON")->required();
    mc->add_option("--trials", trials, "number of trials");
    mc->add_option("--seed", seed, "master RNG seed");
    mc->add_option("--jobs", jobs, "worker threads");
    mc->add_option("--out", out_dir, "output directory");

    CLI::App* reproduce = app.add_subcommand("reproduce", "run the bundled demo presets");
    reproduce->add_option("--out", out_dir, "output directory (default ./out)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return cmd_check(config_path);
        if (lift->parsed()) return cmd_lift(config_path, alpha, lift_out);
        if (simulate->parsed()) return cmd_simulate(config_path, seed, out_dir, tmax, dt, alpha);
        if (classify_cmd->parsed()) return cmd_classify(config_path, state_path);
        if (mc->parsed()) return cmd_montecarlo(config_path, trials, seed, jobs, out_dir);
        if (reproduce->parsed()) return cmd_reproduce(out_dir);
    } catch (const ScenarioError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIntegration;
    }
    return kExitConfig;
}
