#include "lockform/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lockform {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(LawKind law) {
    switch (law) {
        case LawKind::Plain2D: return "plain2d";
        case LawKind::Plain3D: return "plain3d";
        case LawKind::Locked: return "locked";
    }
    return "?";
}

namespace {

LawKind law_from_string(const std::string& s) {
    if (s == "plain2d") return LawKind::Plain2D;
    if (s == "plain3d") return LawKind::Plain3D;
    if (s == "locked") return LawKind::Locked;
    throw ScenarioError("unknown law '" + s + "' (expected plain2d, plain3d, or locked)");
}

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw ScenarioError(std::string("missing config key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("bad config key '") + key + "': " + e.what());
    }
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ScenarioError("config root must be a JSON object");
    Scenario s;
    s.name = j.value("name", std::string("scenario"));
    s.law = law_from_string(require<std::string>(j, "law"));
    s.agents = require<int>(j, "agents");

    // Unit guard: the config carries squared distances and must say so.
    if (!j.contains("distances_are_squared") || j.at("distances_are_squared") != true)
        throw ScenarioError("config must set \"distances_are_squared\": true");

    const json& dist = j.contains("distances") ? j.at("distances") : json();
    if (!dist.is_array() || dist.empty()) throw ScenarioError("'distances' must be a non-empty array");
    for (const json& entry : dist) {
        if (!entry.is_array() || entry.size() != 3)
            throw ScenarioError("each distance entry must be [i, j, squared_distance]");
        s.sq_distances.emplace_back(entry[0].get<int>(), entry[1].get<int>(), entry[2].get<double>());
    }
    std::sort(s.sq_distances.begin(), s.sq_distances.end());

    if (j.contains("alpha")) s.alpha = j.at("alpha").get<double>();
    if (s.law == LawKind::Locked && (!s.alpha || !(*s.alpha > 0.0)))
        throw ScenarioError("locked law requires alpha > 0");

    if (j.contains("init")) {
        const json& init = j.at("init");
        const std::string type = require<std::string>(init, "type");
        if (type == "uniform_box") {
            s.init.kind = InitSpec::Kind::UniformBox;
            s.init.lo = require<double>(init, "lo");
            s.init.hi = require<double>(init, "hi");
            if (!(s.init.lo < s.init.hi)) throw ScenarioError("init box requires lo < hi");
            if (init.contains("virtual_value"))
                s.init.virtual_value = init.at("virtual_value").get<double>();
        } else if (type == "explicit") {
            s.init.kind = InitSpec::Kind::Explicit;
            s.init.coords = require<std::vector<double>>(init, "coords");
        } else {
            throw ScenarioError("init type must be 'uniform_box' or 'explicit'");
        }
    }

    if (j.contains("integrator")) {
        const json& it = j.at("integrator");
        IntegratorConfig& cfg = s.integrator;
        if (it.contains("method")) {
            const std::string m = it.at("method").get<std::string>();
            if (m == "rk4") cfg.method = StepMethod::RK4Fixed;
            else if (m == "rk45") cfg.method = StepMethod::RK45Adaptive;
            else throw ScenarioError("integrator method must be 'rk4' or 'rk45'");
        }
        cfg.dt = it.value("dt", cfg.dt);
        cfg.t_max = it.value("t_max", cfg.t_max);
        cfg.grad_tol = it.value("grad_tol", cfg.grad_tol);
        cfg.rel_tol = it.value("rel_tol", cfg.rel_tol);
        cfg.abs_tol = it.value("abs_tol", cfg.abs_tol);
        cfg.dt_max = it.value("dt_max", cfg.dt_max);
        cfg.record_every = it.value("record_every", cfg.record_every);
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(e.what());
        }
    }

    if (j.contains("outputs")) {
        const json& out = j.at("outputs");
        s.trajectory_path = out.value("trajectory", s.trajectory_path);
        s.report_path = out.value("report", s.report_path);
    }
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["law"] = to_string(s.law);
    j["agents"] = s.agents;
    j["distances_are_squared"] = true;
    json dist = json::array();
    for (const auto& [i, jdx, v] : s.sq_distances) dist.push_back(json::array({i, jdx, v}));
    j["distances"] = dist;
    if (s.alpha) j["alpha"] = *s.alpha;

    json init;
    if (s.init.kind == InitSpec::Kind::UniformBox) {
        init["type"] = "uniform_box";
        init["lo"] = s.init.lo;
        init["hi"] = s.init.hi;
        if (s.init.virtual_value) init["virtual_value"] = *s.init.virtual_value;
    } else {
        init["type"] = "explicit";
        init["coords"] = s.init.coords;
    }
    j["init"] = init;

    json it;
    it["method"] = s.integrator.method == StepMethod::RK4Fixed ? "rk4" : "rk45";
    it["dt"] = s.integrator.dt;
    it["t_max"] = s.integrator.t_max;
    it["grad_tol"] = s.integrator.grad_tol;
    it["rel_tol"] = s.integrator.rel_tol;
    it["abs_tol"] = s.integrator.abs_tol;
    it["dt_max"] = s.integrator.dt_max;
    it["record_every"] = s.integrator.record_every;
    j["integrator"] = it;

    j["outputs"] = json{{"trajectory", s.trajectory_path}, {"report", s.report_path}};
    return j;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("config is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

DistanceSpec spec_from_scenario(const Scenario& s) {
    try {
        std::vector<std::pair<Edge, double>> values;
        values.reserve(s.sq_distances.size());
        std::vector<Edge> edges;
        edges.reserve(s.sq_distances.size());
        for (const auto& [i, j, v] : s.sq_distances) {
            edges.emplace_back(i, j);
            values.emplace_back(Edge(i, j), v);
        }
        FormationGraph graph(s.agents, std::move(edges));
        const int dim = s.law == LawKind::Plain3D ? 3 : 2;
        return DistanceSpec(std::move(graph), std::move(values), dim);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
}

EnergySystem system_from_scenario(const Scenario& s) {
    DistanceSpec spec = spec_from_scenario(s);
    if (s.law == LawKind::Locked) return EnergySystem::locked(spec, *s.alpha);
    return EnergySystem::plain(std::move(spec));
}

Eigen::VectorXd initial_state(const Scenario& s, const EnergySystem& sys, std::uint64_t seed) {
    if (s.init.kind == InitSpec::Kind::Explicit) {
        if (static_cast<int>(s.init.coords.size()) != sys.state_size())
            throw ScenarioError("explicit init has " + std::to_string(s.init.coords.size()) +
                                " coordinates, expected " + std::to_string(sys.state_size()));
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
            s.init.coords.data(), static_cast<Eigen::Index>(s.init.coords.size()));
        if (sys.mode() == EnergyMode::Locked && x[x.size() - 1] == 0.0)
            throw ScenarioError("locked init requires a nonzero virtual coordinate");
        return x;
    }
    std::mt19937_64 rng(derive_subseed(seed, 0));
    return sampler_uniform_box(s.init.lo, s.init.hi, s.init.virtual_value)(sys, rng);
}

json report_to_json(const EquilibriumReport& rep) {
    json j;
    j["state"] = std::vector<double>(rep.state.data(), rep.state.data() + rep.state.size());
    j["grad_norm"] = rep.grad_norm;
    j["potential"] = rep.potential_value;
    j["spectrum"] = std::vector<double>(rep.hessian_spectrum.data(),
                                        rep.hessian_spectrum.data() + rep.hessian_spectrum.size());
    j["classification"] = to_string(rep.classification);
    j["degenerate"] = rep.degenerate;
    return j;
}

json basin_to_json(const BasinStats& stats) {
    json j;
    j["n_trials"] = stats.n_trials;
    j["n_correct"] = stats.n_correct;
    j["n_incorrect"] = stats.n_incorrect;
    j["n_unresolved"] = stats.n_unresolved;
    j["seed"] = stats.seed;
    json witnesses = json::array();
    for (const EquilibriumReport& w : stats.incorrect_witnesses) witnesses.push_back(report_to_json(w));
    j["witnesses"] = witnesses;
    return j;
}

Scenario preset_k4_locked() {
    Scenario s;
    s.name = "k4-locked-demo";
    s.law = LawKind::Locked;
    s.agents = 4;
    s.sq_distances = {{1, 2, 16.0}, {1, 3, 25.0}, {1, 4, 10.0},
                      {2, 3, 17.0}, {2, 4, 18.0}, {3, 4, 5.0}};
    s.alpha = 1.0;
    s.init.kind = InitSpec::Kind::UniformBox;
    s.init.lo = -5.0;
    s.init.hi = 5.0;
    s.init.virtual_value = 1.0;
    s.integrator.method = StepMethod::RK45Adaptive;
    s.integrator.dt = 1e-3;
    s.integrator.t_max = 2000.0;
    s.integrator.grad_tol = 1e-8;
    s.integrator.record_every = 100;
    s.trajectory_path = "k4_locked_traj.csv";
    s.report_path = "k4_locked_report.json";
    return s;
}

Scenario preset_k4_plain2d() {
    Scenario s = preset_k4_locked();
    s.name = "k4-plain2d";
    s.law = LawKind::Plain2D;
    s.alpha.reset();
    s.init.virtual_value.reset();
    s.trajectory_path = "k4_plain2d_traj.csv";
    s.report_path = "k4_plain2d_report.json";
    return s;
}

Scenario preset_five_agent_plain2d() {
    Scenario s;
    s.name = "five-agent-plain2d";
    s.law = LawKind::Plain2D;
    s.agents = 5;
    s.sq_distances = {{1, 2, 10.0}, {1, 3, 4.0}, {1, 4, 5.0}, {2, 3, 10.0},
                      {2, 5, 41.0}, {3, 4, 5.0}, {4, 5, 26.0}};
    s.init.kind = InitSpec::Kind::UniformBox;
    s.init.lo = -5.0;
    s.init.hi = 5.0;
    s.integrator.method = StepMethod::RK45Adaptive;
    s.integrator.dt = 1e-3;
    s.integrator.t_max = 5000.0;
    s.integrator.grad_tol = 1e-8;
    s.integrator.record_every = 100;
    s.trajectory_path = "five_agent_traj.csv";
    s.report_path = "five_agent_report.json";
    return s;
}

// Pinned by scanning seeds until the five-agent flow settled at a
// positive-potential equilibrium; see the reproduce pipeline below.
const std::uint64_t kFiveAgentIncorrectSeed = 1;

namespace {

struct RunArtifacts {
    Trajectory traj;
    std::optional<EquilibriumReport> report;
};

RunArtifacts run_scenario_to_files(const Scenario& s, std::uint64_t seed, const fs::path& csv_path,
                                   const fs::path& report_path) {
    const EnergySystem sys = system_from_scenario(s);
    const Eigen::VectorXd x0 = initial_state(s, sys, seed);
    RunArtifacts art;
    art.traj = integrate(sys, x0, s.integrator);

    std::ofstream csv(csv_path);
    write_trajectory_csv(csv, sys, art.traj);

    json rep;
    rep["scenario"] = s.name;
    rep["seed"] = seed;
    rep["terminal_reason"] = to_string(art.traj.terminal_reason);
    rep["final_time"] = art.traj.final_time();
    rep["final_potential"] = art.traj.final_potential();
    if (art.traj.terminal_reason == TerminalReason::GradientBelowTol) {
        try {
            const Eigen::VectorXd x_eq = refine_equilibrium(sys, art.traj.final_state());
            art.report = classify(sys, x_eq);
            rep["equilibrium"] = report_to_json(*art.report);
        } catch (const RefinementError& e) {
            rep["refinement_failed"] = true;
            rep["best_grad_norm"] = e.best_grad_norm;
        }
    }
    std::ofstream out(report_path);
    out << rep.dump(2) << '\n';
    return art;
}

std::vector<EdgeError> final_errors_for(const Scenario& s, const Trajectory& traj) {
    const EnergySystem sys = system_from_scenario(s);
    if (sys.mode() == EnergyMode::Locked) return sys.planar_sq_errors(traj.final_state());
    return sys.edge_errors(traj.final_state());
}

}  // namespace

ReproduceResult run_reproduce(const fs::path& out_dir) {
    fs::create_directories(out_dir);
    ReproduceResult result;

    struct Item {
        Scenario scenario;
        std::uint64_t seed;
        std::string stem;
    };
    Scenario five_correct = preset_five_agent_plain2d();
    Scenario five_incorrect = preset_five_agent_plain2d();
    const std::vector<Item> items = {
        {preset_k4_locked(), kK4LockedDemoSeed, "k4_locked"},
        {five_correct, kFiveAgentCorrectSeed, "five_agent_correct"},
        {five_incorrect, kFiveAgentIncorrectSeed, "five_agent_incorrect"},
    };

    std::ofstream summary(out_dir / "summary.txt");
    summary << "final squared-distance errors per edge\n";
    summary << "======================================\n";
    for (const Item& item : items) {
        const fs::path csv = out_dir / (item.stem + "_traj.csv");
        const fs::path rep = out_dir / (item.stem + "_report.json");
        RunArtifacts art = run_scenario_to_files(item.scenario, item.seed, csv, rep);

        ReproduceRun run;
        run.name = item.stem;
        run.terminal_reason = art.traj.terminal_reason;
        run.final_potential = art.traj.final_potential();
        run.final_errors = final_errors_for(item.scenario, art.traj);
        run.trajectory_csv = csv;

        summary << "\n" << run.name << " (seed " << item.seed << ")\n";
        summary << "  terminal: " << to_string(run.terminal_reason) << "\n";
        summary << "  potential: " << fmt17(run.final_potential) << "\n";
        for (const EdgeError& e : run.final_errors)
            summary << "  e(" << e.edge.i << "," << e.edge.j << ") = " << fmt17(e.value) << "\n";
        result.runs.push_back(std::move(run));
    }
    result.summary_path = out_dir / "summary.txt";
    return result;
}

}  // namespace lockform
