#include "lockform/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lockform {

FormationGraph::FormationGraph(int num_vertices, std::vector<Edge> edges)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
    if (num_vertices_ < 1) throw std::invalid_argument("FormationGraph: need at least one vertex");
    std::sort(edges_.begin(), edges_.end());
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const Edge& e = edges_[k];
        if (e.j > num_vertices_)
            throw std::invalid_argument("FormationGraph: edge endpoint exceeds vertex count");
        if (k > 0 && edges_[k - 1] == e)
            throw std::invalid_argument("FormationGraph: duplicate edge");
    }
}

bool FormationGraph::has_edge(int a, int b) const { return edge_index(a, b) >= 0; }

int FormationGraph::edge_index(int a, int b) const {
    Edge e(a, b);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
    if (it != edges_.end() && *it == e) return static_cast<int>(it - edges_.begin());
    return -1;
}

bool FormationGraph::is_complete() const {
    return num_edges() == num_vertices_ * (num_vertices_ - 1) / 2;
}

FormationGraph complete_graph(int n) {
    if (n < 2) throw std::invalid_argument("complete_graph: need n >= 2");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) edges.emplace_back(i, j);
    return FormationGraph(n, std::move(edges));
}

DistanceSpec::DistanceSpec(FormationGraph graph, std::vector<std::pair<Edge, double>> sq_distances,
                           int ambient_dim)
    : graph_(std::move(graph)), ambient_dim_(ambient_dim) {
    if (ambient_dim_ != 2 && ambient_dim_ != 3)
        throw std::invalid_argument("DistanceSpec: ambient_dim must be 2 or 3");
    if (sq_distances.size() != static_cast<std::size_t>(graph_.num_edges()))
        throw std::invalid_argument("DistanceSpec: distance key set must equal the edge set");
    sq_.assign(graph_.edges().size(), -1.0);
    for (const auto& [edge, d2] : sq_distances) {
        int idx = graph_.edge_index(edge.i, edge.j);
        if (idx < 0) throw std::invalid_argument("DistanceSpec: distance given for a non-edge");
        if (sq_[static_cast<std::size_t>(idx)] >= 0.0)
            throw std::invalid_argument("DistanceSpec: duplicate distance for an edge");
        if (!(d2 > 0.0) || !std::isfinite(d2))
            throw std::invalid_argument("DistanceSpec: squared distances must be positive finite");
        sq_[static_cast<std::size_t>(idx)] = d2;
    }
}

DistanceSpec DistanceSpec::k4(const std::array<double, 6>& sq, int ambient_dim) {
    FormationGraph g = complete_graph(4);
    std::vector<std::pair<Edge, double>> values;
    values.reserve(6);
    for (int k = 0; k < 6; ++k) values.emplace_back(g.edges()[static_cast<std::size_t>(k)], sq[static_cast<std::size_t>(k)]);
    return DistanceSpec(std::move(g), std::move(values), ambient_dim);
}

double DistanceSpec::sq_distance(int a, int b) const {
    int idx = graph_.edge_index(a, b);
    if (idx < 0) throw std::invalid_argument("DistanceSpec: no such edge");
    return sq_[static_cast<std::size_t>(idx)];
}

double DistanceSpec::max_sq_distance() const {
    return *std::max_element(sq_.begin(), sq_.end());
}

Realization::Realization(Eigen::VectorXd c, int dimension) : coords(std::move(c)), dim(dimension) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("Realization: dim must be 2 or 3");
    if (coords.size() % dim != 0)
        throw std::invalid_argument("Realization: coordinate length not divisible by dim");
    num_vertices = static_cast<int>(coords.size()) / dim;
    if (!coords.allFinite()) throw std::invalid_argument("Realization: coordinates must be finite");
}

Eigen::VectorXd Realization::point(int v) const {
    if (v < 1 || v > num_vertices) throw std::invalid_argument("Realization: vertex out of range");
    return coords.segment(static_cast<Eigen::Index>(v - 1) * dim, dim);
}

double sq_dist(const Realization& r, int a, int b) {
    const Eigen::Index ia = static_cast<Eigen::Index>(a - 1) * r.dim;
    const Eigen::Index ib = static_cast<Eigen::Index>(b - 1) * r.dim;
    double s = 0.0;
    for (int k = 0; k < r.dim; ++k) {
        const double diff = r.coords[ia + k] - r.coords[ib + k];
        s += diff * diff;
    }
    return s;
}

DistanceSpec spec_from_realization(const FormationGraph& graph, const Realization& r) {
    if (graph.num_vertices() != r.num_vertices)
        throw std::invalid_argument("spec_from_realization: vertex count mismatch");
    std::vector<std::pair<Edge, double>> values;
    values.reserve(graph.edges().size());
    for (const Edge& e : graph.edges()) values.emplace_back(e, sq_dist(r, e.i, e.j));
    return DistanceSpec(graph, std::move(values), r.dim);
}

LockedState::LockedState(Realization planar_realization, int vertex, double coord)
    : planar(std::move(planar_realization)), virtual_vertex(vertex), virtual_coord(coord) {
    if (planar.dim != 2) throw std::invalid_argument("LockedState: planar realization must be 2-D");
    if (vertex < 1 || vertex > planar.num_vertices)
        throw std::invalid_argument("LockedState: virtual vertex out of range");
}

bool triangle_feasible(const DistanceSpec& spec, const std::array<int, 3>& triple) {
    const auto [a, b, c] = triple;
    const double dab = std::sqrt(spec.sq_distance(a, b));
    const double dac = std::sqrt(spec.sq_distance(a, c));
    const double dbc = std::sqrt(spec.sq_distance(b, c));
    return dab + dac >= dbc && dab + dbc >= dac && dac + dbc >= dab;
}

double cayley_menger_det(const DistanceSpec& spec) {
    if (!spec.graph().is_complete_k4())
        throw std::invalid_argument("cayley_menger_det: spec must be a complete K4");
    std::array<double, 6> sq;
    int k = 0;
    for (int a = 1; a <= 4; ++a)
        for (int b = a + 1; b <= 4; ++b) sq[static_cast<std::size_t>(k++)] = spec.sq_distance(a, b);
    return cayley_menger_det(sq);
}

double cayley_menger_det(const std::array<double, 6>& sq) {
    Eigen::Matrix<double, 5, 5> C;
    C.setZero();
    int k = 0;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            C(a, b) = sq[static_cast<std::size_t>(k)];
            C(b, a) = sq[static_cast<std::size_t>(k)];
            ++k;
        }
        C(a, 4) = 1.0;
        C(4, a) = 1.0;
    }
    return C.determinant();
}

std::string to_string(Realizability r) {
    switch (r) {
        case Realizability::PlanarRealizable: return "PlanarRealizable";
        case Realizability::SpatialRealizable: return "SpatialRealizable";
        case Realizability::Infeasible: return "Infeasible";
    }
    return "?";
}

double default_cm_tolerance(const DistanceSpec& spec) {
    // Cayley-Menger entries scale as length^2, the determinant as length^6.
    const double d2 = spec.max_sq_distance();
    return 1e-7 * d2 * d2 * d2;
}

Realizability classify_realizability(const DistanceSpec& spec, double tol_cm) {
    if (!spec.graph().is_complete_k4())
        throw std::invalid_argument("classify_realizability: spec must be a complete K4");
    if (tol_cm <= 0.0) tol_cm = default_cm_tolerance(spec);

    static constexpr std::array<std::array<int, 3>, 4> kFaces{
        {{1, 2, 3}, {1, 2, 4}, {1, 3, 4}, {2, 3, 4}}};
    for (const auto& face : kFaces)
        if (!triangle_feasible(spec, face)) return Realizability::Infeasible;

    const double det = cayley_menger_det(spec);
    if (std::abs(det) <= tol_cm) return Realizability::PlanarRealizable;
    return det > 0.0 ? Realizability::SpatialRealizable : Realizability::Infeasible;
}

DistanceSpec lift_distances(const DistanceSpec& spec2d, double alpha, int virtual_vertex) {
    if (!(alpha > 0.0)) throw std::invalid_argument("lift_distances: alpha must be positive");
    if (virtual_vertex < 1 || virtual_vertex > spec2d.graph().num_vertices())
        throw std::invalid_argument("lift_distances: virtual vertex out of range");
    std::vector<std::pair<Edge, double>> values;
    values.reserve(spec2d.graph().edges().size());
    const double a2 = alpha * alpha;
    for (const Edge& e : spec2d.graph().edges()) {
        double d2 = spec2d.sq_distance(e.i, e.j);
        if (e.i == virtual_vertex || e.j == virtual_vertex) d2 += a2;
        values.emplace_back(e, d2);
    }
    return DistanceSpec(spec2d.graph(), std::move(values), 3);
}

namespace {

// Place p on the x-axis baseline between the origin and (d_base, 0) given its
// squared distances to both anchors. Returns (x, y^2).
std::pair<double, double> trilaterate_from_baseline(double d2_to_origin, double d2_to_second,
                                                    double d_base) {
    const double x = (d_base * d_base + d2_to_origin - d2_to_second) / (2.0 * d_base);
    const double y2 = d2_to_origin - x * x;
    return {x, y2};
}

}  // namespace

Realization embed_k4_planar(const DistanceSpec& spec) {
    if (classify_realizability(spec) != Realizability::PlanarRealizable)
        throw std::invalid_argument("embed_k4_planar: spec is not planar-realizable");

    const double d12 = std::sqrt(spec.sq_distance(1, 2));
    Eigen::VectorXd coords(8);
    coords.setZero();
    coords[2] = d12;  // vertex 2 on the positive x-axis

    auto clamp_y2 = [](double y2) { return y2 < 0.0 ? 0.0 : y2; };

    const auto [x3, y3sq] = trilaterate_from_baseline(spec.sq_distance(1, 3), spec.sq_distance(2, 3), d12);
    coords[4] = x3;
    coords[5] = std::sqrt(clamp_y2(y3sq));  // upper half-plane

    const auto [x4, y4sq] = trilaterate_from_baseline(spec.sq_distance(1, 4), spec.sq_distance(2, 4), d12);
    const double y4 = std::sqrt(clamp_y2(y4sq));
    const double d34_target = spec.sq_distance(3, 4);
    auto residual34 = [&](double y) {
        const double dx = x4 - x3;
        const double dy = y - coords[5];
        return std::abs(dx * dx + dy * dy - d34_target);
    };
    coords[6] = x4;
    // Reflection ambiguity: pick the root matching d_34; ties keep y >= 0.
    coords[7] = residual34(y4) <= residual34(-y4) ? y4 : -y4;

    Realization r(std::move(coords), 2);
    const double scale = spec.max_sq_distance();
    for (const Edge& e : spec.graph().edges()) {
        const double err = std::abs(sq_dist(r, e.i, e.j) - spec.sq_distance(e.i, e.j));
        if (err > 1e-9 * scale)
            throw EmbeddingError("embed_k4_planar: trilateration residual above tolerance on edge (" +
                                 std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    }
    return r;
}

Realization lift_locked_to_3d(const LockedState& state) {
    const int n = state.planar.num_vertices;
    Eigen::VectorXd coords(3 * n);
    for (int v = 0; v < n; ++v) {
        coords[3 * v + 0] = state.planar.coords[2 * v + 0];
        coords[3 * v + 1] = state.planar.coords[2 * v + 1];
        coords[3 * v + 2] = (v + 1 == state.virtual_vertex) ? state.virtual_coord : 0.0;
    }
    return Realization(std::move(coords), 3);
}

bool are_congruent(const Realization& a, const Realization& b, double tol) {
    if (a.num_vertices != b.num_vertices)
        throw std::invalid_argument("are_congruent: vertex count mismatch");
    for (int i = 1; i <= a.num_vertices; ++i)
        for (int j = i + 1; j <= a.num_vertices; ++j)
            if (std::abs(std::sqrt(sq_dist(a, i, j)) - std::sqrt(sq_dist(b, i, j))) > tol)
                return false;
    return true;
}

}  // namespace lockform
