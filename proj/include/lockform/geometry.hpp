// Formation graphs, realizations, congruence, and distance-geometry
// realizability checks (triangle inequalities, Cayley-Menger), plus the
// distance lift that turns a planar four-agent target into a tetrahedral one.
//
// Agent labels are 1-based throughout the public API. Distances are stored
// squared; square roots are taken only where a plain distance is needed.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lockform {

/// Undirected edge between 1-based vertices, normalized so that i < j.
struct Edge {
    int i = 0;
    int j = 0;

    Edge() = default;
    Edge(int a, int b) : i(std::min(a, b)), j(std::max(a, b)) {
        if (a == b || a < 1 || b < 1)
            throw std::invalid_argument("Edge: endpoints must be distinct and >= 1");
    }

    auto operator<=>(const Edge&) const = default;
};

/// Vertex set {1..N} plus an undirected edge set.
class FormationGraph {
public:
    FormationGraph(int num_vertices, std::vector<Edge> edges);

    int num_vertices() const { return num_vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    bool has_edge(int a, int b) const;
    /// Index of edge (a,b) in edges(), or -1 if absent.
    int edge_index(int a, int b) const;
    bool is_complete() const;
    bool is_complete_k4() const { return num_vertices_ == 4 && is_complete(); }

    bool operator==(const FormationGraph&) const = default;

private:
    int num_vertices_;
    std::vector<Edge> edges_;  // sorted lexicographically, no duplicates
};

/// Complete graph on n vertices (n >= 2), edges (i,j) for all i < j.
FormationGraph complete_graph(int n);

/// Desired squared inter-agent distances attached to a graph.
class DistanceSpec {
public:
    DistanceSpec(FormationGraph graph, std::vector<std::pair<Edge, double>> sq_distances,
                 int ambient_dim);

    /// K4 spec from the six squared distances in edge order
    /// (1,2),(1,3),(1,4),(2,3),(2,4),(3,4).
    static DistanceSpec k4(const std::array<double, 6>& sq, int ambient_dim);

    const FormationGraph& graph() const { return graph_; }
    int ambient_dim() const { return ambient_dim_; }

    /// Squared distance for edge (a,b); throws if the edge is absent.
    double sq_distance(int a, int b) const;
    /// Squared distances parallel to graph().edges().
    const std::vector<double>& sq_distances() const { return sq_; }
    double max_sq_distance() const;

    bool operator==(const DistanceSpec&) const = default;

private:
    FormationGraph graph_;
    std::vector<double> sq_;  // parallel to graph_.edges()
    int ambient_dim_;
};

/// Flat coordinate vector of all agents in a given ambient dimension.
struct Realization {
    Eigen::VectorXd coords;  // length num_vertices * dim, vertex-major
    int dim = 2;
    int num_vertices = 0;

    Realization() = default;
    Realization(Eigen::VectorXd c, int dimension);

    /// Position of 1-based vertex v.
    Eigen::VectorXd point(int v) const;
};

/// Squared distance between vertices a and b of r, accumulated coordinate by
/// coordinate. All distance computations in the library go through this so
/// that algebraically-identical quantities compare bit-for-bit.
double sq_dist(const Realization& r, int a, int b);

/// Spec whose squared distances are measured off an existing realization.
DistanceSpec spec_from_realization(const FormationGraph& graph, const Realization& r);

/// Planar realization of N agents plus one virtual scalar coordinate carried
/// by a designated vertex (treated as that vertex's out-of-plane coordinate).
struct LockedState {
    Realization planar;    // dim == 2
    int virtual_vertex = 0;  // 1-based
    double virtual_coord = 0.0;

    LockedState() = default;
    LockedState(Realization planar_realization, int vertex, double coord);
};

/// true iff the three pairwise distances among the triple satisfy all three
/// triangle inequalities (non-strict). All three edges must exist in spec.
bool triangle_feasible(const DistanceSpec& spec, const std::array<int, 3>& triple);

/// Determinant of the 5x5 bordered squared-distance matrix of a K4 spec
/// (zeros on the diagonal, d_ij^2 off-diagonal, border of ones).
double cayley_menger_det(const DistanceSpec& spec);

/// Same determinant from the six squared distances in edge order
/// (1,2),(1,3),(1,4),(2,3),(2,4),(3,4); accepts zero entries.
double cayley_menger_det(const std::array<double, 6>& sq);

enum class Realizability { PlanarRealizable, SpatialRealizable, Infeasible };

std::string to_string(Realizability r);

/// Default |det C| tolerance for the planar/spatial decision; scales as the
/// sixth power of the largest distance.
double default_cm_tolerance(const DistanceSpec& spec);

/// Decide whether a K4 spec is realizable in the plane, only in space, or not
/// at all. tol_cm <= 0 selects default_cm_tolerance(spec).
Realizability classify_realizability(const DistanceSpec& spec, double tol_cm = -1.0);

/// Lift a planar spec to a spatial one: edges incident to virtual_vertex get
/// D^2 = d^2 + alpha^2, all others keep d^2.
DistanceSpec lift_distances(const DistanceSpec& spec2d, double alpha, int virtual_vertex);

/// Raised by embed_k4_planar when trilateration residuals exceed tolerance.
struct EmbeddingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic planar embedding of a PlanarRealizable K4 spec: vertex 1 at
/// the origin, vertex 2 on the positive x-axis, vertex 3 in the upper
/// half-plane, vertex 4 trilaterated with the sign resolved against d_34.
Realization embed_k4_planar(const DistanceSpec& spec);

/// Spatial realization of a locked state: z = 0 everywhere except the virtual
/// vertex, which gets z = virtual_coord.
Realization lift_locked_to_3d(const LockedState& state);

/// true iff inter-vertex distances agree within tol for ALL vertex pairs.
/// Realizations may live in different ambient dimensions.
bool are_congruent(const Realization& a, const Realization& b, double tol);

}  // namespace lockform
