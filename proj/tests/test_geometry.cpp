#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lockform/geometry.hpp"

using namespace lockform;

namespace {

// Four-agent planar targets used across the suite: squared distances of the
// realization [0,0, 4,0, 3,4, 1,3].
const std::array<double, 6> kQuadSq{16.0, 25.0, 10.0, 17.0, 18.0, 5.0};
const std::array<double, 6> kQuadLiftedSq{16.0, 25.0, 11.0, 17.0, 19.0, 6.0};

Realization quad_realization() {
    Eigen::VectorXd p(8);
    p << 0, 0, 4, 0, 3, 4, 1, 3;
    return Realization(p, 2);
}

// Independent determinant oracle: cofactor expansion along the first row.
double det_recursive(const std::vector<std::vector<double>>& m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    double det = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::vector<double>> minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<double> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(m[r][k]);
            minor.push_back(std::move(row));
        }
        det += ((c % 2 == 0) ? 1.0 : -1.0) * m[0][c] * det_recursive(minor);
    }
    return det;
}

double cm_det_oracle(const std::array<double, 6>& sq) {
    std::vector<std::vector<double>> m(5, std::vector<double>(5, 0.0));
    int k = 0;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = sq[static_cast<std::size_t>(k)];
            m[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = sq[static_cast<std::size_t>(k)];
            ++k;
        }
        m[static_cast<std::size_t>(a)][4] = 1.0;
        m[4][static_cast<std::size_t>(a)] = 1.0;
    }
    return det_recursive(m);
}

Realization random_planar_quad(std::mt19937_64& rng, double spread = 5.0) {
    std::uniform_real_distribution<double> u(-spread, spread);
    for (;;) {
        Eigen::VectorXd p(8);
        for (int k = 0; k < 8; ++k) p[k] = u(rng);
        Eigen::MatrixXd pos(4, 2);
        for (int v = 0; v < 4; ++v) pos.row(v) = p.segment(2 * v, 2).transpose();
        pos.rowwise() -= pos.colwise().mean();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pos);
        if (svd.singularValues()(1) > 0.5) return Realization(p, 2);
    }
}

}  // namespace

TEST_CASE("complete_graph produces all pairs") {
    const FormationGraph k4 = complete_graph(4);
    CHECK(k4.num_vertices() == 4);
    REQUIRE(k4.num_edges() == 6);
    const std::vector<Edge> expected{{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
    CHECK(k4.edges() == expected);

    CHECK(complete_graph(2).num_edges() == 1);
    CHECK(complete_graph(2).edges().front() == Edge(1, 2));
    CHECK(complete_graph(5).num_edges() == 10);
    CHECK_THROWS_AS(complete_graph(1), std::invalid_argument);
}

TEST_CASE("graph invariants") {
    CHECK_THROWS_AS(Edge(2, 2), std::invalid_argument);
    CHECK_THROWS_AS(Edge(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(FormationGraph(3, {Edge(1, 2), Edge(2, 1)}), std::invalid_argument);
    CHECK_THROWS_AS(FormationGraph(3, {Edge(1, 4)}), std::invalid_argument);
    const FormationGraph g(3, {Edge(1, 2), Edge(2, 3)});
    CHECK(g.has_edge(2, 1));
    CHECK(!g.has_edge(1, 3));
    CHECK(g.edge_index(2, 3) == 1);
}

TEST_CASE("distance spec validation") {
    const FormationGraph g = complete_graph(3);
    CHECK_THROWS_AS(DistanceSpec(g, {{Edge(1, 2), 1.0}, {Edge(1, 3), 1.0}, {Edge(2, 3), 0.0}}, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(DistanceSpec(g, {{Edge(1, 2), 1.0}, {Edge(1, 3), 1.0}}, 2), std::invalid_argument);
    CHECK_THROWS_AS(DistanceSpec(g, {{Edge(1, 2), 1.0}, {Edge(1, 2), 2.0}, {Edge(2, 3), 1.0}}, 2),
                    std::invalid_argument);
    const DistanceSpec spec = DistanceSpec::k4(kQuadSq, 2);
    CHECK(spec.sq_distance(1, 2) == 16.0);
    CHECK(spec.sq_distance(4, 3) == 5.0);
    CHECK(spec.max_sq_distance() == 25.0);
}

TEST_CASE("triangle feasibility") {
    const DistanceSpec spec = DistanceSpec::k4(kQuadSq, 2);
    CHECK(triangle_feasible(spec, {1, 2, 3}));  // 4 + sqrt(17) > 5

    const DistanceSpec bad = DistanceSpec::k4({1, 1, 1, 9, 1, 1}, 2);  // d23^2 = 9
    CHECK(!triangle_feasible(bad, {1, 2, 3}));  // 1 + 1 < 3

    const DistanceSpec boundary = DistanceSpec::k4({1, 1, 1, 4, 1, 1}, 2);
    CHECK(triangle_feasible(boundary, {1, 2, 3}));  // 1 + 1 = 2, non-strict

    const DistanceSpec triangle_only(FormationGraph(4, {Edge(1, 2), Edge(1, 3), Edge(2, 3)}),
                                     {{Edge(1, 2), 1.0}, {Edge(1, 3), 1.0}, {Edge(2, 3), 1.0}}, 2);
    CHECK_THROWS_AS(triangle_feasible(triangle_only, {1, 2, 4}), std::invalid_argument);
}

TEST_CASE("cayley-menger determinant") {
    CHECK(cayley_menger_det(std::array<double, 6>{0, 0, 0, 0, 0, 0}) == 0.0);

    // Planar spec: the bordered determinant must vanish.
    const double det_planar = cayley_menger_det(DistanceSpec::k4(kQuadSq, 2));
    const double scale = 25.0 * 25.0 * 25.0;
    CHECK(std::abs(det_planar) <= 1e-9 * scale);
    CHECK(std::abs(cm_det_oracle(kQuadSq)) <= 1e-9 * scale);

    // Lifted spec: 288 * volume^2 with base area 8 and apex height 1.
    const double volume = 8.0 / 3.0;
    CHECK(288.0 * volume * volume == doctest::Approx(2048.0).epsilon(1e-14));
    CHECK(cayley_menger_det(DistanceSpec::k4(kQuadLiftedSq, 3)) == doctest::Approx(2048.0).epsilon(1e-12));
    CHECK(cm_det_oracle(kQuadLiftedSq) == doctest::Approx(2048.0).epsilon(1e-12));

    const DistanceSpec k5(complete_graph(5),
                          {{Edge(1, 2), 1.0}, {Edge(1, 3), 1.0}, {Edge(1, 4), 1.0}, {Edge(1, 5), 1.0},
                           {Edge(2, 3), 1.0}, {Edge(2, 4), 1.0}, {Edge(2, 5), 1.0}, {Edge(3, 4), 1.0},
                           {Edge(3, 5), 1.0}, {Edge(4, 5), 1.0}},
                          2);
    CHECK_THROWS_AS(cayley_menger_det(k5), std::invalid_argument);
}

TEST_CASE("realizability classification") {
    CHECK(classify_realizability(DistanceSpec::k4(kQuadSq, 2)) == Realizability::PlanarRealizable);
    CHECK(classify_realizability(DistanceSpec::k4(kQuadLiftedSq, 3)) == Realizability::SpatialRealizable);
    CHECK(classify_realizability(DistanceSpec::k4({1, 1, 9, 1, 1, 1}, 2)) == Realizability::Infeasible);
}

TEST_CASE("distance lifting") {
    const DistanceSpec planar = DistanceSpec::k4(kQuadSq, 2);

    const DistanceSpec lifted = lift_distances(planar, 1.0, 4);
    CHECK(lifted.ambient_dim() == 3);
    for (int k = 0; k < 6; ++k)
        CHECK(lifted.sq_distances()[static_cast<std::size_t>(k)] ==
              kQuadLiftedSq[static_cast<std::size_t>(k)]);

    const DistanceSpec lifted2 = lift_distances(planar, 2.0, 4);
    CHECK(lifted2.sq_distance(1, 4) == 14.0);
    CHECK(lifted2.sq_distance(2, 4) == 22.0);
    CHECK(lifted2.sq_distance(3, 4) == 9.0);
    CHECK(lifted2.sq_distance(1, 2) == 16.0);

    CHECK_THROWS_AS(lift_distances(planar, 0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(lift_distances(planar, -1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(lift_distances(planar, 1.0, 9), std::invalid_argument);
}

TEST_CASE("lifting twice composes as squared sum") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Realization cloud = random_planar_quad(rng);
        const DistanceSpec spec = spec_from_realization(complete_graph(4), cloud);
        const double a = 0.5 + rep * 0.1, b = 1.3;
        DistanceSpec twice = lift_distances(spec, a, 4);
        // Second application works on the already-lifted values.
        twice = DistanceSpec(twice.graph(),
                             [&] {
                                 std::vector<std::pair<Edge, double>> v;
                                 for (const Edge& e : twice.graph().edges()) {
                                     double d2 = twice.sq_distance(e.i, e.j);
                                     if (e.i == 4 || e.j == 4) d2 += b * b;
                                     v.emplace_back(e, d2);
                                 }
                                 return v;
                             }(),
                             3);
        const DistanceSpec once = lift_distances(spec, std::sqrt(a * a + b * b), 4);
        for (const Edge& e : spec.graph().edges())
            CHECK(twice.sq_distance(e.i, e.j) ==
                  doctest::Approx(once.sq_distance(e.i, e.j)).epsilon(1e-14));
    }
}

TEST_CASE("planar embedding hits the canonical gauge") {
    const Realization r = embed_k4_planar(DistanceSpec::k4(kQuadSq, 2));
    const Realization expected = quad_realization();
    for (int k = 0; k < 8; ++k) CHECK(r.coords[k] == doctest::Approx(expected.coords[k]).epsilon(1e-12));
    CHECK(are_congruent(r, expected, 1e-9));
}

TEST_CASE("planar embedding places an equilateral face") {
    Eigen::VectorXd p(8);
    p << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2.0, 0.5, 0.2;
    const DistanceSpec spec = spec_from_realization(complete_graph(4), Realization(p, 2));
    const Realization r = embed_k4_planar(spec);
    CHECK(r.coords[4] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.coords[5] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("planar embedding round-trips random clouds") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 50; ++rep) {
        const Realization cloud = random_planar_quad(rng);
        const DistanceSpec spec = spec_from_realization(complete_graph(4), cloud);
        REQUIRE(classify_realizability(spec) == Realizability::PlanarRealizable);
        const Realization r = embed_k4_planar(spec);
        for (const Edge& e : spec.graph().edges()) {
            const double got = sq_dist(r, e.i, e.j);
            const double want = spec.sq_distance(e.i, e.j);
            CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, want));
        }
        CHECK(are_congruent(r, cloud, 1e-7));
    }
}

TEST_CASE("embedding rejects non-planar specs") {
    CHECK_THROWS_AS(embed_k4_planar(DistanceSpec::k4(kQuadLiftedSq, 2)), std::invalid_argument);
}

TEST_CASE("embedding flags numerically inconsistent specs") {
    // A perturbation of d_34^2 small enough to stay inside the det-C tolerance
    // but far above the embedding residual tolerance. Vertex 4 is placed from
    // edges to vertices 1 and 2, so the inconsistency lands on edge (3,4).
    std::array<double, 6> sq = kQuadSq;
    sq[5] += 1e-6;
    const DistanceSpec spec = DistanceSpec::k4(sq, 2);
    REQUIRE(classify_realizability(spec) == Realizability::PlanarRealizable);
    CHECK_THROWS_AS(embed_k4_planar(spec), EmbeddingError);
}

TEST_CASE("lifted specs of nondegenerate planar clouds are spatial") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        const Realization cloud = random_planar_quad(rng);
        const DistanceSpec spec = spec_from_realization(complete_graph(4), cloud);
        const DistanceSpec lifted = lift_distances(spec, 0.25 + 0.1 * rep, 4);
        CHECK(cayley_menger_det(lifted) > default_cm_tolerance(lifted));
        CHECK(classify_realizability(lifted) == Realizability::SpatialRealizable);
    }
}

TEST_CASE("locked state lifts to a spatial realization") {
    Eigen::VectorXd p(8);
    p << 0, 0, 4, 0, 3, 4, 1, 3;
    const LockedState q(Realization(p, 2), 4, 1.0);
    const Realization lifted = lift_locked_to_3d(q);
    CHECK(lifted.dim == 3);
    CHECK(lifted.point(4)[0] == 1.0);
    CHECK(lifted.point(4)[1] == 3.0);
    CHECK(lifted.point(4)[2] == 1.0);
    for (int v = 1; v <= 3; ++v) CHECK(lifted.point(v)[2] == 0.0);

    const LockedState flat(Realization(p, 2), 4, 0.0);
    const Realization flat3 = lift_locked_to_3d(flat);
    for (int v = 1; v <= 4; ++v) CHECK(flat3.point(v)[2] == 0.0);
}

TEST_CASE("lift preserves the extended congruence identity exactly") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd p(8);
        for (int k = 0; k < 8; ++k) p[k] = u(rng);
        const double z = u(rng);
        const LockedState q(Realization(p, 2), 4, z);
        const Realization lifted = lift_locked_to_3d(q);
        for (int i = 1; i <= 3; ++i) {
            const double lhs = sq_dist(lifted, i, 4);
            const double rhs = sq_dist(q.planar, i, 4) + z * z;
            CHECK(lhs == rhs);  // identical arithmetic, bit-for-bit
        }
    }
}

TEST_CASE("congruence under rigid motions") {
    const Realization base = quad_realization();

    Eigen::Matrix2d rot90;
    rot90 << 0, -1, 1, 0;
    Eigen::VectorXd moved(8), mirrored(8);
    for (int v = 0; v < 4; ++v) {
        const Eigen::Vector2d p = base.coords.segment(2 * v, 2);
        moved.segment(2 * v, 2) = rot90 * p + Eigen::Vector2d(5.0, -2.0);
        mirrored.segment(2 * v, 2) = Eigen::Vector2d(-p.x(), p.y());
    }
    CHECK(are_congruent(base, Realization(moved, 2), 1e-9));
    CHECK(are_congruent(base, Realization(mirrored, 2), 1e-9));

    Eigen::VectorXd stretched = base.coords;
    stretched[2] = 5.0;  // vertex 2 from (4,0) to (5,0)
    CHECK(!are_congruent(base, Realization(stretched, 2), 1e-4));

    Eigen::VectorXd tri(6);
    tri << 0, 0, 1, 0, 0, 1;
    CHECK_THROWS_AS(are_congruent(base, Realization(tri, 2), 1e-9), std::invalid_argument);
}

TEST_CASE("congruence is an equivalence at zero tolerance") {
    const Realization a = quad_realization();
    const Realization b = a;
    const Realization c = b;
    CHECK(are_congruent(a, a, 0.0));
    CHECK(are_congruent(a, b, 0.0) == are_congruent(b, a, 0.0));
    CHECK((are_congruent(a, b, 0.0) && are_congruent(b, c, 0.0)) ? are_congruent(a, c, 0.0) : true);
}

TEST_CASE("congruence across ambient dimensions") {
    // A planar square and the same square embedded in 3-D with zero z.
    Eigen::VectorXd sq2(8), sq3(12);
    sq2 << 0, 0, 1, 0, 1, 1, 0, 1;
    sq3 << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
    CHECK(are_congruent(Realization(sq2, 2), Realization(sq3, 3), 1e-12));
}
