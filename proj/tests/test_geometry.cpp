#include "charts.hpp"
#include "fixtures.hpp"
#include "formheat/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace formheat;
using formheat::testing::ChartPair;
using formheat::testing::random_chart_pair;
using formheat::testing::random_regular;
using formheat::testing::SquareOptions;
using formheat::testing::square_mesh;

namespace {

const char* kUnitSquare = R"(# unit square
4 2 4 0
0 0
1 0
1 1
0 1
0 1 2 0
0 2 3 0
0 1 dirichlet
1 2 dirichlet
2 3 dirichlet
3 0 dirichlet
)";

Mesh parse(const std::string& text) {
    std::istringstream in(text);
    return parse_mesh(in);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(MeshLoad, UnitSquare) {
    const Mesh m = parse(kUnitSquare);
    EXPECT_EQ(m.num_triangles(), 2u);
    EXPECT_DOUBLE_EQ(m.label_length(EdgeLabel::dirichlet), 4.0);
    EXPECT_DOUBLE_EQ(m.area(), 1.0);
}

TEST(MeshLoad, IndexOutOfRange) {
    std::string text = kUnitSquare;
    text.replace(text.find("3 0 dirichlet"), 13, "99 0 dirichlet");
    const std::string msg = error_of(text);
    EXPECT_NE(msg.find("vertex index out of range"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 12"), std::string::npos) << msg;
}

TEST(MeshLoad, ParseErrorsCarryLineNumbers) {
    std::string bad_label = kUnitSquare;
    bad_label.replace(bad_label.find("1 2 dirichlet"), 13, "1 2 robin");
    EXPECT_NE(error_of(bad_label).find("line 10"), std::string::npos);
    EXPECT_NE(error_of("4 2 4\n").find("line 1"), std::string::npos);
    std::string trailing = kUnitSquare;
    trailing.replace(trailing.find("0 1 2 0"), 7, "0 1 2 0 7");
    EXPECT_NE(error_of(trailing).find("trailing token"), std::string::npos);
}

TEST(MeshLoad, MissingFile) {
    try {
        load_mesh("/nonexistent/none.mesh");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("mesh: file not found"), std::string::npos);
    }
}

TEST(MeshLoad, InvariantViolationsNamed) {
    // Missing boundary label on one edge.
    std::string unlabelled = "4 2 3 0\n0 0\n1 0\n1 1\n0 1\n0 1 2 0\n0 2 3 0\n0 1 dirichlet\n1 2 dirichlet\n2 3 dirichlet\n";
    EXPECT_NE(error_of(unlabelled).find("boundary"), std::string::npos) << error_of(unlabelled);
    // Clockwise triangle.
    std::string clockwise = kUnitSquare;
    clockwise.replace(clockwise.find("0 1 2 0"), 7, "0 2 1 0");
    EXPECT_FALSE(error_of(clockwise).empty());
    // Interface edge on the boundary (adjacent to one triangle only).
    std::string iface = "4 2 4 1\n0 0\n1 0\n1 1\n0 1\n0 1 2 0\n0 2 3 0\n0 1 neumann\n1 2 neumann\n2 3 neumann\n3 0 neumann\n0 1\n";
    EXPECT_NE(error_of(iface).find("interface"), std::string::npos) << error_of(iface);
}

TEST(MeshLoad, InterfaceSquareAdjacency) {
    SquareOptions o;
    o.n = 2;
    o.interface_row = 1;
    const Mesh m = square_mesh(o);
    EXPECT_EQ(m.num_triangles(), 8u);
    ASSERT_EQ(m.interface_edges().size(), 2u);
    // Brute-force adjacency count.
    for (const auto& e : m.interface_edges()) {
        int count = 0;
        for (const auto& t : m.triangles()) {
            int hits = 0;
            for (int v : t.v) hits += (v == e.a || v == e.b);
            count += hits == 2;
        }
        EXPECT_EQ(count, 2);
    }
    EXPECT_DOUBLE_EQ(m.interface_length(), 1.0);
}

TEST(MeshLoad, RoundTripAndRefinement) {
    const Mesh m = formheat::testing::interface_square(4, EdgeLabel::dirichlet, EdgeLabel::neumann,
                                                       EdgeLabel::dynamic, EdgeLabel::neumann);
    std::ostringstream out;
    write_mesh(out, m);
    const Mesh back = parse(out.str());
    EXPECT_EQ(back.num_vertices(), m.num_vertices());
    EXPECT_EQ(back.boundary_edges().size(), m.boundary_edges().size());

    const Mesh r = refine_uniform(m);
    EXPECT_EQ(r.num_triangles(), 4 * m.num_triangles());
    EXPECT_NEAR(r.area(), 1.0, 1e-14);
    EXPECT_NEAR(r.label_length(EdgeLabel::dynamic), 1.0, 1e-14);
    EXPECT_NEAR(r.label_length(EdgeLabel::dirichlet), 1.0, 1e-14);
    EXPECT_EQ(r.interface_edges().size(), 2 * m.interface_edges().size());
    EXPECT_NEAR(r.max_diameter(), m.max_diameter() / 2, 1e-14);
}

TEST(MeshInvariants, AreaMatchesBoundaryPolygon) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    for (int trial = 0; trial < 5; ++trial) {
        SquareOptions o;
        o.n = 6;
        Mesh m = square_mesh(o);
        // Perturb interior vertices; the mesh stays valid for small moves.
        std::vector<Vec2> v = m.vertices();
        const auto boundary = m.boundary_vertices();
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!boundary.count(static_cast<int>(i))) v[i] += Vec2(jitter(rng), jitter(rng)) / o.n;
        const Mesh p = Mesh::create(v, m.triangles(), m.boundary_edges(), m.interface_edges());
        EXPECT_NEAR(p.area(), p.boundary_polygon_area(), 1e-12 * p.area());
    }
}

TEST(ChartMetric, Examples) {
    const SurfaceChart flat(Mat2::Identity(), Vec2::Zero(), PiecewiseLinear({0, 1}, {0, 0}));
    EXPECT_DOUBLE_EQ(chart_metric(flat, 0.4).G, 1.0);
    const SurfaceChart diag(Mat2::Identity(), Vec2::Zero(), PiecewiseLinear({0, 1}, {0, 1}));
    EXPECT_DOUBLE_EQ(chart_metric(diag, 0.3).G, 2.0);
    const SurfaceChart steep(Mat2::Identity(), Vec2::Zero(), PiecewiseLinear({0, 1, 2}, {0, 0, 3}));
    const auto m = chart_metric(steep, 1.5);
    EXPECT_DOUBLE_EQ(m.G, 10.0);
    EXPECT_DOUBLE_EQ(m.Ginv, 0.1);
    EXPECT_DOUBLE_EQ(m.sqrtG, std::sqrt(10.0));
    EXPECT_THROW(chart_metric(steep, 1.0), GeometryError);
    EXPECT_THROW(chart_metric(steep, 0.0), GeometryError);
}

TEST(ChartMetric, RejectsNonOrthogonalQ) {
    Mat2 q;
    q << 1, 0.1, 0, 1;
    EXPECT_THROW(SurfaceChart(q, Vec2::Zero(), PiecewiseLinear({0, 1}, {0, 0})), InvariantError);
}

namespace {

SurfaceMesh single_edge(const Vec2& a, const Vec2& b) {
    SurfaceMesh s;
    s.nodes = {0, 1};
    s.points = {a, b};
    s.edges = {{0, 1}};
    return s;
}

} // namespace

TEST(SurfaceGradient, Examples) {
    {
        const std::vector<double> u{0, 1};
        const Vec2 g = surface_gradient_p1(single_edge({0, 0}, {1, 0}), u, 0);
        EXPECT_DOUBLE_EQ(g.x(), 1.0);
        EXPECT_DOUBLE_EQ(g.y(), 0.0);
    }
    {
        const std::vector<double> u{0, 1};
        const Vec2 g = surface_gradient_p1(single_edge({0, 0}, {1, 1}), u, 0);
        EXPECT_NEAR(g.x(), 0.5, 1e-15);
        EXPECT_NEAR(g.y(), 0.5, 1e-15);
    }
    {
        const std::vector<double> u{3, 3};
        const Vec2 g = surface_gradient_p1(single_edge({0, 0}, {2, 0}), u, 0);
        EXPECT_EQ(g, Vec2::Zero());
    }
    const std::vector<double> u{0, 1};
    EXPECT_THROW(surface_gradient_p1(single_edge({1, 1}, {1, 1}), u, 0), GeometryError);
}

TEST(SurfaceGradient, Tangency) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 100; ++i) {
        const Vec2 a(U(rng), U(rng)), b(U(rng), U(rng));
        const std::vector<double> u{U(rng), U(rng)};
        const Vec2 g = surface_gradient_p1(single_edge(a, b), u, 0);
        const Vec2 t = (b - a).normalized();
        const Vec2 normal(-t.y(), t.x());
        EXPECT_NEAR(g.dot(normal), 0.0, 1e-14 * (1 + g.norm()));
    }
}

TEST(Distance, Examples) {
    EXPECT_DOUBLE_EQ(distance_to_submanifold(Submanifold::point({0, 0}), {3, 4}), 5.0);
    const auto seg = Submanifold::polyline({{0, 0}, {1, 0}});
    EXPECT_DOUBLE_EQ(distance_to_submanifold(seg, {0.5, 0.2}), 0.2);
    EXPECT_DOUBLE_EQ(distance_to_submanifold(seg, {2, 1}), std::numbers::sqrt2);
    EXPECT_THROW(distance_to_submanifold(Submanifold::points({}), {0, 0}), InvariantError);
}

TEST(Distance, SegmentToSegment) {
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0}, {1, 0}, {0.5, -1}, {0.5, 1}), 0.0);
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0}, {1, 0}, {0, 2}, {1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0}, {1, 0}, {2, 1}, {3, 1}), std::numbers::sqrt2);
}

TEST(ChartProperties, TransitionMapIdentity) {
    std::mt19937 rng(11);
    for (int pair = 0; pair < 10; ++pair) {
        const ChartPair cp = random_chart_pair(rng);
        for (int i = 0; i < 100; ++i) {
            const double ya = random_regular(rng, cp.a);
            const double yb = cp.b.param(cp.a.map(ya));
            const double phi = transition_derivative(cp.a, cp.b, ya);
            const double lhs = chart_metric(cp.a, ya).G;
            const double rhs = phi * chart_metric(cp.b, yb).G * phi;
            EXPECT_NEAR(lhs, rhs, 1e-10 * lhs);
        }
    }
}

TEST(ChartProperties, GradientIndependentOfChart) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int pair = 0; pair < 10; ++pair) {
        const ChartPair cp = random_chart_pair(rng);
        std::vector<double> values;
        for (std::size_t i = 0; i < cp.pts.size(); ++i) values.push_back(U(rng));
        for (int i = 0; i < 100; ++i) {
            const double ya = random_regular(rng, cp.a);
            const double yb = cp.b.param(cp.a.map(ya));
            const Vec2 ga = chart_surface_gradient(cp.a, values, ya);
            const Vec2 gb = chart_surface_gradient(cp.b, values, yb);
            EXPECT_LE((ga - gb).norm(), 1e-10 * std::max(1.0, ga.norm()));
        }
    }
}

TEST(SurfaceMeshBuild, InterfaceChain) {
    const Mesh m = formheat::testing::interface_square(4, EdgeLabel::dirichlet, EdgeLabel::neumann,
                                                       EdgeLabel::dynamic, EdgeLabel::neumann);
    const SurfaceMesh sigma = build_surface_mesh(m, SurfaceKind::interface);
    EXPECT_EQ(sigma.size(), 5u);
    EXPECT_NEAR(sigma.length(), 1.0, 1e-15);
    ASSERT_EQ(sigma.chains.size(), 1u);
    EXPECT_EQ(sigma.chains[0].size(), 5u);
    ASSERT_FALSE(sigma.charts.empty());
    // Nodes are exactly the vertices of interface edges.
    EXPECT_EQ(std::set<int>(sigma.nodes.begin(), sigma.nodes.end()), m.interface_vertices());

    const SurfaceMesh gd = build_surface_mesh(m, SurfaceKind::dynamic);
    EXPECT_EQ(gd.size(), 5u);
    EXPECT_NEAR(gd.length(), 1.0, 1e-15);
}

TEST(SurfaceMeshBuild, ClosedLoopCoveredByOverlappingCharts) {
    SquareOptions o;
    o.n = 3;
    o.bottom = o.right = o.top = o.left = EdgeLabel::dynamic;
    const Mesh m = square_mesh(o);
    const SurfaceMesh gd = build_surface_mesh(m, SurfaceKind::dynamic);
    EXPECT_EQ(gd.size(), 12u);
    EXPECT_NEAR(gd.length(), 4.0, 1e-14);
    ASSERT_EQ(gd.chains.size(), 1u);
    EXPECT_EQ(gd.chains[0].front(), gd.chains[0].back());
    // Every edge is the image of some chart piece.
    for (const auto& [a, b] : gd.edges) {
        bool covered = false;
        for (const auto& patch : gd.charts)
            for (std::size_t i = 0; i + 1 < patch.nodes.size(); ++i)
                covered |= (patch.nodes[i] == a && patch.nodes[i + 1] == b) ||
                           (patch.nodes[i] == b && patch.nodes[i + 1] == a);
        EXPECT_TRUE(covered);
    }
    // Chart images reproduce the node coordinates.
    for (const auto& patch : gd.charts)
        for (std::size_t i = 0; i < patch.nodes.size(); ++i)
            EXPECT_LE((patch.chart.map(patch.chart.h().breaks()[i]) - gd.points[patch.nodes[i]]).norm(), 1e-14);
}
