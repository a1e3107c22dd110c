#pragma once

// Structured triangulations of rectangles used across the test suite.

#include "formheat/geometry.hpp"

#include <optional>
#include <vector>

namespace formheat::testing {

struct SquareOptions {
    int n = 4;                       ///< cells per direction
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    EdgeLabel bottom = EdgeLabel::neumann;
    EdgeLabel right = EdgeLabel::neumann;
    EdgeLabel top = EdgeLabel::neumann;
    EdgeLabel left = EdgeLabel::neumann;
    std::optional<int> interface_row; ///< horizontal interface on grid line j
    bool alternate_diagonals = false; ///< criss-cross pattern instead of parallel diagonals
};

inline int grid_index(const SquareOptions& o, int i, int j) { return i + j * (o.n + 1); }

inline Mesh square_mesh(const SquareOptions& o) {
    const int n = o.n;
    std::vector<Vec2> v;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            v.emplace_back(o.x0 + (o.x1 - o.x0) * i / n, o.y0 + (o.y1 - o.y0) * j / n);
    std::vector<Triangle> t;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int a = grid_index(o, i, j), b = grid_index(o, i + 1, j);
            const int c = grid_index(o, i + 1, j + 1), d = grid_index(o, i, j + 1);
            const int region = (o.interface_row && j >= *o.interface_row) ? 1 : 0;
            if (o.alternate_diagonals && (i + j) % 2 == 1) {
                t.push_back({{a, b, d}, region});
                t.push_back({{b, c, d}, region});
            } else {
                t.push_back({{a, b, c}, region});
                t.push_back({{a, c, d}, region});
            }
        }
    std::vector<BoundaryEdge> be;
    for (int i = 0; i < n; ++i) {
        be.push_back({grid_index(o, i, 0), grid_index(o, i + 1, 0), o.bottom});
        be.push_back({grid_index(o, i + 1, n), grid_index(o, i, n), o.top});
    }
    for (int j = 0; j < n; ++j) {
        be.push_back({grid_index(o, n, j), grid_index(o, n, j + 1), o.right});
        be.push_back({grid_index(o, 0, j + 1), grid_index(o, 0, j), o.left});
    }
    std::vector<InterfaceEdge> ie;
    if (o.interface_row)
        for (int i = 0; i < n; ++i) ie.push_back({grid_index(o, i, *o.interface_row), grid_index(o, i + 1, *o.interface_row)});
    return Mesh::create(std::move(v), std::move(t), std::move(be), std::move(ie));
}

/// Unit square with n cells per side and Sigma on y = 1/2 (n even).
inline Mesh interface_square(int n, EdgeLabel bottom, EdgeLabel right, EdgeLabel top, EdgeLabel left) {
    SquareOptions o;
    o.n = n;
    o.bottom = bottom;
    o.right = right;
    o.top = top;
    o.left = left;
    o.interface_row = n / 2;
    return square_mesh(o);
}

} // namespace formheat::testing
