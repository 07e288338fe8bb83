#include "npheat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "npheat/errors.hpp"

namespace npheat {

ShapeValues shape_eval(double xi, double eta) {
    ShapeValues s;
    const double xm = 1.0 - xi, xp = 1.0 + xi;
    const double em = 1.0 - eta, ep = 1.0 + eta;
    s.n = {0.25 * xm * em, 0.25 * xp * em, 0.25 * xp * ep, 0.25 * xm * ep};
    s.dxi = {-0.25 * em, 0.25 * em, 0.25 * ep, -0.25 * ep};
    s.deta = {-0.25 * xm, -0.25 * xp, 0.25 * xp, 0.25 * xm};
    return s;
}

const std::array<QuadPoint, 4>& gauss4() {
    static const double g = 1.0 / std::sqrt(3.0);
    static const std::array<QuadPoint, 4> pts = {{
        {-g, -g, 1.0},
        {g, -g, 1.0},
        {g, g, 1.0},
        {-g, g, 1.0},
    }};
    return pts;
}

const std::array<QuadPoint1d, 2>& gauss2() {
    static const double g = 1.0 / std::sqrt(3.0);
    static const std::array<QuadPoint1d, 2> pts = {{{-g, 1.0}, {g, 1.0}}};
    return pts;
}

StructuredQuadMesh::StructuredQuadMesh(int nx, int ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (nx < 1 || ny < 1)
        throw ConfigError("mesh: element counts must be positive, got " + std::to_string(nx) +
                          " x " + std::to_string(ny));
    if (!(lx > 0.0) || !(ly > 0.0))
        throw ConfigError("mesh: domain extents must be positive");
    hx_ = lx_ / nx_;
    hy_ = ly_ / ny_;
}

Vec2 StructuredQuadMesh::node_coord(int node) const {
    const int i = node % (nx_ + 1);
    const int j = node / (nx_ + 1);
    return {i * hx_, j * hy_};
}

std::array<int, 4> StructuredQuadMesh::element_nodes(int element) const {
    const int i = element % nx_;
    const int j = element / nx_;
    return {node_id(i, j), node_id(i + 1, j), node_id(i + 1, j + 1), node_id(i, j + 1)};
}

Vec2 StructuredQuadMesh::map_to_global(int element, double xi, double eta) const {
    const int i = element % nx_;
    const int j = element / nx_;
    return {(i + 0.5 * (xi + 1.0)) * hx_, (j + 0.5 * (eta + 1.0)) * hy_};
}

std::optional<MeshLocation> StructuredQuadMesh::locate_point(Vec2 p) const {
    if (p.x < 0.0 || p.x > lx_ || p.y < 0.0 || p.y > ly_)
        return std::nullopt;

    // Points exactly on an interior gridline belong to two (or four) elements;
    // stepping down one cell selects the lowest element id among them.
    int i = static_cast<int>(std::floor(p.x / hx_));
    if (i >= 1 && p.x <= i * hx_)
        --i;
    i = std::clamp(i, 0, nx_ - 1);
    int j = static_cast<int>(std::floor(p.y / hy_));
    if (j >= 1 && p.y <= j * hy_)
        --j;
    j = std::clamp(j, 0, ny_ - 1);

    MeshLocation loc;
    loc.element = j * nx_ + i;
    loc.xi = std::clamp(2.0 * (p.x - i * hx_) / hx_ - 1.0, -1.0, 1.0);
    loc.eta = std::clamp(2.0 * (p.y - j * hy_) / hy_ - 1.0, -1.0, 1.0);
    return loc;
}

std::vector<int> StructuredQuadMesh::boundary_nodes(Side side) const {
    std::vector<int> nodes;
    switch (side) {
    case Side::left:
        for (int j = 0; j <= ny_; ++j) nodes.push_back(node_id(0, j));
        break;
    case Side::right:
        for (int j = 0; j <= ny_; ++j) nodes.push_back(node_id(nx_, j));
        break;
    case Side::bottom:
        for (int i = 0; i <= nx_; ++i) nodes.push_back(node_id(i, 0));
        break;
    case Side::top:
        for (int i = 0; i <= nx_; ++i) nodes.push_back(node_id(i, ny_));
        break;
    }
    return nodes;
}

std::vector<StructuredQuadMesh::BoundaryEdge>
StructuredQuadMesh::boundary_edges(Side side) const {
    std::vector<BoundaryEdge> edges;
    switch (side) {
    case Side::left:
        for (int j = 0; j < ny_; ++j) edges.push_back({j * nx_, {3, 0}});
        break;
    case Side::right:
        for (int j = 0; j < ny_; ++j) edges.push_back({j * nx_ + nx_ - 1, {1, 2}});
        break;
    case Side::bottom:
        for (int i = 0; i < nx_; ++i) edges.push_back({i, {0, 1}});
        break;
    case Side::top:
        for (int i = 0; i < nx_; ++i) edges.push_back({(ny_ - 1) * nx_ + i, {2, 3}});
        break;
    }
    return edges;
}

} // namespace npheat
