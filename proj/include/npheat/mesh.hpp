#ifndef NPHEAT_MESH_HPP
#define NPHEAT_MESH_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace npheat {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Side { left, right, bottom, top };

// Bilinear shape functions on the reference square [-1,1]^2, node order
// (-1,-1), (1,-1), (1,1), (-1,1) counter-clockwise.
struct ShapeValues {
    std::array<double, 4> n;       // N_a
    std::array<double, 4> dxi;     // dN_a/dxi
    std::array<double, 4> deta;    // dN_a/deta
};
ShapeValues shape_eval(double xi, double eta);

// 2x2 Gauss rule on [-1,1]^2: points +-1/sqrt(3), unit weights.
struct QuadPoint {
    double xi, eta, weight;
};
const std::array<QuadPoint, 4>& gauss4();

// 2-point Gauss rule on [-1,1] (for boundary edges and embedded line segments).
struct QuadPoint1d {
    double xi, weight;
};
const std::array<QuadPoint1d, 2>& gauss2();

struct MeshLocation {
    int element = -1;
    double xi = 0.0;
    double eta = 0.0;
};

// Axis-aligned structured grid of nx-by-ny equal Q1 quadrilaterals covering
// [0,Lx]x[0,Ly]. Node ids are lexicographic with x fastest (y-major):
// node(i,j) = j*(nx+1)+i. Element ids likewise: element(i,j) = j*nx+i, with
// local corners ordered counter-clockwise from the lower-left node.
class StructuredQuadMesh {
public:
    StructuredQuadMesh(int nx, int ny, double lx, double ly);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }

    int num_nodes() const { return (nx_ + 1) * (ny_ + 1); }
    int num_elements() const { return nx_ * ny_; }

    int node_id(int i, int j) const { return j * (nx_ + 1) + i; }
    Vec2 node_coord(int node) const;
    std::array<int, 4> element_nodes(int element) const;

    // Jacobian of the isoparametric map is diagonal and constant on a uniform
    // grid: J = diag(hx/2, hy/2), det J = hx*hy/4 > 0.
    double det_jacobian() const { return 0.25 * hx_ * hy_; }

    Vec2 map_to_global(int element, double xi, double eta) const;

    // Gradient of a nodal field at a reference point of an element, using
    // dN/dx = dN/dxi * 2/hx (diagonal Jacobian).
    // Containing element of a physical point, or nullopt outside [0,Lx]x[0,Ly].
    // Points exactly on a shared edge or corner resolve to the lowest
    // candidate element id, so repeated queries are deterministic.
    std::optional<MeshLocation> locate_point(Vec2 p) const;

    // Node ids along one boundary side, ascending.
    std::vector<int> boundary_nodes(Side side) const;

    // Element ids adjacent to one boundary side, ascending, together with the
    // pair of local corner indices forming that edge.
    struct BoundaryEdge {
        int element;
        std::array<int, 2> local_nodes;
    };
    std::vector<BoundaryEdge> boundary_edges(Side side) const;

private:
    int nx_, ny_;
    double lx_, ly_, hx_, hy_;
};

} // namespace npheat

#endif
