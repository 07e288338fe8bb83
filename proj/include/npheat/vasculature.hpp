#ifndef NPHEAT_VASCULATURE_HPP
#define NPHEAT_VASCULATURE_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "npheat/mesh.hpp"

namespace npheat {

// Discrete 1D vessel network: a graph of straight cylindrical segments.
// Pressures and nanoparticle mass fractions live on nodes, radii and flags on
// segments. Collapsed segments carry zero flow and zero wall transfer and are
// excluded from embedding; they stay in the graph so indices remain stable.

struct VesselNode {
    Vec2 pos{0.0, 0.0};
};

struct VesselSegment {
    int a = -1;
    int b = -1;
    double radius = 0.0; // m
    bool collapsed = false;
};

enum class NetworkBcKind { inlet_p, outlet_p, inlet_conc };

struct NetworkBc {
    int node = -1;
    NetworkBcKind kind = NetworkBcKind::inlet_p;
    double value = 0.0; // Pa for pressure kinds, mass fraction for inlet_conc
};

struct VesselNetwork {
    std::vector<VesselNode> nodes;
    std::vector<VesselSegment> segments;
    std::vector<NetworkBc> bcs;
    double mu_b = 3.0e-3; // blood viscosity, Pa*s (constant Newtonian)

    double segment_length(int s) const;
    // Total centreline length of non-collapsed segments.
    double active_length() const;
    // Mean radius over non-collapsed segments.
    double mean_radius() const;

    // Structural checks: endpoint ids in range, a != b, R > 0 on non-collapsed
    // segments, BC nodes in range, no conflicting pressure BCs on one node.
    // Throws ConfigError naming the offending segment/node.
    void validate() const;

    // A component with active segments but no path to both an inlet and an
    // outlet still admits a flow solve (the severed part just carries no
    // throughflow), so this is advisory, not an error. Returns a message
    // naming a node in the first such component, if any.
    std::optional<std::string> connectivity_warning() const;
};

struct NetworkFlow {
    std::vector<double> node_pressure; // Pa
    std::vector<double> segment_flow;  // m^3/s, positive from node a to node b
};

// Hagen-Poiseuille conductance g = pi R^4 / (8 mu L) per segment, Kirchhoff
// balance at nodes, pressure Dirichlet at inlet_p/outlet_p nodes. A connected
// component with active segments but no pressure BC anywhere is singular and
// raises ConfigError naming one of its nodes. Collapsed segments carry Q = 0.
NetworkFlow solve_network_flow(const VesselNetwork& network);

struct EmbeddingPoint {
    int segment = -1;
    int element = -1;
    double weight = 0.0; // arc-length weight, m
    double s = 0.0;      // arc-length coordinate within the segment, m
    double xi = 0.0;
    double eta = 0.0;
    std::array<double, 4> shape{};
};

// Line quadrature of the network inside the 2D mesh. Points are grouped by
// segment; per-segment weights sum to the segment length. Immutable once
// built; transport and bioheat assembly share it read-only.
struct EmbeddingTable {
    std::vector<EmbeddingPoint> points;
    std::vector<std::pair<int, int>> segment_range; // [begin,end) into points
    double total_length = 0.0;
};

// Subdivides every non-collapsed segment so no sub-interval exceeds half the
// smaller element edge, then places 2-point Gauss rules on each sub-interval.
// Segment endpoints outside the mesh raise ConfigError with the segment id.
EmbeddingTable embed_network(const VesselNetwork& network, const StructuredQuadMesh& mesh);

// Linear interpolation of a nodal network field at arc length s of a segment.
double interpolate_segment(const VesselNetwork& network, const std::vector<double>& nodal,
                           int segment, double s);

// Wall-transfer terms aggregated onto network nodes by the caller (units
// m^3/s once the rho^v factors cancel): the vessel balance at node i gains
// -lin[i]*omega_i on the left and +rhs[i] on the right.
struct NetworkTransferTerms {
    std::vector<double> lin;
    std::vector<double> rhs;
};

struct NetworkTransportResult {
    std::vector<double> omega;  // nodal mass fraction at t+dt
    double mass = 0.0;          // total nanoparticle mass in the lumen, kg
    double inlet_rate = 0.0;    // kg/s entering at concentration-Dirichlet nodes
    double outlet_rate = 0.0;   // kg/s leaving through free outflow
    double transfer_rate = 0.0; // kg/s leaving through the wall kernels
    double residual = 0.0;      // |mass-balance defect| of the step, kg
};

// One backward-Euler step of the per-segment balance
//   A domega/dt + Q domega/ds - A D d2omega/ds2 = -(wall transfer)/rho^v
// on a node-centred finite-volume grid (one unknown per network node, full
// upwinding of the advection term). inlet_conc nodes are held at
// inlet_scale * bc.value; outlets let mass leave at the local concentration.
// transfer may be null (no wall exchange).
NetworkTransportResult advance_network_transport(const VesselNetwork& network,
                                                 const NetworkFlow& flow,
                                                 const std::vector<double>& omega_old, double dt,
                                                 double diffusivity, double inlet_scale,
                                                 double rho_v,
                                                 const NetworkTransferTerms* transfer);

// Plain-text network file: sections NODES (id x y), SEGMENTS (id a b radius_m
// collapsed), BC (node kind value). Ids must be contiguous from 0.
VesselNetwork load_network(const std::string& path);
void save_network(const VesselNetwork& network, const std::string& path);

// Rectangular capillary grid with lognormal radii (clipped to
// [radius_min, radius_max]), pressure inlets on the left edge, outlets on the
// right, concentration inlets co-located with the pressure inlets. Segments
// whose midpoint falls inside the optional collapse disc are marked collapsed.
struct GridNetworkParams {
    Vec2 origin{0.0, 0.0};
    double width = 1.0e-3;  // m
    double height = 1.0e-3; // m
    double spacing = 5.0e-5; // m
    // Lognormal radius distribution clipped to [radius_min, radius_max]; the
    // default median puts the clipped population mean at 6.98 um.
    double radius_median = 5.844e-6; // m
    double radius_sigma = 0.6;       // sigma in log space
    double radius_min = 1.6e-6;      // m
    double radius_max = 30.0e-6;     // m
    double inlet_pressure = 2660.0;  // Pa
    double outlet_pressure = 1330.0; // Pa
    double inlet_omega = 1.0;
    unsigned long long seed = 1;
    bool collapse_enabled = false;
    Vec2 collapse_centre{0.0, 0.0};
    double collapse_radius = 0.0; // m
};
VesselNetwork make_grid_network(const GridNetworkParams& params);

// Arterio-venous binary tree: a feeding tree bifurcating left to right, a
// mirrored draining tree collecting to a single outlet, leaves joined by
// capillary bridges. Radii are log-spaced from radius_root at the trunks to
// radius_leaf at the bridges, i.e. uniform in log [radius_leaf, radius_root].
struct TreeNetworkParams {
    Vec2 origin{0.0, 0.0};
    double width = 1.0e-3;  // m
    double height = 1.0e-3; // m
    int levels = 4;         // bifurcation levels per half-tree
    double radius_root = 30.0e-6; // m
    double radius_leaf = 1.6e-6;  // m
    double inlet_pressure = 2660.0;  // Pa
    double outlet_pressure = 1330.0; // Pa
    double inlet_omega = 1.0;
};
VesselNetwork make_tree_network(const TreeNetworkParams& params);

} // namespace npheat

#endif
