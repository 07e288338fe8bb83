#include "npheat/vasculature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "npheat/errors.hpp"
#include "npheat/linsolve.hpp"
#include "npheat/output.hpp"

namespace npheat {
namespace {

constexpr double kPi = std::numbers::pi;

double hagen_poiseuille_conductance(double radius, double length, double mu) {
    return kPi * radius * radius * radius * radius / (8.0 * mu * length);
}

// Deterministic 64-bit generator (splitmix64): identical radii for a given
// seed on every platform, unlike the distributions in <random>.
struct SplitMix64 {
    unsigned long long state;

    explicit SplitMix64(unsigned long long seed) : state(seed) {}

    unsigned long long next() {
        unsigned long long z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double standard_normal() {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
};

// Components of the subgraph spanned by non-collapsed segments; nodes with no
// active segment get label -1.
std::vector<int> active_components(const VesselNetwork& net) {
    const int n = static_cast<int>(net.nodes.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& s : net.segments) {
        if (s.collapsed)
            continue;
        adj[s.a].push_back(s.b);
        adj[s.b].push_back(s.a);
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (int start = 0; start < n; ++start) {
        if (label[start] != -1 || adj[start].empty())
            continue;
        label[start] = next;
        std::queue<int> q;
        q.push(start);
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (label[v] == -1) {
                    label[v] = next;
                    q.push(v);
                }
        }
        ++next;
    }
    return label;
}

} // namespace

double VesselNetwork::segment_length(int s) const {
    const auto& seg = segments[s];
    return std::hypot(nodes[seg.b].pos.x - nodes[seg.a].pos.x,
                      nodes[seg.b].pos.y - nodes[seg.a].pos.y);
}

double VesselNetwork::active_length() const {
    double sum = 0.0;
    for (int s = 0; s < static_cast<int>(segments.size()); ++s)
        if (!segments[s].collapsed)
            sum += segment_length(s);
    return sum;
}

double VesselNetwork::mean_radius() const {
    double sum = 0.0;
    int count = 0;
    for (const auto& s : segments)
        if (!s.collapsed) {
            sum += s.radius;
            ++count;
        }
    return count > 0 ? sum / count : 0.0;
}

void VesselNetwork::validate() const {
    const int n = static_cast<int>(nodes.size());
    if (!(mu_b > 0.0))
        throw ConfigError("network: blood viscosity must be positive");
    for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
        const auto& seg = segments[s];
        if (seg.a < 0 || seg.a >= n || seg.b < 0 || seg.b >= n)
            throw ConfigError("network: segment " + std::to_string(s) +
                              " references a node out of range");
        if (seg.a == seg.b)
            throw ConfigError("network: segment " + std::to_string(s) + " is a self-loop");
        if (!seg.collapsed && !(seg.radius > 0.0))
            throw ConfigError("network: segment " + std::to_string(s) +
                              " is not collapsed but has radius <= 0");
        if (segment_length(s) <= 0.0)
            throw ConfigError("network: segment " + std::to_string(s) + " has zero length");
    }
    std::vector<double> pressure_bc(nodes.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& bc : bcs) {
        if (bc.node < 0 || bc.node >= n)
            throw ConfigError("network: boundary condition references node " +
                              std::to_string(bc.node) + " out of range");
        if (bc.kind == NetworkBcKind::inlet_p || bc.kind == NetworkBcKind::outlet_p) {
            double& slot = pressure_bc[bc.node];
            if (!std::isnan(slot) && slot != bc.value)
                throw ConfigError("network: conflicting pressure conditions at node " +
                                  std::to_string(bc.node));
            slot = bc.value;
        }
        if (bc.kind == NetworkBcKind::inlet_conc &&
            !(bc.value >= 0.0 && bc.value <= 1.0))
            throw ConfigError("network: inlet concentration at node " + std::to_string(bc.node) +
                              " outside [0,1]");
    }
}

std::optional<std::string> VesselNetwork::connectivity_warning() const {
    const std::vector<int> label = active_components(*this);
    int n_comp = 0;
    for (int l : label)
        n_comp = std::max(n_comp, l + 1);
    std::vector<bool> has_inlet(n_comp, false), has_outlet(n_comp, false);
    for (const auto& bc : bcs) {
        if (bc.node < 0 || bc.node >= static_cast<int>(nodes.size()))
            continue;
        const int l = label[bc.node];
        if (l < 0)
            continue;
        if (bc.kind == NetworkBcKind::inlet_p)
            has_inlet[l] = true;
        if (bc.kind == NetworkBcKind::outlet_p)
            has_outlet[l] = true;
    }
    for (int c = 0; c < n_comp; ++c) {
        if (has_inlet[c] && has_outlet[c])
            continue;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
            if (label[i] == c)
                return "network: component containing node " + std::to_string(i) +
                       " has no through-path from an inlet to an outlet; it will carry no flow";
    }
    return std::nullopt;
}

NetworkFlow solve_network_flow(const VesselNetwork& net) {
    net.validate();
    const int n = static_cast<int>(net.nodes.size());
    const std::vector<int> label = active_components(net);

    std::vector<DirichletBc> dirichlet;
    std::vector<bool> has_bc(n, false);
    for (const auto& bc : net.bcs)
        if (bc.kind == NetworkBcKind::inlet_p || bc.kind == NetworkBcKind::outlet_p) {
            if (!has_bc[bc.node])
                dirichlet.push_back({bc.node, bc.value});
            has_bc[bc.node] = true;
        }

    int n_comp = 0;
    for (int l : label)
        n_comp = std::max(n_comp, l + 1);
    std::vector<bool> comp_has_bc(n_comp, false);
    for (int i = 0; i < n; ++i)
        if (has_bc[i] && label[i] >= 0)
            comp_has_bc[label[i]] = true;
    for (int i = 0; i < n; ++i)
        if (label[i] >= 0 && !comp_has_bc[label[i]])
            throw ConfigError("network flow: component containing node " + std::to_string(i) +
                              " has no pressure boundary condition");

    PatternBuilder builder(n);
    for (const auto& s : net.segments)
        if (!s.collapsed) {
            const std::array<int, 2> pair{s.a, s.b};
            builder.add_clique(pair);
        }
    CsrMatrix a(builder.finalize());
    a.set_zero();
    std::vector<double> b(n, 0.0);

    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        if (seg.collapsed)
            continue;
        const double g = hagen_poiseuille_conductance(seg.radius, net.segment_length(s), net.mu_b);
        a.add(seg.a, seg.a, g);
        a.add(seg.b, seg.b, g);
        a.add(seg.a, seg.b, -g);
        a.add(seg.b, seg.a, -g);
    }
    // Nodes with no active segment and no BC would give a zero row; pin them.
    for (int i = 0; i < n; ++i)
        if (label[i] < 0 && !has_bc[i])
            a.add(i, i, 1.0);

    apply_dirichlet(a, b, dirichlet);

    LinearSolver solver;
    NetworkFlow flow;
    SolveStats stats;
    flow.node_pressure = solver.solve(a, b, {}, &stats);

    flow.segment_flow.assign(net.segments.size(), 0.0);
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        if (seg.collapsed)
            continue;
        const double g = hagen_poiseuille_conductance(seg.radius, net.segment_length(s), net.mu_b);
        flow.segment_flow[s] = g * (flow.node_pressure[seg.a] - flow.node_pressure[seg.b]);
    }
    return flow;
}

EmbeddingTable embed_network(const VesselNetwork& net, const StructuredQuadMesh& mesh) {
    EmbeddingTable table;
    table.segment_range.assign(net.segments.size(), {0, 0});
    const double limit = 0.5 * std::min(mesh.hx(), mesh.hy());
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        const int begin = static_cast<int>(table.points.size());
        if (seg.collapsed) {
            table.segment_range[s] = {begin, begin};
            continue;
        }
        const Vec2 pa = net.nodes[seg.a].pos;
        const Vec2 pb = net.nodes[seg.b].pos;
        for (Vec2 p : {pa, pb})
            if (!mesh.locate_point(p))
                throw ConfigError("embedding: segment " + std::to_string(s) +
                                  " has an endpoint outside the mesh domain");
        const double length = net.segment_length(s);
        const int n_sub = std::max(1, static_cast<int>(std::ceil(length / limit)));
        const double ds = length / n_sub;
        for (int k = 0; k < n_sub; ++k) {
            for (const auto& qp : gauss2()) {
                EmbeddingPoint pt;
                pt.segment = s;
                pt.s = (k + 0.5 * (1.0 + qp.xi)) * ds;
                pt.weight = 0.5 * qp.weight * ds;
                const double t = pt.s / length;
                const Vec2 x{pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)};
                const auto loc = mesh.locate_point(x);
                if (!loc)
                    throw ConfigError("embedding: segment " + std::to_string(s) +
                                      " leaves the mesh domain");
                pt.element = loc->element;
                pt.xi = loc->xi;
                pt.eta = loc->eta;
                pt.shape = shape_eval(loc->xi, loc->eta).n;
                table.points.push_back(pt);
            }
        }
        table.segment_range[s] = {begin, static_cast<int>(table.points.size())};
        table.total_length += length;
    }
    return table;
}

double interpolate_segment(const VesselNetwork& net, const std::vector<double>& nodal,
                           int segment, double s) {
    const auto& seg = net.segments[segment];
    const double t = s / net.segment_length(segment);
    return nodal[seg.a] * (1.0 - t) + nodal[seg.b] * t;
}

NetworkTransportResult advance_network_transport(const VesselNetwork& net,
                                                 const NetworkFlow& flow,
                                                 const std::vector<double>& omega_old, double dt,
                                                 double diffusivity, double inlet_scale,
                                                 double rho_v,
                                                 const NetworkTransferTerms* transfer) {
    if (!(dt > 0.0))
        throw ConfigError("network transport: dt must be positive");
    const int n = static_cast<int>(net.nodes.size());
    if (static_cast<int>(omega_old.size()) != n ||
        flow.segment_flow.size() != net.segments.size())
        throw ConfigError("network transport: state sized for a different network");
    if (transfer && (static_cast<int>(transfer->lin.size()) != n ||
                     static_cast<int>(transfer->rhs.size()) != n))
        throw ConfigError("network transport: transfer terms sized for a different network");

    // Node-centred finite volumes: half of each adjacent segment's lumen.
    std::vector<double> volume(n, 0.0);
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        if (seg.collapsed)
            continue;
        const double half = 0.5 * kPi * seg.radius * seg.radius * net.segment_length(s);
        volume[seg.a] += half;
        volume[seg.b] += half;
    }

    std::vector<DirichletBc> dirichlet;
    std::vector<bool> is_dirichlet(n, false), is_outlet(n, false);
    for (const auto& bc : net.bcs) {
        if (bc.kind == NetworkBcKind::inlet_conc && !is_dirichlet[bc.node]) {
            dirichlet.push_back({bc.node, inlet_scale * bc.value});
            is_dirichlet[bc.node] = true;
        }
        if (bc.kind == NetworkBcKind::outlet_p)
            is_outlet[bc.node] = true;
    }

    PatternBuilder builder(n);
    for (const auto& seg : net.segments)
        if (!seg.collapsed) {
            const std::array<int, 2> pair{seg.a, seg.b};
            builder.add_clique(pair);
        }
    CsrMatrix a(builder.finalize());
    a.set_zero();
    std::vector<double> b(n, 0.0);

    for (int i = 0; i < n; ++i) {
        if (volume[i] > 0.0) {
            a.add(i, i, volume[i] / dt);
            b[i] += volume[i] / dt * omega_old[i];
        } else {
            a.add(i, i, 1.0); // no lumen at this node: hold the stale value
            b[i] += omega_old[i];
        }
    }

    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        if (seg.collapsed)
            continue;
        const double q = flow.segment_flow[s];
        const int up = q >= 0.0 ? seg.a : seg.b;
        const int down = q >= 0.0 ? seg.b : seg.a;
        const double mag = std::abs(q);
        a.add(up, up, mag);
        a.add(down, up, -mag);
        const double diff = diffusivity * kPi * seg.radius * seg.radius / net.segment_length(s);
        a.add(seg.a, seg.a, diff);
        a.add(seg.b, seg.b, diff);
        a.add(seg.a, seg.b, -diff);
        a.add(seg.b, seg.a, -diff);
    }

    // Net volumetric imbalance at each node: positive at outlets (blood leaves
    // the network there, taking mass at the node's own concentration).
    std::vector<double> net_outflow(n, 0.0);
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        if (seg.collapsed)
            continue;
        net_outflow[seg.a] -= flow.segment_flow[s];
        net_outflow[seg.b] += flow.segment_flow[s];
    }
    for (int i = 0; i < n; ++i)
        if (is_outlet[i] && net_outflow[i] > 0.0)
            a.add(i, i, net_outflow[i]);

    if (transfer)
        for (int i = 0; i < n; ++i) {
            a.add(i, i, transfer->lin[i]);
            b[i] += transfer->rhs[i];
        }

    // Keep the untouched rows for the mass audit before Dirichlet elimination.
    CsrMatrix a_full = a;
    const std::vector<double> b_full = b;

    apply_dirichlet(a, b, dirichlet);
    LinearSolver solver;
    NetworkTransportResult out;
    out.omega = solver.solve(a, b, {}, nullptr);

    out.mass = 0.0;
    for (int i = 0; i < n; ++i)
        out.mass += rho_v * volume[i] * out.omega[i];

    // Mass bookkeeping from the assembled operators: the defect of the
    // original (pre-elimination) rows at the held inlet nodes is exactly the
    // external supply needed to keep them at the Dirichlet value.
    std::vector<double> full_residual(n, 0.0);
    a_full.multiply(out.omega, full_residual);
    double injected = 0.0;
    for (int i = 0; i < n; ++i)
        if (is_dirichlet[i])
            injected += full_residual[i] - b_full[i];
    out.inlet_rate = rho_v * injected;
    double outflow = 0.0;
    for (int i = 0; i < n; ++i)
        if (is_outlet[i] && net_outflow[i] > 0.0)
            outflow += net_outflow[i] * out.omega[i];
    out.outlet_rate = rho_v * outflow;
    double wall = 0.0;
    if (transfer)
        for (int i = 0; i < n; ++i)
            wall += transfer->lin[i] * out.omega[i] - transfer->rhs[i];
    out.transfer_rate = rho_v * wall;

    double mass_old = 0.0;
    for (int i = 0; i < n; ++i)
        mass_old += rho_v * volume[i] * omega_old[i];
    out.residual = std::abs((out.mass - mass_old) / dt + out.outlet_rate + out.transfer_rate -
                            out.inlet_rate) *
                   dt;
    return out;
}

namespace {

NetworkBcKind parse_bc_kind(const std::string& word, const std::string& path) {
    if (word == "inlet_p")
        return NetworkBcKind::inlet_p;
    if (word == "outlet_p")
        return NetworkBcKind::outlet_p;
    if (word == "inlet_conc")
        return NetworkBcKind::inlet_conc;
    throw ConfigError("network file " + path + ": unknown boundary kind '" + word + "'");
}

const char* bc_kind_name(NetworkBcKind kind) {
    switch (kind) {
    case NetworkBcKind::inlet_p: return "inlet_p";
    case NetworkBcKind::outlet_p: return "outlet_p";
    case NetworkBcKind::inlet_conc: return "inlet_conc";
    }
    return "?";
}

} // namespace

VesselNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("network file not readable: " + path);

    VesselNetwork net;
    enum class Section { none, nodes, segments, bc } section = Section::none;
    std::string line;
    int lineno = 0;
    std::vector<std::pair<int, VesselNode>> raw_nodes;
    std::vector<std::pair<int, VesselSegment>> raw_segments;

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first))
            continue;
        if (first == "NODES") {
            section = Section::nodes;
            continue;
        }
        if (first == "SEGMENTS") {
            section = Section::segments;
            continue;
        }
        if (first == "BC") {
            section = Section::bc;
            continue;
        }
        const std::string where = path + ":" + std::to_string(lineno);
        switch (section) {
        case Section::none:
            throw ConfigError("network file " + where + ": data before any section header");
        case Section::nodes: {
            int id;
            VesselNode nd;
            std::istringstream row(line);
            if (!(row >> id >> nd.pos.x >> nd.pos.y))
                throw ConfigError("network file " + where + ": malformed node row");
            raw_nodes.emplace_back(id, nd);
            break;
        }
        case Section::segments: {
            int id, collapsed;
            VesselSegment seg;
            std::istringstream row(line);
            if (!(row >> id >> seg.a >> seg.b >> seg.radius >> collapsed))
                throw ConfigError("network file " + where + ": malformed segment row");
            if (collapsed != 0 && collapsed != 1)
                throw ConfigError("network file " + where + ": collapsed flag must be 0 or 1");
            seg.collapsed = collapsed == 1;
            raw_segments.emplace_back(id, seg);
            break;
        }
        case Section::bc: {
            NetworkBc bc;
            std::string kind;
            std::istringstream row(line);
            if (!(row >> bc.node >> kind >> bc.value))
                throw ConfigError("network file " + where + ": malformed boundary row");
            bc.kind = parse_bc_kind(kind, path);
            net.bcs.push_back(bc);
            break;
        }
        }
    }

    net.nodes.resize(raw_nodes.size());
    std::vector<bool> seen(raw_nodes.size(), false);
    for (const auto& [id, nd] : raw_nodes) {
        if (id < 0 || id >= static_cast<int>(raw_nodes.size()) || seen[id])
            throw ConfigError("network file " + path + ": node ids must be unique and contiguous from 0 (got " +
                              std::to_string(id) + ")");
        seen[id] = true;
        net.nodes[id] = nd;
    }
    net.segments.resize(raw_segments.size());
    std::vector<bool> seen_seg(raw_segments.size(), false);
    for (const auto& [id, seg] : raw_segments) {
        if (id < 0 || id >= static_cast<int>(raw_segments.size()) || seen_seg[id])
            throw ConfigError("network file " + path +
                              ": segment ids must be unique and contiguous from 0 (got " +
                              std::to_string(id) + ")");
        seen_seg[id] = true;
        net.segments[id] = seg;
    }
    if (net.nodes.empty())
        throw ConfigError("network file " + path + ": no nodes");

    net.validate();
    return net;
}

void save_network(const VesselNetwork& net, const std::string& path) {
    std::string out;
    out += "NODES\n";
    for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i)
        out += std::to_string(i) + " " + format_double(net.nodes[i].pos.x) + " " +
               format_double(net.nodes[i].pos.y) + "\n";
    out += "SEGMENTS\n";
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto& seg = net.segments[s];
        out += std::to_string(s) + " " + std::to_string(seg.a) + " " + std::to_string(seg.b) +
               " " + format_double(seg.radius) + " " + (seg.collapsed ? "1" : "0") + "\n";
    }
    out += "BC\n";
    for (const auto& bc : net.bcs)
        out += std::to_string(bc.node) + " " + bc_kind_name(bc.kind) + " " +
               format_double(bc.value) + "\n";
    atomic_write_text(path, out);
}

VesselNetwork make_grid_network(const GridNetworkParams& p) {
    if (!(p.spacing > 0.0) || !(p.width >= p.spacing) || !(p.height >= p.spacing))
        throw ConfigError("grid network: spacing must be positive and fit the extent");
    if (!(p.radius_median > 0.0) || !(p.radius_sigma >= 0.0) ||
        !(0.0 < p.radius_min && p.radius_min <= p.radius_max))
        throw ConfigError("grid network: invalid radius distribution");

    const int nx = static_cast<int>(std::lround(p.width / p.spacing));
    const int ny = static_cast<int>(std::lround(p.height / p.spacing));
    const double dx = p.width / nx;
    const double dy = p.height / ny;

    VesselNetwork net;
    net.nodes.resize((nx + 1) * (ny + 1));
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            net.nodes[id(i, j)].pos = {p.origin.x + i * dx, p.origin.y + j * dy};

    SplitMix64 rng(p.seed);
    auto sample_radius = [&]() {
        const double r = p.radius_median * std::exp(p.radius_sigma * rng.standard_normal());
        return std::clamp(r, p.radius_min, p.radius_max);
    };
    auto add_segment = [&](int a, int b) {
        VesselSegment seg;
        seg.a = a;
        seg.b = b;
        seg.radius = sample_radius();
        if (p.collapse_enabled) {
            const Vec2 mid{0.5 * (net.nodes[a].pos.x + net.nodes[b].pos.x),
                           0.5 * (net.nodes[a].pos.y + net.nodes[b].pos.y)};
            seg.collapsed = std::hypot(mid.x - p.collapse_centre.x, mid.y - p.collapse_centre.y) <
                            p.collapse_radius;
        }
        net.segments.push_back(seg);
    };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            add_segment(id(i, j), id(i + 1, j));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i)
            add_segment(id(i, j), id(i, j + 1));

    for (int j = 0; j <= ny; ++j) {
        net.bcs.push_back({id(0, j), NetworkBcKind::inlet_p, p.inlet_pressure});
        net.bcs.push_back({id(0, j), NetworkBcKind::inlet_conc, p.inlet_omega});
        net.bcs.push_back({id(nx, j), NetworkBcKind::outlet_p, p.outlet_pressure});
    }
    net.validate();
    return net;
}

VesselNetwork make_tree_network(const TreeNetworkParams& p) {
    if (p.levels < 1 || p.levels > 12)
        throw ConfigError("tree network: levels must be in [1,12]");
    if (!(p.radius_leaf > 0.0) || !(p.radius_root >= p.radius_leaf))
        throw ConfigError("tree network: need radius_root >= radius_leaf > 0");

    VesselNetwork net;
    // Feeding tree occupies the left 45% of the extent, the mirrored draining
    // tree the right 45%, capillary bridges span the middle 10%.
    const int leaves = 1 << p.levels;
    auto level_radius = [&](int level) {
        if (p.levels == 1)
            return p.radius_root;
        const double t = static_cast<double>(level) / (p.levels - 1);
        return p.radius_root * std::pow(p.radius_leaf / p.radius_root, t);
    };

    auto add_node = [&](double x, double y) {
        net.nodes.push_back({{p.origin.x + x, p.origin.y + y}});
        return static_cast<int>(net.nodes.size()) - 1;
    };
    auto add_segment = [&](int a, int b, double r) {
        net.segments.push_back({a, b, r, false});
    };

    // One half-tree: returns the node ids of its leaf layer, ordered by y.
    auto build_half = [&](bool mirrored) {
        const double x0 = mirrored ? p.width : 0.0;
        const double x1 = mirrored ? p.width - 0.45 * p.width : 0.45 * p.width;
        const int root = add_node(x0, 0.5 * p.height);
        std::vector<int> layer{root};
        for (int level = 0; level < p.levels; ++level) {
            const double t = static_cast<double>(level + 1) / p.levels;
            const double x = x0 + t * (x1 - x0);
            const int count = 1 << (level + 1);
            std::vector<int> next(count);
            for (int k = 0; k < count; ++k) {
                const double y = (k + 0.5) * p.height / count;
                next[k] = add_node(x, y);
                add_segment(layer[k / 2], next[k], level_radius(level));
            }
            layer = std::move(next);
        }
        return std::pair{root, layer};
    };

    const auto [inlet, art_leaves] = build_half(false);
    const auto [outlet, ven_leaves] = build_half(true);
    for (int k = 0; k < leaves; ++k)
        add_segment(art_leaves[k], ven_leaves[k], p.radius_leaf);

    net.bcs.push_back({inlet, NetworkBcKind::inlet_p, p.inlet_pressure});
    net.bcs.push_back({inlet, NetworkBcKind::inlet_conc, p.inlet_omega});
    net.bcs.push_back({outlet, NetworkBcKind::outlet_p, p.outlet_pressure});
    net.validate();
    return net;
}

} // namespace npheat
