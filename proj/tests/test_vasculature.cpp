#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "npheat/errors.hpp"
#include "npheat/mesh.hpp"
#include "npheat/vasculature.hpp"

using namespace npheat;

namespace {

VesselNetwork straight_chain(int n_segments, double length, double radius) {
    VesselNetwork net;
    for (int i = 0; i <= n_segments; ++i)
        net.nodes.push_back({{length * i / n_segments, 0.0}});
    for (int i = 0; i < n_segments; ++i)
        net.segments.push_back({i, i + 1, radius, false});
    return net;
}

double total_lumen_mass(const VesselNetwork& net, const std::vector<double>& omega,
                        double rho_v) {
    std::vector<double> volume(net.nodes.size(), 0.0);
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        if (net.segments[s].collapsed)
            continue;
        const double half =
            0.5 * M_PI * net.segments[s].radius * net.segments[s].radius * net.segment_length(s);
        volume[net.segments[s].a] += half;
        volume[net.segments[s].b] += half;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i)
        mass += rho_v * volume[i] * omega[i];
    return mass;
}

} // namespace

TEST_SUITE("vasculature") {

TEST_CASE("single segment reproduces the Hagen-Poiseuille flow") {
    VesselNetwork net = straight_chain(1, 1e-3, 10e-6);
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0}, {1, NetworkBcKind::outlet_p, 0.0}};
    const NetworkFlow flow = solve_network_flow(net);
    CHECK(flow.segment_flow[0] == doctest::Approx(1.309e-13).epsilon(1e-3));
    const double exact = M_PI * std::pow(10e-6, 4) * 100.0 / (8.0 * 3.0e-3 * 1e-3);
    CHECK(flow.segment_flow[0] == doctest::Approx(exact).epsilon(1e-12));
    CHECK(flow.node_pressure[0] == doctest::Approx(100.0));
    CHECK(flow.node_pressure[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("symmetric Y-bifurcation splits the parent flow in half") {
    VesselNetwork net;
    net.nodes = {{{0.0, 0.0}}, {{1e-3, 0.0}}, {{2e-3, 0.5e-3}}, {{2e-3, -0.5e-3}}};
    net.segments = {{0, 1, 10e-6, false}, {1, 2, 7e-6, false}, {1, 3, 7e-6, false}};
    net.bcs = {{0, NetworkBcKind::inlet_p, 200.0},
               {2, NetworkBcKind::outlet_p, 0.0},
               {3, NetworkBcKind::outlet_p, 0.0}};
    const NetworkFlow flow = solve_network_flow(net);
    CHECK(flow.segment_flow[1] == doctest::Approx(flow.segment_flow[2]).epsilon(1e-12));
    CHECK(flow.segment_flow[1] ==
          doctest::Approx(0.5 * flow.segment_flow[0]).epsilon(1e-12));
    const double imbalance =
        flow.segment_flow[0] - flow.segment_flow[1] - flow.segment_flow[2];
    CHECK(std::abs(imbalance) <= 1e-12 * std::abs(flow.segment_flow[0]));
}

TEST_CASE("a collapsed middle segment blocks the whole chain") {
    VesselNetwork net = straight_chain(3, 3e-3, 10e-6);
    net.segments[1].collapsed = true;
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0}, {3, NetworkBcKind::outlet_p, 0.0}};
    const NetworkFlow flow = solve_network_flow(net);
    for (double q : flow.segment_flow)
        CHECK(std::abs(q) <= 1e-25);
}

TEST_CASE("active component without any pressure condition is rejected") {
    VesselNetwork net = straight_chain(1, 1e-3, 10e-6);
    net.nodes.push_back({{0.0, 1e-3}});
    net.nodes.push_back({{1e-3, 1e-3}});
    net.segments.push_back({2, 3, 8e-6, false});
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0}, {1, NetworkBcKind::outlet_p, 0.0}};
    CHECK_THROWS_WITH_AS(solve_network_flow(net),
                         doctest::Contains("no pressure boundary condition"), ConfigError);
}

TEST_CASE("severed component with a pressure condition carries zero flow") {
    VesselNetwork net = straight_chain(1, 1e-3, 10e-6);
    net.nodes.push_back({{0.0, 1e-3}});
    net.nodes.push_back({{1e-3, 1e-3}});
    net.segments.push_back({2, 3, 8e-6, false});
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0},
               {1, NetworkBcKind::outlet_p, 0.0},
               {2, NetworkBcKind::inlet_p, 50.0}};
    const NetworkFlow flow = solve_network_flow(net);
    CHECK(std::abs(flow.segment_flow[1]) <= 1e-25);
    CHECK(flow.segment_flow[0] > 0.0);

    const auto warning = net.connectivity_warning();
    REQUIRE(warning.has_value());
    CHECK(warning->find("node 2") != std::string::npos);

    VesselNetwork ok = straight_chain(2, 2e-3, 10e-6);
    ok.bcs = {{0, NetworkBcKind::inlet_p, 100.0}, {2, NetworkBcKind::outlet_p, 0.0}};
    CHECK_FALSE(ok.connectivity_warning().has_value());
}

TEST_CASE("Kirchhoff balance holds at interior nodes of a random grid") {
    GridNetworkParams params;
    params.width = 4e-4;
    params.height = 4e-4;
    params.spacing = 1e-4;
    params.seed = 7;
    const VesselNetwork net = make_grid_network(params);
    const NetworkFlow flow = solve_network_flow(net);

    std::set<int> bc_nodes;
    for (const auto& bc : net.bcs)
        bc_nodes.insert(bc.node);
    std::vector<double> net_in(net.nodes.size(), 0.0);
    double max_q = 0.0;
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        net_in[net.segments[s].a] -= flow.segment_flow[s];
        net_in[net.segments[s].b] += flow.segment_flow[s];
        max_q = std::max(max_q, std::abs(flow.segment_flow[s]));
    }
    REQUIRE(max_q > 0.0);
    for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i)
        if (!bc_nodes.count(i))
            CHECK(std::abs(net_in[i]) <= 1e-12 * max_q);
}

TEST_CASE("validation names malformed segments") {
    VesselNetwork net = straight_chain(2, 2e-3, 10e-6);
    net.segments[1].radius = 0.0;
    CHECK_THROWS_WITH_AS(net.validate(), doctest::Contains("segment 1"), ConfigError);
    net.segments[1].radius = 10e-6;
    net.segments[1].b = 9;
    CHECK_THROWS_WITH_AS(net.validate(), doctest::Contains("out of range"), ConfigError);
}

TEST_CASE("embedding a midline segment keeps all points in one element") {
    StructuredQuadMesh mesh(4, 4, 1e-3, 1e-3);
    VesselNetwork net;
    net.nodes = {{{0.0, 0.125e-3}}, {{0.25e-3, 0.125e-3}}};
    net.segments = {{0, 1, 5e-6, false}};
    const EmbeddingTable table = embed_network(net, mesh);
    double sum = 0.0;
    for (const auto& pt : table.points) {
        CHECK(pt.element == 0);
        sum += pt.weight;
    }
    CHECK(sum == doctest::Approx(0.25e-3).epsilon(1e-10));
    CHECK(table.segment_range[0].second == static_cast<int>(table.points.size()));
}

TEST_CASE("a segment crossing three elements is partitioned among exactly those") {
    StructuredQuadMesh mesh(4, 4, 1e-3, 1e-3);
    VesselNetwork net;
    net.nodes = {{{0.30e-3, 0.60e-3}}, {{0.95e-3, 0.60e-3}}};
    net.segments = {{0, 1, 5e-6, false}};
    const EmbeddingTable table = embed_network(net, mesh);
    std::set<int> elements;
    for (const auto& pt : table.points)
        elements.insert(pt.element);
    CHECK(elements == std::set<int>{9, 10, 11});
    double sum = 0.0;
    for (const auto& pt : table.points)
        sum += pt.weight;
    CHECK(sum == doctest::Approx(0.65e-3).epsilon(1e-10));
}

TEST_CASE("unit line density integrates to the active network length") {
    GridNetworkParams params;
    params.origin = {0.1e-3, 0.1e-3};
    params.width = 0.8e-3;
    params.height = 0.8e-3;
    params.spacing = 0.2e-3;
    params.collapse_enabled = true;
    params.collapse_centre = {0.5e-3, 0.5e-3};
    params.collapse_radius = 0.15e-3;
    const VesselNetwork net = make_grid_network(params);
    REQUIRE(std::any_of(net.segments.begin(), net.segments.end(),
                        [](const VesselSegment& s) { return s.collapsed; }));

    StructuredQuadMesh mesh(8, 8, 1e-3, 1e-3);
    const EmbeddingTable table = embed_network(net, mesh);
    double total = 0.0;
    for (const auto& pt : table.points)
        total += pt.weight;
    const double expected = net.active_length();
    CHECK(std::abs(total - expected) <= 1e-10 * expected);
    CHECK(table.total_length == doctest::Approx(expected).epsilon(1e-12));

    // Sub-intervals never exceed half the element edge.
    for (int s = 0; s < static_cast<int>(net.segments.size()); ++s) {
        const auto [begin, end] = table.segment_range[s];
        if (net.segments[s].collapsed) {
            CHECK(begin == end);
            continue;
        }
        for (int k = begin; k < end; k += 2)
            CHECK(table.points[k].weight + table.points[k + 1].weight <=
                  0.5 * std::min(mesh.hx(), mesh.hy()) * (1 + 1e-12));
    }
}

TEST_CASE("embedding rejects endpoints outside the mesh") {
    StructuredQuadMesh mesh(4, 4, 1e-3, 1e-3);
    VesselNetwork net;
    net.nodes = {{{-0.1e-3, 0.5e-3}}, {{0.5e-3, 0.5e-3}}};
    net.segments = {{0, 1, 5e-6, false}};
    CHECK_THROWS_WITH_AS(embed_network(net, mesh), doctest::Contains("segment 0"),
                         ConfigError);
}

TEST_CASE("segment interpolation is linear in arc length") {
    VesselNetwork net = straight_chain(1, 2e-3, 5e-6);
    const std::vector<double> nodal{1.0, 3.0};
    CHECK(interpolate_segment(net, nodal, 0, 0.5e-3) == doctest::Approx(1.5));
    CHECK(interpolate_segment(net, nodal, 0, 2e-3) == doctest::Approx(3.0));
}

TEST_CASE("uniform concentration at the inlet value is a steady state") {
    VesselNetwork net = straight_chain(4, 2e-3, 10e-6);
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0},
               {0, NetworkBcKind::inlet_conc, 0.4},
               {4, NetworkBcKind::outlet_p, 0.0}};
    const NetworkFlow flow = solve_network_flow(net);
    std::vector<double> omega(net.nodes.size(), 0.4);
    const auto out = advance_network_transport(net, flow, omega, 1.0, 1e-11, 1.0, 1000.0,
                                               nullptr);
    for (double w : out.omega)
        CHECK(w == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(out.residual <= 1e-15);
}

TEST_CASE("no flow, no diffusion, no transfer leaves the field unchanged") {
    VesselNetwork net = straight_chain(3, 1.5e-3, 8e-6);
    NetworkFlow still;
    still.node_pressure.assign(net.nodes.size(), 0.0);
    still.segment_flow.assign(net.segments.size(), 0.0);
    const std::vector<double> omega{0.1, 0.5, 0.2, 0.0};
    const auto out = advance_network_transport(net, still, omega, 5.0, 0.0, 0.0, 1000.0,
                                               nullptr);
    for (std::size_t i = 0; i < omega.size(); ++i)
        CHECK(out.omega[i] == doctest::Approx(omega[i]).epsilon(1e-14));
}

TEST_CASE("advected front sits at (Q/A) t within one cell") {
    const int cells = 100;
    VesselNetwork net = straight_chain(cells, 2e-3, 10e-6);
    net.bcs = {{0, NetworkBcKind::inlet_p, 480.0},
               {0, NetworkBcKind::inlet_conc, 1.0},
               {cells, NetworkBcKind::outlet_p, 0.0}};
    const NetworkFlow flow = solve_network_flow(net);
    const double area = M_PI * 10e-6 * 10e-6;
    const double v = flow.segment_flow[0] / area;
    CHECK(v == doctest::Approx(1e-3).epsilon(1e-10)); // 480 Pa over 2 mm at R=10 um

    std::vector<double> omega(net.nodes.size(), 0.0);
    const double dt = 0.05;
    const int steps = 20;
    for (int s = 0; s < steps; ++s)
        omega = advance_network_transport(net, flow, omega, dt, 0.0, 1.0, 1000.0, nullptr)
                    .omega;

    const double dx = 2e-3 / cells;
    double front = -1.0;
    for (int i = 0; i < cells; ++i)
        if (omega[i] >= 0.5 && omega[i + 1] < 0.5) {
            front = (i + (omega[i] - 0.5) / (omega[i] - omega[i + 1])) * dx;
            break;
        }
    REQUIRE(front > 0.0);
    CHECK(std::abs(front - v * dt * steps) <= dx);
}

TEST_CASE("closed network conserves mass under diffusion to round-off") {
    VesselNetwork net = straight_chain(20, 2e-3, 10e-6);
    NetworkFlow still;
    still.node_pressure.assign(net.nodes.size(), 0.0);
    still.segment_flow.assign(net.segments.size(), 0.0);
    std::vector<double> omega(net.nodes.size(), 0.0);
    for (int i = 8; i <= 12; ++i)
        omega[i] = 0.7;
    const double rho = 1000.0;
    const double mass0 = total_lumen_mass(net, omega, rho);
    for (int s = 0; s < 10; ++s) {
        const auto out = advance_network_transport(net, still, omega, 2.0, 1e-9, 0.0, rho,
                                                   nullptr);
        omega = out.omega;
        CHECK(std::abs(out.mass - total_lumen_mass(net, omega, rho)) <= 1e-15);
        CHECK(out.residual <= 1e-12 * mass0);
        CHECK(std::abs(out.mass - mass0) <= 1e-10 * mass0);
    }
}

TEST_CASE("discrete maximum principle on a merging grid flow") {
    GridNetworkParams params;
    params.width = 4e-4;
    params.height = 4e-4;
    params.spacing = 1e-4;
    params.seed = 3;
    params.inlet_omega = 1.0;
    const VesselNetwork net = make_grid_network(params);
    const NetworkFlow flow = solve_network_flow(net);

    std::vector<double> omega(net.nodes.size());
    unsigned long long state = 42;
    for (auto& w : omega) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        w = 0.3 * static_cast<double>(state >> 11) * 0x1.0p-53;
    }
    for (int s = 0; s < 15; ++s) {
        omega = advance_network_transport(net, flow, omega, 5.0, 1e-11, 1.0, 1000.0,
                                          nullptr)
                    .omega;
        for (double w : omega) {
            CHECK(w >= -1e-12);
            CHECK(w <= 1.0 + 1e-12);
        }
    }
    // Washout: once the inlet drops to zero the maximum can only decay.
    double prev_max = *std::max_element(omega.begin(), omega.end());
    for (int s = 0; s < 10; ++s) {
        omega = advance_network_transport(net, flow, omega, 5.0, 1e-11, 0.0, 1000.0,
                                          nullptr)
                    .omega;
        const double now = *std::max_element(omega.begin(), omega.end());
        CHECK(now <= prev_max + 1e-12);
        prev_max = now;
    }
}

TEST_CASE("wall transfer terms act as exact decay and source") {
    VesselNetwork net = straight_chain(2, 2e-3, 10e-6);
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0}, {2, NetworkBcKind::outlet_p, 100.0}};
    const NetworkFlow flow = solve_network_flow(net);
    for (double q : flow.segment_flow)
        CHECK(q == 0.0);

    std::vector<double> volume(net.nodes.size(), 0.0);
    for (int s = 0; s < 2; ++s) {
        const double half = 0.5 * M_PI * 1e-10 * 1e-3;
        volume[net.segments[s].a] += half;
        volume[net.segments[s].b] += half;
    }

    const double rho = 1000.0;
    SUBCASE("pure decay") {
        NetworkTransferTerms transfer;
        const double rate = 0.01; // 1/s
        for (double vol : volume)
            transfer.lin.push_back(rate * vol);
        transfer.rhs.assign(net.nodes.size(), 0.0);
        const std::vector<double> omega(net.nodes.size(), 0.6);
        const double dt = 10.0;
        const auto out =
            advance_network_transport(net, flow, omega, dt, 0.0, 0.0, rho, &transfer);
        for (double w : out.omega)
            CHECK(w == doctest::Approx(0.6 / (1.0 + rate * dt)).epsilon(1e-12));
        const double mass0 = total_lumen_mass(net, omega, rho);
        CHECK(out.transfer_rate ==
              doctest::Approx((mass0 - out.mass) / dt).epsilon(1e-10));
        CHECK(out.residual <= 1e-25);
    }
    SUBCASE("pure source") {
        NetworkTransferTerms transfer;
        transfer.lin.assign(net.nodes.size(), 0.0);
        const double rate = 1e-3; // mass fraction per second
        for (double vol : volume)
            transfer.rhs.push_back(rate * vol);
        const std::vector<double> omega(net.nodes.size(), 0.1);
        const auto out =
            advance_network_transport(net, flow, omega, 10.0, 0.0, 0.0, rho, &transfer);
        for (double w : out.omega)
            CHECK(w == doctest::Approx(0.1 + rate * 10.0).epsilon(1e-12));
    }
}

TEST_CASE("network file round-trips exactly") {
    GridNetworkParams params;
    params.width = 3e-4;
    params.height = 3e-4;
    params.spacing = 1e-4;
    params.seed = 11;
    params.collapse_enabled = true;
    params.collapse_centre = {1.5e-4, 1.5e-4};
    params.collapse_radius = 8e-5;
    const VesselNetwork net = make_grid_network(params);
    save_network(net, "tmp_network_roundtrip.txt");
    const VesselNetwork loaded = load_network("tmp_network_roundtrip.txt");

    REQUIRE(loaded.nodes.size() == net.nodes.size());
    REQUIRE(loaded.segments.size() == net.segments.size());
    REQUIRE(loaded.bcs.size() == net.bcs.size());
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        CHECK(loaded.nodes[i].pos.x == net.nodes[i].pos.x);
        CHECK(loaded.nodes[i].pos.y == net.nodes[i].pos.y);
    }
    for (std::size_t s = 0; s < net.segments.size(); ++s) {
        CHECK(loaded.segments[s].a == net.segments[s].a);
        CHECK(loaded.segments[s].b == net.segments[s].b);
        CHECK(loaded.segments[s].radius == net.segments[s].radius);
        CHECK(loaded.segments[s].collapsed == net.segments[s].collapsed);
    }
    for (std::size_t b = 0; b < net.bcs.size(); ++b) {
        CHECK(loaded.bcs[b].node == net.bcs[b].node);
        CHECK(loaded.bcs[b].kind == net.bcs[b].kind);
        CHECK(loaded.bcs[b].value == net.bcs[b].value);
    }
    std::filesystem::remove("tmp_network_roundtrip.txt");
}

TEST_CASE("network file loader rejects structural errors") {
    SUBCASE("zero radius on an open segment") {
        std::ofstream out("tmp_net_bad.txt");
        out << "NODES\n0 0 0\n1 1e-3 0\nSEGMENTS\n0 0 1 0 0\nBC\n0 inlet_p 100\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_network("tmp_net_bad.txt"), doctest::Contains("radius"),
                             ConfigError);
    }
    SUBCASE("unknown boundary kind") {
        std::ofstream out("tmp_net_bad.txt");
        out << "NODES\n0 0 0\n1 1e-3 0\nSEGMENTS\n0 0 1 5e-6 0\nBC\n0 inlet_x 100\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_network("tmp_net_bad.txt"),
                             doctest::Contains("unknown boundary kind"), ConfigError);
    }
    SUBCASE("non-contiguous node ids") {
        std::ofstream out("tmp_net_bad.txt");
        out << "NODES\n0 0 0\n2 1e-3 0\nSEGMENTS\nBC\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_network("tmp_net_bad.txt"),
                             doctest::Contains("contiguous"), ConfigError);
    }
    SUBCASE("data before a section") {
        std::ofstream out("tmp_net_bad.txt");
        out << "0 0 0\nNODES\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_network("tmp_net_bad.txt"),
                             doctest::Contains("section"), ConfigError);
    }
    std::filesystem::remove("tmp_net_bad.txt");
}

TEST_CASE("grid generator radii match the target distribution") {
    GridNetworkParams params;
    params.width = 2e-3;
    params.height = 2e-3;
    params.spacing = 5e-5;
    const VesselNetwork net = make_grid_network(params);
    CHECK(net.segments.size() > 3000);
    CHECK(net.mean_radius() == doctest::Approx(6.98e-6).epsilon(0.05));
    double lo = 1e9, hi = 0.0;
    for (const auto& s : net.segments) {
        lo = std::min(lo, s.radius);
        hi = std::max(hi, s.radius);
    }
    CHECK(lo >= 1.6e-6);
    CHECK(hi <= 30e-6);

    // Same seed, same radii; different seed, different radii.
    const VesselNetwork again = make_grid_network(params);
    for (std::size_t s = 0; s < net.segments.size(); ++s)
        CHECK(again.segments[s].radius == net.segments[s].radius);
    params.seed = 2;
    const VesselNetwork other = make_grid_network(params);
    bool any_diff = false;
    for (std::size_t s = 0; s < net.segments.size(); ++s)
        any_diff = any_diff || other.segments[s].radius != net.segments[s].radius;
    CHECK(any_diff);
}

TEST_CASE("tree generator yields a flow-through arterio-venous tree") {
    TreeNetworkParams params;
    params.levels = 3;
    const VesselNetwork net = make_tree_network(params);
    CHECK_FALSE(net.connectivity_warning().has_value());
    const NetworkFlow flow = solve_network_flow(net);

    // The capillary bridges are appended last, one per leaf pair. By symmetry
    // they all carry the same flow and jointly the whole inlet flow.
    const int bridges = 1 << params.levels;
    const int first_bridge = static_cast<int>(net.segments.size()) - bridges;
    double total = 0.0;
    for (int s = first_bridge; s < static_cast<int>(net.segments.size()); ++s) {
        CHECK(flow.segment_flow[s] ==
              doctest::Approx(flow.segment_flow[first_bridge]).epsilon(1e-10));
        total += flow.segment_flow[s];
    }
    // Segments 0 and 1 leave the inlet node.
    const double inlet_flow = flow.segment_flow[0] + flow.segment_flow[1];
    CHECK(inlet_flow == doctest::Approx(total).epsilon(1e-10));
    CHECK(inlet_flow > 0.0);
    for (const auto& s : net.segments) {
        CHECK(s.radius >= params.radius_leaf);
        CHECK(s.radius <= params.radius_root);
    }
}

} // TEST_SUITE
