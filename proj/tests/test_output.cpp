#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "npheat/errors.hpp"
#include "npheat/mesh.hpp"
#include "npheat/output.hpp"
#include "npheat/vasculature.hpp"

using namespace npheat;

TEST_SUITE("output") {

TEST_CASE("format_double round-trips through text exactly") {
    for (double v : {1.0 / 3.0, 6.283185307179586, 1e-300, -2.2250738585072014e-308, 0.0,
                     533.28954966}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("atomic write creates parents and leaves no temp file") {
    const std::string path = "tmp_out/sub/file.txt";
    atomic_write_text(path, "payload\n");
    std::ifstream in(path);
    std::string word;
    in >> word;
    CHECK(word == "payload");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    std::filesystem::remove_all("tmp_out");
}

TEST_CASE("grid snapshot stores every field and is re-readable") {
    StructuredQuadMesh mesh(3, 2, 0.3, 0.2);
    std::vector<double> temperature(mesh.num_nodes(), 310.15);
    std::vector<double> omega(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i)
        omega[i] = 0.001 * i;
    const std::string path = "tmp_snapshot.vtk";
    write_snapshot(mesh, {{"T", &temperature}, {"omega_l", &omega}}, path);

    CHECK(snapshot_node_count(path) == mesh.num_nodes());

    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    CHECK(text.find("DATASET STRUCTURED_GRID") != std::string::npos);
    CHECK(text.find("DIMENSIONS 4 3 1") != std::string::npos);
    CHECK(text.find("SCALARS T double 1") != std::string::npos);
    CHECK(text.find("SCALARS omega_l double 1") != std::string::npos);
    CHECK(text.find(format_double(310.15)) != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("snapshot writer rejects mis-sized fields") {
    StructuredQuadMesh mesh(3, 2, 0.3, 0.2);
    std::vector<double> wrong(5, 0.0);
    CHECK_THROWS_AS(write_snapshot(mesh, {{"T", &wrong}}, "tmp_bad.vtk"), ConfigError);
    CHECK_FALSE(std::filesystem::exists("tmp_bad.vtk"));
}

TEST_CASE("network snapshot lists segments as polylines") {
    VesselNetwork net;
    net.nodes = {{{0.0, 0.0}}, {{1e-3, 0.0}}, {{2e-3, 1e-3}}};
    net.segments = {{0, 1, 8e-6, false}, {1, 2, 5e-6, false}};
    net.bcs = {{0, NetworkBcKind::inlet_p, 100.0}, {2, NetworkBcKind::outlet_p, 0.0}};
    const NetworkFlow flow = solve_network_flow(net);
    std::vector<double> omega(net.nodes.size(), 0.25);
    const std::string path = "tmp_network.vtk";
    write_network_snapshot(net, flow, omega, path);

    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    CHECK(text.find("DATASET POLYDATA") != std::string::npos);
    CHECK(text.find("LINES 2 6") != std::string::npos);
    CHECK(text.find("SCALARS radius double 1") != std::string::npos);
    CHECK(text.find("SCALARS flow double 1") != std::string::npos);
    CHECK(text.find("SCALARS omega double 1") != std::string::npos);
    CHECK(text.find("SCALARS pressure double 1") != std::string::npos);
    std::filesystem::remove(path);
}

} // TEST_SUITE
