#include "npheat/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "npheat/errors.hpp"
#include "npheat/mesh.hpp"
#include "npheat/vasculature.hpp"

namespace npheat {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw ConfigError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ConfigError("cannot move snapshot into place: " + target.string());
    }
}

void write_snapshot(const StructuredQuadMesh& mesh,
                    const std::vector<std::pair<std::string, const std::vector<double>*>>& fields,
                    const std::string& path) {
    const int n = mesh.num_nodes();
    for (const auto& [name, data] : fields)
        if (static_cast<int>(data->size()) != n)
            throw ConfigError("snapshot field '" + name + "' sized for a different mesh");

    std::string out;
    out.reserve(static_cast<std::size_t>(n) * (fields.size() + 3) * 24 + 256);
    out += "# vtk DataFile Version 3.0\n";
    out += "npheat snapshot\n";
    out += "ASCII\n";
    out += "DATASET STRUCTURED_GRID\n";
    out += "DIMENSIONS " + std::to_string(mesh.nx() + 1) + " " + std::to_string(mesh.ny() + 1) +
           " 1\n";
    out += "POINTS " + std::to_string(n) + " double\n";
    for (int j = 0; j <= mesh.ny(); ++j)
        for (int i = 0; i <= mesh.nx(); ++i) {
            const Vec2 p = mesh.node_coord(mesh.node_id(i, j));
            out += format_double(p.x);
            out += ' ';
            out += format_double(p.y);
            out += " 0\n";
        }
    out += "POINT_DATA " + std::to_string(n) + "\n";
    for (const auto& [name, data] : fields) {
        out += "SCALARS " + name + " double 1\n";
        out += "LOOKUP_TABLE default\n";
        for (int i = 0; i < n; ++i) {
            out += format_double((*data)[i]);
            out += '\n';
        }
    }
    atomic_write_text(path, out);
}

int snapshot_node_count(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("snapshot not readable: " + path);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "POINTS") {
            int n = 0;
            if (!(ls >> n))
                throw ConfigError("snapshot " + path + ": malformed POINTS line");
            return n;
        }
    }
    throw ConfigError("snapshot " + path + ": no POINTS line found");
}

void write_network_snapshot(const VesselNetwork& network, const NetworkFlow& flow,
                            const std::vector<double>& omega_hat, const std::string& path) {
    const int n_nodes = static_cast<int>(network.nodes.size());
    const int n_segs = static_cast<int>(network.segments.size());
    if (static_cast<int>(flow.node_pressure.size()) != n_nodes ||
        static_cast<int>(flow.segment_flow.size()) != n_segs)
        throw ConfigError("network snapshot: flow sized for a different network");
    if (static_cast<int>(omega_hat.size()) != n_nodes)
        throw ConfigError("network snapshot: concentration sized for a different network");

    std::string out;
    out += "# vtk DataFile Version 3.0\n";
    out += "npheat vessel network\n";
    out += "ASCII\n";
    out += "DATASET POLYDATA\n";
    out += "POINTS " + std::to_string(n_nodes) + " double\n";
    for (const auto& nd : network.nodes) {
        out += format_double(nd.pos.x);
        out += ' ';
        out += format_double(nd.pos.y);
        out += " 0\n";
    }
    out += "LINES " + std::to_string(n_segs) + " " + std::to_string(3 * n_segs) + "\n";
    for (const auto& s : network.segments)
        out += "2 " + std::to_string(s.a) + " " + std::to_string(s.b) + "\n";
    out += "CELL_DATA " + std::to_string(n_segs) + "\n";
    out += "SCALARS radius double 1\nLOOKUP_TABLE default\n";
    for (const auto& s : network.segments) {
        out += format_double(s.radius);
        out += '\n';
    }
    out += "SCALARS flow double 1\nLOOKUP_TABLE default\n";
    for (int s = 0; s < n_segs; ++s) {
        out += format_double(flow.segment_flow[s]);
        out += '\n';
    }
    out += "SCALARS collapsed double 1\nLOOKUP_TABLE default\n";
    for (const auto& s : network.segments) {
        out += format_double(s.collapsed ? 1.0 : 0.0);
        out += '\n';
    }
    out += "POINT_DATA " + std::to_string(n_nodes) + "\n";
    out += "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n_nodes; ++i) {
        out += format_double(flow.node_pressure[i]);
        out += '\n';
    }
    out += "SCALARS omega double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n_nodes; ++i) {
        out += format_double(omega_hat[i]);
        out += '\n';
    }
    atomic_write_text(path, out);
}

} // namespace npheat
