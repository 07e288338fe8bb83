#ifndef NPHEAT_OUTPUT_HPP
#define NPHEAT_OUTPUT_HPP

#include <string>
#include <utility>
#include <vector>

#include "npheat/mesh.hpp"

namespace npheat {

struct VesselNetwork;
struct NetworkFlow;

// All writers go through a temp-file + rename so interrupted runs never leave
// truncated output behind.
void atomic_write_text(const std::string& path, const std::string& content);

// Full-precision decimal formatting ("%.17g"): reruns of a deterministic
// simulation produce bitwise-identical text.
std::string format_double(double value);

// Legacy ASCII structured-grid snapshot, one POINT_DATA scalar per named
// field, nodes in mesh (y-major lexicographic) order.
void write_snapshot(const StructuredQuadMesh& mesh,
                    const std::vector<std::pair<std::string, const std::vector<double>*>>& fields,
                    const std::string& path);

// Re-reads only the grid dimensions of a snapshot (regression hook).
int snapshot_node_count(const std::string& path);

// Legacy ASCII polyline snapshot of the vessel network: per-segment radius,
// flow and collapse flag, per-node pressure and nanoparticle mass fraction.
void write_network_snapshot(const VesselNetwork& network, const NetworkFlow& flow,
                            const std::vector<double>& omega_hat, const std::string& path);

} // namespace npheat

#endif
