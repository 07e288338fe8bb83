#include "npheat/assembly.hpp"

#include <array>
#include <span>

namespace npheat {

std::shared_ptr<const CsrPattern> build_q1_pattern(const StructuredQuadMesh& mesh)
{
    PatternBuilder builder(mesh.num_nodes());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        std::array<int, 4> nodes = mesh.element_nodes(e);
        builder.add_clique(std::span<const int>(nodes.data(), nodes.size()));
    }
    return builder.finalize();
}

} // namespace npheat
