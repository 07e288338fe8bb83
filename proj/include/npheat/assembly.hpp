#ifndef NPHEAT_ASSEMBLY_HPP
#define NPHEAT_ASSEMBLY_HPP

#include <memory>

#include "npheat/linsolve.hpp"
#include "npheat/mesh.hpp"

namespace npheat {

// Sparsity of any Q1 Galerkin operator on the mesh. Built once and shared so
// the solver's factorisation cache survives across time steps.
std::shared_ptr<const CsrPattern> build_q1_pattern(const StructuredQuadMesh& mesh);

} // namespace npheat

#endif
