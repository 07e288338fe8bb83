#ifndef NPHEAT_TRANSPORT_HPP
#define NPHEAT_TRANSPORT_HPP

#include <memory>
#include <vector>

#include "npheat/fields.hpp"
#include "npheat/linsolve.hpp"
#include "npheat/mesh.hpp"
#include "npheat/vasculature.hpp"

namespace npheat {

// How the vascular compartment feeds the interstitial nanoparticle balance:
// not at all, as a homogenised volume-fraction field (eps_v, p_v, uniform
// omega_v), or as an embedded 1D network with its own solved omega field.
enum class VasculatureMode { none, lumped, discrete };

// Nanoparticle mass fractions in the interstitial fluid and (lumped mode) the
// vascular compartment. Both start at zero: injection begins at t = 0.
struct TransportState {
    std::vector<double> omega_l;
    double omega_v = 0.0;
    double time = 0.0;
};
TransportState make_initial_transport_state(int num_nodes);

// Bolus injection held at a constant systemic concentration: the vascular
// mass fraction is omega_v_d inside [t_start, t_end] and zero outside.
struct InjectionWindow {
    double omega_v_d = 0.0;
    double t_start = 0.0; // s
    double t_end = 0.0;   // s, inclusive
};
double injection_value(const InjectionWindow& window, double t);

// Local state for the wall-exchange kernels. Lumped mode reads eps_v, discrete
// mode reads radius; both read the pressure jump and the two mass fractions.
struct ExchangePoint {
    double eps_v = 0.0;        // vascular volume fraction (-)
    double radius = 0.0;       // vessel radius (m)
    double p_vessel = 0.0;     // blood pressure (Pa)
    double p_l = 0.0;          // IF pressure (Pa)
    double omega_vessel = 0.0; // vascular NP mass fraction (-)
    double omega_l = 0.0;      // IF NP mass fraction (-)
};

// Pressure-driven advective leakage through inter-endothelial gaps, carrying
// the mean of the two mass fractions. Signed: a reversed pressure jump pulls
// mass back into the vessel. Lumped: kg/(m^3 s); discrete: kg/(m s).
double transfer_interendothelial(VasculatureMode mode, const TransportCoefficients& coeffs,
                                 const ExchangePoint& x);

// Diffusive wall permeation, one-way by the Macaulay bracket <omega_v - omega_l>+.
double transfer_transendothelial(VasculatureMode mode, const TransportCoefficients& coeffs,
                                 const ExchangePoint& x);

// Lymphatic drainage sink, shut off below the lymphatic pressure and above the
// collapsing tumour-cell pressure. kg/(m^3 s).
double lymph_drainage(const TransportCoefficients& coeffs, double p_l, double p_t,
                      double omega_l);

// Wall exchange of an embedded network aggregated onto vessel nodes, implicit
// in the vessel fraction and frozen at the given IF fraction. Gate states use
// the given (old) values. Feeds advance_network_transport.
NetworkTransferTerms compute_network_transfer(const VesselNetwork& network,
                                              const EmbeddingTable& embedding,
                                              const StructuredQuadMesh& mesh,
                                              const PhaseFields& fields,
                                              const TransportCoefficients& coeffs,
                                              const std::vector<double>& p_vessel,
                                              const std::vector<double>& omega_vessel,
                                              const std::vector<double>& omega_l);

// Discrete-mode inputs of a transport step: the network geometry, its mesh
// embedding, and the already-advanced nodal vessel pressure and mass fraction.
struct DiscreteCoupling {
    const VesselNetwork* network = nullptr;
    const EmbeddingTable* embedding = nullptr;
    const std::vector<double>* pressure = nullptr;
    const std::vector<double>* omega_vessel = nullptr;
};

struct TransportOptions {
    VasculatureMode mode = VasculatureMode::lumped;
    // Adds artificial diffusion along streamlines. Off by default: the scheme
    // is plain Galerkin and convection-dominated elements only warn.
    bool streamline_diffusion = false;
    int max_picard_sweeps = 5;
    bool quiet = false; // suppress the element Peclet warning
    // Optional nodal volumetric source (kg/(m^3 s)), e.g. a manufactured
    // forcing term. Interpolated bilinearly like every other nodal field.
    const std::vector<double>* volumetric_source = nullptr;
    SolveOptions solve;
};

// Mass budget of one step, re-evaluated from the converged solution with the
// assembly quadrature. residual = |d(mass)/dt + advection + lymph + drag
// - inter - trans - source|, which closes to solver tolerance.
struct TransportAudit {
    double mass_old = 0.0;       // kg (per metre depth)
    double mass_new = 0.0;
    double inter_rate = 0.0;     // kg/s, wall leakage into the IF (volume + line)
    double trans_rate = 0.0;     // kg/s, wall permeation into the IF
    double lymph_rate = 0.0;     // kg/s, lymphatic drainage out
    double drag_rate = 0.0;      // kg/s, fluid-loss drag -omega * sum(M_fluid)
    double advection_rate = 0.0; // kg/s, net advective outflux
    double source_rate = 0.0;    // kg/s, volumetric forcing in
    double residual = 0.0;       // kg/s
    int picard_sweeps = 0;
    double max_element_peclet = 0.0;
};

// One backward-Euler Galerkin step of the IF nanoparticle balance: storage
// rho_l*eps*S_l, advection by the Darcy flux of p_l, diffusion with D_np,
// wall exchange minus drainage minus fluid-loss drag, zero-diffusive-flux
// outer boundary. The trans-endothelial Macaulay bracket is handled by Picard
// sweeps on its active set. Discrete mode distributes the line kernels through
// the embedding table; lumped mode drives omega_v from the injection window,
// sampled at the end of the step.
TransportState advance_transport_step(const TransportState& state,
                                      const StructuredQuadMesh& mesh,
                                      const PhaseFields& fields,
                                      const TransportCoefficients& coeffs,
                                      const InjectionWindow& injection,
                                      const DiscreteCoupling* discrete, double dt,
                                      const TransportOptions& opts,
                                      const std::shared_ptr<const CsrPattern>& pattern,
                                      LinearSolver& solver, TransportAudit* audit = nullptr);

} // namespace npheat

#endif
