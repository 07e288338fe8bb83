#ifndef NPHEAT_BIOHEAT_HPP
#define NPHEAT_BIOHEAT_HPP

#include <array>
#include <memory>
#include <vector>

#include "npheat/fields.hpp"
#include "npheat/linsolve.hpp"
#include "npheat/mesh.hpp"
#include "npheat/transport.hpp"
#include "npheat/vasculature.hpp"

namespace npheat {

// Phase index into the per-phase thermal property arrays.
enum Phase : int { phase_s = 0, phase_t = 1, phase_h = 2, phase_l = 3, phase_v = 4 };
inline constexpr int kNumPhases = 5;

// Per-phase thermal properties plus the heating and perfusion parameters.
// Tissue phases share textbook water-like values by default; presets that
// distinguish them say so.
struct ThermalParams {
    std::array<double, kNumPhases> c_p{3470.0, 3470.0, 3470.0, 3470.0, 3470.0}; // J/(kg K)
    std::array<double, kNumPhases> rho{1000.0, 1000.0, 1000.0, 1000.0, 1000.0}; // kg/m^3
    std::array<double, kNumPhases> kappa{0.51, 0.51, 0.51, 0.51, 0.51};         // W/(m K)
    double sar = 0.0;        // specific absorption rate of the NP mass (W/kg)
    double w = 0.0;          // lumped blood perfusion rate (1/s)
    double beta_wall = 20.0; // vessel-wall heat exchange, discrete mode (W/(m^2 K))
    double t_b = 310.15;     // arterial blood / body temperature (K)

    void validate() const;
};

// Nodal absolute temperature. Starts at body temperature.
struct ThermalState {
    std::vector<double> temperature; // K
    double time = 0.0;
};
ThermalState make_initial_thermal_state(int num_nodes, const ThermalParams& params);

// Magnetic field on/off interval; the SAR source acts inside [t_start, t_end].
struct HeatingWindow {
    double t_start = 0.0; // s
    double t_end = 0.0;   // s, inclusive
};
bool heating_active(const HeatingWindow& window, double t);

// Volume-weighted mixture coefficients. The five fractions must partition the
// unit volume; callers pass eps_s = 1 - eps - eps_v for the scaffold.
struct EffectiveProps {
    double c_rho = 0.0; // J/(m^3 K)
    double kappa = 0.0; // W/(m K)
};
EffectiveProps effective_props(const ThermalParams& params,
                               const std::array<double, kNumPhases>& eps);

// SAR source carried by the nanoparticle mass in each fluid compartment.
// Volume part W/m^3; line part W/m for an embedded vessel of radius r.
double heat_source_qp(const ThermalParams& params, double eps_v, double eps_s_l,
                      double omega_v, double omega_l);
double heat_source_line(const ThermalParams& params, double radius, double omega_vessel);

// Perfusion heat drain toward body temperature. Lumped: W/m^3 over the
// domain; discrete: W/m across the wall of a vessel of radius r, zero on
// collapsed segments (r = 0).
double heat_sink_lumped(const ThermalParams& params, double t);
double heat_sink_discrete(const ThermalParams& params, double radius, double t);

enum class HeatBcKind { insulated, robin, dirichlet };

// Outer-boundary condition of one mesh side. Robin exchanges with the body
// temperature through beta; dirichlet pins the side to value.
struct HeatSideBc {
    HeatBcKind kind = HeatBcKind::insulated;
    double beta = 20.0;   // W/(m^2 K)
    double value = 310.15; // K
};

struct HeatBcs {
    HeatSideBc left, right, bottom, top;
    const HeatSideBc& side(Side s) const;
};

struct HeatOptions {
    VasculatureMode mode = VasculatureMode::lumped;
    HeatBcs bcs;
    // The IF Darcy flux is the only convective velocity the model defines;
    // dropping it recovers pure conduction-reaction.
    bool convection = true;
    // Optional nodal volumetric source (W/m^3), e.g. a manufactured forcing.
    const std::vector<double>* volumetric_source = nullptr;
    SolveOptions solve;
};

// Energy budget of one step, re-evaluated from the converged temperature with
// the assembly quadrature. Heat content is measured relative to t_b.
// residual = |d(content)/dt + convection + sink + line_sink + boundary
// - source|, which closes to solver tolerance.
struct HeatAudit {
    double content_old = 0.0;    // J (per metre depth)
    double content_new = 0.0;
    double source_rate = 0.0;    // W in: SAR volume + line + forcing
    double sink_rate = 0.0;      // W out: lumped perfusion drain
    double line_sink_rate = 0.0; // W out: discrete vessel-wall drain
    double boundary_rate = 0.0;  // W out through Robin and pinned sides
    double convection_rate = 0.0;// W net convective outflux
    double residual = 0.0;       // W
};

// One backward-Euler Galerkin step of the summed enthalpy balance: effective
// storage and conduction, IF-flux convection, SAR source gated by the heating
// window (sampled at the end of the step), lumped or line perfusion sink, and
// per-side Robin / insulated / pinned outer boundaries. Mass-transfer
// enthalpy between phases cancels in the sum and is never assembled. The
// system is solved in T - t_b, so an undisturbed state stays at body
// temperature exactly.
ThermalState advance_heat_step(const ThermalState& state, const StructuredQuadMesh& mesh,
                               const PhaseFields& fields,
                               const TransportCoefficients& coeffs,
                               const TransportState& transport, const ThermalParams& params,
                               const HeatingWindow& heating, const DiscreteCoupling* discrete,
                               double dt, const HeatOptions& opts,
                               const std::shared_ptr<const CsrPattern>& pattern,
                               LinearSolver& solver, HeatAudit* audit = nullptr);

} // namespace npheat

#endif
