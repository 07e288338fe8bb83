#ifndef NPHEAT_FIELDS_HPP
#define NPHEAT_FIELDS_HPP

#include <array>
#include <string>
#include <vector>

#include "npheat/mesh.hpp"

namespace npheat {

// Nodal description of the tumour microenvironment on a structured mesh.
//
// The ECM scaffold (volume fraction eps_s) holds a pore space of porosity eps
// shared by tumour cells (t), host cells (h) and interstitial fluid (l) with
// saturations S^t + S^h + S^l = 1, next to a homogenised vascular compartment
// eps_v. Volume fractions: eps_s + eps + eps_v = 1, eps_t = eps*S_t, ...
struct PhaseFields {
    std::vector<double> eps;   // ECM porosity (-)
    std::vector<double> s_t;   // tumour-cell saturation (-)
    std::vector<double> s_h;   // host-cell saturation (-)
    std::vector<double> s_l;   // interstitial-fluid saturation (-)
    std::vector<double> eps_v; // vascular volume fraction (-)
    std::vector<double> p_l;   // interstitial fluid pressure (Pa)
    std::vector<double> p_v;   // homogenised vessel blood pressure (Pa)
    std::vector<double> p_t;   // tumour-cell pressure (Pa)

    int size() const { return static_cast<int>(eps.size()); }
    double eps_s(int node) const { return 1.0 - eps[node] - eps_v[node]; }

    // Enforces the saturation and volume-fraction sum rules (tolerance 1e-10)
    // and 0 <= fraction <= 1; throws naming the first offending node.
    void validate() const;
};

// Nanoparticle transport coefficients. Values the paper defers to prior work
// carry engineering defaults here; every preset that overrides them says so.
struct TransportCoefficients {
    double d_np = 1.2955e-11;  // nanoparticle diffusivity in IF (m^2/s)
    double k_l = 1.0e-15;      // ECM permeability (m^2)
    double mu_l = 1.0e-3;      // IF dynamic viscosity (Pa s)
    double rho_l = 1000.0;     // IF density (kg/m^3)
    double rho_v = 1000.0;     // blood density (kg/m^3)
    double l_p_v = 1.0e-10;    // vessel wall hydraulic conductivity (m^2 s/kg)
    double s_over_v = 7000.0;  // vessel surface-to-volume ratio (1/m)
    double p_wall = 2.0e-9;    // vessel wall permeability P^v (m/s)
    double sigma = 0.0;        // osmotic reflection coefficient (-)
    double pi_v = 0.0;         // vascular oncotic pressure (Pa)
    double pi_l = 0.0;         // interstitial oncotic pressure (Pa)
    double lp_sv_ly = 1.04e-6; // lymphatic filtration coefficient (1/(Pa s))
    double p_ly = 0.0;         // lymphatic pressure (Pa)
    double p_coll = 133.0;     // lymphatic collapsing pressure (Pa)

    double k_over_mu() const { return k_l / mu_l; }
    void validate() const;
};

// Radially symmetric stand-in for a grown spherical tumour: tanh saturation
// profile, a non-perfused core, and an interstitial pressure peak.
struct IdealisedTumourParams {
    Vec2 centre{0.0, 0.0};
    double tumour_radius = 400e-6;    // S_t = 1/2 crossing (m)
    double transition_width = 40e-6;  // tanh width of the S_t profile (m)
    double core_radius = 400e-6;      // eps_v transition radius (m)
    double core_width = 40e-6;        // tanh width of the eps_v profile (m)
    double porosity = 0.8;            // uniform ECM porosity (-)
    double host_s_l = 0.6;            // far-field IF saturation (-)
    double core_s_l = 5e-4;           // residual IF saturation where S_t ~ 1 (-)
    double host_eps_v = 0.028;        // vascular fraction outside the core (-)
    double p_l_peak = 533.28954966;   // 4 mmHg IF pressure at the centre (Pa)
    double p_l_plateau = 400e-6;      // radius of the flat IF pressure plateau (m)
    double p_l_radius = 400e-6;       // Gaussian decay radius of p_l past the plateau (m)
    double p_v = 2500.0;              // uniform homogenised vessel pressure (Pa)
    double p_t_peak = 400.0;          // tumour-cell pressure at S_t = 1 (Pa)
};
PhaseFields generate_idealised_tumour(const StructuredQuadMesh& mesh,
                                      const IdealisedTumourParams& params);

// Elliptic tumour without a vascular compartment (perfusion neglected).
struct EllipseTumourParams {
    Vec2 centre{0.0, 0.0};
    double a = 4e-3;                  // semi-axis along x (m)
    double b = 2e-3;                  // semi-axis along y (m)
    double transition_width = 0.2e-3; // physical tanh width near the minor axis (m)
    double st_max = 1.0;              // S_t plateau value inside the ellipse (-)
    double porosity = 0.8;
    double fluid_fraction = 0.6;      // IF share of the non-tumour pore space (-)
};
PhaseFields generate_ellipse_tumour(const StructuredQuadMesh& mesh,
                                    const EllipseTumourParams& params);

// IF Darcy flux q^l = -(k^l/mu^l) grad p^l per element Gauss point (gauss4
// ordering). Used as the advective flux in nanoparticle transport and as the
// fluid convective velocity in the heat equation.
std::vector<std::array<Vec2, 4>> darcy_velocity(const StructuredQuadMesh& mesh,
                                                const PhaseFields& fields,
                                                const TransportCoefficients& coeffs);

// Plain-text field file: header "x y eps S_t S_h S_l eps_v p_l p_v p_t", one
// row per node in mesh node order, full double precision.
struct LoadedFields {
    std::vector<Vec2> coords;
    PhaseFields fields;
};
LoadedFields load_fields(const std::string& path);
void save_fields(const StructuredQuadMesh& mesh, const PhaseFields& fields,
                 const std::string& path);

} // namespace npheat

#endif
