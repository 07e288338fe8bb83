#include "npheat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "npheat/assembly.hpp"
#include "npheat/bioheat.hpp"
#include "npheat/errors.hpp"
#include "npheat/fields.hpp"
#include "npheat/linsolve.hpp"
#include "npheat/mesh.hpp"
#include "npheat/transport.hpp"
#include "npheat/vasculature.hpp"

namespace npheat {

namespace {

constexpr double kPi = std::numbers::pi;

PhaseFields uniform_fields(int n, double p_l)
{
    PhaseFields f;
    f.eps.assign(n, 0.8);
    f.s_t.assign(n, 0.0);
    f.s_h.assign(n, 0.52);
    f.s_l.assign(n, 0.48);
    f.eps_v.assign(n, 0.028);
    f.p_l.assign(n, p_l);
    f.p_v.assign(n, 2500.0);
    f.p_t.assign(n, 0.0);
    return f;
}

VerifyResult judged(std::string case_name, std::string metric, double value,
                    double threshold)
{
    VerifyResult r;
    r.case_name = std::move(case_name);
    r.metric = std::move(metric);
    r.value = value;
    r.threshold = threshold;
    r.pass = value <= threshold;
    return r;
}

// Least-squares slope of log(err) against log(scale).
double fitted_order(const std::vector<double>& scales, const std::vector<double>& errors)
{
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = static_cast<int>(scales.size());
    for (int i = 0; i < n; ++i) {
        double x = std::log(scales[i]);
        double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct MmsSetup {
    double length = 2.0e-3; // m, square domain
    double tau = 300.0;     // s
    double amplitude = 1.0; // K
    double t_end = 60.0;    // s
    double grad_p = -2.0e5; // Pa/m along x, drives a uniform Darcy flux
};

// One full march of the manufactured problem; returns the final nodal rise
// T - t_b.
std::vector<double> mms_march(const MmsSetup& m, int n, double dt)
{
    StructuredQuadMesh mesh(n, n, m.length, m.length);
    int nn = mesh.num_nodes();
    PhaseFields f = uniform_fields(nn, 0.0);
    for (int i = 0; i < nn; ++i) f.p_l[i] = 800.0 + m.grad_p * mesh.node_coord(i).x;
    TransportCoefficients coeffs;
    ThermalParams params;
    params.w = 0.018;
    TransportState transport;
    transport.omega_l.assign(nn, 0.0);

    double q_x = -coeffs.k_over_mu() * m.grad_p;
    double conv_c = params.c_p[phase_l] * params.rho[phase_l] * q_x;
    double sink_c = params.rho[phase_v] * params.c_p[phase_v] * params.w;
    double c_eff = 3470.0 * 1000.0; // equal phase properties, fractions sum to one
    double kap = 0.51;
    double kx = kPi / m.length;
    double lam = kap * 2.0 * kx * kx;

    HeatOptions opts;
    opts.bcs.left = {HeatBcKind::dirichlet, 0.0, params.t_b};
    opts.bcs.right = {HeatBcKind::dirichlet, 0.0, params.t_b};
    opts.bcs.bottom = {HeatBcKind::dirichlet, 0.0, params.t_b};
    opts.bcs.top = {HeatBcKind::dirichlet, 0.0, params.t_b};
    std::vector<double> forcing(nn, 0.0);
    opts.volumetric_source = &forcing;

    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    ThermalState state = make_initial_thermal_state(nn, params);

    int steps = static_cast<int>(std::lround(m.t_end / dt));
    for (int s = 0; s < steps; ++s) {
        double t1 = state.time + dt;
        for (int i = 0; i < nn; ++i) {
            Vec2 p = mesh.node_coord(i);
            double envelope = 1.0 - std::exp(-t1 / m.tau);
            double shape = std::sin(kx * p.x) * std::sin(kx * p.y);
            double dshape_x = kx * std::cos(kx * p.x) * std::sin(kx * p.y);
            forcing[i] = c_eff * m.amplitude * shape * std::exp(-t1 / m.tau) / m.tau +
                         conv_c * m.amplitude * dshape_x * envelope +
                         lam * m.amplitude * shape * envelope +
                         sink_c * m.amplitude * shape * envelope;
        }
        state = advance_heat_step(state, mesh, f, coeffs, transport, params, {0.0, 0.0},
                                  nullptr, dt, opts, pattern, solver);
    }

    std::vector<double> rise(nn);
    for (int i = 0; i < nn; ++i) rise[i] = state.temperature[i] - params.t_b;
    return rise;
}

// L2 norm of (field - exact at t_end), quadrature with the exact solution
// evaluated at the physical quadrature points.
double mms_l2_vs_exact(const MmsSetup& m, int n, const std::vector<double>& rise)
{
    StructuredQuadMesh mesh(n, n, m.length, m.length);
    double kx = kPi / m.length;
    double envelope = 1.0 - std::exp(-m.t_end / m.tau);
    double err2 = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (const QuadPoint& qp : gauss4()) {
            ShapeValues s = shape_eval(qp.xi, qp.eta);
            Vec2 p = mesh.map_to_global(e, qp.xi, qp.eta);
            double th = 0.0;
            for (int a = 0; a < 4; ++a) th += s.n[a] * rise[nodes[a]];
            double diff = th -
                          m.amplitude * std::sin(kx * p.x) * std::sin(kx * p.y) * envelope;
            err2 += qp.weight * mesh.det_jacobian() * diff * diff;
        }
    }
    return std::sqrt(err2);
}

double l2_field_diff(int n, double length, const std::vector<double>& a,
                     const std::vector<double>& b)
{
    StructuredQuadMesh mesh(n, n, length, length);
    double err2 = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (const QuadPoint& qp : gauss4()) {
            ShapeValues s = shape_eval(qp.xi, qp.eta);
            double diff = 0.0;
            for (int k = 0; k < 4; ++k) diff += s.n[k] * (a[nodes[k]] - b[nodes[k]]);
            err2 += qp.weight * mesh.det_jacobian() * diff * diff;
        }
    }
    return std::sqrt(err2);
}

} // namespace

std::vector<VerifyResult> verify_mms_heat_space(const std::vector<int>& mesh_sizes)
{
    if (mesh_sizes.size() < 3)
        throw ConfigError("mms_heat_space: need at least three mesh levels");
    MmsSetup m;
    std::vector<VerifyResult> rows;
    std::vector<double> hs, errors;
    double dt0 = 4.0;
    for (size_t k = 0; k < mesh_sizes.size(); ++k) {
        int n = mesh_sizes[k];
        double ratio = static_cast<double>(mesh_sizes[0]) / n;
        double err = mms_l2_vs_exact(m, n, mms_march(m, n, dt0 * ratio * ratio));
        hs.push_back(m.length / n);
        errors.push_back(err);
        // Each refinement must beat the previous level, the first must at
        // least resolve the signal.
        double threshold = k == 0 ? m.amplitude : errors[k - 1];
        rows.push_back(judged("mms_heat_space", "l2_error_n" + std::to_string(n), err,
                              threshold));
    }
    double order = fitted_order(hs, errors);
    rows.push_back(judged("mms_heat_space", "order_deviation_from_2",
                          std::abs(order - 2.0), 0.1));

    MmsSetup silent = m;
    silent.amplitude = 0.0;
    double err0 = mms_l2_vs_exact(silent, mesh_sizes[0], mms_march(silent, mesh_sizes[0], dt0));
    rows.push_back(judged("mms_heat_space", "zero_source_l2_error", err0, 1e-12));
    return rows;
}

std::vector<VerifyResult> verify_mms_heat_time(const std::vector<double>& dts)
{
    if (dts.size() < 3) throw ConfigError("mms_heat_time: need at least three step sizes");
    MmsSetup m;
    int n = 32;
    // The reference run carries the same (fixed) spatial error, so the field
    // difference isolates the time-discretisation term.
    double dt_ref = *std::min_element(dts.begin(), dts.end()) / 32.0;
    std::vector<double> ref = mms_march(m, n, dt_ref);
    std::vector<VerifyResult> rows;
    std::vector<double> errors;
    for (size_t k = 0; k < dts.size(); ++k) {
        double err = l2_field_diff(n, m.length, mms_march(m, n, dts[k]), ref);
        errors.push_back(err);
        double threshold = k == 0 ? m.amplitude : errors[k - 1];
        rows.push_back(judged("mms_heat_time", "time_error_dt" + std::to_string(dts[k]), err,
                              threshold));
    }
    double order = fitted_order(dts, errors);
    rows.push_back(judged("mms_heat_time", "order_deviation_from_1", std::abs(order - 1.0),
                          0.1));
    return rows;
}

namespace {

struct TransportMmsSetup {
    double length = 2.0e-3;  // m, square domain
    double tau = 300.0;      // s
    double amplitude = 1e-3; // mass fraction
    double offset = 2.0;     // times amplitude, keeps omega* positive
    double t_end = 60.0;     // s
    double grad_p = -6.0e4;  // Pa/m along x; element Peclet stays below 2
};

// One full march of the manufactured transport problem; returns the final
// nodal omega_l. With omega_v = 0 and omega* > 0 the permeation gate stays
// closed and the drainage reaction cancels against the fluid-loss drag, so
// the continuous operator is storage + advection + diffusion + half the
// inter-endothelial leakage coefficient.
std::vector<double> transport_mms_march(const TransportMmsSetup& m, int n, double dt)
{
    StructuredQuadMesh mesh(n, n, m.length, m.length);
    int nn = mesh.num_nodes();
    PhaseFields f = uniform_fields(nn, 0.0);
    for (int i = 0; i < nn; ++i) f.p_l[i] = 800.0 + m.grad_p * mesh.node_coord(i).x;
    TransportCoefficients coeffs;

    double storage_c = coeffs.rho_l * 0.8 * 0.48;
    double diff_c = storage_c * coeffs.d_np;
    double q_x = -coeffs.k_over_mu() * m.grad_p;
    double kx = kPi / m.length;

    TransportOptions opts;
    opts.mode = VasculatureMode::lumped;
    opts.quiet = true;
    std::vector<double> forcing(nn, 0.0);
    opts.volumetric_source = &forcing;

    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    TransportState state = make_initial_transport_state(nn);

    int steps = static_cast<int>(std::lround(m.t_end / dt));
    for (int s = 0; s < steps; ++s) {
        double t1 = state.time + dt;
        double envelope = 1.0 - std::exp(-t1 / m.tau);
        double denv = std::exp(-t1 / m.tau) / m.tau;
        for (int i = 0; i < nn; ++i) {
            Vec2 p = mesh.node_coord(i);
            double shape = std::cos(kx * p.x) * std::cos(kx * p.y);
            double dshape_x = -kx * std::sin(kx * p.x) * std::cos(kx * p.y);
            double leak = 0.5 * coeffs.rho_v * 0.028 * coeffs.s_over_v * coeffs.l_p_v *
                          (2500.0 - f.p_l[i]);
            forcing[i] = storage_c * m.amplitude * (m.offset + shape) * denv +
                         coeffs.rho_l * q_x * m.amplitude * dshape_x * envelope +
                         diff_c * 2.0 * kx * kx * m.amplitude * shape * envelope +
                         leak * m.amplitude * (m.offset + shape) * envelope;
        }
        state = advance_transport_step(state, mesh, f, coeffs, {0.0, 0.0, 0.0}, nullptr,
                                       dt, opts, pattern, solver);
    }
    return state.omega_l;
}

double transport_mms_l2_vs_exact(const TransportMmsSetup& m, int n,
                                 const std::vector<double>& omega)
{
    StructuredQuadMesh mesh(n, n, m.length, m.length);
    double kx = kPi / m.length;
    double envelope = 1.0 - std::exp(-m.t_end / m.tau);
    double err2 = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (const QuadPoint& qp : gauss4()) {
            ShapeValues s = shape_eval(qp.xi, qp.eta);
            Vec2 p = mesh.map_to_global(e, qp.xi, qp.eta);
            double oh = 0.0;
            for (int a = 0; a < 4; ++a) oh += s.n[a] * omega[nodes[a]];
            double exact = m.amplitude *
                           (m.offset + std::cos(kx * p.x) * std::cos(kx * p.y)) * envelope;
            err2 += qp.weight * mesh.det_jacobian() * (oh - exact) * (oh - exact);
        }
    }
    return std::sqrt(err2);
}

} // namespace

std::vector<VerifyResult> verify_mms_transport_space(const std::vector<int>& mesh_sizes)
{
    if (mesh_sizes.size() < 3)
        throw ConfigError("mms_transport_space: need at least three mesh levels");
    TransportMmsSetup m;
    std::vector<VerifyResult> rows;
    std::vector<double> hs, errors;
    double dt0 = 4.0;
    for (size_t k = 0; k < mesh_sizes.size(); ++k) {
        int n = mesh_sizes[k];
        double ratio = static_cast<double>(mesh_sizes[0]) / n;
        double err =
            transport_mms_l2_vs_exact(m, n, transport_mms_march(m, n, dt0 * ratio * ratio));
        hs.push_back(m.length / n);
        errors.push_back(err);
        double threshold = k == 0 ? m.amplitude : errors[k - 1];
        rows.push_back(judged("mms_transport_space", "l2_error_n" + std::to_string(n), err,
                              threshold));
    }
    double order = fitted_order(hs, errors);
    rows.push_back(judged("mms_transport_space", "order_deviation_from_2",
                          std::abs(order - 2.0), 0.1));

    TransportMmsSetup silent = m;
    silent.amplitude = 0.0;
    double err0 = transport_mms_l2_vs_exact(silent, mesh_sizes[0],
                                            transport_mms_march(silent, mesh_sizes[0], dt0));
    rows.push_back(judged("mms_transport_space", "zero_source_l2_error", err0, 1e-12));
    return rows;
}

std::vector<VerifyResult> verify_mms_transport_time(const std::vector<double>& dts)
{
    if (dts.size() < 3)
        throw ConfigError("mms_transport_time: need at least three step sizes");
    TransportMmsSetup m;
    int n = 32;
    double dt_ref = *std::min_element(dts.begin(), dts.end()) / 32.0;
    std::vector<double> ref = transport_mms_march(m, n, dt_ref);
    std::vector<VerifyResult> rows;
    std::vector<double> errors;
    for (size_t k = 0; k < dts.size(); ++k) {
        double err = l2_field_diff(n, m.length, transport_mms_march(m, n, dts[k]), ref);
        errors.push_back(err);
        double threshold = k == 0 ? m.amplitude : errors[k - 1];
        rows.push_back(judged("mms_transport_time", "time_error_dt" + std::to_string(dts[k]),
                              err, threshold));
    }
    double order = fitted_order(dts, errors);
    rows.push_back(judged("mms_transport_time", "order_deviation_from_1",
                          std::abs(order - 1.0), 0.1));
    return rows;
}

namespace {

// Marches the uniform insulated problem to its plateau; returns T - t_b.
double pennes_plateau(double w, double omega_v, double sar)
{
    StructuredQuadMesh mesh(8, 8, 1.0e-3, 1.0e-3);
    int nn = mesh.num_nodes();
    PhaseFields f = uniform_fields(nn, 0.0);
    TransportCoefficients coeffs;
    ThermalParams params;
    params.sar = sar;
    params.w = w;
    TransportState transport;
    transport.omega_l.assign(nn, 0.0);
    transport.omega_v = omega_v;
    HeatOptions opts;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    ThermalState state = make_initial_thermal_state(nn, params);
    for (int s = 0; s < 60; ++s)
        state = advance_heat_step(state, mesh, f, coeffs, transport, params, {0.0, 1e9},
                                  nullptr, 60.0, opts, pattern, solver);
    return state.temperature[nn / 2] - params.t_b;
}

} // namespace

std::vector<VerifyResult> verify_pennes_uniform_steady(double w, double sar)
{
    if (w <= 0.0)
        throw ConfigError("pennes_uniform_steady: perfusion must be positive");
    ThermalParams params;
    params.sar = sar;
    double q_p = heat_source_qp(params, 0.028, 0.0, 2.0e-3, 0.0);
    double analytic = q_p / (params.rho[phase_v] * params.c_p[phase_v] * w);

    char tag[64];
    std::snprintf(tag, sizeof tag, "pennes_uniform_steady_w%g_sar%g", w, sar);
    std::string name(tag);

    std::vector<VerifyResult> rows;
    double sim = pennes_plateau(w, 2.0e-3, sar);
    rows.push_back(judged(name, "plateau_rel_error", std::abs(sim - analytic) / analytic,
                          1e-3));
    rows.push_back(judged(name, "zero_source_drift", std::abs(pennes_plateau(w, 0.0, sar)),
                          1e-12));
    double halved = pennes_plateau(2.0 * w, 2.0e-3, sar);
    rows.push_back(judged(name, "double_w_halves_rise", std::abs(2.0 * halved - sim) / sim,
                          5e-3));
    return rows;
}

namespace {

// Steady temperature field of a short centred segment of the given per-length
// power, outer boundary pinned to body temperature. Storage is made
// negligible with enormous steps.
std::vector<double> line_source_field(const StructuredQuadMesh& mesh, double strength)
{
    int nn = mesh.num_nodes();
    PhaseFields f = uniform_fields(nn, 0.0);
    f.eps_v.assign(nn, 0.0); // the scaffold fraction absorbs the change
    TransportCoefficients coeffs;
    ThermalParams params;
    params.beta_wall = 0.0;
    double radius = 10e-6;
    double omega = 2.0e-3;
    // strength = rho_v pi R^2 omega SAR
    params.sar = strength / (params.rho[phase_v] * kPi * radius * radius * omega);

    VesselNetwork net;
    double cx = 0.5 * mesh.lx(), cy = 0.5 * mesh.ly(), half = 0.5 * mesh.hx();
    net.nodes.push_back({{cx - half, cy}});
    net.nodes.push_back({{cx + half, cy}});
    net.segments.push_back({0, 1, radius, false});
    EmbeddingTable embedding = embed_network(net, mesh);
    std::vector<double> p_vessel(2, 0.0);
    std::vector<double> omega_vessel(2, omega);
    DiscreteCoupling coupling{&net, &embedding, &p_vessel, &omega_vessel};

    HeatOptions opts;
    opts.mode = VasculatureMode::discrete;
    for (HeatSideBc* bc : {&opts.bcs.left, &opts.bcs.right, &opts.bcs.bottom, &opts.bcs.top})
        *bc = {HeatBcKind::dirichlet, 0.0, params.t_b};

    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    TransportState transport;
    transport.omega_l.assign(nn, 0.0);
    ThermalState state = make_initial_thermal_state(nn, params);
    for (int s = 0; s < 2; ++s)
        state = advance_heat_step(state, mesh, f, coeffs, transport, params, {0.0, 1e12},
                                  &coupling, 1e10, opts, pattern, solver);
    for (double& t : state.temperature) t -= params.t_b;
    return state.temperature;
}

} // namespace

std::vector<VerifyResult> verify_line_source_steady(double strength)
{
    StructuredQuadMesh mesh(64, 64, 2.0e-3, 2.0e-3);
    double h = mesh.hx();
    std::vector<double> u = line_source_field(mesh, strength);

    // Radial probes along +x from the centre; the segment spans one element,
    // so r >= 3h sees an almost pointlike source.
    double kappa_eff = 0.51;
    double total_power = strength * h; // segment length is one element width
    double expected_slope = total_power / (2.0 * kPi * kappa_eff);
    std::vector<double> rs, us;
    for (int k = 3; k <= 12; ++k) {
        rs.push_back(k * h);
        us.push_back(u[mesh.node_id(32 + k, 32)]);
    }
    double worst = 0.0;
    for (size_t k = 0; k + 1 < rs.size(); ++k) {
        double slope = (us[k] - us[k + 1]) / (std::log(rs[k + 1]) - std::log(rs[k]));
        worst = std::max(worst, std::abs(slope - expected_slope) / expected_slope);
    }
    std::vector<VerifyResult> rows;
    rows.push_back(judged("line_source_steady", "log_slope_max_rel_dev", worst, 0.05));

    // Whole-window fit u = A ln(1/r) + B; the residual bounds how far the
    // field is from a pure logarithm across the window.
    {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int n = static_cast<int>(rs.size());
        for (int k = 0; k < n; ++k) {
            double x = std::log(1.0 / rs[k]);
            sx += x;
            sy += us[k];
            sxx += x * x;
            sxy += x * us[k];
        }
        double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double b = (sy - a * sx) / n;
        double resid = 0.0;
        for (int k = 0; k < n; ++k)
            resid = std::max(resid, std::abs(us[k] - (a * std::log(1.0 / rs[k]) + b)));
        double span = us.front() - us.back();
        rows.push_back(judged("line_source_steady", "log_fit_max_rel_resid", resid / span,
                              0.05));
    }

    std::vector<double> u2 = line_source_field(mesh, 2.0 * strength);
    double lin_err = 0.0, scale = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        lin_err = std::max(lin_err, std::abs(u2[i] - 2.0 * u[i]));
        scale = std::max(scale, std::abs(u2[i]));
    }
    rows.push_back(judged("line_source_steady", "linearity_rel_error",
                          scale > 0.0 ? lin_err / scale : lin_err, 1e-12));

    std::vector<double> u0 = line_source_field(mesh, 0.0);
    double drift = 0.0;
    for (double v : u0) drift = std::max(drift, std::abs(v));
    rows.push_back(judged("line_source_steady", "zero_strength_drift", drift, 1e-12));
    return rows;
}

std::vector<VerifyResult> run_all_verifications()
{
    std::vector<VerifyResult> all;
    for (auto rows : {verify_mms_heat_space(), verify_mms_heat_time(),
                      verify_mms_transport_space(), verify_mms_transport_time(),
                      verify_pennes_uniform_steady(0.018, 2.0e6),
                      verify_pennes_uniform_steady(0.036, 1.0e6),
                      verify_pennes_uniform_steady(0.009, 1.5e6),
                      verify_line_source_steady()})
        all.insert(all.end(), rows.begin(), rows.end());
    return all;
}

bool all_pass(const std::vector<VerifyResult>& results)
{
    return std::all_of(results.begin(), results.end(),
                       [](const VerifyResult& r) { return r.pass; });
}

void write_verification_report(std::ostream& out, const std::vector<VerifyResult>& results)
{
    out << "case,metric,value,threshold,pass\n";
    for (const VerifyResult& r : results) {
        out.precision(12);
        out << r.case_name << ',' << r.metric << ',' << r.value << ',' << r.threshold << ','
            << (r.pass ? "pass" : "fail") << '\n';
    }
}

} // namespace npheat
