#include "npheat/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numbers>

#include "npheat/errors.hpp"

namespace npheat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double pressure_jump(const TransportCoefficients& c, double p_vessel, double p_l)
{
    return p_vessel - p_l - c.sigma * (c.pi_v - c.pi_l);
}

} // namespace

TransportState make_initial_transport_state(int num_nodes)
{
    TransportState state;
    state.omega_l.assign(static_cast<size_t>(num_nodes), 0.0);
    return state;
}

double injection_value(const InjectionWindow& window, double t)
{
    const double slack = 1e-9;
    if (t >= window.t_start - slack && t <= window.t_end + slack) return window.omega_v_d;
    return 0.0;
}

double transfer_interendothelial(VasculatureMode mode, const TransportCoefficients& coeffs,
                                 const ExchangePoint& x)
{
    if (mode == VasculatureMode::none) return 0.0;
    double area = mode == VasculatureMode::lumped ? x.eps_v * coeffs.s_over_v
                                                  : kTwoPi * x.radius;
    return coeffs.rho_v * area * coeffs.l_p_v * pressure_jump(coeffs, x.p_vessel, x.p_l) *
           0.5 * (x.omega_vessel + x.omega_l);
}

double transfer_transendothelial(VasculatureMode mode, const TransportCoefficients& coeffs,
                                 const ExchangePoint& x)
{
    if (mode == VasculatureMode::none) return 0.0;
    double area = mode == VasculatureMode::lumped ? x.eps_v * coeffs.s_over_v
                                                  : kTwoPi * x.radius;
    return coeffs.rho_v * area * coeffs.p_wall * std::max(x.omega_vessel - x.omega_l, 0.0);
}

double lymph_drainage(const TransportCoefficients& coeffs, double p_l, double p_t,
                      double omega_l)
{
    if (coeffs.p_coll <= 0.0)
        throw ConfigError("lymph drainage: collapsing pressure must be positive");
    return coeffs.rho_l * coeffs.lp_sv_ly * std::max(p_l - coeffs.p_ly, 0.0) *
           std::max(1.0 - p_t / coeffs.p_coll, 0.0) * omega_l;
}

NetworkTransferTerms compute_network_transfer(const VesselNetwork& network,
                                              const EmbeddingTable& embedding,
                                              const StructuredQuadMesh& mesh,
                                              const PhaseFields& fields,
                                              const TransportCoefficients& coeffs,
                                              const std::vector<double>& p_vessel,
                                              const std::vector<double>& omega_vessel,
                                              const std::vector<double>& omega_l)
{
    size_t n = network.nodes.size();
    if (p_vessel.size() != n || omega_vessel.size() != n)
        throw ConfigError("network transfer: nodal vessel arrays do not match the network");
    if (static_cast<int>(omega_l.size()) != mesh.num_nodes())
        throw ConfigError("network transfer: IF field does not match the mesh");

    NetworkTransferTerms terms;
    terms.lin.assign(n, 0.0);
    terms.rhs.assign(n, 0.0);
    for (const EmbeddingPoint& p : embedding.points) {
        const VesselSegment& seg = network.segments[p.segment];
        double t = p.s / network.segment_length(p.segment);
        std::array<int, 4> nodes = mesh.element_nodes(p.element);
        double pl = 0.0, om = 0.0;
        for (int a = 0; a < 4; ++a) {
            pl += p.shape[a] * fields.p_l[nodes[a]];
            om += p.shape[a] * omega_l[nodes[a]];
        }
        double pv = interpolate_segment(network, p_vessel, p.segment, p.s);
        double ov = interpolate_segment(network, omega_vessel, p.segment, p.s);
        double c_in = kTwoPi * seg.radius * coeffs.l_p_v * pressure_jump(coeffs, pv, pl);
        double c_tr = kTwoPi * seg.radius * coeffs.p_wall;
        double chi = ov > om ? 1.0 : 0.0;
        // Wall loss per unit length, already divided by rho^v:
        // (c_in/2 + c_tr*chi)*omega_vhat + (c_in/2 - c_tr*chi)*omega_l.
        double lin_c = 0.5 * c_in + c_tr * chi;
        double rhs_c = (c_tr * chi - 0.5 * c_in) * om;
        terms.lin[seg.a] += p.weight * (1.0 - t) * lin_c;
        terms.lin[seg.b] += p.weight * t * lin_c;
        terms.rhs[seg.a] += p.weight * (1.0 - t) * rhs_c;
        terms.rhs[seg.b] += p.weight * t * rhs_c;
    }
    return terms;
}

namespace {

// Per-quadrature-point coefficients of the volumetric exchange terms.
struct ExchangeCoeffs {
    double c_in = 0.0; // inter-endothelial leakage per unit mean fraction
    double c_tr = 0.0; // trans-endothelial permeation per unit fraction jump
    double d_c = 0.0;  // lymphatic drainage per unit fraction
};

struct QpData {
    double storage = 0.0; // rho_l*eps*S_l
    double diff = 0.0;    // rho_l*eps*S_l*D_np
    Vec2 q;               // Darcy flux
    double omega_old = 0.0;
    double source = 0.0;
    ExchangeCoeffs ex;
};

struct LinePoint {
    int element = -1;
    std::array<int, 4> nodes{};
    std::array<double, 4> shape{};
    double weight = 0.0;
    double c_in = 0.0; // per unit length
    double c_tr = 0.0;
    double omega_vessel = 0.0;
};

} // namespace

TransportState advance_transport_step(const TransportState& state,
                                      const StructuredQuadMesh& mesh,
                                      const PhaseFields& fields,
                                      const TransportCoefficients& coeffs,
                                      const InjectionWindow& injection,
                                      const DiscreteCoupling* discrete, double dt,
                                      const TransportOptions& opts,
                                      const std::shared_ptr<const CsrPattern>& pattern,
                                      LinearSolver& solver, TransportAudit* audit)
{
    int nn = mesh.num_nodes();
    int ne = mesh.num_elements();
    if (dt <= 0.0) throw ConfigError("transport: dt must be positive");
    if (static_cast<int>(state.omega_l.size()) != nn)
        throw ConfigError("transport: state size does not match the mesh");
    if (fields.size() != nn) throw ConfigError("transport: fields do not match the mesh");
    if (!pattern || pattern->n != nn)
        throw ConfigError("transport: pattern does not match the mesh");
    if (coeffs.p_coll <= 0.0)
        throw ConfigError("transport: collapsing pressure must be positive");
    if (opts.volumetric_source &&
        static_cast<int>(opts.volumetric_source->size()) != nn)
        throw ConfigError("transport: volumetric source does not match the mesh");
    if (opts.mode == VasculatureMode::discrete &&
        (!discrete || !discrete->network || !discrete->embedding || !discrete->pressure ||
         !discrete->omega_vessel))
        throw ConfigError("transport: discrete mode needs network, embedding and nodal data");

    double t_new = state.time + dt;
    double omega_v = opts.mode == VasculatureMode::lumped ? injection_value(injection, t_new)
                                                          : 0.0;
    bool lumped = opts.mode == VasculatureMode::lumped;

    const auto& qp4 = gauss4();
    double det_j = mesh.det_jacobian();
    double gx = 2.0 / mesh.hx();
    double gy = 2.0 / mesh.hy();

    // Everything that does not depend on the Picard iterate, precomputed once.
    std::array<ShapeValues, 4> shapes;
    for (int k = 0; k < 4; ++k) shapes[k] = shape_eval(qp4[k].xi, qp4[k].eta);
    std::vector<QpData> qp_data(static_cast<size_t>(ne) * 4);
    double max_peclet = 0.0;
    for (int e = 0; e < ne; ++e) {
        std::array<int, 4> nodes = mesh.element_nodes(e);
        double pe_num = 0.0, pe_den = 0.0;
        for (int k = 0; k < 4; ++k) {
            const ShapeValues& s = shapes[k];
            QpData& d = qp_data[static_cast<size_t>(e) * 4 + k];
            double eps = 0.0, s_l = 0.0, eps_v = 0.0, p_l = 0.0, p_v = 0.0, p_t = 0.0;
            Vec2 gp;
            for (int a = 0; a < 4; ++a) {
                int na = nodes[a];
                eps += s.n[a] * fields.eps[na];
                s_l += s.n[a] * fields.s_l[na];
                eps_v += s.n[a] * fields.eps_v[na];
                p_l += s.n[a] * fields.p_l[na];
                p_v += s.n[a] * fields.p_v[na];
                p_t += s.n[a] * fields.p_t[na];
                gp.x += fields.p_l[na] * s.dxi[a] * gx;
                gp.y += fields.p_l[na] * s.deta[a] * gy;
                d.omega_old += s.n[a] * state.omega_l[na];
                if (opts.volumetric_source)
                    d.source += s.n[a] * (*opts.volumetric_source)[na];
            }
            d.storage = coeffs.rho_l * eps * s_l;
            d.diff = d.storage * coeffs.d_np;
            d.q.x = -coeffs.k_over_mu() * gp.x;
            d.q.y = -coeffs.k_over_mu() * gp.y;
            if (lumped) {
                d.ex.c_in = coeffs.rho_v * eps_v * coeffs.s_over_v * coeffs.l_p_v *
                            pressure_jump(coeffs, p_v, p_l);
                d.ex.c_tr = coeffs.rho_v * eps_v * coeffs.s_over_v * coeffs.p_wall;
            }
            d.ex.d_c = coeffs.rho_l * coeffs.lp_sv_ly * std::max(p_l - coeffs.p_ly, 0.0) *
                       std::max(1.0 - p_t / coeffs.p_coll, 0.0);
            pe_num += std::hypot(d.q.x, d.q.y);
            pe_den += d.diff / coeffs.rho_l;
        }
        // Element means of |q| and eps*S_l*D (the shared 1/4 cancels).
        double h = 0.5 * (mesh.hx() + mesh.hy());
        double pe = pe_num <= 0.0 ? 0.0
                    : pe_den <= 0.0 ? std::numeric_limits<double>::infinity()
                                    : pe_num * h / (2.0 * pe_den);
        max_peclet = std::max(max_peclet, pe);
    }
    if (max_peclet > 2.0 && !opts.quiet)
        std::cerr << "transport: max element Peclet " << max_peclet
                  << " exceeds 2; plain Galerkin advection may oscillate\n";

    std::vector<LinePoint> line;
    if (opts.mode == VasculatureMode::discrete) {
        const VesselNetwork& net = *discrete->network;
        for (const EmbeddingPoint& p : discrete->embedding->points) {
            const VesselSegment& seg = net.segments[p.segment];
            LinePoint lp;
            lp.element = p.element;
            lp.nodes = mesh.element_nodes(p.element);
            lp.shape = p.shape;
            lp.weight = p.weight;
            double pl = 0.0;
            for (int a = 0; a < 4; ++a) pl += p.shape[a] * fields.p_l[lp.nodes[a]];
            double pv = interpolate_segment(net, *discrete->pressure, p.segment, p.s);
            lp.omega_vessel = interpolate_segment(net, *discrete->omega_vessel, p.segment, p.s);
            lp.c_in = coeffs.rho_v * kTwoPi * seg.radius * coeffs.l_p_v *
                      pressure_jump(coeffs, pv, pl);
            lp.c_tr = coeffs.rho_v * kTwoPi * seg.radius * coeffs.p_wall;
            line.push_back(lp);
        }
    }

    // The trans-endothelial bracket is the only omega-dependent gate: one flag
    // per volume quadrature point plus one per embedded line point.
    auto eval_gates = [&](const std::vector<double>& omega) {
        std::vector<std::uint8_t> g(qp_data.size() + line.size(), 0);
        if (lumped) {
            for (int e = 0; e < ne; ++e) {
                std::array<int, 4> nodes = mesh.element_nodes(e);
                for (int k = 0; k < 4; ++k) {
                    double om = 0.0;
                    for (int a = 0; a < 4; ++a) om += shapes[k].n[a] * omega[nodes[a]];
                    g[static_cast<size_t>(e) * 4 + k] = omega_v > om ? 1 : 0;
                }
            }
        }
        for (size_t p = 0; p < line.size(); ++p) {
            double om = 0.0;
            for (int a = 0; a < 4; ++a) om += line[p].shape[a] * omega[line[p].nodes[a]];
            g[qp_data.size() + p] = line[p].omega_vessel > om ? 1 : 0;
        }
        return g;
    };

    CsrMatrix a(pattern);
    std::vector<double> b(static_cast<size_t>(nn));
    double h_sd = 0.5 * (mesh.hx() + mesh.hy());

    auto assemble = [&](const std::vector<std::uint8_t>& gates) {
        a.set_zero();
        std::fill(b.begin(), b.end(), 0.0);
        for (int e = 0; e < ne; ++e) {
            std::array<int, 4> nodes = mesh.element_nodes(e);
            for (int k = 0; k < 4; ++k) {
                const ShapeValues& s = shapes[k];
                const QpData& d = qp_data[static_cast<size_t>(e) * 4 + k];
                double w = qp4[k].weight * det_j;
                double chi = gates[static_cast<size_t>(e) * 4 + k] ? 1.0 : 0.0;
                // Reaction terms, kept separate to mirror the balance: mean-
                // fraction leakage, gated permeation, drainage, and fluid-loss
                // drag (the drainage part of which cancels drainage exactly).
                double react = -0.5 * d.ex.c_in + d.ex.c_tr * chi + d.ex.d_c +
                               (d.ex.c_in - d.ex.d_c);
                double rhs = (0.5 * d.ex.c_in + d.ex.c_tr * chi) * omega_v + d.source +
                             d.storage / dt * d.omega_old;
                double sd = 0.0;
                Vec2 qdir;
                if (opts.streamline_diffusion) {
                    double qn = std::hypot(d.q.x, d.q.y);
                    if (qn > 0.0 && d.diff > 0.0) {
                        double pe = coeffs.rho_l * qn * h_sd / (2.0 * d.diff);
                        double xi = pe > 30.0 ? 1.0 - 1.0 / pe
                                  : pe < 1e-8 ? pe / 3.0
                                              : 1.0 / std::tanh(pe) - 1.0 / pe;
                        sd = coeffs.rho_l * xi * qn * h_sd * 0.5;
                        qdir = {d.q.x / qn, d.q.y / qn};
                    }
                }
                for (int i = 0; i < 4; ++i) {
                    std::array<double, 2> gi{s.dxi[i] * gx, s.deta[i] * gy};
                    b[nodes[i]] += w * s.n[i] * rhs;
                    for (int j = 0; j < 4; ++j) {
                        std::array<double, 2> gj{s.dxi[j] * gx, s.deta[j] * gy};
                        double v = d.storage / dt * s.n[i] * s.n[j] +
                                   coeffs.rho_l * (d.q.x * gj[0] + d.q.y * gj[1]) * s.n[i] +
                                   d.diff * (gi[0] * gj[0] + gi[1] * gj[1]) +
                                   react * s.n[i] * s.n[j];
                        if (sd > 0.0)
                            v += sd * (qdir.x * gi[0] + qdir.y * gi[1]) *
                                 (qdir.x * gj[0] + qdir.y * gj[1]);
                        a.add(nodes[i], nodes[j], w * v);
                    }
                }
            }
        }
        for (size_t p = 0; p < line.size(); ++p) {
            const LinePoint& lp = line[p];
            double chi = gates[qp_data.size() + p] ? 1.0 : 0.0;
            double react = 0.5 * lp.c_in + lp.c_tr * chi; // drag folded in as above
            double rhs = react * lp.omega_vessel;
            for (int i = 0; i < 4; ++i) {
                b[lp.nodes[i]] += lp.weight * lp.shape[i] * rhs;
                for (int j = 0; j < 4; ++j)
                    a.add(lp.nodes[i], lp.nodes[j],
                          lp.weight * react * lp.shape[i] * lp.shape[j]);
            }
        }
    };

    std::vector<std::uint8_t> gates = eval_gates(state.omega_l);
    std::vector<double> omega;
    int sweeps = 0;
    int max_sweeps = std::max(1, opts.max_picard_sweeps);
    for (int it = 0; it < max_sweeps; ++it) {
        assemble(gates);
        omega = solver.solve(a, b, opts.solve);
        ++sweeps;
        std::vector<std::uint8_t> next = eval_gates(omega);
        if (next == gates) break;
        // Keep the gates actually assembled when the sweep limit cuts us off,
        // so the audit below matches the operator that produced omega.
        if (it + 1 < max_sweeps) gates = std::move(next);
    }
    for (double v : omega)
        if (!std::isfinite(v)) throw NumericalError("transport: non-finite solution");

    if (audit) {
        *audit = TransportAudit{};
        audit->picard_sweeps = sweeps;
        audit->max_element_peclet = max_peclet;
        for (int e = 0; e < ne; ++e) {
            std::array<int, 4> nodes = mesh.element_nodes(e);
            for (int k = 0; k < 4; ++k) {
                const ShapeValues& s = shapes[k];
                const QpData& d = qp_data[static_cast<size_t>(e) * 4 + k];
                double w = qp4[k].weight * det_j;
                double chi = gates[static_cast<size_t>(e) * 4 + k] ? 1.0 : 0.0;
                double om = 0.0;
                Vec2 gom;
                for (int a = 0; a < 4; ++a) {
                    om += s.n[a] * omega[nodes[a]];
                    gom.x += omega[nodes[a]] * s.dxi[a] * gx;
                    gom.y += omega[nodes[a]] * s.deta[a] * gy;
                }
                audit->mass_old += w * d.storage * d.omega_old;
                audit->mass_new += w * d.storage * om;
                audit->inter_rate += w * d.ex.c_in * 0.5 * (omega_v + om);
                audit->trans_rate += w * d.ex.c_tr * chi * (omega_v - om);
                audit->lymph_rate += w * d.ex.d_c * om;
                audit->drag_rate += w * om * (d.ex.c_in - d.ex.d_c);
                audit->advection_rate += w * coeffs.rho_l * (d.q.x * gom.x + d.q.y * gom.y);
                audit->source_rate += w * d.source;
            }
        }
        for (size_t p = 0; p < line.size(); ++p) {
            const LinePoint& lp = line[p];
            double chi = gates[qp_data.size() + p] ? 1.0 : 0.0;
            double om = 0.0;
            for (int a = 0; a < 4; ++a) om += lp.shape[a] * omega[lp.nodes[a]];
            audit->inter_rate += lp.weight * lp.c_in * 0.5 * (lp.omega_vessel + om);
            audit->trans_rate += lp.weight * lp.c_tr * chi * (lp.omega_vessel - om);
            audit->drag_rate += lp.weight * om * lp.c_in;
        }
        audit->residual = std::abs((audit->mass_new - audit->mass_old) / dt +
                                   audit->advection_rate + audit->lymph_rate +
                                   audit->drag_rate - audit->inter_rate -
                                   audit->trans_rate - audit->source_rate);
    }

    TransportState next;
    next.omega_l = std::move(omega);
    next.omega_v = omega_v;
    next.time = t_new;
    return next;
}

} // namespace npheat
