#include "npheat/bioheat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "npheat/errors.hpp"

namespace npheat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

} // namespace

void ThermalParams::validate() const
{
    for (int g = 0; g < kNumPhases; ++g) {
        if (!(c_p[g] > 0.0)) throw ConfigError("thermal params: c_p must be positive");
        if (!(rho[g] > 0.0)) throw ConfigError("thermal params: rho must be positive");
        if (!(kappa[g] > 0.0)) throw ConfigError("thermal params: kappa must be positive");
    }
    if (!(sar >= 0.0)) throw ConfigError("thermal params: SAR must be non-negative");
    if (!(w >= 0.0)) throw ConfigError("thermal params: perfusion rate must be non-negative");
    if (!(beta_wall >= 0.0))
        throw ConfigError("thermal params: wall exchange coefficient must be non-negative");
    if (!(t_b >= 250.0 && t_b <= 330.0))
        throw ConfigError("thermal params: body temperature outside 250-330 K");
}

ThermalState make_initial_thermal_state(int num_nodes, const ThermalParams& params)
{
    ThermalState state;
    state.temperature.assign(static_cast<size_t>(num_nodes), params.t_b);
    return state;
}

bool heating_active(const HeatingWindow& window, double t)
{
    const double slack = 1e-9;
    return t >= window.t_start - slack && t <= window.t_end + slack;
}

EffectiveProps effective_props(const ThermalParams& params,
                               const std::array<double, kNumPhases>& eps)
{
    double sum = 0.0;
    for (double e : eps) sum += e;
    if (std::abs(sum - 1.0) > 1e-8)
        throw ConfigError("effective properties: phase fractions must sum to one");
    EffectiveProps p;
    for (int g = 0; g < kNumPhases; ++g) {
        p.c_rho += params.c_p[g] * params.rho[g] * eps[g];
        p.kappa += params.kappa[g] * eps[g];
    }
    return p;
}

double heat_source_qp(const ThermalParams& params, double eps_v, double eps_s_l,
                      double omega_v, double omega_l)
{
    return (params.rho[phase_v] * eps_v * omega_v + params.rho[phase_l] * eps_s_l * omega_l) *
           params.sar;
}

double heat_source_line(const ThermalParams& params, double radius, double omega_vessel)
{
    return params.rho[phase_v] * std::numbers::pi * radius * radius * omega_vessel *
           params.sar;
}

double heat_sink_lumped(const ThermalParams& params, double t)
{
    return params.rho[phase_v] * params.c_p[phase_v] * params.w * (t - params.t_b);
}

double heat_sink_discrete(const ThermalParams& params, double radius, double t)
{
    return kTwoPi * radius * params.beta_wall * (t - params.t_b);
}

const HeatSideBc& HeatBcs::side(Side s) const
{
    switch (s) {
    case Side::left: return left;
    case Side::right: return right;
    case Side::bottom: return bottom;
    default: return top;
    }
}

namespace {

struct QpHeat {
    double c_rho = 0.0;
    double kappa = 0.0;
    Vec2 q;              // IF Darcy flux
    double u_old = 0.0;  // T^n - t_b
    double source = 0.0; // W/m^3, SAR + manufactured forcing
};

struct HeatLinePoint {
    std::array<int, 4> nodes{};
    std::array<double, 4> shape{};
    double sink = 0.0;   // weight * 2*pi*R*beta (W/K per point)
    double source = 0.0; // weight * rho_v*pi*R^2*omega_vhat*SAR (W per point)
};

struct RobinEdge {
    std::array<int, 2> nodes{};
    double beta_ds = 0.0; // beta * edge jacobian
};

} // namespace

ThermalState advance_heat_step(const ThermalState& state, const StructuredQuadMesh& mesh,
                               const PhaseFields& fields,
                               const TransportCoefficients& coeffs,
                               const TransportState& transport, const ThermalParams& params,
                               const HeatingWindow& heating, const DiscreteCoupling* discrete,
                               double dt, const HeatOptions& opts,
                               const std::shared_ptr<const CsrPattern>& pattern,
                               LinearSolver& solver, HeatAudit* audit)
{
    int nn = mesh.num_nodes();
    int ne = mesh.num_elements();
    if (dt <= 0.0) throw ConfigError("bioheat: dt must be positive");
    if (static_cast<int>(state.temperature.size()) != nn)
        throw ConfigError("bioheat: state size does not match the mesh");
    if (fields.size() != nn) throw ConfigError("bioheat: fields do not match the mesh");
    if (static_cast<int>(transport.omega_l.size()) != nn)
        throw ConfigError("bioheat: transport state does not match the mesh");
    if (!pattern || pattern->n != nn)
        throw ConfigError("bioheat: pattern does not match the mesh");
    if (opts.volumetric_source && static_cast<int>(opts.volumetric_source->size()) != nn)
        throw ConfigError("bioheat: volumetric source does not match the mesh");
    if (opts.mode == VasculatureMode::discrete &&
        (!discrete || !discrete->network || !discrete->embedding || !discrete->omega_vessel))
        throw ConfigError("bioheat: discrete mode needs network, embedding and nodal data");
    params.validate();

    double t_new = state.time + dt;
    double sar_on = heating_active(heating, t_new) ? 1.0 : 0.0;
    ThermalParams gated = params;
    gated.sar = params.sar * sar_on;

    const auto& qp4 = gauss4();
    double det_j = mesh.det_jacobian();
    double gx = 2.0 / mesh.hx();
    double gy = 2.0 / mesh.hy();
    std::array<ShapeValues, 4> shapes;
    for (int k = 0; k < 4; ++k) shapes[k] = shape_eval(qp4[k].xi, qp4[k].eta);

    const double conv_c = params.c_p[phase_l] * params.rho[phase_l];
    const double sink_c = params.rho[phase_v] * params.c_p[phase_v] * params.w;

    std::vector<QpHeat> qp_data(static_cast<size_t>(ne) * 4);
    for (int e = 0; e < ne; ++e) {
        std::array<int, 4> nodes = mesh.element_nodes(e);
        for (int k = 0; k < 4; ++k) {
            const ShapeValues& s = shapes[k];
            QpHeat& d = qp_data[static_cast<size_t>(e) * 4 + k];
            double eps = 0.0, s_t = 0.0, s_h = 0.0, s_l = 0.0, eps_v = 0.0, om_l = 0.0;
            Vec2 gp;
            for (int a = 0; a < 4; ++a) {
                int na = nodes[a];
                eps += s.n[a] * fields.eps[na];
                s_t += s.n[a] * fields.s_t[na];
                s_h += s.n[a] * fields.s_h[na];
                s_l += s.n[a] * fields.s_l[na];
                eps_v += s.n[a] * fields.eps_v[na];
                om_l += s.n[a] * transport.omega_l[na];
                gp.x += fields.p_l[na] * s.dxi[a] * gx;
                gp.y += fields.p_l[na] * s.deta[a] * gy;
                d.u_old += s.n[a] * (state.temperature[na] - params.t_b);
                if (opts.volumetric_source)
                    d.source += s.n[a] * (*opts.volumetric_source)[na];
            }
            std::array<double, kNumPhases> frac{1.0 - eps - eps_v, eps * s_t, eps * s_h,
                                                eps * s_l, eps_v};
            EffectiveProps props = effective_props(params, frac);
            d.c_rho = props.c_rho;
            d.kappa = props.kappa;
            if (opts.convection) {
                d.q.x = -coeffs.k_over_mu() * gp.x;
                d.q.y = -coeffs.k_over_mu() * gp.y;
            }
            d.source += heat_source_qp(gated, eps_v, eps * s_l, transport.omega_v, om_l);
        }
    }

    std::vector<HeatLinePoint> line;
    if (opts.mode == VasculatureMode::discrete) {
        const VesselNetwork& net = *discrete->network;
        for (const EmbeddingPoint& p : discrete->embedding->points) {
            const VesselSegment& seg = net.segments[p.segment];
            double r = seg.collapsed ? 0.0 : seg.radius;
            HeatLinePoint lp;
            lp.nodes = mesh.element_nodes(p.element);
            lp.shape = p.shape;
            lp.sink = p.weight * kTwoPi * r * params.beta_wall;
            double ov = interpolate_segment(net, *discrete->omega_vessel, p.segment, p.s);
            lp.source = p.weight * heat_source_line(gated, r, ov);
            line.push_back(lp);
        }
    }

    std::vector<RobinEdge> robin;
    std::vector<DirichletBc> pinned;
    for (Side side : {Side::left, Side::right, Side::bottom, Side::top}) {
        const HeatSideBc& bc = opts.bcs.side(side);
        if (bc.kind == HeatBcKind::robin) {
            double ds = (side == Side::left || side == Side::right) ? mesh.hy() : mesh.hx();
            for (const auto& edge : mesh.boundary_edges(side)) {
                std::array<int, 4> nodes = mesh.element_nodes(edge.element);
                robin.push_back({{nodes[edge.local_nodes[0]], nodes[edge.local_nodes[1]]},
                                 bc.beta * ds * 0.5});
            }
        } else if (bc.kind == HeatBcKind::dirichlet) {
            for (int node : mesh.boundary_nodes(side))
                pinned.push_back({node, bc.value - params.t_b});
        }
    }

    CsrMatrix a(pattern);
    std::vector<double> b(static_cast<size_t>(nn), 0.0);
    for (int e = 0; e < ne; ++e) {
        std::array<int, 4> nodes = mesh.element_nodes(e);
        for (int k = 0; k < 4; ++k) {
            const ShapeValues& s = shapes[k];
            const QpHeat& d = qp_data[static_cast<size_t>(e) * 4 + k];
            double w = qp4[k].weight * det_j;
            double rhs = d.c_rho / dt * d.u_old + d.source;
            for (int i = 0; i < 4; ++i) {
                std::array<double, 2> gi{s.dxi[i] * gx, s.deta[i] * gy};
                b[nodes[i]] += w * s.n[i] * rhs;
                for (int j = 0; j < 4; ++j) {
                    std::array<double, 2> gj{s.dxi[j] * gx, s.deta[j] * gy};
                    double v = d.c_rho / dt * s.n[i] * s.n[j] +
                               conv_c * (d.q.x * gj[0] + d.q.y * gj[1]) * s.n[i] +
                               d.kappa * (gi[0] * gj[0] + gi[1] * gj[1]) +
                               sink_c * s.n[i] * s.n[j];
                    a.add(nodes[i], nodes[j], w * v);
                }
            }
        }
    }
    // Embedded line terms share the in-plane bilinear trace of the Q1 basis.
    for (const HeatLinePoint& lp : line) {
        for (int i = 0; i < 4; ++i) {
            b[lp.nodes[i]] += lp.shape[i] * lp.source;
            for (int j = 0; j < 4; ++j)
                a.add(lp.nodes[i], lp.nodes[j], lp.sink * lp.shape[i] * lp.shape[j]);
        }
    }
    // Robin exchange with the body temperature is homogeneous in T - t_b.
    const auto& qp2 = gauss2();
    for (const RobinEdge& edge : robin) {
        for (const QuadPoint1d& qp : qp2) {
            std::array<double, 2> ns{0.5 * (1.0 - qp.xi), 0.5 * (1.0 + qp.xi)};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    a.add(edge.nodes[i], edge.nodes[j],
                          qp.weight * edge.beta_ds * ns[i] * ns[j]);
        }
    }

    // Keep the unconstrained operator: pinned-side rows of it measure the
    // heat the boundary must supply to hold its value, which the audit needs.
    CsrMatrix a_full = a;
    std::vector<double> b_full = b;
    apply_dirichlet(a, b, pinned);
    std::vector<double> u = solver.solve(a, b, opts.solve);
    for (double v : u)
        if (!std::isfinite(v)) throw NumericalError("bioheat: non-finite temperature");

    if (audit) {
        *audit = HeatAudit{};
        for (int e = 0; e < ne; ++e) {
            std::array<int, 4> nodes = mesh.element_nodes(e);
            for (int k = 0; k < 4; ++k) {
                const ShapeValues& s = shapes[k];
                const QpHeat& d = qp_data[static_cast<size_t>(e) * 4 + k];
                double w = qp4[k].weight * det_j;
                double un = 0.0;
                Vec2 gu;
                for (int a2 = 0; a2 < 4; ++a2) {
                    un += s.n[a2] * u[nodes[a2]];
                    gu.x += u[nodes[a2]] * s.dxi[a2] * gx;
                    gu.y += u[nodes[a2]] * s.deta[a2] * gy;
                }
                audit->content_old += w * d.c_rho * d.u_old;
                audit->content_new += w * d.c_rho * un;
                audit->convection_rate += w * conv_c * (d.q.x * gu.x + d.q.y * gu.y);
                audit->sink_rate += w * sink_c * un;
                audit->source_rate += w * d.source;
            }
        }
        for (const HeatLinePoint& lp : line) {
            double un = 0.0;
            for (int a2 = 0; a2 < 4; ++a2) un += lp.shape[a2] * u[lp.nodes[a2]];
            audit->line_sink_rate += lp.sink * un;
            audit->source_rate += lp.source;
        }
        for (const RobinEdge& edge : robin) {
            for (const QuadPoint1d& qp : qp2) {
                std::array<double, 2> ns{0.5 * (1.0 - qp.xi), 0.5 * (1.0 + qp.xi)};
                double un = ns[0] * u[edge.nodes[0]] + ns[1] * u[edge.nodes[1]];
                audit->boundary_rate += qp.weight * edge.beta_ds * un;
            }
        }
        if (!pinned.empty()) {
            std::vector<double> au(static_cast<size_t>(nn));
            a_full.multiply(u, au);
            std::vector<char> seen(static_cast<size_t>(nn), 0);
            for (const DirichletBc& bc : pinned) {
                if (seen[bc.dof]) continue;
                seen[bc.dof] = 1;
                // Full-operator row defect at a pinned dof = heat supplied
                // through it; outflow is its negative.
                audit->boundary_rate -= au[bc.dof] - b_full[bc.dof];
            }
        }
        audit->residual = std::abs((audit->content_new - audit->content_old) / dt +
                                   audit->convection_rate + audit->sink_rate +
                                   audit->line_sink_rate + audit->boundary_rate -
                                   audit->source_rate);
    }

    ThermalState next;
    next.temperature.resize(static_cast<size_t>(nn));
    for (int i = 0; i < nn; ++i) next.temperature[i] = params.t_b + u[i];
    next.time = t_new;
    return next;
}

} // namespace npheat
