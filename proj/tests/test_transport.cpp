#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>
#include <vector>

#include "npheat/assembly.hpp"
#include "npheat/errors.hpp"
#include "npheat/fields.hpp"
#include "npheat/mesh.hpp"
#include "npheat/transport.hpp"
#include "npheat/vasculature.hpp"

using namespace npheat;

namespace {

PhaseFields uniform_fields(int n, double eps, double s_l, double eps_v, double p_l,
                           double p_v, double p_t)
{
    PhaseFields f;
    f.eps.assign(n, eps);
    f.s_l.assign(n, s_l);
    f.s_t.assign(n, 0.0);
    f.s_h.assign(n, 1.0 - s_l);
    f.eps_v.assign(n, eps_v);
    f.p_l.assign(n, p_l);
    f.p_v.assign(n, p_v);
    f.p_t.assign(n, p_t);
    return f;
}

double total_if_mass(const StructuredQuadMesh& mesh, const PhaseFields& f,
                     const TransportCoefficients& c, const std::vector<double>& omega)
{
    double mass = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (const QuadPoint& qp : gauss4()) {
            ShapeValues s = shape_eval(qp.xi, qp.eta);
            double st = 0.0, om = 0.0;
            for (int a = 0; a < 4; ++a) {
                st += s.n[a] * c.rho_l * f.eps[nodes[a]] * f.s_l[nodes[a]];
                om += s.n[a] * omega[nodes[a]];
            }
            mass += qp.weight * mesh.det_jacobian() * st * om;
        }
    }
    return mass;
}

struct CerrCapture {
    std::ostringstream stream;
    std::streambuf* saved;
    CerrCapture() : saved(std::cerr.rdbuf(stream.rdbuf())) {}
    ~CerrCapture() { std::cerr.rdbuf(saved); }
};

} // namespace

TEST_SUITE("transport") {

TEST_CASE("injection window is inclusive and zero outside")
{
    InjectionWindow w{2.0e-3, 0.0, 2400.0};
    CHECK(injection_value(w, 0.0) == 2.0e-3);
    CHECK(injection_value(w, 60.0) == 2.0e-3);
    CHECK(injection_value(w, 2400.0) == 2.0e-3);
    CHECK(injection_value(w, 2400.1) == 0.0);
    CHECK(injection_value(w, -0.1) == 0.0);

    TransportState s0 = make_initial_transport_state(12);
    CHECK(s0.omega_l.size() == 12);
    CHECK(*std::max_element(s0.omega_l.begin(), s0.omega_l.end()) == 0.0);
    CHECK(s0.omega_v == 0.0);
    CHECK(s0.time == 0.0);
}

TEST_CASE("wall exchange kernels match their closed forms")
{
    TransportCoefficients c;

    SUBCASE("lumped leakage")
    {
        ExchangePoint x;
        x.eps_v = 0.028;
        x.p_vessel = 100.0;
        x.p_l = 0.0;
        x.omega_vessel = 1.0e-3;
        x.omega_l = 1.0e-3;
        double r = transfer_interendothelial(VasculatureMode::lumped, c, x);
        CHECK(r == doctest::Approx(1.96e-6).epsilon(1e-12));
        double expect = c.rho_v * 0.028 * c.l_p_v * c.s_over_v * 100.0 * 1.0e-3;
        CHECK(r == doctest::Approx(expect).epsilon(1e-14));
    }

    SUBCASE("line leakage")
    {
        ExchangePoint x;
        x.radius = 10e-6;
        x.p_vessel = 100.0;
        x.omega_vessel = 1.0e-3;
        x.omega_l = 1.0e-3;
        double r = transfer_interendothelial(VasculatureMode::discrete, c, x);
        CHECK(r == doctest::Approx(6.28e-13).epsilon(1e-3));
        double expect = c.rho_v * 2.0 * std::numbers::pi * 10e-6 * c.l_p_v * 100.0 * 1.0e-3;
        CHECK(r == doctest::Approx(expect).epsilon(1e-14));
    }

    SUBCASE("lumped permeation")
    {
        ExchangePoint x;
        x.eps_v = 0.028;
        x.omega_vessel = 1.5e-3;
        x.omega_l = 0.5e-3;
        double r = transfer_transendothelial(VasculatureMode::lumped, c, x);
        CHECK(r == doctest::Approx(3.92e-7).epsilon(1e-12));
    }

    SUBCASE("lymphatic drainage")
    {
        double r = lymph_drainage(c, 533.3, 0.0, 1.0e-3);
        CHECK(r == doctest::Approx(5.55e-4).epsilon(1e-3));
        CHECK(r == doctest::Approx(c.rho_l * c.lp_sv_ly * 533.3 * 1.0e-3).epsilon(1e-14));
    }

    SUBCASE("mode none disables wall exchange")
    {
        ExchangePoint x;
        x.eps_v = 0.028;
        x.radius = 10e-6;
        x.p_vessel = 100.0;
        x.omega_vessel = 1.0e-3;
        CHECK(transfer_interendothelial(VasculatureMode::none, c, x) == 0.0);
        CHECK(transfer_transendothelial(VasculatureMode::none, c, x) == 0.0);
    }
}

TEST_CASE("wall exchange kernels gate one-way pathways")
{
    TransportCoefficients c;
    ExchangePoint x;
    x.eps_v = 0.028;
    x.radius = 10e-6;

    x.p_vessel = 250.0;
    x.p_l = 250.0;
    x.omega_vessel = 1.0e-3;
    x.omega_l = 2.0e-3;
    CHECK(transfer_interendothelial(VasculatureMode::lumped, c, x) == 0.0);
    CHECK(transfer_interendothelial(VasculatureMode::discrete, c, x) == 0.0);
    // no back-diffusion through the wall
    CHECK(transfer_transendothelial(VasculatureMode::lumped, c, x) == 0.0);
    x.omega_l = x.omega_vessel;
    CHECK(transfer_transendothelial(VasculatureMode::lumped, c, x) == 0.0);
    // reversed pressure jump pulls mass back into the vessel
    x.p_l = 400.0;
    CHECK(transfer_interendothelial(VasculatureMode::lumped, c, x) < 0.0);

    CHECK(lymph_drainage(c, 100.0, 200.0, 1e-3) == 0.0); // collapsed lymphatics
    CHECK(lymph_drainage(c, -5.0, 0.0, 1e-3) == 0.0);    // below lymphatic pressure
    TransportCoefficients bad = c;
    bad.p_coll = 0.0;
    CHECK_THROWS_AS(lymph_drainage(bad, 100.0, 0.0, 1e-3), ConfigError);
}

TEST_CASE("network wall transfer aggregates hat-weighted kernels")
{
    StructuredQuadMesh mesh(8, 8, 1e-3, 1e-3);
    VesselNetwork net;
    net.nodes = {{{0.125e-3, 0.5e-3}}, {{0.875e-3, 0.5e-3}}};
    net.segments.push_back({0, 1, 8e-6, false});
    EmbeddingTable emb = embed_network(net, mesh);
    double length = 0.75e-3;

    TransportCoefficients c;
    PhaseFields f = uniform_fields(mesh.num_nodes(), 0.8, 0.6, 0.0, 300.0, 0.0, 0.0);
    std::vector<double> pv = {2000.0, 2000.0};
    double c_in = 2.0 * std::numbers::pi * 8e-6 * c.l_p_v * (2000.0 - 300.0);
    double c_tr = 2.0 * std::numbers::pi * 8e-6 * c.p_wall;

    SUBCASE("permeation gate open")
    {
        std::vector<double> ov = {1e-3, 1e-3};
        std::vector<double> ol(mesh.num_nodes(), 0.0);
        NetworkTransferTerms t = compute_network_transfer(net, emb, mesh, f, c, pv, ov, ol);
        REQUIRE(t.lin.size() == 2);
        double lin_total = t.lin[0] + t.lin[1];
        CHECK(lin_total == doctest::Approx(length * (0.5 * c_in + c_tr)).epsilon(1e-12));
        CHECK(t.lin[0] == doctest::Approx(t.lin[1]).epsilon(1e-12));
        CHECK(t.rhs[0] + t.rhs[1] == doctest::Approx(0.0));
    }

    SUBCASE("permeation gate closed")
    {
        std::vector<double> ov = {0.0, 0.0};
        std::vector<double> ol(mesh.num_nodes(), 1e-3);
        NetworkTransferTerms t = compute_network_transfer(net, emb, mesh, f, c, pv, ov, ol);
        double lin_total = t.lin[0] + t.lin[1];
        double rhs_total = t.rhs[0] + t.rhs[1];
        CHECK(lin_total == doctest::Approx(length * 0.5 * c_in).epsilon(1e-12));
        CHECK(rhs_total == doctest::Approx(-length * 0.5 * c_in * 1e-3).epsilon(1e-12));
    }

    SUBCASE("mismatched arrays are rejected")
    {
        std::vector<double> ov = {1e-3};
        std::vector<double> ol(mesh.num_nodes(), 0.0);
        CHECK_THROWS_AS(compute_network_transfer(net, emb, mesh, f, c, pv, ov, ol),
                        ConfigError);
    }
}

TEST_CASE("constant state is a fixed point without wall exchange")
{
    StructuredQuadMesh mesh(12, 12, 1e-3, 1e-3);
    // eps_v > 0 on purpose: mode none must ignore the vascular field entirely.
    PhaseFields f = uniform_fields(mesh.num_nodes(), 0.8, 0.6, 0.028, 0.0, 2500.0, 100.0);
    TransportCoefficients c;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;

    TransportState s = make_initial_transport_state(mesh.num_nodes());
    std::fill(s.omega_l.begin(), s.omega_l.end(), 7.5e-4);
    TransportOptions opts;
    opts.mode = VasculatureMode::none;
    TransportAudit audit;
    TransportState s1 = advance_transport_step(s, mesh, f, c, {}, nullptr, 30.0, opts,
                                               pattern, solver, &audit);
    for (double v : s1.omega_l) CHECK(v == doctest::Approx(7.5e-4).epsilon(1e-13));
    CHECK(s1.time == doctest::Approx(30.0));
    CHECK(s1.omega_v == 0.0);
    CHECK(audit.picard_sweeps == 1);
    CHECK(audit.max_element_peclet == 0.0);
}

TEST_CASE("gaussian blob spreads at the analytic rate")
{
    // Consistent-mass Q1 diffusion preserves the second-moment identity
    // d<r^2>/dt = 4D to machine precision, so the tolerance here is far
    // inside the 2% the physics asks for.
    StructuredQuadMesh mesh(64, 64, 2e-3, 2e-3);
    PhaseFields f = uniform_fields(mesh.num_nodes(), 0.8, 1.0, 0.0, 0.0, 0.0, 0.0);
    TransportCoefficients c;
    double sigma0 = 100e-6, cx = 1e-3, cy = 1e-3;

    TransportState s = make_initial_transport_state(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        Vec2 p = mesh.node_coord(n);
        double r2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
        s.omega_l[n] = std::exp(-r2 / (2.0 * sigma0 * sigma0));
    }

    auto second_moment = [&](const std::vector<double>& omega) {
        double tot = 0.0, m2 = 0.0;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            auto nodes = mesh.element_nodes(e);
            for (const QuadPoint& qp : gauss4()) {
                ShapeValues sv = shape_eval(qp.xi, qp.eta);
                double om = 0.0;
                for (int a = 0; a < 4; ++a) om += sv.n[a] * omega[nodes[a]];
                Vec2 p = mesh.map_to_global(e, qp.xi, qp.eta);
                double r2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
                tot += qp.weight * mesh.det_jacobian() * om;
                m2 += qp.weight * mesh.det_jacobian() * om * r2;
            }
        }
        return m2 / tot;
    };

    double m2_0 = second_moment(s.omega_l);
    double mass_0 = total_if_mass(mesh, f, c, s.omega_l);
    TransportOptions opts;
    opts.mode = VasculatureMode::none;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    double dt = 10.0;
    int steps = 20;
    TransportAudit audit;
    for (int k = 0; k < steps; ++k)
        s = advance_transport_step(s, mesh, f, c, {}, nullptr, dt, opts, pattern, solver,
                                   &audit);

    double growth = second_moment(s.omega_l) - m2_0;
    CHECK(growth == doctest::Approx(4.0 * c.d_np * dt * steps).epsilon(1e-7));
    // zero-flux boundary, no exchange: total content conserved
    double mass_T = total_if_mass(mesh, f, c, s.omega_l);
    CHECK(mass_T == doctest::Approx(mass_0).epsilon(1e-10));
    CHECK(audit.residual * dt <= 1e-10 * mass_T);
}

TEST_CASE("step is linear while gates stay one-signed")
{
    StructuredQuadMesh mesh(24, 24, 1.6e-3, 1.6e-3);
    IdealisedTumourParams params;
    params.centre = {0.8e-3, 0.8e-3};
    PhaseFields f = generate_idealised_tumour(mesh, params);
    TransportCoefficients c;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    TransportOptions opts;
    opts.quiet = true;

    // omega stays well below every injected level, so the permeation bracket
    // is open at every quadrature point in all three runs.
    auto run = [&](double omega_v_d, double omega_0) {
        TransportState s = make_initial_transport_state(mesh.num_nodes());
        std::fill(s.omega_l.begin(), s.omega_l.end(), omega_0);
        InjectionWindow w{omega_v_d, 0.0, 1e9};
        for (int k = 0; k < 2; ++k)
            s = advance_transport_step(s, mesh, f, c, w, nullptr, 60.0, opts, pattern,
                                       solver);
        return s.omega_l;
    };

    std::vector<double> a = run(1.0e-3, 0.0);
    std::vector<double> b = run(2.0e-3, 1.0e-4);
    std::vector<double> ab = run(3.0e-3, 1.0e-4);
    double scale = *std::max_element(ab.begin(), ab.end());
    for (size_t i = 0; i < ab.size(); ++i)
        CHECK(std::abs(ab[i] - a[i] - b[i]) <= 1e-12 * scale);
}

TEST_CASE("lumped injection fills the perfused host and spares the core")
{
    StructuredQuadMesh mesh(40, 40, 1.6e-3, 1.6e-3);
    IdealisedTumourParams params;
    params.centre = {0.8e-3, 0.8e-3};
    PhaseFields f = generate_idealised_tumour(mesh, params);
    TransportCoefficients c;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;

    double omega_d = 2.0e-3;
    InjectionWindow window{omega_d, 0.0, 1200.0};
    TransportOptions opts;
    opts.quiet = true;
    int host = mesh.node_id(5, 20);  // 0.6 mm from the centre, perfused
    int core = mesh.node_id(20, 20); // tumour centre, eps_v = 0

    TransportState s = make_initial_transport_state(mesh.num_nodes());
    TransportAudit audit;
    double host_prev = 0.0;
    double min_seen = 0.0, max_seen = 0.0;
    double core_at_peak = 0.0, host_at_peak = 0.0;
    std::vector<double> mass_history;
    for (int k = 0; k < 30; ++k) {
        s = advance_transport_step(s, mesh, f, c, window, nullptr, 60.0, opts, pattern,
                                   solver, &audit);
        min_seen = std::min(min_seen, *std::min_element(s.omega_l.begin(), s.omega_l.end()));
        max_seen = std::max(max_seen, *std::max_element(s.omega_l.begin(), s.omega_l.end()));
        mass_history.push_back(audit.mass_new);
        double scale = audit.mass_new / 60.0 + audit.inter_rate;
        CHECK(audit.residual <= 1e-12 * scale);
        if (s.time <= 1200.0) {
            CHECK(s.omega_l[host] > host_prev); // monotone rise while injecting
            host_prev = s.omega_l[host];
            CHECK(audit.picard_sweeps == 1);
        }
        if (s.time == 1200.0) {
            core_at_peak = s.omega_l[core];
            host_at_peak = s.omega_l[host];
        }
    }

    // empirical maximum principle: fractions stay inside [0, omega_v_D]
    CHECK(min_seen >= -1e-12 * omega_d);
    CHECK(max_seen <= omega_d * (1.0 + 1e-12));
    // The IF fraction in the non-perfused core lags the host, and the
    // delivered amount rho*eps*S_l*omega there is negligible: the residual
    // core fluid volume is ~1e-3 of the host's.
    CHECK(core_at_peak < 0.5 * host_at_peak);
    double content_ratio = (params.core_s_l * core_at_peak) /
                           (params.host_s_l * host_at_peak);
    CHECK(content_ratio < 1e-2);
    CHECK(host_at_peak > 1e-5);
    // washout: total content decays monotonically once injection stops
    for (size_t k = 21; k < mass_history.size(); ++k)
        CHECK(mass_history[k] < mass_history[k - 1]);
    // advection points outward near the rim where the Peclet warning lives
    CHECK(audit.max_element_peclet > 2.0);
}

TEST_CASE("bracket flips converge within the sweep budget")
{
    StructuredQuadMesh mesh(20, 1, 1e-3, 5e-5);
    PhaseFields f = uniform_fields(mesh.num_nodes(), 0.8, 1.0, 0.035, 0.0, 0.0, 0.0);
    TransportCoefficients c;
    c.d_np = 1e-9; // mixes the two halves within one step
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;

    TransportState s = make_initial_transport_state(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n)
        s.omega_l[n] = mesh.node_coord(n).x < 0.49e-3 ? 2.0e-3 : 0.0;
    // injected level sits between the two halves: the gate starts closed on
    // the left, open on the right, and diffusion moves the crossing
    InjectionWindow window{1.0e-3, 0.0, 1e9};
    TransportOptions opts;
    opts.quiet = true;
    TransportAudit audit;
    // dt of ~50 domain mixing times relaxes the whole profile toward the mean
    // of ~0.95e-3, below the injected level: every left-half gate flips open.
    s = advance_transport_step(s, mesh, f, c, window, nullptr, 5000.0, opts, pattern,
                               solver, &audit);
    CHECK(audit.picard_sweeps >= 2);
    CHECK(audit.picard_sweeps <= 5);
    double hi = *std::max_element(s.omega_l.begin(), s.omega_l.end());
    CHECK(hi < 1e-3);
    double scale = audit.mass_new / 5000.0 + std::abs(audit.trans_rate) + 1e-300;
    CHECK(audit.residual <= 1e-10 * scale);
}

TEST_CASE("convection-dominated elements warn and can be stabilised")
{
    // 1D strip, advected concentration step, element Peclet ~312. Plain
    // Galerkin undershoots hard; the streamline-diffusion flag removes it.
    StructuredQuadMesh mesh(40, 1, 2e-3, 5e-5);
    int nn = mesh.num_nodes();
    PhaseFields f = uniform_fields(nn, 0.8, 1.0, 0.0, 0.0, 0.0, 0.0);
    TransportCoefficients c;
    c.d_np = 1e-13;
    c.lp_sv_ly = 1e-30; // IF pressure gradient drives flow, not drainage
    // linear p_l ramp: q_x = (k/mu)*slope = 1e-6 m/s toward +x
    double slope = 1e-6 / c.k_over_mu();
    for (int n = 0; n < nn; ++n) f.p_l[n] = slope * (2e-3 - mesh.node_coord(n).x);

    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    auto run = [&](bool stabilised) {
        TransportState s = make_initial_transport_state(nn);
        for (int j = 0; j <= 1; ++j)
            for (int i = 0; i <= 9; ++i) s.omega_l[mesh.node_id(i, j)] = 1e-3;
        TransportOptions opts;
        opts.mode = VasculatureMode::none;
        opts.streamline_diffusion = stabilised;
        opts.quiet = true;
        TransportAudit audit;
        for (int k = 0; k < 8; ++k)
            s = advance_transport_step(s, mesh, f, c, {}, nullptr, 25.0, opts, pattern,
                                       solver, &audit);
        double lo = *std::min_element(s.omega_l.begin(), s.omega_l.end());
        double hi = *std::max_element(s.omega_l.begin(), s.omega_l.end());
        return std::tuple<double, double, double>{lo, hi, audit.max_element_peclet};
    };

    auto [gal_lo, gal_hi, gal_pe] = run(false);
    CHECK(gal_pe > 100.0);
    CHECK(gal_lo < -1e-3); // frozen oracle: -2.4535e-3
    auto [sd_lo, sd_hi, sd_pe] = run(true);
    CHECK(sd_pe == doctest::Approx(gal_pe)); // the warning reports raw Peclet
    CHECK(sd_lo > -1e-9);                    // frozen oracle: +1.43e-11
    CHECK(sd_hi < 1.001e-3);

    SUBCASE("warning names the Peclet number")
    {
        TransportState s = make_initial_transport_state(nn);
        TransportOptions opts;
        opts.mode = VasculatureMode::none;
        CerrCapture capture;
        advance_transport_step(s, mesh, f, c, {}, nullptr, 25.0, opts, pattern, solver);
        CHECK(capture.stream.str().find("Peclet") != std::string::npos);
    }
}

TEST_CASE("embedded line exchange equilibrates tissue to the vessel fraction")
{
    StructuredQuadMesh mesh(20, 20, 1e-3, 1e-3);
    PhaseFields f = uniform_fields(mesh.num_nodes(), 0.8, 0.75, 0.0, 0.0, 0.0, 0.0);
    TransportCoefficients c;
    c.p_wall = 1e-4; // fast wall so the fill time stays testable
    c.d_np = 1e-9;   // well mixed within a step

    VesselNetwork net;
    net.nodes = {{{0.0, 0.5e-3}}, {{1e-3, 0.5e-3}}};
    net.segments.push_back({0, 1, 10e-6, false});
    EmbeddingTable emb = embed_network(net, mesh);
    std::vector<double> pv = {0.0, 0.0};
    std::vector<double> ov = {5e-4, 5e-4};
    DiscreteCoupling coupling{&net, &emb, &pv, &ov};

    TransportOptions opts;
    opts.mode = VasculatureMode::discrete;
    opts.quiet = true;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    TransportState s = make_initial_transport_state(mesh.num_nodes());
    TransportAudit audit;
    for (int k = 0; k < 60; ++k) {
        s = advance_transport_step(s, mesh, f, c, {}, &coupling, 2e4, opts, pattern,
                                   solver, &audit);
        double hi = *std::max_element(s.omega_l.begin(), s.omega_l.end());
        CHECK(hi <= 5e-4 * (1.0 + 1e-10)); // vessel level bounds the tissue
        double scale = audit.mass_new / 2e4 + std::abs(audit.trans_rate) +
                       std::abs(audit.inter_rate) + 1e-300;
        CHECK(audit.residual <= 1e-10 * scale);
    }
    double lo = *std::min_element(s.omega_l.begin(), s.omega_l.end());
    CHECK(lo >= 5e-4 * (1.0 - 1e-3)); // well-mixed fill: deficit ~1e-5 by now
    CHECK(audit.inter_rate == doctest::Approx(0.0)); // no pressure jump
}

TEST_CASE("transport step rejects inconsistent inputs")
{
    StructuredQuadMesh mesh(4, 4, 1e-3, 1e-3);
    PhaseFields f = uniform_fields(mesh.num_nodes(), 0.8, 0.6, 0.0, 0.0, 0.0, 0.0);
    TransportCoefficients c;
    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    TransportState s = make_initial_transport_state(mesh.num_nodes());
    TransportOptions opts;

    CHECK_THROWS_AS(advance_transport_step(s, mesh, f, c, {}, nullptr, 0.0, opts, pattern,
                                           solver),
                    ConfigError);

    TransportCoefficients bad = c;
    bad.p_coll = 0.0;
    CHECK_THROWS_AS(advance_transport_step(s, mesh, f, bad, {}, nullptr, 1.0, opts,
                                           pattern, solver),
                    ConfigError);

    TransportOptions disc = opts;
    disc.mode = VasculatureMode::discrete;
    CHECK_THROWS_AS(advance_transport_step(s, mesh, f, c, {}, nullptr, 1.0, disc, pattern,
                                           solver),
                    ConfigError);

    std::vector<double> short_source(3, 0.0);
    TransportOptions with_source = opts;
    with_source.volumetric_source = &short_source;
    CHECK_THROWS_AS(advance_transport_step(s, mesh, f, c, {}, nullptr, 1.0, with_source,
                                           pattern, solver),
                    ConfigError);

    TransportState wrong = make_initial_transport_state(7);
    CHECK_THROWS_AS(advance_transport_step(wrong, mesh, f, c, {}, nullptr, 1.0, opts,
                                           pattern, solver),
                    ConfigError);

    StructuredQuadMesh other(6, 6, 1e-3, 1e-3);
    auto other_pattern = build_q1_pattern(other);
    CHECK_THROWS_AS(advance_transport_step(s, mesh, f, c, {}, nullptr, 1.0, opts,
                                           other_pattern, solver),
                    ConfigError);
}

} // TEST_SUITE
