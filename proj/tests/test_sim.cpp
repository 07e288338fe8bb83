#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "npheat/errors.hpp"
#include "npheat/sim.hpp"

using namespace npheat;

namespace {

// Small vascularised tumour centred in a 1.2 mm box. The avascular core and
// the fluid-starved core share one radius: vessel filtration must vanish
// together with the fluid storage, otherwise the frozen phase fields describe
// filtration into a region that cannot hold fluid and the transport reaction
// turns anti-dissipative.
ScenarioConfig small_scenario()
{
    ScenarioConfig c;
    c.name = "sim-test";
    c.nx = 12;
    c.ny = 12;
    c.lx = 1.2e-3;
    c.ly = 1.2e-3;
    c.tumour.centre = {0.6e-3, 0.6e-3};
    c.tumour.tumour_radius = 0.3e-3;
    c.tumour.transition_width = 60e-6;
    c.tumour.core_radius = 0.3e-3;
    c.tumour.core_width = 60e-6;
    c.tumour.p_l_plateau = 0.3e-3;
    c.tumour.p_l_radius = 0.3e-3;
    c.protocol.injection = {2e-3, 0.0, 480.0};
    c.protocol.heating = {0.0, 480.0};
    c.protocol.sar = 2.0e6;
    c.thermal.w = 0.009;
    c.dt = 60.0;
    c.steps = 8;
    c.quiet = true;
    return c;
}

} // namespace

TEST_SUITE("sim") {

TEST_CASE("protocol and scenario validation reject bad input")
{
    CHECK_NOTHROW(small_scenario().validate());

    auto bad = small_scenario();
    bad.protocol.heating = {400.0, 100.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.protocol.injection.t_end = 1.0e9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.protocol.injection.omega_v_d = -1.0e-3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.probes.push_back({"outside", {1.5e-3, 0.0}});
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.probes.push_back({"", {0.5e-3, 0.5e-3}});
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.mode = VasculatureMode::discrete;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.field_source = FieldSource::file;
    bad.fields_file = "/nonexistent/fields.dat";
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.output.csv_every = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_scenario();
    bad.thermal.t_b = 50.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero SAR keeps the whole domain at body temperature")
{
    auto c = small_scenario();
    c.protocol.sar = 0.0;
    c.thermal.w = 0.018;
    c.heat_bcs.bottom = {HeatBcKind::robin, 20.0, c.thermal.t_b};
    c.heat_bcs.right = {HeatBcKind::robin, 20.0, c.thermal.t_b};
    c.probes.push_back({"centre", {0.6e-3, 0.6e-3}});

    const RunResult r = run_simulation(c);
    REQUIRE(static_cast<int>(r.rows.size()) == c.steps);
    for (const auto& row : r.rows) {
        CHECK(row.min_t == c.thermal.t_b);
        CHECK(row.max_t == c.thermal.t_b);
        CHECK(row.mean_t == doctest::Approx(c.thermal.t_b).epsilon(1e-12));
        CHECK(row.probe_t[0] == doctest::Approx(c.thermal.t_b).epsilon(1e-12));
    }
    for (double t : r.thermal.temperature) {
        CHECK(t == c.thermal.t_b);
    }
    // Transport keeps running: nanoparticles extravasate without heating.
    CHECK(r.rows.back().np_mass_if > 0.0);
    CHECK(r.rows.back().np_mass_vessel > 0.0);
}

TEST_CASE("reruns are bitwise identical")
{
    const auto c = small_scenario();
    const RunResult a = run_simulation(c);
    const RunResult b = run_simulation(c);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].time == b.rows[k].time);
        CHECK(a.rows[k].mean_t == b.rows[k].mean_t);
        CHECK(a.rows[k].max_t == b.rows[k].max_t);
        CHECK(a.rows[k].min_t == b.rows[k].min_t);
        CHECK(a.rows[k].np_mass_if == b.rows[k].np_mass_if);
        CHECK(a.rows[k].np_mass_vessel == b.rows[k].np_mass_vessel);
    }
    REQUIRE(a.thermal.temperature.size() == b.thermal.temperature.size());
    for (std::size_t i = 0; i < a.thermal.temperature.size(); ++i) {
        CHECK(a.thermal.temperature[i] == b.thermal.temperature[i]);
        CHECK(a.transport.omega_l[i] == b.transport.omega_l[i]);
    }
}

TEST_CASE("per-step audits are collected and balance")
{
    const auto c = small_scenario();
    const RunResult r = run_simulation(c);
    REQUIRE(r.transport_audits.size() == static_cast<std::size_t>(c.steps));
    REQUIRE(r.heat_audits.size() == static_cast<std::size_t>(c.steps));
    CHECK(r.network_residuals.empty());
    for (int k = 0; k < c.steps; ++k) {
        const auto& ta = r.transport_audits[k];
        const double m_scale = std::max({std::abs(ta.mass_new - ta.mass_old) / c.dt,
                                         std::abs(ta.inter_rate), std::abs(ta.lymph_rate),
                                         1e-30});
        CHECK(ta.residual <= 1e-9 * m_scale);
        const auto& ha = r.heat_audits[k];
        const double e_scale = std::max({std::abs(ha.content_new - ha.content_old) / c.dt,
                                         std::abs(ha.source_rate), std::abs(ha.sink_rate),
                                         std::abs(ha.boundary_rate), 1e-30});
        CHECK(ha.residual <= 1e-9 * e_scale);
        CHECK(ta.mass_new >= 0.0);
    }
    // Mass audit endpoints line up with the recorded series.
    CHECK(r.transport_audits.back().mass_new ==
          doctest::Approx(r.rows.back().np_mass_if).epsilon(1e-12));
}

TEST_CASE("probes interpolate the temperature field")
{
    auto c = small_scenario();
    const StructuredQuadMesh mesh(c.nx, c.ny, c.lx, c.ly);
    const Vec2 node = mesh.node_coord(mesh.node_id(6, 6));
    const Vec2 centre{0.65e-3, 0.65e-3};
    c.probes.push_back({"node", node});
    c.probes.push_back({"cell-centre", centre});

    const RunResult r = run_simulation(c);
    const auto& t = r.thermal.temperature;
    CHECK(r.rows.back().probe_t[0] ==
          doctest::Approx(t[mesh.node_id(6, 6)]).epsilon(1e-12));
    const double avg = 0.25 * (t[mesh.node_id(6, 6)] + t[mesh.node_id(7, 6)] +
                               t[mesh.node_id(7, 7)] + t[mesh.node_id(6, 7)]);
    CHECK(r.rows.back().probe_t[1] == doctest::Approx(avg).epsilon(1e-12));
}

TEST_CASE("replayed heat from stored transport matches in-loop temperatures")
{
    auto c = small_scenario();
    c.keep_history = true;
    const RunResult r = run_simulation(c);
    REQUIRE(static_cast<int>(r.transport_history.size()) == c.steps);
    REQUIRE(static_cast<int>(r.thermal_history.size()) == c.steps);
    CHECK(replay_heat_max_deviation(c, r) <= 1e-12);

    auto no_history = small_scenario();
    CHECK_THROWS_AS(replay_heat_max_deviation(no_history, r), ConfigError);
}

TEST_CASE("halving dt refines the final mean temperature at first order")
{
    double mean[4];
    double dt = 60.0;
    int steps = 8;
    for (int k = 0; k < 4; ++k) {
        auto c = small_scenario();
        c.dt = dt;
        c.steps = steps;
        mean[k] = run_simulation(c).rows.back().mean_t;
        dt *= 0.5;
        steps *= 2;
    }
    const double r1 = (mean[0] - mean[1]) / (mean[1] - mean[2]);
    const double r2 = (mean[1] - mean[2]) / (mean[2] - mean[3]);
    CHECK(std::abs(r1 - 2.0) < 0.35);
    CHECK(std::abs(r2 - 2.0) < 0.25);
    // Refinement walks the ratio towards 2.
    CHECK(std::abs(r2 - 2.0) < std::abs(r1 - 2.0) + 0.05);
}

TEST_CASE("module failures name the step and module")
{
    auto c = small_scenario();
    c.transport.p_wall = 1.0e308; // overflows the wall-exchange coefficient
    try {
        run_simulation(c);
        FAIL("expected a NumericalError");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("step 1") != std::string::npos);
        CHECK(msg.find("transport") != std::string::npos);
    }
}

TEST_CASE("snapshot cadence drives the sink")
{
    auto c = small_scenario();
    c.steps = 5;
    c.protocol.injection.t_end = 300.0;
    c.protocol.heating.t_end = 300.0;
    c.output.snapshot_every = 2;

    std::vector<int> seen_steps;
    auto sink = [&](const SnapshotData& data) {
        REQUIRE(data.mesh != nullptr);
        REQUIRE(data.fields != nullptr);
        REQUIRE(data.transport != nullptr);
        REQUIRE(data.thermal != nullptr);
        CHECK(data.network == nullptr); // lumped run
        seen_steps.push_back(data.step);
        return "snap-" + std::to_string(data.step);
    };

    const RunResult r = run_simulation(c, sink);
    CHECK(seen_steps == std::vector<int>{2, 4});
    CHECK(r.snapshot_paths == std::vector<std::string>{"snap-2", "snap-4"});

    c.output.snapshot_every = 0;
    seen_steps.clear();
    run_simulation(c, sink);
    CHECK(seen_steps.empty());
}

TEST_CASE("sweep over perfusion lowers the peak, over injected fraction raises it")
{
    const auto base = small_scenario();

    std::vector<std::pair<int, double>> hook_calls;
    const auto w_table = run_sweep(base, "thermal.w", {0.0, 0.009, 0.018, 0.036},
                                   [&](int index, double value, const RunResult& r) {
                                       hook_calls.emplace_back(index, value);
                                       CHECK(static_cast<int>(r.rows.size()) == base.steps);
                                   });
    REQUIRE(w_table.size() == 4);
    CHECK(hook_calls.size() == 4);
    CHECK(hook_calls[2].first == 2);
    CHECK(hook_calls[2].second == 0.018);
    for (std::size_t k = 1; k < w_table.size(); ++k) {
        CHECK(w_table[k].value > w_table[k - 1].value);
        CHECK(w_table[k].peak_mean_t < w_table[k - 1].peak_mean_t);
    }

    const auto d_table = run_sweep(base, "protocol.omega_d", {0.5e-3, 1.0e-3, 2.0e-3});
    REQUIRE(d_table.size() == 3);
    for (std::size_t k = 1; k < d_table.size(); ++k) {
        CHECK(d_table[k].peak_mean_t > d_table[k - 1].peak_mean_t);
        CHECK(d_table[k].peak_np_mass_if > d_table[k - 1].peak_np_mass_if);
    }
}

TEST_CASE("empty sweep and unknown parameter")
{
    const auto base = small_scenario();
    CHECK(run_sweep(base, "thermal.w", {}).empty());

    try {
        run_sweep(base, "thermal.perfussion", {0.009});
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("unknown sweep parameter 'thermal.perfussion'") != std::string::npos);
        CHECK(msg.find("thermal.w") != std::string::npos);
    }

    const auto& paths = parameter_paths();
    CHECK(std::find(paths.begin(), paths.end(), "protocol.omega_d") != paths.end());

    auto c = small_scenario();
    set_parameter(c, "thermal.w", 0.036);
    CHECK(c.thermal.w == 0.036);
}

TEST_CASE("discrete network scenario tracks lumen mass and replays")
{
    auto c = small_scenario();
    c.mode = VasculatureMode::discrete;
    c.keep_history = true;
    c.steps = 4;
    c.protocol.injection.t_end = 240.0;
    c.protocol.heating.t_end = 240.0;
    GridNetworkParams grid;
    grid.origin = {1.0e-4, 1.0e-4};
    grid.width = 1.0e-3;
    grid.height = 1.0e-3;
    grid.spacing = 1.0e-4;
    grid.seed = 7;
    c.network = make_grid_network(grid);

    bool saw_network = false;
    auto sink = [&](const SnapshotData& data) {
        if (data.network != nullptr && data.network_flow != nullptr &&
            data.vessel_omega != nullptr) {
            saw_network = true;
        }
        return std::string("snap");
    };
    c.output.snapshot_every = 4;

    const RunResult r = run_simulation(c, sink);
    CHECK(saw_network);
    CHECK(r.vessel_omega.size() == c.network.nodes.size());
    REQUIRE(static_cast<int>(r.vessel_omega_history.size()) == c.steps);

    // Injected particles fill the lumen, extravasate and heat the tissue.
    CHECK(r.rows.back().np_mass_vessel > 0.0);
    CHECK(r.rows.back().np_mass_if > 0.0);
    CHECK(r.rows.back().max_t > c.thermal.t_b);

    CHECK(replay_heat_max_deviation(c, r) <= 1e-12);
}

TEST_CASE("frozen transport prescribes the interstitial field and only heat marches")
{
    ScenarioConfig c;
    c.name = "frozen";
    c.nx = c.ny = 16;
    c.lx = c.ly = 4.0e-3;
    c.field_source = FieldSource::ellipse;
    c.ellipse.centre = {2.0e-3, 2.0e-3};
    c.ellipse.a = 1.5e-3;
    c.ellipse.b = 0.8e-3;
    c.mode = VasculatureMode::none;
    c.transport_frozen = true;
    c.omega_init = 2.0e-3;
    c.omega_init_shape = OmegaInitShape::tumour;
    c.thermal.t_b = 302.15;
    c.heat_bcs.left = {HeatBcKind::robin, 3.0, 302.15};
    c.heat_bcs.right = {HeatBcKind::robin, 3.0, 302.15};
    c.heat_bcs.top = {HeatBcKind::robin, 3.0, 302.15};
    c.heat_bcs.bottom = {HeatBcKind::robin, 20.0, 302.15};
    c.protocol.sar = 1.098e5;
    c.protocol.heating = {0.0, 600.0};
    c.dt = 60.0;
    c.steps = 10;
    c.quiet = true;

    const RunResult r = run_simulation(c);
    CHECK(r.transport_audits.empty());
    CHECK(r.heat_audits.size() == 10);
    // The prescribed field never changes: identical mass in every row and the
    // final state still carries the initial profile.
    for (const auto& row : r.rows) {
        CHECK(row.np_mass_if == r.rows.front().np_mass_if);
    }
    CHECK(r.rows.front().np_mass_if > 0.0);
    const double omega_max =
        *std::max_element(r.transport.omega_l.begin(), r.transport.omega_l.end());
    CHECK(omega_max == doctest::Approx(2.0e-3).epsilon(1e-12));
    CHECK(r.rows.back().max_t > 302.15);

    ScenarioConfig bad = c;
    bad.mode = VasculatureMode::lumped;
    CHECK_THROWS_WITH_AS(run_simulation(bad),
                         "transport_frozen requires vasculature mode 'none'", ConfigError);
    bad = c;
    bad.omega_init = -1.0;
    CHECK_THROWS_AS(run_simulation(bad), ConfigError);
}

TEST_CASE("lumped vessel mass follows the injection window")
{
    auto c = small_scenario();
    c.protocol.injection = {2e-3, 0.0, 120.0};
    c.protocol.heating = {0.0, 0.0};
    c.protocol.sar = 0.0;
    c.steps = 4;

    const RunResult r = run_simulation(c);
    CHECK(r.rows[0].np_mass_vessel > 0.0); // t = 60, inside the window
    CHECK(r.rows[1].np_mass_vessel > 0.0); // t = 120, window end is inclusive
    CHECK(r.rows[2].np_mass_vessel == 0.0);
    CHECK(r.rows[3].np_mass_vessel == 0.0);
}

} // TEST_SUITE
