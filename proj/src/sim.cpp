#include "npheat/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>

#include "npheat/assembly.hpp"
#include "npheat/errors.hpp"

namespace npheat {

namespace {

void check_window(const char* what, double t0, double t1, double total) {
    if (!(t0 <= t1)) {
        throw ConfigError(std::string(what) + " window ends before it starts");
    }
    if (t0 < 0.0 || t1 > total + 1e-9) {
        throw ConfigError(std::string(what) + " window lies outside the simulated time span");
    }
}

} // namespace

void Protocol::validate(double total_time) const {
    check_window("injection", injection.t_start, injection.t_end, total_time);
    check_window("heating", heating.t_start, heating.t_end, total_time);
    if (injection.omega_v_d < 0.0) {
        throw ConfigError("injected mass fraction omega_d must be non-negative");
    }
    if (sar < 0.0) {
        throw ConfigError("sar must be non-negative");
    }
}

void ScenarioConfig::validate() const {
    if (nx < 1 || ny < 1) {
        throw ConfigError("mesh must have at least one element per direction");
    }
    if (lx <= 0.0 || ly <= 0.0) {
        throw ConfigError("domain extents must be positive");
    }
    if (dt <= 0.0) {
        throw ConfigError("dt must be positive");
    }
    if (steps < 1) {
        throw ConfigError("steps must be at least 1");
    }
    if (max_picard_sweeps < 1) {
        throw ConfigError("max_picard_sweeps must be at least 1");
    }
    if (output.csv_every < 0 || output.snapshot_every < 0) {
        throw ConfigError("output cadences must be non-negative");
    }
    protocol.validate(total_time());
    thermal.validate();
    transport.validate();

    if (omega_init < 0.0) {
        throw ConfigError("omega_init must be non-negative");
    }
    if (transport_frozen && mode != VasculatureMode::none) {
        throw ConfigError("transport_frozen requires vasculature mode 'none'");
    }

    if (field_source == FieldSource::file) {
        if (fields_file.empty()) {
            throw ConfigError("field_source is 'file' but no fields_file is set");
        }
        if (!std::filesystem::exists(fields_file)) {
            throw ConfigError("fields_file does not exist: " + fields_file);
        }
    }
    if (mode == VasculatureMode::discrete) {
        if (!network_file.empty()) {
            if (!std::filesystem::exists(network_file)) {
                throw ConfigError("network_file does not exist: " + network_file);
            }
        } else if (network.nodes.empty()) {
            throw ConfigError("discrete mode needs a network or a network_file");
        }
    }
    for (const auto& probe : probes) {
        if (probe.name.empty()) {
            throw ConfigError("probe points need a name");
        }
        if (probe.position.x < 0.0 || probe.position.x > lx || probe.position.y < 0.0 ||
            probe.position.y > ly) {
            throw ConfigError("probe '" + probe.name + "' lies outside the domain");
        }
    }
}

namespace {

// Rethrows module failures with the step index so a crash in a long run can
// be located from the log alone.
template <typename Fn>
auto guarded(int step, const char* module, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("step " + std::to_string(step) + ", " + module + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("step " + std::to_string(step) + ", " + module + ": " + e.what());
    }
}

struct ProbeEval {
    std::array<int, 4> nodes{};
    std::array<double, 4> n{};
};

std::vector<ProbeEval> locate_probes(const StructuredQuadMesh& mesh,
                                     const std::vector<ProbePoint>& probes) {
    std::vector<ProbeEval> evals;
    evals.reserve(probes.size());
    for (const auto& probe : probes) {
        auto loc = mesh.locate_point(probe.position);
        if (!loc) {
            throw ConfigError("probe '" + probe.name + "' lies outside the mesh");
        }
        ProbeEval ev;
        ev.nodes = mesh.element_nodes(loc->element);
        ev.n = shape_eval(loc->xi, loc->eta).n;
        evals.push_back(ev);
    }
    return evals;
}

double probe_value(const ProbeEval& ev, const std::vector<double>& nodal) {
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
        v += ev.n[a] * nodal[ev.nodes[a]];
    }
    return v;
}

double volume_mean(const StructuredQuadMesh& mesh, const std::vector<double>& nodal) {
    double sum = 0.0;
    const double w = mesh.det_jacobian();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto nodes = mesh.element_nodes(e);
        for (const auto& qp : gauss4()) {
            const auto sv = shape_eval(qp.xi, qp.eta);
            double v = 0.0;
            for (int a = 0; a < 4; ++a) {
                v += sv.n[a] * nodal[nodes[a]];
            }
            sum += qp.weight * w * v;
        }
    }
    return sum / (mesh.lx() * mesh.ly());
}

double if_np_mass(const StructuredQuadMesh& mesh, const PhaseFields& fields,
                  const TransportCoefficients& coeffs, const std::vector<double>& omega) {
    double sum = 0.0;
    const double w = mesh.det_jacobian();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto nodes = mesh.element_nodes(e);
        for (const auto& qp : gauss4()) {
            const auto sv = shape_eval(qp.xi, qp.eta);
            double eps = 0.0, s_l = 0.0, om = 0.0;
            for (int a = 0; a < 4; ++a) {
                eps += sv.n[a] * fields.eps[nodes[a]];
                s_l += sv.n[a] * fields.s_l[nodes[a]];
                om += sv.n[a] * omega[nodes[a]];
            }
            sum += qp.weight * w * coeffs.rho_l * eps * s_l * om;
        }
    }
    return sum;
}

double lumped_vessel_np_mass(const StructuredQuadMesh& mesh, const PhaseFields& fields,
                             const TransportCoefficients& coeffs, double omega_v) {
    if (omega_v == 0.0) {
        return 0.0;
    }
    double sum = 0.0;
    const double w = mesh.det_jacobian();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto nodes = mesh.element_nodes(e);
        for (const auto& qp : gauss4()) {
            const auto sv = shape_eval(qp.xi, qp.eta);
            double eps_v = 0.0;
            for (int a = 0; a < 4; ++a) {
                eps_v += sv.n[a] * fields.eps_v[nodes[a]];
            }
            sum += qp.weight * w * coeffs.rho_v * eps_v * omega_v;
        }
    }
    return sum;
}

PhaseFields materialise_fields(const ScenarioConfig& config, const StructuredQuadMesh& mesh) {
    if (config.field_source == FieldSource::idealised) {
        return generate_idealised_tumour(mesh, config.tumour);
    }
    if (config.field_source == FieldSource::ellipse) {
        return generate_ellipse_tumour(mesh, config.ellipse);
    }
    LoadedFields loaded = load_fields(config.fields_file);
    if (loaded.fields.size() != mesh.num_nodes()) {
        throw ConfigError("fields_file has " + std::to_string(loaded.fields.size()) +
                          " nodes, the configured mesh has " +
                          std::to_string(mesh.num_nodes()));
    }
    const double tol = 1e-9 * std::max(mesh.lx(), mesh.ly());
    const Vec2 last = mesh.node_coord(mesh.num_nodes() - 1);
    if (std::abs(loaded.coords.front().x) > tol || std::abs(loaded.coords.front().y) > tol ||
        std::abs(loaded.coords.back().x - last.x) > tol ||
        std::abs(loaded.coords.back().y - last.y) > tol) {
        throw ConfigError("fields_file grid does not match the configured mesh extents");
    }
    loaded.fields.validate();
    return std::move(loaded.fields);
}

} // namespace

RunResult run_simulation(const ScenarioConfig& config, const SnapshotSink& snapshot_sink) {
    config.validate();

    RunResult result;
    auto mesh = std::make_shared<StructuredQuadMesh>(config.nx, config.ny, config.lx, config.ly);
    auto fields = std::make_shared<PhaseFields>(materialise_fields(config, *mesh));
    result.mesh = mesh;
    result.fields = fields;
    const int nn = mesh->num_nodes();

    const bool discrete = config.mode == VasculatureMode::discrete;
    EmbeddingTable embedding;
    if (discrete) {
        result.network =
            config.network_file.empty() ? config.network : load_network(config.network_file);
        result.network.validate();
        if (auto warning = result.network.connectivity_warning(); warning && !config.quiet) {
            std::cerr << config.name << ": " << *warning << "\n";
        }
        result.network_flow = solve_network_flow(result.network);
        embedding = embed_network(result.network, *mesh);
        result.vessel_omega.assign(result.network.nodes.size(), 0.0);
    }

    // The protocol owns the SAR; the heating window gates it inside the step.
    ThermalParams thermal = config.thermal;
    thermal.sar = config.protocol.sar;

    TransportOptions topts;
    topts.mode = config.mode;
    topts.streamline_diffusion = config.streamline_diffusion;
    topts.max_picard_sweeps = config.max_picard_sweeps;
    topts.quiet = config.quiet;

    HeatOptions hopts;
    hopts.mode = config.mode;
    hopts.bcs = config.heat_bcs;
    hopts.convection = config.convection;

    auto pattern = build_q1_pattern(*mesh);
    LinearSolver transport_solver;
    LinearSolver heat_solver;

    TransportState tstate = make_initial_transport_state(nn);
    if (config.omega_init != 0.0) {
        if (config.omega_init_shape == OmegaInitShape::uniform) {
            std::fill(tstate.omega_l.begin(), tstate.omega_l.end(), config.omega_init);
        } else {
            const double st_max = *std::max_element(fields->s_t.begin(), fields->s_t.end());
            if (st_max <= 0.0) {
                throw ConfigError("omega_init_shape tumour needs a nonzero S_t field");
            }
            for (int i = 0; i < nn; ++i) {
                tstate.omega_l[i] = config.omega_init * fields->s_t[i] / st_max;
            }
        }
    }
    ThermalState hstate = make_initial_thermal_state(nn, thermal);
    const auto probe_evals = locate_probes(*mesh, config.probes);

    result.rows.reserve(config.steps);
    result.transport_audits.reserve(config.steps);
    result.heat_audits.reserve(config.steps);
    if (discrete) {
        result.network_residuals.reserve(config.steps);
    }
    if (config.keep_history) {
        result.transport_history.reserve(config.steps);
        result.thermal_history.reserve(config.steps);
        if (discrete) {
            result.vessel_omega_history.reserve(config.steps);
        }
    }

    for (int step = 1; step <= config.steps; ++step) {
        const double t_new = config.dt * step;

        NetworkTransportResult net_res;
        if (discrete) {
            net_res = guarded(step, "vasculature", [&] {
                const NetworkTransferTerms transfer = compute_network_transfer(
                    result.network, embedding, *mesh, *fields, config.transport,
                    result.network_flow.node_pressure, result.vessel_omega, tstate.omega_l);
                const double inlet = injection_value(config.protocol.injection, t_new);
                return advance_network_transport(result.network, result.network_flow,
                                                 result.vessel_omega, config.dt,
                                                 config.transport.d_np, inlet,
                                                 config.transport.rho_v, &transfer);
            });
            result.vessel_omega = net_res.omega;
            result.network_residuals.push_back(net_res.residual);
        }

        const DiscreteCoupling coupling{&result.network, &embedding,
                                        &result.network_flow.node_pressure,
                                        &result.vessel_omega};
        const DiscreteCoupling* cp = discrete ? &coupling : nullptr;

        if (!config.transport_frozen) {
            TransportAudit t_audit;
            tstate = guarded(step, "transport", [&] {
                return advance_transport_step(tstate, *mesh, *fields, config.transport,
                                              config.protocol.injection, cp, config.dt, topts,
                                              pattern, transport_solver, &t_audit);
            });
            result.transport_audits.push_back(t_audit);
        }

        HeatAudit h_audit;
        hstate = guarded(step, "bioheat", [&] {
            return advance_heat_step(hstate, *mesh, *fields, config.transport, tstate, thermal,
                                     config.protocol.heating, cp, config.dt, hopts, pattern,
                                     heat_solver, &h_audit);
        });
        result.heat_audits.push_back(h_audit);

        TimeSeriesRow row;
        row.step = step;
        row.time = t_new;
        row.mean_t = volume_mean(*mesh, hstate.temperature);
        const auto [lo, hi] =
            std::minmax_element(hstate.temperature.begin(), hstate.temperature.end());
        row.min_t = *lo;
        row.max_t = *hi;
        row.probe_t.reserve(probe_evals.size());
        for (const auto& ev : probe_evals) {
            row.probe_t.push_back(probe_value(ev, hstate.temperature));
        }
        row.np_mass_if = if_np_mass(*mesh, *fields, config.transport, tstate.omega_l);
        if (discrete) {
            row.np_mass_vessel = net_res.mass;
        } else if (config.mode == VasculatureMode::lumped) {
            row.np_mass_vessel =
                lumped_vessel_np_mass(*mesh, *fields, config.transport, tstate.omega_v);
        }
        result.rows.push_back(std::move(row));

        if (config.keep_history) {
            result.transport_history.push_back(tstate);
            result.thermal_history.push_back(hstate);
            if (discrete) {
                result.vessel_omega_history.push_back(result.vessel_omega);
            }
        }

        if (snapshot_sink && config.output.snapshot_every > 0 &&
            step % config.output.snapshot_every == 0) {
            SnapshotData data;
            data.step = step;
            data.time = t_new;
            data.mesh = mesh.get();
            data.fields = fields.get();
            data.transport = &tstate;
            data.thermal = &hstate;
            if (discrete) {
                data.network = &result.network;
                data.network_flow = &result.network_flow;
                data.vessel_omega = &result.vessel_omega;
            }
            result.snapshot_paths.push_back(snapshot_sink(data));
        }
    }

    result.transport = std::move(tstate);
    result.thermal = std::move(hstate);
    return result;
}

double replay_heat_max_deviation(const ScenarioConfig& config, const RunResult& result) {
    if (!config.keep_history) {
        throw ConfigError("replay needs keep_history so the per-step states are stored");
    }
    if (!result.mesh || !result.fields) {
        throw ConfigError("replay needs the materialised mesh and fields of the original run");
    }
    const int steps = static_cast<int>(result.thermal_history.size());
    if (steps != config.steps ||
        static_cast<int>(result.transport_history.size()) != config.steps) {
        throw ConfigError("stored history does not match the configured step count");
    }

    const StructuredQuadMesh& mesh = *result.mesh;
    const bool discrete = config.mode == VasculatureMode::discrete;
    EmbeddingTable embedding;
    if (discrete) {
        embedding = embed_network(result.network, mesh);
        if (static_cast<int>(result.vessel_omega_history.size()) != config.steps) {
            throw ConfigError("stored vessel history does not match the step count");
        }
    }

    ThermalParams thermal = config.thermal;
    thermal.sar = config.protocol.sar;
    HeatOptions hopts;
    hopts.mode = config.mode;
    hopts.bcs = config.heat_bcs;
    hopts.convection = config.convection;

    auto pattern = build_q1_pattern(mesh);
    LinearSolver solver;
    ThermalState state = make_initial_thermal_state(mesh.num_nodes(), thermal);

    double max_dev = 0.0;
    for (int step = 1; step <= config.steps; ++step) {
        DiscreteCoupling coupling;
        const DiscreteCoupling* cp = nullptr;
        if (discrete) {
            coupling = {&result.network, &embedding, &result.network_flow.node_pressure,
                        &result.vessel_omega_history[step - 1]};
            cp = &coupling;
        }
        state = advance_heat_step(state, mesh, *result.fields, config.transport,
                                  result.transport_history[step - 1], thermal,
                                  config.protocol.heating, cp, config.dt, hopts, pattern, solver);
        const auto& stored = result.thermal_history[step - 1].temperature;
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            max_dev = std::max(max_dev, std::abs(state.temperature[i] - stored[i]));
        }
    }
    return max_dev;
}

namespace {

struct ParamEntry {
    const char* path;
    void (*set)(ScenarioConfig&, double);
};

constexpr ParamEntry kParamTable[] = {
    {"dt", [](ScenarioConfig& c, double v) { c.dt = v; }},
    {"omega_init", [](ScenarioConfig& c, double v) { c.omega_init = v; }},
    {"thermal.w", [](ScenarioConfig& c, double v) { c.thermal.w = v; }},
    {"thermal.beta_wall", [](ScenarioConfig& c, double v) { c.thermal.beta_wall = v; }},
    {"thermal.t_b", [](ScenarioConfig& c, double v) { c.thermal.t_b = v; }},
    {"protocol.sar", [](ScenarioConfig& c, double v) { c.protocol.sar = v; }},
    {"protocol.omega_d",
     [](ScenarioConfig& c, double v) { c.protocol.injection.omega_v_d = v; }},
    {"protocol.injection_start",
     [](ScenarioConfig& c, double v) { c.protocol.injection.t_start = v; }},
    {"protocol.injection_end",
     [](ScenarioConfig& c, double v) { c.protocol.injection.t_end = v; }},
    {"protocol.heating_start",
     [](ScenarioConfig& c, double v) { c.protocol.heating.t_start = v; }},
    {"protocol.heating_end",
     [](ScenarioConfig& c, double v) { c.protocol.heating.t_end = v; }},
    {"transport.d_np", [](ScenarioConfig& c, double v) { c.transport.d_np = v; }},
    {"transport.l_p_v", [](ScenarioConfig& c, double v) { c.transport.l_p_v = v; }},
    {"transport.p_wall", [](ScenarioConfig& c, double v) { c.transport.p_wall = v; }},
    {"transport.s_over_v", [](ScenarioConfig& c, double v) { c.transport.s_over_v = v; }},
    {"transport.lp_sv_ly", [](ScenarioConfig& c, double v) { c.transport.lp_sv_ly = v; }},
    {"transport.p_ly", [](ScenarioConfig& c, double v) { c.transport.p_ly = v; }},
    {"transport.p_coll", [](ScenarioConfig& c, double v) { c.transport.p_coll = v; }},
};

const ParamEntry& find_parameter(const std::string& path) {
    for (const auto& entry : kParamTable) {
        if (path == entry.path) {
            return entry;
        }
    }
    std::ostringstream msg;
    msg << "unknown sweep parameter '" << path << "'; supported:";
    for (const auto& entry : kParamTable) {
        msg << " " << entry.path;
    }
    throw ConfigError(msg.str());
}

} // namespace

void set_parameter(ScenarioConfig& config, const std::string& path, double value) {
    find_parameter(path).set(config, value);
}

const std::vector<std::string>& parameter_paths() {
    static const std::vector<std::string> paths = [] {
        std::vector<std::string> p;
        for (const auto& entry : kParamTable) {
            p.emplace_back(entry.path);
        }
        return p;
    }();
    return paths;
}

SweepRow summarise_sweep_run(double value, const RunResult& result) {
    SweepRow row;
    row.value = value;
    row.final_mean_t = result.rows.back().mean_t;
    for (const auto& r : result.rows) {
        if (r.mean_t > row.peak_mean_t) {
            row.peak_mean_t = r.mean_t;
            row.time_of_peak_mean = r.time;
        }
        row.peak_max_t = std::max(row.peak_max_t, r.max_t);
        row.peak_np_mass_if = std::max(row.peak_np_mass_if, r.np_mass_if);
    }
    return row;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const std::string& path,
                                const std::vector<double>& values, const SweepRunHook& per_run) {
    find_parameter(path); // reject unknown paths even for an empty sweep

    std::vector<SweepRow> table;
    table.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        ScenarioConfig config = base;
        set_parameter(config, path, values[i]);
        const RunResult result = run_simulation(config);
        if (per_run) {
            per_run(static_cast<int>(i), values[i], result);
        }
        table.push_back(summarise_sweep_run(values[i], result));
    }
    return table;
}

} // namespace npheat
