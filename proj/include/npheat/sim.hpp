#ifndef NPHEAT_SIM_HPP
#define NPHEAT_SIM_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "npheat/bioheat.hpp"
#include "npheat/fields.hpp"
#include "npheat/mesh.hpp"
#include "npheat/transport.hpp"
#include "npheat/vasculature.hpp"

namespace npheat {

// Treatment schedule: the systemic injection window and the magnetic-field
// window with its specific absorption rate. The two windows are independent
// and may overlap.
struct Protocol {
    InjectionWindow injection; // omega_v_d held in [t_start, t_end]
    HeatingWindow heating;     // field on in [t_start, t_end]
    double sar = 0.0;          // W/kg while the field is on

    // Windows must be ordered and lie inside [0, total_time].
    void validate(double total_time) const;
};

struct ProbePoint {
    std::string name;
    Vec2 position; // physical coordinates (m)
};

enum class FieldSource { idealised, ellipse, file };

// Initial interstitial nanoparticle fraction: uniform over the domain, or
// shaped like the tumour-cell saturation normalised to its maximum so the
// value holds deep inside the tumour and fades with the transition.
enum class OmegaInitShape { uniform, tumour };

// Output cadences in steps; 0 disables that output. RunResult always records
// every step, csv_every only thins the written file.
struct OutputPlan {
    int csv_every = 1;
    int snapshot_every = 0;
};

struct ScenarioConfig {
    std::string name = "run";

    int nx = 60;
    int ny = 60;
    double lx = 4.8e-3; // m
    double ly = 4.8e-3; // m

    FieldSource field_source = FieldSource::idealised;
    IdealisedTumourParams tumour;  // used when field_source == idealised
    EllipseTumourParams ellipse;   // used when field_source == ellipse
    std::string fields_file;       // read when field_source == file

    VasculatureMode mode = VasculatureMode::lumped;
    VesselNetwork network;    // used when mode == discrete and network_file empty
    std::string network_file; // read instead of `network` when non-empty

    TransportCoefficients transport;
    // Starting interstitial fraction, and optionally a frozen transport state:
    // with transport_frozen the field is prescribed for the whole run and only
    // the heat equation marches (requires mode == none).
    double omega_init = 0.0;
    OmegaInitShape omega_init_shape = OmegaInitShape::uniform;
    bool transport_frozen = false;
    // thermal.sar is ignored: the protocol owns the SAR so the heating window
    // and its magnitude cannot drift apart.
    ThermalParams thermal;
    HeatBcs heat_bcs;
    bool convection = true;
    bool streamline_diffusion = false;
    int max_picard_sweeps = 5;

    Protocol protocol;
    double dt = 60.0; // s
    int steps = 60;

    std::vector<ProbePoint> probes;
    OutputPlan output;
    bool quiet = false;
    // Keeps per-step transport and thermal states; required by
    // replay_heat_max_deviation.
    bool keep_history = false;

    double total_time() const { return dt * steps; }

    // Structural checks, probe containment and referenced-file existence.
    // Throws ConfigError naming the offending entry.
    void validate() const;
};

// One recorded step. Temperatures in K, masses in kg per metre of depth.
struct TimeSeriesRow {
    int step = 0;
    double time = 0.0;   // s, end of step
    double mean_t = 0.0; // volume average
    double max_t = 0.0;
    double min_t = 0.0;
    std::vector<double> probe_t; // one per configured probe, config order
    double np_mass_if = 0.0;     // nanoparticle mass in the interstitial fluid
    double np_mass_vessel = 0.0; // nanoparticle mass in the vascular compartment
};

struct RunResult {
    std::vector<TimeSeriesRow> rows; // one per step, time strictly increasing
    std::vector<std::string> snapshot_paths;

    // Inputs as materialised for the run (fields possibly loaded from file).
    std::shared_ptr<const StructuredQuadMesh> mesh;
    std::shared_ptr<const PhaseFields> fields;

    TransportState transport; // final
    ThermalState thermal;     // final

    // Discrete mode only; empty otherwise.
    VesselNetwork network; // as materialised (possibly loaded from file)
    NetworkFlow network_flow;
    std::vector<double> vessel_omega; // final nodal vessel mass fraction

    // Per-step balance audits, index k for step k+1; no transport audits when
    // transport is frozen (the field never changes).
    std::vector<TransportAudit> transport_audits;
    std::vector<HeatAudit> heat_audits;
    std::vector<double> network_residuals; // discrete mode only; empty otherwise

    // Populated when keep_history: state after step k at index k.
    std::vector<TransportState> transport_history;
    std::vector<std::vector<double>> vessel_omega_history;
    std::vector<ThermalState> thermal_history;

    int exit_status = 0; // set by the CLI layer, 0 inside the library
};

// View of one recorded step handed to the snapshot callback. Pointers are
// valid only during the call; network members are null outside discrete mode.
struct SnapshotData {
    int step = 0;
    double time = 0.0;
    const StructuredQuadMesh* mesh = nullptr;
    const PhaseFields* fields = nullptr;
    const TransportState* transport = nullptr;
    const ThermalState* thermal = nullptr;
    const VesselNetwork* network = nullptr;
    const NetworkFlow* network_flow = nullptr;
    const std::vector<double>* vessel_omega = nullptr;
};

// Writes one snapshot and returns the path it wrote; paths are collected in
// RunResult::snapshot_paths. A default-constructed sink disables snapshots.
using SnapshotSink = std::function<std::string(const SnapshotData&)>;

// Marches the coupled system over steps * dt seconds. Per step, in order:
// network flow and lumen transport (discrete mode), interstitial nanoparticle
// transport, then the heat solve from the just-updated mass fractions. The
// coupling is one-way, so this staggered order is exact, not an operator
// split. Any module failure rethrows with the step index and module name.
RunResult run_simulation(const ScenarioConfig& config, const SnapshotSink& snapshot_sink = {});

// Re-runs only the heat solve from the stored per-step transport states and
// returns the largest |T_replay - T_inloop| over all steps and nodes. One-way
// coupling makes this reproduce the in-loop temperatures to solver precision.
// Requires keep_history.
double replay_heat_max_deviation(const ScenarioConfig& config, const RunResult& result);

// Assigns one scalar by dotted path, e.g. "thermal.w" or "protocol.omega_d".
// Unknown paths throw ConfigError listing the supported ones.
void set_parameter(ScenarioConfig& config, const std::string& path, double value);
const std::vector<std::string>& parameter_paths();

// One line of a sweep summary.
struct SweepRow {
    double value = 0.0;
    double peak_mean_t = 0.0;       // K
    double time_of_peak_mean = 0.0; // s
    double peak_max_t = 0.0;        // K
    double final_mean_t = 0.0;      // K
    double peak_np_mass_if = 0.0;   // kg
};

// Peak/summary statistics of one run, as tabulated by run_sweep. Exposed so
// external sweep drivers produce the same summary from their own runs.
SweepRow summarise_sweep_run(double value, const RunResult& result);

using SweepRunHook = std::function<void(int index, double value, const RunResult&)>;

// Runs `base` once per value with `path` overridden, in the given order.
// Runs are independent; the hook (if any) sees each full result, e.g. to
// write per-run artefacts. An empty value list yields an empty table.
std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const std::string& path,
                                const std::vector<double>& values,
                                const SweepRunHook& per_run = {});

} // namespace npheat

#endif
