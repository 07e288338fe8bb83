#ifndef NPHEAT_IO_CLI_HPP
#define NPHEAT_IO_CLI_HPP

#include <string>
#include <vector>

#include "npheat/sim.hpp"
#include "npheat/vasculature.hpp"

namespace npheat {

// Scenario files are flat sectioned key=value text. Numeric values accept a
// unit suffix ("sar = 2.0 MW/kg") and are converted to SI internally; a bare
// number is taken as SI. Unknown sections, unknown keys, duplicate keys,
// malformed lines and units that do not fit the key all raise ConfigError
// with the file name and line number. The parsed config is validated before
// it is returned.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin);

// Grid-network generator spec for `gen-network`: a [network] section with
// the generator parameters, same value syntax as scenario files.
GridNetworkParams parse_network_spec(const std::string& path);
GridNetworkParams parse_network_spec_text(const std::string& text, const std::string& origin);

// Canonical echo of the full configuration, defaults included, in SI units.
// The text is itself a parseable scenario file and round-trips to an
// equivalent config; `run` writes it into the run log.
std::string format_resolved_config(const ScenarioConfig& config);

// Stable time-series schema:
//   step,t,mean_T,max_T,min_T[,probe_<name>...],np_mass_if,np_mass_vessel
// one row per recorded step thinned by output.csv_every (the last step is
// always written), full-precision decimal so reruns are bitwise identical.
std::string time_series_csv(const ScenarioConfig& config, const RunResult& result);

// Command-line entry point.
//   run <config.cfg>                          scenario run
//   sweep <config.cfg> --param <path> --values <v1,v2,...>
//   gen-network <spec.cfg> -o <network file>
//   verify <case>        mms-heat | mms-transport | pennes | line-source | all
// Global flags: --out-dir <dir> (default "out"), --quiet, --threads <n>
// (concurrent sweep runs). Artifacts land under <out-dir>/<case name>/.
// Returns 0 on success, 1 on configuration/usage errors, 2 on numerical
// failures (including verification cases out of tolerance).
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

} // namespace npheat

#endif
