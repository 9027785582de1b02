#ifndef SVMCAST_SCENARIO_IO_HPP_
#define SVMCAST_SCENARIO_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "svmcast/harness.hpp"

namespace svmcast {

// Named bitstream presets (city, ice, crew): per-layer source symbols,
// outage targets and playback parameters of the three test sequences.
struct BitstreamPreset {
  std::string name;
  std::vector<LayerSpec> layers;
  std::vector<LayerPlayback> playback;
  NmosParams nmos;  // content parameters; s_max/f_max from the top layer
};

const BitstreamPreset& bitstream_preset(const std::string& name);
std::vector<std::string> bitstream_preset_names();

// Default per-layer outage targets {1e-4, 4e-4, 5e-4}.
std::vector<double> default_outage_targets();

struct ParsedScenario {
  Scenario scenario;
  std::string study;  // static | feedback | crs | smoothing | ffr (empty if none)
  std::uint64_t config_hash = 0;
};

// Parse and validate a scenario JSON document. Unknown keys are rejected.
// Throws std::runtime_error with a path-anchored message on schema errors.
ParsedScenario parse_scenario_text(const std::string& json_text);
ParsedScenario load_scenario(const std::string& path);

// CSV helpers. Doubles are written with full precision so that re-reading a
// file reproduces the values bit-exactly.
std::string format_double(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace svmcast

#endif  // SVMCAST_SCENARIO_IO_HPP_
