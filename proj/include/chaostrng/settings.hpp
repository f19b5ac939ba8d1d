#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "chaostrng/bitstream.hpp"
#include "chaostrng/chaos_map.hpp"
#include "chaostrng/mixed_signal_sim.hpp"

namespace chaostrng {

/// Everything needed to reproduce a run.
struct RunSettings {
  CircuitConfig circuit;
  NonIdealities noise = NonIdealities::defaults(CircuitConfig{});
  PostProcess post = PostProcess::none;
  ValidationOptions validation;
};

class SettingsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses flat `key = value` text ('#' or ';' comments). Missing keys keep
/// their defaults; absent sigma_th / sigma_adc follow the circuit's default
/// noise level. Unknown keys and malformed values throw SettingsError.
RunSettings parse_settings(std::string_view text);
RunSettings load_settings(const std::string& path);

/// Inverse of parse_settings; every field is written.
std::string format_settings(const RunSettings& settings);

}  // namespace chaostrng
