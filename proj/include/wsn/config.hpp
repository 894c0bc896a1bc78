#pragma once

#include <stdexcept>
#include <string>

#include "wsn/scenario.hpp"

namespace wsn {

/// Parse failure with the offending line and key in the message.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parse "KEY value" configuration text into a scenario, starting from the
/// defaults.  Lines are independent; '#' starts a comment; keys are
/// case-insensitive and may be followed by an optional '='.  Values tolerate
/// unit annotations in parentheses, trailing commas, and digits split by
/// stray spaces ("2.4 e 9").  Unknown keys are an error, named with their
/// line number.  The returned scenario is parsed, not yet validated.
Scenario parse_config(const std::string& text);

/// Read and parse a configuration file.  Throws ConfigError when the file
/// cannot be read.
Scenario parse_config_file(const std::string& path);

}  // namespace wsn
