#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "bgc/correct.hpp"
#include "bgc/estimate.hpp"

// Flat key=value run configuration. Every key has a default; unknown keys,
// repeated keys and unparsable values are usage errors. '#' starts a comment.

namespace bgc {

struct Settings {
  CorrectConfig correct;
  FitOptions fit;
};

Settings parse_settings(std::istream& in, const std::string& source);
Settings load_settings(const std::string& path);

// Explicit path first, then the BGC_CONFIG environment variable, else defaults.
Settings resolve_settings(const std::optional<std::string>& explicit_path);

inline constexpr const char* kConfigEnv = "BGC_CONFIG";

// Known keys with their default values, in documentation order.
std::vector<std::pair<std::string, std::string>> default_settings();

}  // namespace bgc
