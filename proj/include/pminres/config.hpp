#pragma once

#include "pminres/driver.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace pminres {

inline constexpr int kConfigVersion = 1;

/// Raised for malformed config input. `line` is 0 for errors that do not
/// come from a file (command-line overrides).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& field, const std::string& what);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Sets one field from its textual value. Keys are listed in docs/config.md.
void apply_setting(ProblemConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines on top of `base`. Blank lines and text after
/// '#' are ignored. A `version` key, when present, must equal kConfigVersion.
/// The result is validated.
ProblemConfig parse_config(std::istream& in, const std::string& source = "<config>",
                           ProblemConfig base = {});
ProblemConfig load_config(const std::string& path, ProblemConfig base = {});

/// Inverse of parse_config for every key.
void write_config(const ProblemConfig& cfg, std::ostream& os);

}  // namespace pminres
