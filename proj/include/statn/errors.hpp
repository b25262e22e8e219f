#pragma once

#include <stdexcept>
#include <string>

namespace statn {

// Error taxonomy. The CLI maps these onto exit codes: input/config/format
// errors are usage problems (exit 2), constraint/numeric errors are
// verification failures (exit 1).

struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct format_error : std::runtime_error {
  explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct constraint_error : std::runtime_error {
  explicit constraint_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace statn
