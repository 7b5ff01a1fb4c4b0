#include "gridstream/errors.hpp"

#include <utility>

namespace gridstream {

VariableAbsentError::VariableAbsentError(std::string variable)
    : Error("no input contains variable '" + variable + "'"),
      variable_(std::move(variable)) {}

TruncationError::TruncationError(std::size_t offset, const std::string& what)
    : FormatError(what + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

FilenameError::FilenameError(std::string component, const std::string& what)
    : Error("bad " + component + ": " + what), component_(std::move(component)) {}

}  // namespace gridstream
