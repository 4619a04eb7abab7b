#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcl {

// Non-finite value showed up where the math requires finite input.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A trace or checkpoint file failed to parse. `line` is 1-based.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line_no)
      : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  std::size_t line = 0;
};

}  // namespace dcl
