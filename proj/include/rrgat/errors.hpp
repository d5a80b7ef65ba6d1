#pragma once

#include <stdexcept>
#include <string>

namespace rrgat {

// Malformed SMILES or other unreadable structure input.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad records, incompatible files, missing columns, degenerate statistics.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf in a forward pass, shape mismatches, failed gradient checks.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rrgat
