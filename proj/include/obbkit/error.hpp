// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace obbkit {

/// Broad failure category. The CLI maps each category onto a distinct exit
/// code, so keep the numbering stable.
enum class ErrorKind {
  invalid_argument = 1,  // value outside its documented range
  shape_mismatch = 2,    // incompatible tensor / sequence sizes
  parse = 3,             // malformed text input (line-numbered)
  schema = 4,            // structurally valid input missing required fields
  io = 5,                // file could not be opened / written
  internal = 6,          // broken invariant inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) {
    fail(kind, what);
  }
}

}  // namespace obbkit
