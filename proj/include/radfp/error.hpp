#pragma once

#include <stdexcept>
#include <string>

namespace radfp {

/// Base class for all errors thrown by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content (NRRD headers, manifests, model artifacts).
class parse_error : public error {
 public:
  using error::error;
};

/// Caller violated a documented precondition.
class invalid_argument : public error {
 public:
  using error::error;
};

}  // namespace radfp
