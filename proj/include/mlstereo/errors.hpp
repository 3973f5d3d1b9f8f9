#pragma once

#include <stdexcept>
#include <string>

namespace mlstereo {

/// Inputs with incompatible or unsupported dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 1 - rho^2 underflowed with clamping disabled.
class DegenerateCovarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A metric or reduction was asked to average over zero pixels.
class EmptyMaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed file contents (headers, manifests, config files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failures. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlstereo
