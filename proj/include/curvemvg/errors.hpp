#pragma once

#include <stdexcept>
#include <string>

namespace curvemvg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree (vector length, matrix rows/cols).
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Input violates a geometric precondition (coincident centers, plane
// through a center, singular conic, ...).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// A linear fit or solve did not produce a unique, well-conditioned answer.
class FitError : public Error {
 public:
  using Error::Error;
};

// Not enough independent equations for a linear reconstruction.
class RankDeficit : public Error {
 public:
  RankDeficit(const std::string& what, int deficit)
      : Error(what), deficit_(deficit) {}
  int deficit() const { return deficit_; }

 private:
  int deficit_;
};

// Malformed scene configuration or command-line input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace curvemvg
