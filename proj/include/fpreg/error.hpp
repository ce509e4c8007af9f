#pragma once

#include <stdexcept>
#include <string>

namespace fpreg {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "Error"; }
};

/// A scalar argument outside its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidArgument"; }
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidGeometry"; }
};

class InvalidMesh : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidMesh"; }
};

class UnsupportedDegree : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "UnsupportedDegree"; }
};

class SpaceMismatch : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "SpaceMismatch"; }
};

class OutsideDomain : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "OutsideDomain"; }
};

class InterpolationFailure : public Error {
 public:
  InterpolationFailure(const std::string& what, long dof) : Error(what), dof_(dof) {}
  long dof() const noexcept { return dof_; }
  const char* kind() const noexcept override { return "InterpolationFailure"; }

 private:
  long dof_;
};

/// A linear solve (or a time step built on one) did not reach its tolerance.
/// `step` is -1 when the failure is not tied to a time step.
class SolveFailure : public Error {
 public:
  SolveFailure(const std::string& what, double residual, long step = -1)
      : Error(what), residual_(residual), step_(step) {}
  double residual() const noexcept { return residual_; }
  long step() const noexcept { return step_; }
  const char* kind() const noexcept override { return "SolveFailure"; }

 private:
  double residual_;
  long step_;
};

class InvalidFit : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidFit"; }
};

class CollapseFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "CollapseFailure"; }
};

class InvalidDistanceField : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidDistanceField"; }
};

/// Malformed input file or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "FormatError"; }
};

}  // namespace fpreg
