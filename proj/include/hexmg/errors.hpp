#pragma once

#include <stdexcept>
#include <string>

namespace hexmg {

/// Deformation gradient with non-positive determinant at a quadrature point.
class InvertedElementError : public std::runtime_error {
 public:
  InvertedElementError(double jacobian, int element = -1, int point = -1)
      : std::runtime_error(format(jacobian, element, point)),
        jacobian_(jacobian),
        element_(element),
        point_(point) {}

  double jacobian() const { return jacobian_; }
  int element() const { return element_; }
  int point() const { return point_; }

  InvertedElementError with_location(int element, int point) const {
    return InvertedElementError(jacobian_, element, point);
  }

 private:
  static std::string format(double j, int element, int point) {
    std::string msg = "non-positive deformation jacobian " + std::to_string(j);
    if (element >= 0) {
      msg += " in element " + std::to_string(element);
      if (point >= 0) msg += " at quadrature point " + std::to_string(point);
    }
    return msg;
  }

  double jacobian_;
  int element_;
  int point_;
};

class DegenerateElementError : public std::runtime_error {
 public:
  DegenerateElementError(int element, double det)
      : std::runtime_error("degenerate element " + std::to_string(element) +
                           ": mapping determinant " + std::to_string(det)) {}
};

/// Jacobian apply requested before any residual evaluation populated the
/// quadrature state.
class StateNotInitializedError : public std::runtime_error {
 public:
  StateNotInitializedError()
      : std::runtime_error(
            "quadrature state not initialized: evaluate the residual at the "
            "linearization point first") {}
};

class IndefiniteOperatorError : public std::runtime_error {
 public:
  explicit IndefiniteOperatorError(double curvature)
      : std::runtime_error("operator is not positive definite (p^T A p = " +
                           std::to_string(curvature) + ")") {}
};

class InvalidSmootherError : public std::runtime_error {
 public:
  explicit InvalidSmootherError(const std::string& what)
      : std::runtime_error("invalid smoother: " + what) {}
};

class NotSpdError : public std::runtime_error {
 public:
  explicit NotSpdError(const std::string& what)
      : std::runtime_error("factorization failed, matrix not SPD: " + what) {}
};

class StepRejectedError : public std::runtime_error {
 public:
  explicit StepRejectedError(const std::string& what)
      : std::runtime_error("nonlinear step rejected: " + what) {}
};

/// Configuration file problem; carries the offending line and key when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = 0, std::string key = "")
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) +
                                          (key.empty() ? "" : " (key '" + key + "')") +
                                          ": " + msg
                                    : "config: " + msg),
        line_(line),
        key_(std::move(key)) {}

  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error("i/o: " + what) {}
};

}  // namespace hexmg
