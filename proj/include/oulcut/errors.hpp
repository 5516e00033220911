#pragma once

#include <stdexcept>
#include <string>

namespace oulcut {

// Bad input: maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (quadrature, resolution, checker rejection): exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NotMPlus : public ValidationError {
 public:
  explicit NotMPlus(double min_real_part)
      : ValidationError("matrix is not in M+(d): eigenvalue with real part " +
                        std::to_string(min_real_part)),
        min_re_(min_real_part) {}
  double min_real_part() const { return min_re_; }

 private:
  double min_re_;
};

class UnderResolved : public NumericError {
 public:
  using NumericError::NumericError;
};

class OffLattice : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace oulcut
