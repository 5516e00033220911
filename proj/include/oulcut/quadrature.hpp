#pragma once

#include <complex>
#include <functional>

namespace oulcut {

struct QuadOptions {
  double abs_tol = 1e-9;
  long max_evals = 1L << 20;
};

template <class T>
struct QuadResult {
  T value{};
  double error = 0.0;
  long evals = 0;
  bool converged = false;
};

// Globally adaptive 15-point Gauss-Kronrod on a finite interval.
QuadResult<double> integrate(const std::function<double(double)>& f, double a, double b,
                             const QuadOptions& opt = {});
QuadResult<std::complex<double>> integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    const QuadOptions& opt = {});

// Integral over [a, inf): sums [a, a+h], [a+h, a+3h], ... with doubling chunks until
// a chunk contributes less than tail_tol.
QuadResult<std::complex<double>> integrate_complex_to_inf(
    const std::function<std::complex<double>(double)>& f, double a, double first_chunk,
    double tail_tol, const QuadOptions& opt = {}, int max_chunks = 60);

}  // namespace oulcut
