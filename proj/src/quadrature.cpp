#include "oulcut/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <queue>
#include <vector>

namespace oulcut {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr long kEvalsPerPanel = 15;

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class T, class F>
Panel<T> eval_panel(const F& f, double a, double b) {
  // 7-point Gauss nodes sit at the even Kronrod abscissae (index 0 is the midpoint)
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = Gauss::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  T f0 = f(mid);
  T kron = f0 * wk[0];
  T gauss = f0 * wg[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const T pair = f(mid + half * x[i]) + f(mid - half * x[i]);
    kron += pair * wk[i];
    if (i % 2 == 0) gauss += pair * wg[i / 2];
  }
  const double err = std::max(std::abs(kron - gauss), 2e-16 * std::abs(kron));
  return {a, b, kron * half, err * std::abs(half)};
}

template <class T, class F>
QuadResult<T> adaptive(const F& f, double a, double b, const QuadOptions& opt) {
  QuadResult<T> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<Panel<T>> heap;
  Panel<T> first = eval_panel<T>(f, a, b);
  out.evals = kEvalsPerPanel;
  T total = first.value;
  double total_err = first.error;
  heap.push(first);
  while (total_err > opt.abs_tol && out.evals + 2 * kEvalsPerPanel <= opt.max_evals) {
    Panel<T> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    Panel<T> left = eval_panel<T>(f, worst.a, mid);
    Panel<T> right = eval_panel<T>(f, mid, worst.b);
    out.evals += 2 * kEvalsPerPanel;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  T sum{};
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.converged = err <= opt.abs_tol && std::isfinite(std::abs(sum));
  return out;
}

}  // namespace

QuadResult<double> integrate(const std::function<double(double)>& f, double a, double b,
                             const QuadOptions& opt) {
  return adaptive<double>(f, a, b, opt);
}

QuadResult<std::complex<double>> integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    const QuadOptions& opt) {
  return adaptive<std::complex<double>>(f, a, b, opt);
}

QuadResult<std::complex<double>> integrate_complex_to_inf(
    const std::function<std::complex<double>(double)>& f, double a, double first_chunk,
    double tail_tol, const QuadOptions& opt, int max_chunks) {
  QuadResult<std::complex<double>> out;
  double lo = a, h = first_chunk;
  for (int k = 0; k < max_chunks; ++k) {
    QuadOptions chunk_opt = opt;
    chunk_opt.max_evals = opt.max_evals - out.evals;
    if (chunk_opt.max_evals < 2 * kEvalsPerPanel) break;
    auto r = integrate_complex(f, lo, lo + h, chunk_opt);
    out.value += r.value;
    out.error += r.error;
    out.evals += r.evals;
    if (!r.converged) return out;
    if (std::abs(r.value) < tail_tol && k > 0) {
      out.converged = true;
      return out;
    }
    lo += h;
    h *= 2.0;
  }
  return out;
}

}  // namespace oulcut
