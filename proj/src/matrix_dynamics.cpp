#include "oulcut/matrix_dynamics.hpp"

#include "oulcut/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace oulcut {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double condition_number(const CMat& U) {
  Eigen::JacobiSVD<CMat> svd(U);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

std::vector<std::vector<int>> cluster_eigenvalues(const std::vector<cplx>& ev, double tol) {
  const int n = static_cast<int>(ev.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double scale = std::max({1.0, std::abs(ev[i]), std::abs(ev[j])});
      if (std::abs(ev[i] - ev[j]) <= tol * scale) parent[find(i)] = find(j);
    }
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  return groups;
}

int numeric_rank(const CMat& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(M);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

// e^{-t(Q - shift I)}
Mat shifted_exp(const Mat& Q, double shift, double t) {
  const int d = static_cast<int>(Q.rows());
  const Mat A = -t * (Q - shift * Mat::Identity(d, d));
  return A.exp();
}

}  // namespace

// ---------------------------------------------------------------- DriftSpectrum

DriftSpectrum DriftSpectrum::validate(const Mat& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw ValidationError("Q must be square");
  if (!Q.allFinite()) throw ValidationError("Q must have finite entries");
  DriftSpectrum s;
  s.Q_ = Q;
  const int d = static_cast<int>(Q.rows());
  const CMat Qc = Q.cast<cplx>();
  Eigen::ComplexEigenSolver<CMat> ces(Qc, false);
  for (int i = 0; i < d; ++i) s.eigenvalues_.push_back(ces.eigenvalues()(i));
  std::sort(s.eigenvalues_.begin(), s.eigenvalues_.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  s.min_re_ = s.eigenvalues_.front().real();
  s.max_re_ = s.eigenvalues_.front().real();
  for (const auto& e : s.eigenvalues_) {
    s.min_re_ = std::min(s.min_re_, e.real());
    s.max_re_ = std::max(s.max_re_, e.real());
  }
  if (s.min_re_ <= 1e-12) throw NotMPlus(s.min_re_);

  const double qnorm = std::max(1.0, Q.norm());
  for (double tol = 1e-8; tol <= 1.0001e-3; tol *= 10.0) {
    std::vector<EigenCluster> clusters;
    for (const auto& g : cluster_eigenvalues(s.eigenvalues_, tol)) {
      EigenCluster c;
      cplx mu = 0.0;
      for (int i : g) mu += s.eigenvalues_[i];
      c.value = mu / static_cast<double>(g.size());
      c.multiplicity = static_cast<int>(g.size());
      const CMat A = Qc - c.value * CMat::Identity(d, d);
      CMat P = CMat::Identity(d, d);
      for (int p = 0; p < c.multiplicity; ++p) P = P * A;
      Eigen::JacobiSVD<CMat> svd(P, Eigen::ComputeFullV);
      c.basis = svd.matrixV().rightCols(c.multiplicity);
      c.nilpotent = c.basis.adjoint() * A * c.basis;
      // Jordan block sizes from ranks of powers of the nilpotent part
      const double rank_tol = 1e-6 * qnorm;
      std::vector<int> ranks{c.multiplicity};
      CMat Np = CMat::Identity(c.multiplicity, c.multiplicity);
      for (int p = 1; p <= c.multiplicity; ++p) {
        Np = Np * c.nilpotent;
        ranks.push_back(numeric_rank(Np, rank_tol * std::pow(qnorm, p - 1)));
      }
      ranks.push_back(0);
      for (int p = 1; p <= c.multiplicity; ++p) {
        const int at_least_p = ranks[p - 1] - ranks[p];
        const int at_least_p1 = ranks[p] - ranks[p + 1];
        for (int b = 0; b < at_least_p - at_least_p1; ++b) c.jordan_sizes.push_back(p);
      }
      std::sort(c.jordan_sizes.rbegin(), c.jordan_sizes.rend());
      clusters.push_back(std::move(c));
    }
    CMat U(d, d);
    int col = 0;
    for (const auto& c : clusters) {
      U.middleCols(col, c.multiplicity) = c.basis;
      col += c.multiplicity;
    }
    const double cond = condition_number(U);
    if (s.basis_.size() == 0 || cond < s.basis_cond_) {
      s.clusters_ = std::move(clusters);
      s.basis_ = U;
      s.basis_cond_ = cond;
      s.cluster_tol_ = tol;
    }
    // a split defective cluster still yields cond ~ 1/|perturbation| ~ 1e8
    if (cond <= 1e6) break;
  }
  if (s.basis_cond_ > 1e8)
    s.warnings_.push_back("IllConditionedBasis: condition number " + std::to_string(s.basis_cond_));
  s.basis_lu_.compute(s.basis_);
  s.decay_ = decay_constants(s);
  return s;
}

bool DriftSpectrum::diagonalizable() const {
  for (const auto& c : clusters_)
    for (int b : c.jordan_sizes)
      if (b > 1) return false;
  return true;
}

bool DriftSpectrum::conformal(double* gamma) const {
  const int d = dim();
  const double g = Q_.trace() / d;
  const Mat S = Q_ - g * Mat::Identity(d, d);
  const bool ok = (S + S.transpose()).norm() <= 1e-12 * std::max(1.0, Q_.norm());
  if (ok && gamma) *gamma = g;
  return ok;
}

CVec DriftSpectrum::coordinates(const Vec& x) const { return basis_lu_.solve(x.cast<cplx>()); }

// ---------------------------------------------------------------- exponentials

Mat exp_matrix(const DriftSpectrum& spec, double t) {
  if (!(t >= 0.0)) throw ValidationError("exp_action requires t >= 0");
  const int d = spec.dim();
  if (t == 0.0) return Mat::Identity(d, d);
  return std::exp(-spec.min_real() * t) * shifted_exp(spec.Q(), spec.min_real(), t);
}

Vec exp_action(const DriftSpectrum& spec, double t, const Vec& x) {
  return exp_matrix(spec, t) * x;
}

Vec exp_action_transpose(const DriftSpectrum& spec, double t, const Vec& x) {
  return exp_matrix(spec, t).transpose() * x;
}

// ---------------------------------------------------------------- decay constants

DecayConstants decay_constants(const DriftSpectrum& spec) {
  if (spec.decay_.c1 > 0.0) return spec.decay_;
  const int d = spec.dim();
  const double lo = spec.min_real(), hi = spec.max_real();
  const double horizon = 60.0 / lo;
  const bool diag = spec.diagonalizable();
  const std::vector<double> deltas = diag ? std::vector<double>{0.0, 0.05, 0.1, 0.2, 0.4}
                                          : std::vector<double>{0.05, 0.1, 0.2, 0.4, 0.8};
  std::vector<double> grid;
  for (int k = 0; k <= 400; ++k) grid.push_back(horizon * k / 400.0);
  for (int k = 1; k <= 60; ++k) grid.push_back(horizon * std::pow(10.0, -k / 10.0));

  const Mat Qt = spec.Q().transpose();
  std::mt19937_64 gen(0xdecaULL);
  std::uniform_real_distribution<double> ut(0.0, 2.0 * horizon);
  std::normal_distribution<double> nd;
  std::vector<std::pair<double, Vec>> probes;
  for (int i = 0; i < 1000; ++i) {
    Vec l(d);
    for (int j = 0; j < d; ++j) l[j] = nd(gen);
    probes.emplace_back(i < 50 ? horizon * i / 1000.0 : ut(gen), l);
  }

  for (double frac : deltas) {
    const double delta = frac * lo;
    DecayConstants dc{lo - delta, hi + delta, 0.0, std::numeric_limits<double>::infinity()};
    for (double t : grid) {
      // e^{-tQ^T} scaled by e^{c1 t} and e^{c2 t}; both via the shifted exponential
      const Mat E = shifted_exp(Qt, lo, t);
      // smallest singular value of e^{-t(Q^T - hi)} as 1 / largest of its (bounded) inverse
      const Mat Einv = shifted_exp(-Qt, -hi, t);
      const double top = Eigen::JacobiSVD<Mat>(E).singularValues()(0);
      const double inv_top = Eigen::JacobiSVD<Mat>(Einv).singularValues()(0);
      dc.c3 = std::max(dc.c3, top * std::exp(-delta * t));
      dc.c4 = std::min(dc.c4, std::exp(delta * t) / inv_top);
    }
    if (std::abs(dc.c3 - 1.0) < 1e-12) dc.c3 = 1.0;
    if (std::abs(dc.c4 - 1.0) < 1e-12) dc.c4 = 1.0;
    bool ok = dc.c4 > 0.0;
    for (const auto& [t, l] : probes) {
      const Vec y = shifted_exp(Qt, lo, t) * l;  // = e^{lo t} e^{-tQ^T} l
      const double n = y.norm(), ln = l.norm();
      if (n > dc.c3 * std::exp(delta * t) * ln * (1.0 + 1e-12) ||
          n < dc.c4 * std::exp(-(hi + delta - lo) * t) * ln * (1.0 - 1e-12)) {
        ok = false;
        break;
      }
    }
    if (ok) return dc;
  }
  throw NumericError("decay constants failed calibration after 5 rounds");
}

// ---------------------------------------------------------------- asymptotics

CVec AsymptoticData::leading(double t) const {
  CVec s = CVec::Zero(x0.size());
  for (const auto& term : terms) s += std::exp(cplx(0.0, term.omega * t)) * term.v;
  return s;
}

Vec AsymptoticData::expansion_value(double t) const {
  CVec s = CVec::Zero(x0.size());
  for (const auto& ch : expansion) {
    CVec inner = CVec::Zero(x0.size());
    double tp = 1.0;
    for (const auto& w : ch.coeffs) {
      inner += tp * w;
      tp *= t;
    }
    s += std::exp(-ch.rate * t) * inner;
  }
  return s.real();
}

double AsymptoticData::leading_residual(const DriftSpectrum& spec, double t) const {
  // (e^{gamma t}/t^{ell-1}) e^{-tQ} x0 through the shifted exponential
  const Vec scaled = std::exp((gamma - spec.min_real()) * t) *
                     (shifted_exp(spec.Q(), spec.min_real(), t) * x0) /
                     std::pow(t, ell - 1);
  const CVec L = leading(t);
  return (scaled.cast<cplx>() - L).norm() / L.norm();
}

double AsymptoticData::expansion_residual(const DriftSpectrum& spec, double t) const {
  const Vec scaled =
      std::exp((gamma - spec.min_real()) * t) * (shifted_exp(spec.Q(), spec.min_real(), t) * x0);
  CVec s = CVec::Zero(x0.size());
  for (const auto& ch : expansion) {
    CVec inner = CVec::Zero(x0.size());
    double tp = 1.0;
    for (const auto& w : ch.coeffs) {
      inner += tp * w;
      tp *= t;
    }
    s += std::exp((gamma - ch.rate) * t) * inner;
  }
  return (scaled - s.real()).norm() / scaled.norm();
}

AsymptoticData asymptotic_decomposition(const DriftSpectrum& spec, const Vec& x0) {
  if (x0.size() != spec.dim()) throw ValidationError("x0 dimension mismatch");
  if (x0.norm() == 0.0)
    throw ValidationError("x0 = 0: the asymptotic decomposition requires a nonzero start");
  AsymptoticData out;
  out.x0 = x0;
  const CVec y = spec.coordinates(x0);
  const double qnorm = std::max(1.0, spec.Q().norm());

  struct Active {
    const EigenCluster* c;
    int chain;
    std::vector<CVec> coeffs;
  };
  std::vector<Active> active;
  int offset = 0;
  for (const auto& c : spec.clusters()) {
    const CVec yj = y.segment(offset, c.multiplicity);
    offset += c.multiplicity;
    const CVec pj = c.basis * yj;
    if (pj.norm() <= 1e-10 * x0.norm()) continue;
    Active a{&c, 1, {}};
    CVec z = yj;
    double fact = 1.0;
    for (int p = 0; p < c.multiplicity; ++p) {
      if (p > 0) {
        z = c.nilpotent * z;
        fact *= p;
        if (z.norm() <= 1e-7 * yj.norm() * std::pow(qnorm, p)) break;
        a.chain = p + 1;
      }
      a.coeffs.push_back((p % 2 ? -1.0 : 1.0) / fact * (c.basis * z));
    }
    active.push_back(std::move(a));
    out.expansion.push_back({c.value, active.back().coeffs});
  }

  out.gamma = std::numeric_limits<double>::infinity();
  for (const auto& a : active) out.gamma = std::min(out.gamma, a.c->value.real());
  const double tie = 1e-8 * std::max(1.0, out.gamma);
  out.ell = 1;
  for (const auto& a : active)
    if (a.c->value.real() <= out.gamma + tie) out.ell = std::max(out.ell, a.chain);
  for (const auto& a : active) {
    if (a.c->value.real() > out.gamma + tie || a.chain != out.ell) continue;
    double omega = -a.c->value.imag();
    if (std::abs(omega) < 1e-12) omega = 0.0;
    out.terms.push_back({omega, a.coeffs[out.ell - 1]});
  }
  std::sort(out.terms.begin(), out.terms.end(),
            [](const AsymptoticTerm& a, const AsymptoticTerm& b) { return a.omega < b.omega; });
  out.m = static_cast<int>(out.terms.size());
  out.v_sum = CVec::Zero(x0.size());
  for (const auto& term : out.terms) {
    double th = std::fmod(term.omega, kTwoPi);
    if (th < 0) th += kTwoPi;
    out.thetas.push_back(th);
    out.v_sum += term.v;
    if (term.omega != 0.0) out.oscillatory = true;
  }
  return out;
}

OscillationEnvelope oscillation_envelope(const AsymptoticData& asym,
                                         const std::vector<double>& t_grid) {
  OscillationEnvelope env;
  if (!asym.oscillatory || t_grid.empty()) {
    env.liminf_est = env.limsup_est = asym.v_sum.norm();
    env.basin_samples.push_back(asym.v_sum.real());
    return env;
  }
  env.liminf_est = std::numeric_limits<double>::infinity();
  double max_norm = 0.0;
  std::vector<Vec> raw;
  for (double t : t_grid) {
    const CVec L = asym.leading(t);
    const double n = L.norm();
    env.liminf_est = std::min(env.liminf_est, n);
    env.limsup_est = std::max(env.limsup_est, n);
    max_norm = std::max(max_norm, n);
    raw.push_back(L.real());
  }
  const double tol = 1e-3 * max_norm;
  for (const auto& v : raw) {
    bool dup = false;
    for (const auto& s : env.basin_samples)
      if ((s - v).norm() <= tol) {
        dup = true;
        break;
      }
    if (!dup) env.basin_samples.push_back(v);
    if (env.basin_samples.size() >= 256) break;
  }
  return env;
}

Mat lyapunov(const Mat& Q, const Mat& S) {
  const int d = static_cast<int>(Q.rows());
  const Mat I = Mat::Identity(d, d);
  Mat K = Mat::Zero(d * d, d * d);
  // column-major vec: vec(QX) = (I kron Q) vec X, vec(X Q^T) = (Q kron I) vec X
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      K.block(i * d, j * d, d, d) += I(i, j) * Q;
      K.block(i * d, j * d, d, d) += Q(i, j) * I;
    }
  const Vec s = Eigen::Map<const Vec>(S.data(), d * d);
  const Vec x = K.fullPivLu().solve(s);
  Mat X = Eigen::Map<const Mat>(x.data(), d, d);
  return 0.5 * (X + X.transpose());
}

}  // namespace oulcut
