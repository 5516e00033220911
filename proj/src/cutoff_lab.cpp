#include "oulcut/cutoff_lab.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace oulcut {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("epsilon out of (0,1)");
}

TvEstimate beyond_resolution(double resolution = 0.0) {
  TvEstimate e;
  e.value = 1.0;
  e.beyond_resolution = true;
  e.resolution = resolution;
  return e;
}

// Two laws inverted on one lattice centred between their means.
std::pair<DensityGrid, DensityGrid> shared_pair(const CfFunction& a, const Vec& mean_a,
                                                const CfFunction& b, const Vec& mean_b,
                                                const GridMeta& meta_a, const GridMeta& meta_b) {
  const int d = static_cast<int>(mean_a.size());
  const Vec center = 0.5 * (mean_a + mean_b);
  const double span = 0.5 * (mean_a - mean_b).norm();
  const auto plan = plan_lattice({a, b}, d, center, span);
  return {density_from_cf(a, plan, meta_a), density_from_cf(b, plan, meta_b)};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x51ed27u));
}

SampleBatch invariant_batch(const LevyModel& model, const DriftSpectrum& spec, double eps,
                            const MonteCarloOptions& mc, std::uint64_t tag) {
  return sample_blocks(mc.samples, derive_seed(mc.seed, tag), detail::resolve_workers(mc.workers),
                       [&](long m, RngStream& r) { return sample_invariant(model, spec, eps, m, r); });
}

SampleBatch shifted(SampleBatch b, const Vec& shift) {
  b.values.colwise() += shift;
  return b;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

CutoffSchedule cutoff_schedule(double gamma, int ell, double eps, double w_correction) {
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  require(ell >= 1, "ell must be at least 1");
  require_eps(eps);
  const double L = std::log(1.0 / eps);
  CutoffSchedule s;
  s.gamma = gamma;
  s.ell = ell;
  s.eps = eps;
  s.w_correction = w_correction;
  s.t_eps = L / (2.0 * gamma) + (ell > 1 ? (ell - 1) / gamma * std::log(L) : 0.0);
  s.w_eps = 1.0 / gamma + w_correction;
  if (!(s.t_eps > 0.0))
    throw NonpositiveCutoffTime("cut-off time t_eps = " + fmt(s.t_eps) +
                                " is not positive; epsilon is too large");
  require(s.w_eps > 0.0, "window w_eps must be positive");
  return s;
}

ScalingRatio scaling_limit_ratio(double gamma, int ell, double eps, double c) {
  const auto s = cutoff_schedule(gamma, ell, eps);
  const double t = s.t_eps + c / gamma;
  require(t > 0.0, "scaling ratio needs t_eps + c / gamma > 0");
  ScalingRatio r;
  r.value = std::exp((ell - 1) * std::log(t) - gamma * t + 0.5 * std::log(1.0 / eps));
  r.target = std::pow(2.0 * gamma, 1 - ell) * std::exp(-c);
  return r;
}

std::string to_string(ProfileMethod m) {
  return m == ProfileMethod::DensityShift ? "DensityShift" : "MonteCarlo";
}

std::string to_string(CutoffLevel l) {
  switch (l) {
    case CutoffLevel::Cutoff: return "Cutoff";
    case CutoffLevel::Window: return "Window";
    case CutoffLevel::Profile: return "Profile";
  }
  return "?";
}

RegimeCertificate require_density_regime(const LevyModel& model, const DriftSpectrum& spec) {
  auto cert = smoothness_regime(model, spec);
  if (cert.regime == SmoothnessRegime::FullRankGaussian || cert.regime == SmoothnessRegime::StableTail)
    return cert;
  const auto h = check_condition_H(model, spec, {2.0, 4.0, 8.0, 16.0, 32.0},
                                   [](double r) { return std::log1p(r); });
  if (h.verdict != Verdict::PassNumeric)
    throw DensityRegimeUnavailable("no density regime: condition (H) " + to_string(h.verdict) +
                                       (h.note.empty() ? "" : " (" + h.note + ")"),
                                   h);
  cert.note += cert.note.empty() ? "(H) passed" : "; (H) passed";
  return cert;
}

DensityGrid natural_invariant_density(const CfEvaluator& ev, double span) {
  const int d = ev.dim();
  const CfFunction cf = [&ev](const Vec& l) { return ev.inatural(kInfiniteHorizon, l); };
  const auto plan = plan_lattice({cf}, d, Vec::Zero(d), span);
  GridMeta meta;
  meta.eps = 1.0;
  meta.t = kInfiniteHorizon;
  meta.includes_drift = false;
  return density_from_cf(cf, plan, meta);
}

Vec profile_shift(const AsymptoticData& asym, double c) {
  require(!asym.oscillatory, "oscillatory asymptotics: use oscillation_profile_band");
  const double im = asym.v_sum.imag().norm();
  if (im > 1e-10 * std::max(1.0, asym.v_sum.norm()))
    throw ComplexShiftResidual("profile shift has imaginary residual " + fmt(im), im);
  return std::pow(2.0 * asym.gamma, 1 - asym.ell) * std::exp(-c) * asym.v_sum.real();
}

ProfileCurve profile_curve(const LevyModel& model, const DriftSpectrum& spec,
                           const AsymptoticData& asym, const std::vector<double>& c_grid,
                           ProfileMethod method, const MonteCarloOptions& mc) {
  require(!c_grid.empty(), "empty c grid");
  ProfileCurve out;
  out.c_grid = c_grid;
  out.method = method;
  std::vector<Vec> shifts;
  double span = 0.0;
  for (double c : c_grid) {
    shifts.push_back(profile_shift(asym, c));
    span = std::max(span, shifts.back().norm());
  }
  out.values.resize(c_grid.size());
  if (method == ProfileMethod::DensityShift) {
    require_density_regime(model, spec);
    CfEvaluator ev(model, spec);
    const auto f = natural_invariant_density(ev, span);
    for (size_t k = 0; k < c_grid.size(); ++k) out.values[k] = tv_shift(f, shifts[k]);
  } else {
    const auto xs = invariant_batch(model, spec, 1.0, mc, 1);
    const auto ys = invariant_batch(model, spec, 1.0, mc, 2);
    EmpiricalTvOptions opt;
    opt.seed = derive_seed(mc.seed, 3);
    for (size_t k = 0; k < c_grid.size(); ++k)
      out.values[k] = tv_empirical(shifted(xs, shifts[k]), ys, opt);
  }
  // ordered by c for the limit and monotonicity checks
  std::vector<size_t> order(c_grid.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return c_grid[a] < c_grid[b]; });
  out.left_limit = out.values[order.front()].value;
  out.right_limit = out.values[order.back()].value;
  for (size_t k = 1; k < order.size(); ++k) {
    const auto& prev = out.values[order[k - 1]];
    const auto& cur = out.values[order[k]];
    const double tol = method == ProfileMethod::DensityShift
                           ? 1e-9
                           : 0.01 + 3.0 * std::hypot(prev.std_error, cur.std_error);
    if (cur.value > prev.value + tol) out.monotone = false;
  }
  return out;
}

TvEstimate profile_value(const LevyModel& model, const DriftSpectrum& spec,
                         const AsymptoticData& asym, double c, ProfileMethod method,
                         const MonteCarloOptions& mc) {
  return profile_curve(model, spec, asym, {c}, method, mc).values.front();
}

InvarianceReport check_invariance_property(const DensityGrid& f_inf, double radius,
                                           std::vector<Vec> dirs) {
  require(f_inf.dim == 2, "invariance check needs a two-dimensional grid");
  if (dirs.empty())
    for (int k = 0; k < 8; ++k) {
      const double a = k * std::numbers::pi / 8.0;
      Vec u(2);
      u << std::cos(a), std::sin(a);
      dirs.push_back(u);
    }
  InvarianceReport rep;
  rep.radius = radius;
  double lo = 1.0, hi = 0.0;
  for (const auto& u : dirs) {
    require(u.size() == 2 && u.norm() > 0.0, "directions must be nonzero 2-vectors");
    const double v = tv_shift(f_inf, radius * u.normalized()).value;
    rep.values.push_back(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  rep.directions = std::move(dirs);
  rep.max_difference = hi - lo;
  rep.pass = rep.max_difference <= 2e-3;
  return rep;
}

OscillationBand oscillation_profile_band(const LevyModel& model, const DriftSpectrum& spec,
                                         const AsymptoticData& asym, double c,
                                         std::vector<double> t_probe_grid) {
  OscillationBand band;
  if (!asym.oscillatory) {
    const auto v = profile_value(model, spec, asym, c);
    band.lower = band.upper = v;
    band.shifts.push_back(profile_shift(asym, c));
    band.band_samples.push_back(v.value);
    band.collapsed = band.envelope_constant = true;
    return band;
  }
  if (t_probe_grid.empty())
    for (int k = 0; k < 512; ++k) t_probe_grid.push_back(64.0 * k / 511.0);
  const auto env = oscillation_envelope(asym, t_probe_grid);
  const double factor = std::pow(2.0 * asym.gamma, 1 - asym.ell) * std::exp(-c);
  require_density_regime(model, spec);
  CfEvaluator ev(model, spec);
  const auto f = natural_invariant_density(ev, factor * env.limsup_est);
  double lo = 2.0, hi = -1.0;
  // at most 64 basin points, evenly thinned
  const size_t nb = env.basin_samples.size();
  const size_t stride = (nb + 63) / 64;
  for (size_t k = 0; k < nb; k += stride) {
    const Vec s = factor * env.basin_samples[k];
    const auto est = tv_shift(f, s);
    band.shifts.push_back(s);
    band.band_samples.push_back(est.value);
    if (est.value < lo) {
      lo = est.value;
      band.lower = est;
    }
    if (est.value > hi) {
      hi = est.value;
      band.upper = est;
    }
  }
  band.envelope_constant = env.limsup_est - env.liminf_est <= 1e-6 * env.limsup_est;
  if (band.envelope_constant && f.dim == 2) {
    band.isotropy = check_invariance_property(f, factor * env.limsup_est);
    band.collapsed = band.isotropy.pass;
  }
  return band;
}

TvEstimate auxiliary_metric(const LevyModel& model, const DriftSpectrum& spec, double eps,
                            const Vec& x0, double t) {
  require_eps(eps);
  require(t >= 0.0, "time must be nonnegative");
  require_density_regime(model, spec);
  CfEvaluator ev(model, spec);
  const Vec shift = exp_action(spec, t, x0) / std::sqrt(eps);
  try {
    const auto f = natural_invariant_density(ev, shift.norm());
    return tv_shift(f, shift);
  } catch (const OffLattice&) {
    return beyond_resolution();
  }
}

TvEstimate error_term(const LevyModel& model, const DriftSpectrum& spec, double t) {
  require(t > 0.0 && std::isfinite(t), "error term needs finite t > 0");
  require_density_regime(model, spec);
  CfEvaluator ev(model, spec);
  const Vec zero = Vec::Zero(model.dim());
  GridMeta mt, mi;
  mt.t = t;
  mt.includes_drift = mi.includes_drift = true;
  auto [ft, fi] = shared_pair(ev.scaled_law(1.0, zero, t), ev.drift_center(t),
                              ev.scaled_law(1.0, zero, kInfiniteHorizon),
                              ev.drift_center(kInfiniteHorizon), mt, mi);
  return tv_densities(ft, fi);
}

std::vector<DistancePoint> distance_curve(const LevyModel& model, const DriftSpectrum& spec,
                                          double eps, const Vec& x0,
                                          const std::vector<double>& t_grid, ProfileMethod method,
                                          const MonteCarloOptions& mc) {
  require_eps(eps);
  require(x0.size() == model.dim(), "x0 dimension mismatch");
  for (double t : t_grid) require(t >= 0.0 && std::isfinite(t), "times must be finite and >= 0");
  std::vector<DistancePoint> out(t_grid.size());
  if (method == ProfileMethod::DensityShift) {
    require_density_regime(model, spec);
    detail::parallel_for(static_cast<long>(t_grid.size()), mc.workers, [&](long k) {
      const double t = t_grid[k];
      out[k].t = t;
      if (t == 0.0) {
        // point mass against an absolutely continuous law
        out[k].estimate.value = 1.0;
        return;
      }
      CfEvaluator ev(model, spec);
      const Vec mt = ev.drift_center(t) + exp_action(spec, t, x0) / std::sqrt(eps);
      const Vec mi = ev.drift_center(kInfiniteHorizon);
      GridMeta gt, gi;
      gt.eps = gi.eps = eps;
      gt.t = t;
      gt.includes_drift = gi.includes_drift = true;
      try {
        auto [ft, fi] = shared_pair(ev.scaled_law(eps, x0, t), mt,
                                    ev.scaled_law(eps, x0, kInfiniteHorizon), mi, gt, gi);
        out[k].estimate = tv_densities(ft, fi);
      } catch (const OffLattice&) {
        out[k].estimate = beyond_resolution();
      }
    });
  } else {
    const auto inv = invariant_batch(model, spec, eps, mc, 0);
    const int w = detail::resolve_workers(mc.workers);
    for (size_t k = 0; k < t_grid.size(); ++k) {
      const double t = t_grid[k];
      const auto xs = sample_blocks(mc.samples, derive_seed(mc.seed, 100 + k), w,
                                    [&](long m, RngStream& r) {
                                      return sample_ou_exact(model, spec, eps, x0, t, m, r);
                                    });
      EmpiricalTvOptions opt;
      opt.seed = derive_seed(mc.seed, 200000 + k);
      out[k].t = t;
      out[k].estimate = tv_empirical(xs, inv, opt);
    }
  }
  return out;
}

SandwichProbe sandwich_probe(const LevyModel& model, const DriftSpectrum& spec, double eps,
                             const Vec& x0, double t) {
  SandwichProbe p;
  p.eps = eps;
  p.t = t;
  p.d = distance_curve(model, spec, eps, x0, {t}).front().estimate;
  p.D = auxiliary_metric(model, spec, eps, x0, t);
  p.R = error_term(model, spec, t);
  return p;
}

CutoffReport verify_cutoff(const LevyModel& model, const DriftSpectrum& spec,
                           const std::vector<double>& eps_list, const Vec& x0, CutoffLevel level,
                           int workers) {
  for (double e : eps_list) require_eps(e);
  if (eps_list.size() < 3)
    throw InsufficientEpsilonRange("need at least 3 epsilons, got " + std::to_string(eps_list.size()));
  for (size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1]))
      throw InsufficientEpsilonRange("epsilons must be strictly decreasing");
  if (std::log10(eps_list.front() / eps_list.back()) < 4.0 - 1e-12)
    throw InsufficientEpsilonRange("epsilons must span at least 4 decades");

  CutoffReport rep;
  rep.level = level;
  rep.asym = asymptotic_decomposition(spec, x0);
  const auto& asym = rep.asym;
  for (double e : eps_list) rep.schedules.push_back(cutoff_schedule(asym.gamma, asym.ell, e));
  const size_t ne = eps_list.size();
  MonteCarloOptions par;
  par.workers = workers;

  auto evaluate = [&](const std::vector<double>& cs, bool multiplicative, const std::string& tag,
                      size_t first_eps) {
    std::vector<std::vector<double>> vals(ne, std::vector<double>(cs.size(), 0.0));
    for (size_t e = first_eps; e < ne; ++e) {
      const auto& s = rep.schedules[e];
      std::vector<double> ts;
      for (double c : cs) ts.push_back(std::max(0.0, multiplicative ? c * s.t_eps : s.time(c)));
      const auto curve = distance_curve(model, spec, s.eps, x0, ts, ProfileMethod::DensityShift, par);
      for (size_t k = 0; k < cs.size(); ++k) {
        vals[e][k] = curve[k].estimate.value;
        rep.rows.push_back({s.eps, cs[k], ts[k], curve[k].estimate, -1.0, tag});
      }
    }
    return vals;
  };
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    rep.checks.push_back({name, pass, detail});
  };

  {
    const std::vector<double> cs{0.25, 0.5, 0.75, 1.5, 2.0};
    const auto v = evaluate(cs, true, "cutoff", 0);
    double hi_min = 1.0, lo_max = 0.0;
    bool trend = true;
    for (size_t k = 0; k < cs.size(); ++k) {
      if (cs[k] < 1.0)
        hi_min = std::min(hi_min, v[ne - 1][k]);
      else
        lo_max = std::max(lo_max, v[ne - 1][k]);
      for (size_t e = 1; e < ne; ++e) {
        const double step = v[e][k] - v[e - 1][k];
        if (cs[k] < 1.0 ? step < -0.01 : step > 0.01) trend = false;
      }
    }
    add("cutoff_below_t_eps", hi_min >= 0.95, "min d(c t_eps), c<1, smallest eps = " + fmt(hi_min));
    add("cutoff_above_t_eps", lo_max <= 0.05, "max d(c t_eps), c>1, smallest eps = " + fmt(lo_max));
    add("cutoff_trend_in_eps", trend, "d moves toward 1 (c<1) and 0 (c>1) as eps decreases");
  }

  if (level != CutoffLevel::Cutoff) {
    std::vector<double> cs;
    for (int c = -6; c <= 6; ++c) cs.push_back(c);
    const size_t tail = ne - std::max<size_t>(2, ne / 2);
    const auto v = evaluate(cs, false, "window", tail);
    double left = 1.0, right = 0.0;
    bool monotone = true;
    for (size_t e = tail; e < ne; ++e) {
      left = std::min(left, v[e].front());
      right = std::max(right, v[e].back());
      for (size_t k = 1; k < cs.size(); ++k)
        if (v[e][k] > v[e][k - 1] + 0.01) monotone = false;
    }
    add("window_left_limit", left >= 0.95, "min d(t_eps - 6 w_eps) = " + fmt(left));
    add("window_right_limit", right <= 0.05, "max d(t_eps + 6 w_eps) = " + fmt(right));
    add("window_monotone_in_c", monotone, "d non-increasing in c within 0.01");
  }

  if (level == CutoffLevel::Profile) {
    const auto& s = rep.schedules.back();
    if (!asym.oscillatory) {
      std::vector<double> cs;
      for (int k = 0; k < 25; ++k) cs.push_back(-4.0 + k / 3.0);
      const auto g = profile_curve(model, spec, asym, cs);
      std::vector<double> ts;
      for (double c : cs) ts.push_back(std::max(0.0, s.time(c)));
      const auto curve = distance_curve(model, spec, s.eps, x0, ts, ProfileMethod::DensityShift, par);
      double dev = 0.0;
      for (size_t k = 0; k < cs.size(); ++k) {
        dev = std::max(dev, std::abs(curve[k].estimate.value - g.values[k].value));
        rep.rows.push_back({s.eps, cs[k], ts[k], curve[k].estimate, g.values[k].value, "profile"});
      }
      rep.max_profile_deviation = dev;
      add("profile_fit", dev < 0.02, "max |d - G| at smallest eps = " + fmt(dev));
    } else {
      double width = 0.0, dev = 0.0;
      bool collapsed = true;
      for (double c : {-2.0, 0.0, 2.0}) {
        std::vector<double> probes;
        for (int k = 0; k < 128; ++k) probes.push_back(64.0 * k / 127.0);
        const auto band = oscillation_profile_band(model, spec, asym, c, probes);
        width = std::max(width, band.width());
        collapsed = collapsed && band.collapsed;
        const double t = std::max(0.0, s.time(c));
        const auto d = distance_curve(model, spec, s.eps, x0, {t}, ProfileMethod::DensityShift, par);
        const double mid = 0.5 * (band.lower.value + band.upper.value);
        dev = std::max(dev, std::abs(d.front().estimate.value - mid));
        rep.rows.push_back({s.eps, c, t, d.front().estimate, mid, "profile_band"});
      }
      rep.band_width = width;
      rep.max_profile_deviation = dev;
      add("profile_band_collapsed", collapsed && width < 0.02,
          "max band width = " + fmt(width) + (collapsed ? " (isotropic)" : " (not isotropic)"));
      add("profile_fit", collapsed && dev < 0.02, "max |d - band midpoint| = " + fmt(dev));
    }
  }
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CutoffCheck& c) { return c.pass; });
  return rep;
}

}  // namespace oulcut
