#include "oulcut/ensembles.hpp"

#include "oulcut/quadrature.hpp"
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

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Vec v1(double x) { return Vec::Constant(1, x); }

void check_structure(const SuperpositionConfig& config) {
  require(!config.blocks.empty(), "superposition needs at least one block");
  require(config.j_max >= 1, "j_max must be positive");
  require(static_cast<int>(config.blocks.size()) <= config.j_max,
          "more stored blocks than j_max");
  for (const auto& b : config.blocks) {
    require(b.m > 0.0 && std::isfinite(b.m), "block weights must be positive");
    require(b.gamma > 0.0 && std::isfinite(b.gamma), "block gamma must be positive");
    require(std::isfinite(b.x), "block start must be finite");
    require(b.model.dim() == 1, "superposition blocks must be one-dimensional");
  }
}

// drift of the triple with truncation 1{|y| <= 1}
double triple_drift(const LevyModel& model) {
  double a = model.total_drift()[0];
  for (const auto& j : model.jumps()) {
    if (const auto* st = std::get_if<StableJumps>(&j)) {
      const double al = st->params.alpha;
      if (al < 2.0 && al != 1.0 && st->params.beta != 0.0)
        a += st->params.beta * st->params.c / (stable_measure_constant(al) * (1.0 - al));
      continue;
    }
    const auto& cp = std::get<CompoundPoisson>(j);
    const JumpLaw& law = cp.law;
    double s = 0.0;
    if (law.kind == JumpLawKind::Atoms) {
      for (size_t i = 0; i < law.points.size(); ++i)
        if (std::abs(law.points[i][0]) <= 1.0) s += law.weights[i] * law.points[i][0];
    } else if (law.kind == JumpLawKind::Gaussian) {
      const double mu = law.mean[0], sd = std::sqrt(law.cov(0, 0));
      if (sd == 0.0) {
        s = std::abs(mu) <= 1.0 ? mu : 0.0;
      } else {
        auto g = [&](double y) {
          const double z = (y - mu) / sd;
          return y * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
        };
        s = integrate(g, -1.0, 1.0).value;
      }
    } else if (law.support_min() < 1.0) {
      auto g = [&](double y) { return y * law.density(y); };
      s = integrate(g, law.support_min(), 1.0).value;
    }
    a += cp.rate * s;
  }
  return a;
}

// int_{|z| > 1} log|z| pi(dz); infinite when the log-moment check fails
double log_tail_integral(const LevyModel& model) {
  double total = 0.0;
  for (const auto& j : model.jumps()) {
    if (const auto* st = std::get_if<StableJumps>(&j)) {
      const double al = st->params.alpha;
      if (al < 2.0) total += st->params.c / (stable_measure_constant(al) * al * al);
      continue;
    }
    const auto& cp = std::get<CompoundPoisson>(j);
    const auto rep = has_log_moment(LevyModel::compound_poisson(cp.rate, cp.law));
    if (rep.verdict == Verdict::FailNumeric) return std::numeric_limits<double>::infinity();
    if (!rep.evidence.empty()) total += rep.evidence.back().second;
  }
  return total;
}

// log-log slope of the positive increments over the second half of the stored blocks
bool slow_decay(const std::vector<double>& incr) {
  const size_t n = incr.size();
  if (n < 8) return false;
  std::vector<std::pair<double, double>> pts;
  for (size_t k = n / 2; k < n; ++k)
    if (incr[k] > 0.0) pts.emplace_back(std::log(k + 1.0), std::log(incr[k]));
  if (pts.size() < 4) return false;
  double mx = 0.0, my = 0.0;
  for (auto& [x, y] : pts) mx += x, my += y;
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0.0, sxx = 0.0;
  for (auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxx > 0.0 && sxy / sxx > -1.1;
}

void require_valid(const SuperpositionReport& rep) {
  if (!rep.coercive) throw CoercivityViolation("block frictions are not bounded away from 0");
  if (!rep.pass) {
    std::string why = "superposition validation failed";
    for (const auto& f : rep.flags) why += "; " + f;
    throw ValidationError(why);
  }
}

struct BlockEvaluators {
  std::vector<std::shared_ptr<CfEvaluator>> ev;
};

BlockEvaluators make_evaluators(const SuperpositionConfig& config) {
  BlockEvaluators out;
  out.ev.resize(config.blocks.size());
  detail::parallel_for(static_cast<long>(config.blocks.size()), 0, [&](long k) {
    const auto& b = config.blocks[k];
    out.ev[k] = std::make_shared<CfEvaluator>(b.model, DriftSpectrum::scalar(b.gamma));
  });
  return out;
}

// at least one block must carry a density regime
void require_some_density_block(const SuperpositionConfig& config) {
  ConditionReport last;
  for (const auto& b : config.blocks) {
    try {
      require_density_regime(b.model, DriftSpectrum::scalar(b.gamma));
      return;
    } catch (const DensityRegimeUnavailable& e) {
      last = e.report();
    }
  }
  throw DensityRegimeUnavailable("no superposition block satisfies (H)", last);
}

CfFunction product_cf(std::shared_ptr<const std::vector<std::shared_ptr<CfEvaluator>>> evs,
                      std::vector<double> m, double t, double shift) {
  return [evs, m = std::move(m), t, shift](const Vec& l) {
    cplx s(0.0, l[0] * shift);
    for (size_t k = 0; k < evs->size(); ++k) s += (*evs)[k]->log_inatural(t, v1(m[k] * l[0]));
    return std::exp(s);
  };
}

std::vector<double> weights(const SuperpositionConfig& config) {
  std::vector<double> m;
  for (const auto& b : config.blocks) m.push_back(b.m);
  return m;
}

DensityGrid superposed_invariant_density(const SuperpositionConfig& config, double span) {
  auto evs = std::make_shared<std::vector<std::shared_ptr<CfEvaluator>>>(make_evaluators(config).ev);
  const CfFunction cf = product_cf(evs, weights(config), kInfiniteHorizon, 0.0);
  const auto plan = plan_lattice({cf}, 1, Vec::Zero(1), span);
  GridMeta meta;
  meta.model_id = "superposition";
  return density_from_cf(cf, plan, meta);
}

}  // namespace

double SuperpositionConfig::weights_total() const {
  double s = 0.0;
  for (const auto& b : blocks) s += b.m;
  return s;
}

SuperpositionReport validate_superposition(const SuperpositionConfig& config) {
  check_structure(config);
  const size_t n = config.blocks.size();
  SuperpositionReport rep;

  const char* names[] = {"C2", "C3_drift", "C3_gaussian", "nearzero_small", "nearzero_large",
                         "nearzero_log"};
  std::vector<std::vector<double>> incr(6, std::vector<double>(n));
  detail::parallel_for(static_cast<long>(n), 0, [&](long k) {
    const auto& b = config.blocks[k];
    const double small = truncated_second_moment_scaled(b.model, v1(1.0), 1.0);
    const double large = capped_second_moment_scaled(b.model, v1(1.0), 1.0) - small;
    incr[0][k] = b.m * std::abs(b.x);
    incr[1][k] = b.m * std::abs(triple_drift(b.model)) / b.gamma;
    incr[2][k] = b.m * b.m * b.model.effective_gaussian()(0, 0) / b.gamma;
    incr[3][k] = b.m * b.m * small / b.gamma;
    incr[4][k] = b.m * std::max(0.0, large) / b.gamma;
    incr[5][k] = log_tail_integral(b.model) / b.gamma;
  });
  bool series_ok = true;
  for (int s = 0; s < 6; ++s) {
    SeriesCheck sc;
    sc.name = names[s];
    double acc = 0.0;
    for (double v : incr[s]) sc.partial_sums.push_back(acc += v);
    sc.finite = std::isfinite(acc);
    sc.divergence_trend = slow_decay(incr[s]);
    if (auto it = config.tail_certificates.find(sc.name); it != config.tail_certificates.end())
      sc.declared_tail = it->second;
    if (!sc.finite) rep.flags.push_back(sc.name + " series is infinite");
    if (sc.divergence_trend) rep.flags.push_back(sc.name + " terms decay too slowly");
    series_ok = series_ok && sc.finite && !sc.divergence_trend;
    rep.series.push_back(std::move(sc));
  }

  double gmin = config.blocks[0].gamma;
  for (const auto& b : config.blocks) gmin = std::min(gmin, b.gamma);
  rep.gamma_hat = gmin;
  for (size_t k = 0; k < n; ++k)
    if (config.blocks[k].gamma <= gmin * (1.0 + 1e-12)) {
      rep.J.push_back(static_cast<int>(k));
      rep.leading_sum += config.blocks[k].m * config.blocks[k].x;
    }

  if (auto it = config.tail_certificates.find("gamma_lower_bound");
      it != config.tail_certificates.end()) {
    rep.coercive = it->second > 0.0 && gmin >= it->second;
  } else if (n >= 8) {
    // running minimum over the second half keeps dropping well below the first half
    double first = config.blocks[0].gamma;
    for (size_t k = 0; k < n / 2; ++k) first = std::min(first, config.blocks[k].gamma);
    double run = first;
    int drops = 0, steps = 0;
    for (size_t k = n / 2; k < n; ++k, ++steps)
      if (config.blocks[k].gamma < run) {
        run = config.blocks[k].gamma;
        ++drops;
      }
    rep.coercive = !(drops >= 0.75 * steps && run < 0.75 * first);
  }
  if (!rep.coercive) rep.flags.push_back("coercivity: frictions drift toward 0");

  const double total = config.weights_total();
  rep.declared_tail_mass = 1.0 - total;
  const bool weights_ok = total <= 1.0 + 1e-12;
  if (!weights_ok) rep.flags.push_back("weights sum to " + fmt(total) + " > 1");

  rep.degenerate_leading_term =
      std::abs(rep.leading_sum) <= 1e-14 * std::max(1.0, std::abs(config.blocks[rep.J[0]].x));
  if (rep.degenerate_leading_term) rep.flags.push_back("DegenerateLeadingTerm");

  rep.pass = series_ok && rep.coercive && weights_ok;
  return rep;
}

SuperpositionTriple superposition_limit_triple(const SuperpositionConfig& config, double eps) {
  require_eps(eps);
  const auto rep = validate_superposition(config);
  require_valid(rep);
  const size_t n = config.blocks.size();
  std::vector<GeneratingTriple> g(n);
  detail::parallel_for(static_cast<long>(n), 0, [&](long k) {
    const auto& b = config.blocks[k];
    g[k] = generating_triple(b.model, DriftSpectrum::scalar(b.gamma), eps, v1(b.x),
                             kInfiniteHorizon);
  });

  SuperpositionTriple out;
  out.flags.push_back("Gaussian part printed without eps as sigma_unscaled; eps-scaled value used");
  GeneratingTriple& t = out.triple;
  t.eps = eps;
  t.t = kInfiniteHorizon;
  t.a = Vec::Zero(1);
  t.sigma = Mat::Zero(1, 1);
  bool has_cp = false, has_st = false;
  for (size_t k = 0; k < n; ++k) {
    const double m = config.blocks[k].m;
    const double gam = config.blocks[k].gamma;
    out.sigma_unscaled += m * m * config.blocks[k].model.effective_gaussian()(0, 0) / (2.0 * gam);
    t.sigma += m * m * g[k].sigma;
    t.a += m * g[k].a;
    // scaling y -> m y moves mass across the truncation radius
    for (const auto& st : g[k].nu.stable) {
      StableJumps img = st;
      const double al = st.params.alpha;
      img.params.c = std::pow(m, al) * st.params.c;
      t.nu.stable.push_back(img);
      if (st.params.beta != 0.0 && al != 1.0)
        t.a[0] += st.params.beta * st.params.c * (std::pow(m, al) - m) /
                  (stable_measure_constant(al) * (1.0 - al));
      has_st = true;
    }
    if (g[k].nu.kind == PushforwardKind::CompoundPoisson || g[k].nu.kind == PushforwardKind::Mixed) {
      has_cp = true;
      t.a[0] += g[k].nu.integrate([m](const Vec& y) {
        const double z = m * y[0];
        return (std::abs(z) <= 1.0 ? z : 0.0) - (std::abs(y[0]) <= 1.0 ? z : 0.0);
      });
    }
  }
  t.nu.kind = has_cp && has_st ? PushforwardKind::Mixed
              : has_cp         ? PushforwardKind::CompoundPoisson
              : has_st         ? PushforwardKind::Stable
                               : PushforwardKind::None;
  std::vector<std::function<double(const std::function<double(const Vec&)>&)>> parts;
  std::vector<double> ms;
  for (size_t k = 0; k < n; ++k) {
    parts.push_back(g[k].nu.integrate);
    ms.push_back(config.blocks[k].m);
  }
  t.nu.integrate = [parts, ms](const std::function<double(const Vec&)>& fn) {
    double s = 0.0;
    for (size_t k = 0; k < parts.size(); ++k) {
      const double m = ms[k];
      s += parts[k]([&fn, m](const Vec& y) { return fn(m * y); });
    }
    return s;
  };
  return out;
}

CutoffSchedule superposition_schedule(const SuperpositionConfig& config, double eps) {
  require_eps(eps);
  const auto rep = validate_superposition(config);
  require_valid(rep);
  return cutoff_schedule(rep.gamma_hat, 1, eps);
}

CfFunction superposition_natural_cf(const SuperpositionConfig& config,
                                    std::vector<std::shared_ptr<CfEvaluator>>* keep) {
  check_structure(config);
  auto evs = std::make_shared<std::vector<std::shared_ptr<CfEvaluator>>>(make_evaluators(config).ev);
  if (keep) *keep = *evs;
  return product_cf(evs, weights(config), kInfiniteHorizon, 0.0);
}

std::vector<TvEstimate> superposition_profile_curve(const SuperpositionConfig& config,
                                                    const std::vector<double>& c_grid) {
  require(!c_grid.empty(), "empty c grid");
  const auto rep = validate_superposition(config);
  require_valid(rep);
  if (rep.degenerate_leading_term)
    throw DegenerateLeadingTerm("sum of m_j x_j over the slowest blocks vanishes");
  require_some_density_block(config);
  double span = 0.0;
  for (double c : c_grid) span = std::max(span, std::exp(-c) * std::abs(rep.leading_sum));
  const auto f = superposed_invariant_density(config, span);
  std::vector<TvEstimate> out;
  for (double c : c_grid) out.push_back(tv_shift(f, v1(std::exp(-c) * rep.leading_sum)));
  return out;
}

TvEstimate superposition_profile(const SuperpositionConfig& config, double c,
                                 ProfileMethod method, const MonteCarloOptions& mc) {
  if (method == ProfileMethod::DensityShift) return superposition_profile_curve(config, {c})[0];
  const auto rep = validate_superposition(config);
  require_valid(rep);
  if (rep.degenerate_leading_term)
    throw DegenerateLeadingTerm("sum of m_j x_j over the slowest blocks vanishes");
  auto draw = [&config](long count, RngStream& rng) {
    SampleBatch acc;
    for (const auto& b : config.blocks) {
      auto s = sample_invariant(b.model, DriftSpectrum::scalar(b.gamma), 1.0, count, rng);
      if (acc.values.size() == 0) {
        acc = s;
        acc.values *= b.m;
      } else {
        acc.values += b.m * s.values;
      }
    }
    return acc;
  };
  const int workers = detail::resolve_workers(mc.workers);
  auto xs = sample_blocks(mc.samples, splitmix64(mc.seed ^ 0x5a11), workers, draw);
  const auto ys = sample_blocks(mc.samples, splitmix64(mc.seed ^ 0x5a12), workers, draw);
  xs.values.array() += std::exp(-c) * rep.leading_sum;
  EmpiricalTvOptions opt;
  opt.seed = splitmix64(mc.seed ^ 0x5a13);
  return tv_empirical(xs, ys, opt);
}

TvEstimate superposition_distance(const SuperpositionConfig& config, double eps, double t) {
  require_eps(eps);
  require(t >= 0.0 && std::isfinite(t), "time must be finite and >= 0");
  const auto rep = validate_superposition(config);
  require_valid(rep);
  require_some_density_block(config);
  TvEstimate beyond;
  beyond.value = 1.0;
  if (t == 0.0) return beyond;
  auto evs = std::make_shared<std::vector<std::shared_ptr<CfEvaluator>>>(make_evaluators(config).ev);
  double mean_t = 0.0, mean_inf = 0.0;
  for (size_t k = 0; k < config.blocks.size(); ++k) {
    const auto& b = config.blocks[k];
    mean_t += b.m * (b.x * std::exp(-b.gamma * t) / std::sqrt(eps) + (*evs)[k]->drift_center(t)[0]);
    mean_inf += b.m * (*evs)[k]->drift_center(kInfiniteHorizon)[0];
  }
  const auto m = weights(config);
  const CfFunction cf_t = product_cf(evs, m, t, mean_t);
  const CfFunction cf_inf = product_cf(evs, m, kInfiniteHorizon, mean_inf);
  try {
    const Vec center = v1(0.5 * (mean_t + mean_inf));
    const auto plan = plan_lattice({cf_t, cf_inf}, 1, center, 0.5 * std::abs(mean_t - mean_inf));
    GridMeta mt, mi;
    mt.t = t;
    mt.eps = mi.eps = eps;
    mt.includes_drift = mi.includes_drift = true;
    return tv_densities(density_from_cf(cf_t, plan, mt), density_from_cf(cf_inf, plan, mi));
  } catch (const OffLattice&) {
    beyond.beyond_resolution = true;
    return beyond;
  }
}

// ---------------------------------------------------------------- average process

void AverageConfig::validate() const {
  stable.validate();
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  require(x0 != 0.0 && std::isfinite(x0), "x0 must be a nonzero real");
  require(n >= 1, "n must be at least 1");
  require_eps(eps_n);
}

LevyModel average_driving_model(const AverageConfig& cfg) {
  cfg.validate();
  StableParams p = cfg.stable;
  p.c = cfg.stable.c * std::pow(static_cast<double>(cfg.n), 1.0 - cfg.stable.alpha);
  return LevyModel::stable_1d(p);
}

CutoffSchedule average_schedule(const AverageConfig& cfg) {
  cfg.validate();
  const double al = cfg.stable.alpha;
  const double t = (std::log(static_cast<double>(cfg.n)) * (2.0 - 2.0 / al) - std::log(cfg.eps_n)) /
                   (2.0 * cfg.gamma);
  if (!(t > 0.0)) throw NonpositiveCutoffTime("average cut-off time " + fmt(t) + " is not positive");
  CutoffSchedule s;
  s.t_eps = t;
  s.w_eps = 1.0 / cfg.gamma;
  s.gamma = cfg.gamma;
  s.ell = 1;
  s.eps = cfg.eps_n;
  return s;
}

namespace {

TvEstimate stable_shift_tv(const StableParams& p, double shift) {
  const StableParams q = [&] {
    StableParams r = p;
    r.a = 0.0;
    return r;
  }();
  const CfFunction cf = [q](const Vec& l) { return std::exp(q.exponent_natural(l[0])); };
  const auto plan = plan_lattice({cf}, 1, Vec::Zero(1), std::abs(shift));
  GridMeta meta;
  meta.model_id = "strictly stable";
  return tv_shift(density_from_cf(cf, plan, meta), v1(shift));
}

}  // namespace

TvEstimate average_profile(const AverageConfig& cfg, double c) {
  cfg.validate();
  return stable_shift_tv(cfg.stable, std::exp(-c) * cfg.x0);
}

TvEstimate average_profile_transition_scale(const AverageConfig& cfg, double c) {
  cfg.validate();
  const double al = cfg.stable.alpha;
  return stable_shift_tv(cfg.stable, std::exp(-c) * cfg.x0 * std::pow(al * cfg.gamma, 1.0 / al));
}

TvEstimate average_distance_mc(const AverageConfig& cfg, double t, long paths, std::uint64_t seed,
                               int workers) {
  require(paths >= 10000, "average_distance_mc needs at least 10^4 paths");
  require(t >= 0.0 && std::isfinite(t), "time must be finite and >= 0");
  const LevyModel agg = average_driving_model(cfg);
  const DriftSpectrum spec = DriftSpectrum::scalar(cfg.gamma);
  const int w = detail::resolve_workers(workers);
  const auto xs = sample_blocks(paths, splitmix64(seed ^ 0xa1), w, [&](long m, RngStream& r) {
    return sample_ou_exact(agg, spec, cfg.eps_n, v1(cfg.x0), t, m, r);
  });
  const auto ys = sample_blocks(paths, splitmix64(seed ^ 0xa2), w, [&](long m, RngStream& r) {
    return sample_invariant(agg, spec, cfg.eps_n, m, r);
  });
  EmpiricalTvOptions opt;
  opt.seed = splitmix64(seed ^ 0xa3);
  return tv_empirical(xs, ys, opt);
}

TvEstimate average_distance_density(const AverageConfig& cfg, double t) {
  const LevyModel agg = average_driving_model(cfg);
  return distance_curve(agg, DriftSpectrum::scalar(cfg.gamma), cfg.eps_n, v1(cfg.x0), {t})
      .front()
      .estimate;
}

}  // namespace oulcut
