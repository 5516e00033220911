#include "oulcut/sampler.hpp"

#include "oulcut/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace oulcut {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

Mat psd_root(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Chambers-Mallows-Stuck draw of the standard law with psi(z) = -|z|^a (1 - i b tan(pi a/2) sgn z).
double standard_stable(double alpha, double beta, RngStream& rng) {
  const double V = kPi * (rng.uniform() - 0.5);
  if (alpha == 1.0) return std::tan(V);
  const double W = rng.exponential();
  const double tb = beta * std::tan(kPi * alpha / 2.0);
  const double B = std::atan(tb) / alpha;
  const double S = std::pow(1.0 + tb * tb, 1.0 / (2.0 * alpha));
  return S * std::sin(alpha * (V + B)) / std::pow(std::cos(V), 1.0 / alpha) *
         std::pow(std::cos(V - alpha * (V + B)) / W, (1.0 - alpha) / alpha);
}

double stable_draw(const StableParams& p, RngStream& rng) {
  if (p.alpha == 2.0) return std::sqrt(2.0 * p.c) * rng.normal() + p.a;
  return std::pow(p.c, 1.0 / p.alpha) * standard_stable(p.alpha, p.beta, rng) + p.a;
}

Vec isotropic_draw(int dim, double alpha, double c, RngStream& rng) {
  Vec g(dim);
  for (int i = 0; i < dim; ++i) g[i] = rng.normal();
  if (alpha == 2.0) return std::sqrt(2.0 * c) * g;
  // sub-Gaussian representation: A^{1/2} G with E e^{-uA} = e^{-u^{alpha/2}}
  const double A = stable_draw({alpha / 2.0, std::cos(kPi * alpha / 4.0), 1.0, 0.0}, rng);
  return std::sqrt(A) * std::sqrt(2.0) * std::pow(c, 1.0 / alpha) * g;
}

struct JumpDrawer {
  const JumpLaw* law;
  std::vector<double> cumulative;
  Mat root;

  explicit JumpDrawer(const JumpLaw& l) : law(&l) {
    if (l.kind == JumpLawKind::Atoms) {
      double s = 0.0;
      for (double w : l.weights) cumulative.push_back(s += w);
      cumulative.back() = 1.0;
    } else if (l.kind == JumpLawKind::Gaussian) {
      root = psd_root(l.cov);
    }
  }

  Vec draw(RngStream& rng) const {
    switch (law->kind) {
      case JumpLawKind::Atoms: {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        return law->points[std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1)];
      }
      case JumpLawKind::Gaussian: {
        Vec z(law->dim());
        for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
        return law->mean + root * z;
      }
      default:
        return Vec::Constant(1, law->quantile(rng.uniform()));
    }
  }
};

bool has_gaussian(const Mat& S) { return S.cwiseAbs().maxCoeff() > 0.0; }

// Probe frequencies at the sample scale for characteristic-function diagnostics.
std::vector<Vec> probe_frequencies(const SampleBatch& b, int count) {
  const int d = b.dim();
  double scale = 0.0;
  for (int i = 0; i < d; ++i) {
    std::vector<double> row(b.size());
    for (long k = 0; k < b.size(); ++k) row[k] = b.values(i, k);
    std::sort(row.begin(), row.end());
    const double iqr = row[3 * row.size() / 4] - row[row.size() / 4];
    scale = std::max(scale, iqr);
  }
  if (scale <= 0.0) scale = 1.0;
  const auto dirs = probe_directions(d, count);
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) out.push_back(dirs[k % dirs.size()] * (0.2 + 0.1 * k) / scale);
  return out;
}

double cf_discrepancy(const SampleBatch& b, const std::function<cplx(const Vec&)>& cf, int count) {
  double m = 0.0;
  for (const auto& l : probe_frequencies(b, count))
    m = std::max(m, std::abs(empirical_cf(b, l) - cf(l)));
  return m;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream_id))) {}

double RngStream::uniform() {
  // 53-bit uniform in (0, 1)
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::exponential() { return -std::log(uniform()); }

long RngStream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long> p(mean);
  return p(engine_);
}

std::string to_string(Exactness e) {
  switch (e) {
    case Exactness::ExactInLaw:
      return "ExactInLaw";
    case Exactness::EulerApprox:
      return "EulerApprox";
    case Exactness::HorizonApprox:
      return "HorizonApprox";
  }
  return "ExactInLaw";
}

cplx empirical_cf(const SampleBatch& batch, const Vec& lambda) {
  require(lambda.size() == batch.dim(), "frequency dimension mismatch");
  const Eigen::RowVectorXd ph = lambda.transpose() * batch.values;
  double c = 0.0, s = 0.0;
  for (long k = 0; k < ph.size(); ++k) {
    c += std::cos(ph[k]);
    s += std::sin(ph[k]);
  }
  return cplx(c, s) / static_cast<double>(batch.size());
}

SampleBatch sample_stable(const StableParams& params, long n, RngStream& rng) {
  params.validate();
  require(n > 0, "batch size must be positive");
  SampleBatch b;
  b.values.resize(1, n);
  for (long k = 0; k < n; ++k) b.values(0, k) = stable_draw(params, rng);
  b.law_tag = "stable(alpha=" + std::to_string(params.alpha) + ", c=" + std::to_string(params.c) +
              ", beta=" + std::to_string(params.beta) + ", a=" + std::to_string(params.a) + ")";
  return b;
}

SampleBatch sample_isotropic_stable(int dim, double alpha, double c, long n, RngStream& rng) {
  StableParams{alpha, c, 0.0, 0.0}.validate();
  require(dim >= 1 && n > 0, "dimension and batch size must be positive");
  SampleBatch b;
  b.values.resize(dim, n);
  for (long k = 0; k < n; ++k) b.values.col(k) = isotropic_draw(dim, alpha, c, rng);
  b.law_tag = "isotropic stable(alpha=" + std::to_string(alpha) + ", c=" + std::to_string(c) + ")";
  return b;
}

bool exact_transition_available(const LevyModel& model, const DriftSpectrum& spec) {
  if (model.dim() == 1) return true;
  const bool conformal = spec.conformal();
  for (const auto& j : model.jumps())
    if (const auto* st = std::get_if<StableJumps>(&j); st && st->params.alpha < 2.0 && !conformal)
      return false;
  return true;
}

SampleBatch sample_ou_exact(const LevyModel& model, const DriftSpectrum& spec, double eps,
                            const Vec& x0, double t, long n, RngStream& rng) {
  require(eps > 0.0, "epsilon must be positive");
  require(t >= 0.0, "time must be non-negative");
  require(n > 0, "batch size must be positive");
  require(x0.size() == model.dim(), "initial point dimension mismatch");
  if (std::isinf(t)) return sample_invariant(model, spec, eps, n, rng);
  if (!exact_transition_available(model, spec))
    throw ValidationError(
        "no exact transition sampler for stable noise with non-conformal Q; use sample_ou_path");
  const int d = model.dim();
  const double re = std::sqrt(eps);
  CfEvaluator ev(model, spec);
  const Vec mean = exp_action(spec, t, x0) + re * ev.drift_center(t);
  const Mat cov = eps * ev.gaussian_cov(t);
  const bool gauss = has_gaussian(cov);
  const Mat root = gauss ? psd_root(cov) : Mat::Zero(d, d);
  double rate = 0.0;
  spec.conformal(&rate);
  std::vector<StableJumps> stables;
  std::vector<std::pair<const CompoundPoisson*, JumpDrawer>> cps;
  for (const auto& j : model.jumps()) {
    if (const auto* cp = std::get_if<CompoundPoisson>(&j)) {
      cps.emplace_back(cp, JumpDrawer(cp->law));
    } else {
      const auto& st = std::get<StableJumps>(j);
      if (st.params.alpha == 2.0 || t == 0.0) continue;
      StableJumps img = st;
      const double a = st.params.alpha;
      img.params.c = std::pow(eps, 0.5 * a) * st.params.c * (-std::expm1(-a * rate * t)) / (a * rate);
      img.params.a = 0.0;
      stables.push_back(img);
    }
  }
  SampleBatch b;
  b.values.resize(d, n);
  Vec z(d);
  for (long k = 0; k < n; ++k) {
    Vec x = mean;
    if (gauss) {
      for (int i = 0; i < d; ++i) z[i] = rng.normal();
      x += root * z;
    }
    for (const auto& st : stables) {
      if (st.dim == 1)
        x[0] += stable_draw(st.params, rng);
      else
        x += isotropic_draw(d, st.params.alpha, st.params.c, rng);
    }
    for (const auto& [cp, drawer] : cps) {
      const long jumps = rng.poisson(cp->rate * t);
      for (long i = 0; i < jumps; ++i) {
        const double when = t * rng.uniform();
        const Vec J = drawer.draw(rng);
        x += re * (d == 1 ? Vec(J * std::exp(-spec.Q()(0, 0) * (t - when)))
                          : exp_action(spec, t - when, J));
      }
    }
    b.values.col(k) = x;
  }
  b.law_tag = "OU transition t=" + std::to_string(t) + " eps=" + std::to_string(eps);
  return b;
}

SampleBatch sample_invariant(const LevyModel& model, const DriftSpectrum& spec, double eps, long n,
                             RngStream& rng) {
  require(eps > 0.0, "epsilon must be positive");
  require(n > 0, "batch size must be positive");
  CfEvaluator ev(model, spec);
  if (!ev.log_moment_ok())
    throw ValidationError("invariant law requires the log-moment condition");
  if (!exact_transition_available(model, spec))
    throw ValidationError("no exact invariant sampler for stable noise with non-conformal Q");
  const int d = model.dim();
  const double re = std::sqrt(eps);
  if (!model.has_compound_poisson()) {
    double rate = 0.0;
    spec.conformal(&rate);
    const Vec mean = re * ev.drift_center(kInfiniteHorizon);
    const Mat cov = eps * ev.gaussian_cov(kInfiniteHorizon);
    const bool gauss = has_gaussian(cov);
    const Mat root = gauss ? psd_root(cov) : Mat::Zero(d, d);
    SampleBatch b;
    b.values.resize(d, n);
    Vec z(d);
    for (long k = 0; k < n; ++k) {
      Vec x = mean;
      if (gauss) {
        for (int i = 0; i < d; ++i) z[i] = rng.normal();
        x += root * z;
      }
      for (const auto& j : model.jumps()) {
        const auto& st = std::get<StableJumps>(j);
        if (st.params.alpha == 2.0) continue;
        const double a = st.params.alpha;
        StableParams p = st.params;
        p.c = std::pow(eps, 0.5 * a) * st.params.c / (a * rate);
        p.a = 0.0;
        if (st.dim == 1)
          x[0] += stable_draw(p, rng);
        else
          x += isotropic_draw(d, a, p.c, rng);
      }
      b.values.col(k) = x;
    }
    b.law_tag = "OU invariant eps=" + std::to_string(eps);
    return b;
  }
  // compound Poisson parts: exact transition from 0 at a long horizon, checked against the
  // invariant characteristic function
  const auto& dc = spec.decay();
  double horizon = (std::log(std::max(dc.c3, 1.0)) + 12.0 * std::log(10.0)) / dc.c1;
  for (int attempt = 0; attempt < 4; ++attempt, horizon *= 2.0) {
    SampleBatch b = sample_ou_exact(model, spec, eps, Vec::Zero(d), horizon, n, rng);
    b.exactness = Exactness::HorizonApprox;
    b.step = horizon;
    b.law_tag = "OU invariant via transition at T=" + std::to_string(horizon);
    b.diagnostic = cf_discrepancy(b, [&](const Vec& l) { return ev.invariant(eps, l); }, 20);
    if (b.diagnostic <= 3.0 / std::sqrt(static_cast<double>(n))) return b;
  }
  throw NumericError("invariant sampler failed the stationarity diagnostic", horizon);
}

std::vector<SampleBatch> sample_ou_path(const LevyModel& model, const DriftSpectrum& spec,
                                        double eps, const Vec& x0,
                                        const std::vector<double>& t_grid, long n, double step,
                                        RngStream& rng) {
  require(eps > 0.0, "epsilon must be positive");
  require(n > 0, "batch size must be positive");
  require(!t_grid.empty() && t_grid.front() == 0.0, "time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    require(t_grid[i] > t_grid[i - 1], "time grid must be increasing");
  require(x0.size() == model.dim(), "initial point dimension mismatch");
  const double bound = 1.0 / (2.0 * spec.decay().c2);
  if (!(step > 0.0 && step <= bound))
    throw ValidationError("Euler step " + std::to_string(step) + " exceeds stability bound " +
                          std::to_string(bound));
  const int d = model.dim();
  const double re = std::sqrt(eps);
  const Vec drift = model.total_drift();
  const Mat gauss_root = psd_root(model.effective_gaussian());
  const bool gauss = has_gaussian(model.effective_gaussian());
  std::vector<std::pair<const CompoundPoisson*, JumpDrawer>> cps;
  std::vector<const StableJumps*> stables;
  for (const auto& j : model.jumps()) {
    if (const auto* cp = std::get_if<CompoundPoisson>(&j))
      cps.emplace_back(cp, JumpDrawer(cp->law));
    else if (const auto& st = std::get<StableJumps>(j); st.params.alpha < 2.0)
      stables.push_back(&st);
  }

  Mat X(d, n);
  for (long k = 0; k < n; ++k) X.col(k) = x0;
  std::vector<SampleBatch> out;
  auto record = [&](double t, double h) {
    SampleBatch b;
    b.values = X;
    b.exactness = t == 0.0 ? Exactness::ExactInLaw : Exactness::EulerApprox;
    b.step = t == 0.0 ? 0.0 : h;
    b.law_tag = "OU path t=" + std::to_string(t) + " eps=" + std::to_string(eps);
    out.push_back(std::move(b));
  };
  record(0.0, 0.0);
  CfEvaluator ev(model, spec);
  for (std::size_t g = 1; g < t_grid.size(); ++g) {
    const double span = t_grid[g] - t_grid[g - 1];
    const long m = static_cast<long>(std::ceil(span / step - 1e-12));
    const double h = span / m;
    const Mat E = exp_matrix(spec, h);
    Vec z(d);
    for (long k = 0; k < n; ++k) {
      Vec x = X.col(k);
      for (long s = 0; s < m; ++s) {
        // exponential Euler: x <- e^{-hQ}(x + sqrt(eps) dL) with jumps placed at their times
        Vec inc = drift * h;
        if (gauss) {
          for (int i = 0; i < d; ++i) z[i] = rng.normal();
          inc += std::sqrt(h) * (gauss_root * z);
        }
        for (const auto* st : stables) {
          const double a = st->params.alpha;
          if (st->dim == 1) {
            StableParams p = st->params;
            p.c *= h;
            p.a = 0.0;
            inc[0] += stable_draw(p, rng);
          } else {
            inc += isotropic_draw(d, a, st->params.c * h, rng);
          }
        }
        Vec jumps = Vec::Zero(d);
        for (const auto& [cp, drawer] : cps) {
          const long cnt = rng.poisson(cp->rate * h);
          for (long i = 0; i < cnt; ++i) {
            const double when = h * rng.uniform();
            jumps += exp_action(spec, h - when, drawer.draw(rng));
          }
        }
        x = E * (x + re * inc) + re * jumps;
      }
      X.col(k) = x;
    }
    record(t_grid[g], h);
    out.back().diagnostic = cf_discrepancy(
        out.back(), [&](const Vec& l) { return ev.transition(eps, x0, t_grid[g], l); }, 5);
  }
  return out;
}

SampleBatch sample_blocks(long n, std::uint64_t seed, int workers,
                          const std::function<SampleBatch(long, RngStream&)>& draw, long block) {
  require(n > 0 && block > 0, "batch and block sizes must be positive");
  const long blocks = (n + block - 1) / block;
  std::vector<SampleBatch> parts(blocks);
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&]() {
    for (long k; (k = next++) < blocks && !failed;) {
      try {
        RngStream rng(seed, static_cast<std::uint64_t>(k));
        parts[k] = draw(std::min(block, n - k * block), rng);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(blocks)));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  SampleBatch out = parts.front();
  out.values.resize(parts.front().dim(), n);
  long col = 0;
  for (const auto& p : parts) {
    out.values.middleCols(col, p.size()) = p.values;
    col += p.size();
  }
  return out;
}

}  // namespace oulcut
