#include "oulcut/tv_metrics.hpp"

#include "oulcut/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <tuple>

namespace oulcut {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double grid_sum(const DensityGrid& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.cell_volume();
}

double clamp_tv(double v) { return std::clamp(v, 0.0, 1.0); }

DensityGrid blank_like(const DensityGrid& f) {
  DensityGrid g = f;
  std::fill(g.values.begin(), g.values.end(), 0.0);
  return g;
}

// f(x - m) on the lattice: for m = (k + w) dx it is (1 - w) f[i - k] + w f[i - k - 1], zero off
// the lattice. Returns sum |f - f_m| and sum f_m.
struct StencilAxis {
  long k;
  double w;
};

StencilAxis stencil(double cells) {
  const double fl = std::floor(cells);
  return {static_cast<long>(fl), cells - fl};
}

std::pair<double, double> shifted_sums_1d(const double* f, long n, StencilAxis s, const double* g) {
  double diff = 0.0, moved = 0.0;
  for (long i = 0; i < n; ++i) {
    const long a = i - s.k, b = a - 1;
    const double v = (a >= 0 && a < n ? (1.0 - s.w) * f[a] : 0.0) + (b >= 0 && b < n ? s.w * f[b] : 0.0);
    moved += v;
    diff += std::abs(g[i] - v);
  }
  return {diff, moved};
}

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * (v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

double histogram_tv(const std::vector<long>& p, long np, const std::vector<long>& q, long nq) {
  double s = 0.0;
  for (size_t k = 0; k < p.size(); ++k)
    s += std::abs(static_cast<double>(p[k]) / np - static_cast<double>(q[k]) / nq);
  return clamp_tv(0.5 * s);
}

}  // namespace

std::string to_string(TvMethod m) {
  return m == TvMethod::DensityGrid ? "DensityGrid" : "EmpiricalHistogram";
}

TvEstimate tv_densities(const DensityGrid& f, const DensityGrid& g) {
  require(f.same_lattice(g), "tv_densities: lattice mismatch");
  double s = 0.0;
  for (size_t k = 0; k < f.values.size(); ++k) s += std::abs(f.values[k] - g.values[k]);
  TvEstimate est;
  est.value = clamp_tv(0.5 * s * f.cell_volume());
  est.method = TvMethod::DensityGrid;
  est.resolution = f.dx;
  est.clipped_mass = f.clipped_mass + g.clipped_mass;
  return est;
}

TvEstimate tv_shift(const DensityGrid& f, const Vec& shift) {
  require(shift.size() == f.dim, "tv_shift: shift dimension mismatch");
  for (int a = 0; a < f.dim; ++a)
    if (!(std::abs(shift[a]) < f.half_width()))
      throw OffLattice("tv_shift: translate leaves the lattice (|shift| >= half width " +
                       std::to_string(f.half_width()) + ")");
  const long n = f.n;
  const auto s0 = stencil(shift[0] / f.dx);
  double diff = 0.0, moved = 0.0;
  if (f.dim == 1) {
    std::tie(diff, moved) = shifted_sums_1d(f.values.data(), n, s0, f.values.data());
  } else {
    const auto s1 = stencil(shift[1] / f.dx);
    std::vector<double> row(n);
    const double* base = f.values.data();
    for (long i = 0; i < n; ++i) {
      // blend the two source rows along the first axis, then shift along the second
      const long a = i - s0.k, b = a - 1;
      const double* ra = a >= 0 && a < n ? base + a * n : nullptr;
      const double* rb = b >= 0 && b < n ? base + b * n : nullptr;
      if (!ra && !rb) {
        for (long j = 0; j < n; ++j) diff += std::abs(base[i * n + j]);
        continue;
      }
      for (long j = 0; j < n; ++j)
        row[j] = (ra ? (1.0 - s0.w) * ra[j] : 0.0) + (rb ? s0.w * rb[j] : 0.0);
      const auto [d, m] = shifted_sums_1d(row.data(), n, s1, base + i * n);
      diff += d;
      moved += m;
    }
  }
  const double vol = f.cell_volume();
  // translated mass pushed past the boundary is disjoint from f
  const double lost = std::max(0.0, grid_sum(f) - moved * vol);
  TvEstimate est;
  est.value = clamp_tv(0.5 * (diff * vol + lost));
  est.resolution = f.dx;
  est.clipped_mass = f.clipped_mass;
  return est;
}

TvEstimate tv_empirical(const SampleBatch& xs, const SampleBatch& ys, const EmpiricalTvOptions& opt) {
  require(xs.dim() == ys.dim(), "tv_empirical: dimension mismatch");
  require(xs.dim() >= 1 && xs.dim() <= 3, "tv_empirical: dimension must be 1, 2 or 3");
  require(xs.size() >= 1000 && ys.size() >= 1000,
          "tv_empirical: at least 1000 samples per batch required");
  const int d = xs.dim();
  const long nx = xs.size(), ny = ys.size(), total = nx + ny;
  auto point = [&](long k, int a) { return k < nx ? xs.values(a, k) : ys.values(a, k - nx); };

  std::array<double, 3> lo{}, width{};
  for (int a = 0; a < d; ++a) {
    std::vector<double> col(total);
    for (long k = 0; k < total; ++k) col[k] = point(k, a);
    std::sort(col.begin(), col.end());
    lo[a] = col.front();
    const double iqr = quantile_sorted(col, 0.75) - quantile_sorted(col, 0.25);
    double h = 2.0 * iqr / std::cbrt(static_cast<double>(total));
    if (!(h > 0.0)) h = (col.back() - col.front()) / std::sqrt(static_cast<double>(total));
    if (!(h > 0.0)) h = 1.0;
    width[a] = h;
  }

  using Key = std::array<long long, 3>;
  std::vector<Key> keys(total);
  for (long k = 0; k < total; ++k) {
    Key key{0, 0, 0};
    for (int a = 0; a < d; ++a)
      key[a] = static_cast<long long>(std::floor((point(k, a) - lo[a]) / width[a]));
    keys[k] = key;
  }
  std::vector<Key> uniq = keys;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  const size_t bins = uniq.size();
  std::vector<int> id(total);
  for (long k = 0; k < total; ++k)
    id[k] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), keys[k]) - uniq.begin());

  std::vector<long> px(bins, 0), py(bins, 0);
  for (long k = 0; k < nx; ++k) ++px[id[k]];
  for (long k = nx; k < total; ++k) ++py[id[k]];

  TvEstimate est;
  est.method = TvMethod::EmpiricalHistogram;
  est.value = histogram_tv(px, nx, py, ny);
  est.resolution = *std::max_element(width.begin(), width.begin() + d);

  if (opt.bootstrap > 1) {
    RngStream rng(opt.seed, 0);
    std::uniform_int_distribution<long> pick_x(0, nx - 1), pick_y(nx, total - 1);
    std::vector<double> reps(opt.bootstrap);
    std::vector<long> bx(bins), by(bins);
    for (int r = 0; r < opt.bootstrap; ++r) {
      std::fill(bx.begin(), bx.end(), 0);
      std::fill(by.begin(), by.end(), 0);
      for (long k = 0; k < nx; ++k) ++bx[id[pick_x(rng.engine())]];
      for (long k = 0; k < ny; ++k) ++by[id[pick_y(rng.engine())]];
      reps[r] = histogram_tv(bx, nx, by, ny);
    }
    double mean = 0.0;
    for (double v : reps) mean += v;
    mean /= reps.size();
    double var = 0.0;
    for (double v : reps) var += (v - mean) * (v - mean);
    est.std_error = std::sqrt(var / (reps.size() - 1));
  }

  // same-law calibration: first half of xs against the second half
  const long half = nx / 2;
  std::vector<long> h1(bins, 0), h2(bins, 0);
  for (long k = 0; k < half; ++k) ++h1[id[k]];
  for (long k = half; k < 2 * half; ++k) ++h2[id[k]];
  est.bias = histogram_tv(h1, half, h2, half);
  return est;
}

DensityGrid lattice_shift(const DensityGrid& f, const std::vector<int>& cells) {
  require(static_cast<int>(cells.size()) == f.dim, "lattice_shift: dimension mismatch");
  DensityGrid g = blank_like(f);
  const int n = f.n;
  if (f.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const int src = i - cells[0];
      if (src >= 0 && src < n) g.values[i] = f.values[src];
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const int si = i - cells[0];
      if (si < 0 || si >= n) continue;
      for (int j = 0; j < n; ++j) {
        const int sj = j - cells[1];
        if (sj >= 0 && sj < n)
          g.values[static_cast<size_t>(i) * n + j] = f.values[static_cast<size_t>(si) * n + sj];
      }
    }
  }
  g.mass = grid_sum(g);
  return g;
}

DensityGrid rescale(const DensityGrid& f, double c) {
  require(c != 0.0 && std::isfinite(c), "rescale: factor must be nonzero and finite");
  const double ac = std::abs(c);
  const double jac = 1.0 / std::pow(ac, f.dim);
  DensityGrid g = blank_like(f);
  g.dx = ac * f.dx;
  g.center = c * f.center;
  const int n = f.n;
  // node offset k maps to offset sign(c) k
  auto src = [&](int i) { return c > 0 ? i : n - i; };
  if (f.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const int s = src(i);
      if (s >= 0 && s < n) g.values[i] = jac * f.values[s];
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const int si = src(i);
      if (si < 0 || si >= n) continue;
      for (int j = 0; j < n; ++j) {
        const int sj = src(j);
        if (sj >= 0 && sj < n)
          g.values[static_cast<size_t>(i) * n + j] = jac * f.values[static_cast<size_t>(si) * n + sj];
      }
    }
  }
  g.mass = grid_sum(g);
  return g;
}

DensityGrid reflect(const DensityGrid& f) {
  DensityGrid g = rescale(f, -1.0);
  g.center = f.center;
  return g;
}

DensityGrid convolve(const DensityGrid& f, const DensityGrid& g) {
  require(f.dim == 1 && g.dim == 1, "convolve: only one-dimensional grids are supported");
  require(f.n == g.n && std::abs(f.dx - g.dx) <= 1e-12 * f.dx, "convolve: lattice spacing mismatch");
  const int n = f.n;
  auto support = [](const DensityGrid& h) {
    const double peak = *std::max_element(h.values.begin(), h.values.end());
    std::vector<int> idx;
    for (int i = 0; i < h.n; ++i)
      if (h.values[i] > 1e-15 * peak) idx.push_back(i);
    return idx;
  };
  const auto sf = support(f), sg = support(g);
  DensityGrid h = blank_like(f);
  h.center = f.center + g.center;
  h.clipped_mass = f.clipped_mass + g.clipped_mass;
  for (int i : sf)
    for (int j : sg) {
      const int k = i + j - n / 2;
      if (k >= 0 && k < n) h.values[k] += f.values[i] * g.values[j] * f.dx;
    }
  h.mass = grid_sum(h);
  return h;
}

bool PropertyReport::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const PropertyItem& it) { return it.pass; });
}

PropertyReport property_suite_appendix(const DensityGrid& f, const AppendixParams& p) {
  const int d = f.dim;
  const Vec a = p.a.size() == d ? p.a : Vec::Constant(d, 1.0);
  const Vec b = p.b.size() == d ? p.b : Vec::Constant(d, 3.0);
  const double c = p.scale != 0.0 ? p.scale : 2.0;
  auto cells = [&](const Vec& v, double dx) {
    std::vector<int> k(d);
    for (int i = 0; i < d; ++i) k[i] = static_cast<int>(std::lround(v[i] / dx));
    return k;
  };
  auto minus = [](std::vector<int> u, const std::vector<int>& v) {
    for (size_t i = 0; i < u.size(); ++i) u[i] -= v[i];
    return u;
  };
  // second law: mirror image moved half a unit
  const DensityGrid y = lattice_shift(reflect(f), cells(Vec::Constant(d, 0.5), f.dx));
  auto fmt = [](double lhs, double rhs) {
    std::ostringstream os;
    os.precision(10);
    os << "lhs=" << lhs << " rhs=" << rhs;
    return os.str();
  };
  PropertyReport rep;
  auto add = [&](const std::string& name, double violation, double tol, const std::string& detail) {
    rep.items.push_back({name, violation, violation <= tol, false, detail});
  };

  const auto ka = cells(a, f.dx), kb = cells(b, f.dx);
  {
    const double lhs = tv_densities(lattice_shift(f, ka), lattice_shift(y, kb)).value;
    const double rhs = tv_densities(lattice_shift(f, minus(ka, kb)), y).value;
    add("shift_cancellation", std::abs(lhs - rhs), p.tol, fmt(lhs, rhs));
  }
  {
    const double lhs = tv_densities(rescale(f, c), rescale(y, c)).value;
    const double rhs = tv_densities(f, y).value;
    add("scale_invariance", std::abs(lhs - rhs), p.tol, fmt(lhs, rhs));
  }
  {
    const DensityGrid fc = rescale(f, c), yc = rescale(y, c);
    const auto ka2 = cells(a, fc.dx), kb2 = cells(b, fc.dx);
    const double lhs = tv_densities(lattice_shift(fc, ka2), lattice_shift(yc, kb2)).value;
    auto k = minus(ka2, kb2);
    if (c < 0)
      for (int& v : k) v = -v;
    const double rhs = tv_densities(lattice_shift(f, k), y).value;
    add("affine_identity", std::abs(lhs - rhs), p.tol, fmt(lhs, rhs));
  }
  if (d == 1) {
    const DensityGrid f2 = lattice_shift(f, ka), y2 = lattice_shift(y, kb);
    const double tv1 = tv_densities(f, f2).value;
    const double tv2 = tv_densities(y, y2).value;
    const double tvc = tv_densities(convolve(f, y), convolve(f2, y2)).value;
    std::ostringstream os;
    os.precision(10);
    os << "tv_conv=" << tvc << " tv1+tv2=" << tv1 + tv2 << " slack=" << tv1 + tv2 - tvc;
    add("convolution_subadditivity", std::max(0.0, tvc - tv1 - tv2), p.tol, os.str());
  } else {
    rep.items.push_back({"convolution_subadditivity", 0.0, true, true,
                         "skipped: grid convolution is implemented for d = 1"});
  }
  {
    std::vector<double> shifts = p.shift_sequence;
    if (shifts.empty())
      for (double s = f.dx; s < 0.95 * f.half_width(); s *= 2.0) shifts.push_back(s);
    std::vector<double> tvs;
    for (double s : shifts) {
      Vec v = Vec::Zero(d);
      v[0] = s;
      try {
        tvs.push_back(tv_shift(f, v).value);
      } catch (const OffLattice&) {
        break;
      }
    }
    double worst = 0.0;
    for (size_t i = 1; i < tvs.size(); ++i) worst = std::max(worst, tvs[i - 1] - tvs[i]);
    const double last = tvs.empty() ? 0.0 : tvs.back();
    std::ostringstream os;
    os.precision(10);
    os << "shifts=" << tvs.size() << " last_tv=" << last;
    rep.items.push_back({"divergence_to_one", worst, worst <= 1e-9 && last >= 0.99, false, os.str()});
  }
  return rep;
}

}  // namespace oulcut
