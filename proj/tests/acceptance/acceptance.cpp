// Acceptance run: one PASS/FAIL line per criterion, diagnostics indented below it.
// Exit status is nonzero when a criterion fails that was not listed with --expect-fail.

#include "oulcut/ensembles.hpp"
#include "runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace oulcut;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> notes;
};

std::string f(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

double gauss_tv(double shift, double sd) { return std::erf(std::abs(shift) / (2.0 * std::sqrt(2.0) * sd)); }
double cauchy_tv(double shift, double scale) { return 2.0 / kPi * std::atan(std::abs(shift) / (2.0 * scale)); }

std::vector<double> c_grid_25() {
  std::vector<double> c;
  for (int k = 0; k < 25; ++k) c.push_back(-4.0 + k / 3.0);
  return c;
}

// ---------------------------------------------------------------- criteria

Outcome gaussian_profile() {
  const auto model = LevyModel::brownian(1.0);
  const auto spec = DriftSpectrum::scalar(1.0);
  const auto asym = asymptotic_decomposition(spec, v1(1.0));
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  Outcome o;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const auto s = cutoff_schedule(asym.gamma, asym.ell, eps);
    std::vector<double> ts;
    for (double c : c_grid_25()) ts.push_back(s.time(c));
    const auto pts = distance_curve(model, spec, eps, v1(1.0), ts);
    double w = 0.0;
    for (size_t k = 0; k < pts.size(); ++k)
      w = std::max(w, std::abs(pts[k].estimate.value - std::erf(std::exp(-c_grid_25()[k]) / 2.0)));
    o.notes.push_back("eps=" + f(eps) + " max|d - erf(e^-c/2)| = " + f(w, 3));
    worst = std::max(worst, w);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.pass = worst <= 0.02 && secs <= 60.0;
  o.summary = "Gaussian profile: max deviation " + f(worst, 3) + " (<= 0.02), " + f(secs, 3) + " s (<= 60)";
  return o;
}

Outcome cauchy_profile() {
  const auto model = LevyModel::stable_1d({1.0, 1.0, 0.0, 0.0});
  const auto spec = DriftSpectrum::scalar(1.0);
  const double x0 = 2.0, eps = 1e-6;
  const auto asym = asymptotic_decomposition(spec, v1(x0));
  const auto s = cutoff_schedule(asym.gamma, asym.ell, eps);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> ts;
  for (double c : c_grid_25()) ts.push_back(s.time(c));
  const auto pts = distance_curve(model, spec, eps, v1(x0), ts);
  // invariant drift-free functional is Cauchy with scale c / (alpha gamma)
  const double scale = 1.0 / (1.0 * asym.gamma);
  double worst = 0.0;
  for (size_t k = 0; k < pts.size(); ++k)
    worst = std::max(worst, std::abs(pts[k].estimate.value - cauchy_tv(std::exp(-c_grid_25()[k]) * x0, scale)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.pass = worst <= 0.02 && secs <= 60.0;
  o.summary = "Cauchy profile at eps=1e-6: max deviation " + f(worst, 3) + " (<= 0.02), " + f(secs, 3) + " s";
  return o;
}

Outcome cutoff_step() {
  const auto model = LevyModel::brownian(1.0);
  const auto spec = DriftSpectrum::scalar(1.0);
  const double eps = 1e-8;
  const auto s = cutoff_schedule(1.0, 1, eps);
  const auto pts = distance_curve(model, spec, eps, v1(1.0), {0.5 * s.t_eps, 1.5 * s.t_eps});
  const double lo = pts[0].estimate.value, hi = pts[1].estimate.value;
  Outcome o;
  o.pass = lo >= 0.95 && hi <= 0.05;
  o.summary = "cut-off step at eps=1e-8: d(0.5 t)=" + f(lo, 6) + " (>= 0.95), d(1.5 t)=" + f(hi, 3) + " (<= 0.05)";
  return o;
}

Outcome sandwich() {
  const auto spec = DriftSpectrum::scalar(1.0);
  const std::pair<const char*, LevyModel> models[] = {{"Gaussian", LevyModel::brownian(1.0)},
                                                      {"Cauchy", LevyModel::stable_1d({1.0, 1.0, 0.0, 0.0})}};
  double worst = -1.0;
  int probes = 0;
  Outcome o;
  for (const auto& [name, model] : models) {
    double w = -1.0;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const auto s = cutoff_schedule(1.0, 1, eps);
      for (double c : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const auto p = sandwich_probe(model, spec, eps, v1(1.0), s.time(c));
        w = std::max(w, p.excess());
        ++probes;
      }
    }
    o.notes.push_back(std::string(name) + ": max(|d - D| - R) = " + f(w, 3));
    worst = std::max(worst, w);
  }
  o.pass = worst <= 0.01;
  o.summary = "sandwich |d - D| <= R + 0.01 on " + std::to_string(probes) + " probes: worst excess " + f(worst, 3);
  return o;
}

Outcome error_decay() {
  const auto spec = DriftSpectrum::scalar(1.0);
  const std::pair<const char*, LevyModel> models[] = {{"Gaussian", LevyModel::brownian(1.0)},
                                                      {"Cauchy", LevyModel::stable_1d({1.0, 1.0, 0.0, 0.0})}};
  Outcome o;
  o.pass = true;
  for (const auto& [name, model] : models) {
    std::string line = std::string(name) + ": R =";
    double prev = 2.0;
    bool dec = true;
    double last = 0.0;
    for (double t : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      last = error_term(model, spec, t).value;
      line += " " + f(last, 3);
      dec = dec && last < prev;
      prev = last;
    }
    o.notes.push_back(line);
    o.pass = o.pass && dec && last <= 0.01;
  }
  o.summary = "error term decreasing on {1,2,4,8,16} with R(16) <= 0.01";
  return o;
}

Mat random_real_jordan(std::mt19937_64& gen, int d, bool& has_complex, int& max_block) {
  std::uniform_int_distribution<int> pick(0, 3);
  const double re_parts[] = {0.5, 1.0, 2.0, 3.0};
  std::uniform_real_distribution<double> im(0.5, 3.0);
  Mat J = Mat::Zero(d, d);
  int i = 0;
  has_complex = false;
  max_block = 1;
  while (i < d) {
    const double a = re_parts[pick(gen)];
    const int room = d - i;
    const int kind = std::uniform_int_distribution<int>(0, 2)(gen);
    if (kind == 0 && room >= 2) {
      const double b = im(gen);
      J(i, i) = J(i + 1, i + 1) = a;
      J(i, i + 1) = -b;
      J(i + 1, i) = b;
      has_complex = true;
      i += 2;
      continue;
    }
    const int k = std::min(room, std::uniform_int_distribution<int>(1, 3)(gen));
    for (int r = 0; r < k; ++r) {
      J(i + r, i + r) = a;
      if (r + 1 < k) J(i + r, i + r + 1) = 1.0;
    }
    max_block = std::max(max_block, k);
    i += k;
  }
  return J;
}

Outcome spectral_asymptotics() {
  std::mt19937_64 gen(20240611);
  std::normal_distribution<double> nd;
  int full_ok = 0, ell1 = 0, ell1_ok = 0, ellk = 0, ellk_decay = 0, osc = 0, osc_ok = 0, jordan3 = 0, complex = 0;
  double worst_literal = 0.0;
  bool literal_all = true;
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + k % 5;
    bool has_c = false;
    int mb = 1;
    const Mat J = random_real_jordan(gen, d, has_c, mb);
    Mat P;
    do {
      P = Mat::Identity(d, d) * 2.0;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) P(r, c) += nd(gen);
    } while (P.jacobiSvd().singularValues().minCoeff() < 0.3);
    const Mat Q = P * J * P.inverse();
    Vec x0(d);
    for (int r = 0; r < d; ++r) x0[r] = nd(gen);
    const auto spec = DriftSpectrum::validate(Q);
    const auto asym = asymptotic_decomposition(spec, x0);
    const double t = 50.0 / asym.gamma;
    if (asym.expansion_residual(spec, t) <= 1e-6) ++full_ok;
    const double lit = asym.leading_residual(spec, t);
    worst_literal = std::max(worst_literal, lit);
    literal_all = literal_all && lit <= 1e-6;
    if (asym.ell == 1) {
      ++ell1;
      if (lit <= 1e-6) ++ell1_ok;
    } else {
      ++ellk;
      // window maxima of s * residual(s) stay level when the tail is O(1/s)
      auto window = [&](double from) {
        double w = 0.0;
        for (int i = 0; i <= 40; ++i) {
          const double s = from * (1.0 + i / 40.0);
          w = std::max(w, s * asym.leading_residual(spec, s));
        }
        return w;
      };
      const double ratio = window(4 * t) / window(t);
      if (ratio > 2.0 / 3.0 && ratio < 1.5) ++ellk_decay;
    }
    if (asym.oscillatory) {
      ++osc;
      std::vector<double> grid;
      for (int i = 0; i < 2000; ++i) grid.push_back(0.05 * i);
      if (oscillation_envelope(asym, grid).liminf_est > 0.0) ++osc_ok;
    }
    jordan3 += mb == 3;
    complex += has_c;
  }
  Outcome o;
  o.pass = literal_all && osc_ok == osc;
  o.summary = "spectral asymptotics over 50 random Q: leading-term residual at t=50/gamma <= 1e-6 in every case (worst " +
              f(worst_literal, 3) + ")";
  o.notes.push_back("full Jordan-chain expansion residual <= 1e-6: " + std::to_string(full_ok) + "/50");
  o.notes.push_back("ell = 1 cases with leading residual <= 1e-6: " + std::to_string(ell1_ok) + "/" + std::to_string(ell1));
  o.notes.push_back("ell >= 2 cases with t * residual level between [t,2t] and [4t,8t] (O(1/t) tail): " + std::to_string(ellk_decay) +
                    "/" + std::to_string(ellk));
  o.notes.push_back("oscillatory cases with liminf > 0: " + std::to_string(osc_ok) + "/" + std::to_string(osc));
  o.notes.push_back("draws with complex pairs: " + std::to_string(complex) + ", with size-3 Jordan blocks: " +
                    std::to_string(jordan3));
  return o;
}

Outcome scaling_limit() {
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  for (double g : {1.0, 2.0})
    for (int ell : {1, 2, 3}) {
      std::string line = "gamma=" + f(g) + " ell=" + std::to_string(ell) + ":";
      for (double c : {-2.0, 0.0, 2.0}) {
        const auto r = scaling_limit_ratio(g, ell, 1e-10, c);
        line += " c=" + f(c) + " ratio/target=" + f(r.value / r.target, 5);
        worst = std::max(worst, r.relative_error());
        o.pass = o.pass && r.relative_error() <= 0.01;
      }
      o.notes.push_back(line);
    }
  o.summary = "scaling ratio within 1% of (2 gamma)^{1-ell} e^{-c} at eps=1e-10: worst relative error " + f(worst, 3);
  return o;
}

Outcome tv_identities() {
  const CfFunction g1 = [](const Vec& l) { return cplx(std::exp(-0.5 * l.squaredNorm()), 0.0); };
  const auto f1 = density_from_cf(g1, plan_lattice({g1}, 1, v1(0.0), 0.0));
  const auto f2 = density_from_cf(g1, plan_lattice({g1}, 2, Vec::Zero(2), 0.0));
  Outcome o;
  o.pass = true;
  for (const auto* f : {&f1, &f2}) {
    const auto rep = property_suite_appendix(*f, {});
    std::string line = std::to_string(f->dim) + "D:";
    for (const auto& it : rep.items) {
      line += " " + it.name + (it.skipped ? "=skipped" : it.pass ? "=ok" : "=FAIL");
      if (it.name == "convolution_subadditivity" && !it.skipped) line += "(" + it.detail + ")";
    }
    o.notes.push_back(line);
    o.pass = o.pass && rep.all_pass();
  }
  o.summary = "TV identity suite (shift, scale, affine, convolution, divergence) on Gaussian lattices";
  return o;
}

Outcome average_process() {
  AverageConfig a;
  a.stable = {1.5, 1.0, 0.0, 0.0};
  a.gamma = 1.0;
  a.x0 = 1.0;
  a.n = 10000;
  a.eps_n = 1.0 / a.n;
  const auto s = average_schedule(a);
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  o.pass = true;
  bool corrected = true;
  for (double c : {-2.0, 0.0, 2.0}) {
    const auto e = average_distance_mc(a, s.time(c), 100000, 17 + static_cast<int>(c));
    const double g = average_profile(a, c).value;
    const double gt = average_profile_transition_scale(a, c).value;
    const double tol = std::max(0.03, 3.0 * e.std_error);
    o.pass = o.pass && std::abs(e.value - g) <= tol;
    corrected = corrected && std::abs(e.value - gt) <= tol;
    o.notes.push_back("c=" + f(c) + ": MC " + f(e.value, 4) + " +- " + f(e.std_error, 2) + ", stated profile " + f(g, 4) +
                      ", profile with (alpha gamma)^{1/alpha} shift " + f(gt, 4));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.pass = o.pass && secs <= 300.0;
  o.notes.push_back(std::string("diagnostic: MC agrees with the (alpha gamma)^{1/alpha}-scaled profile: ") +
                    (corrected ? "yes" : "no"));
  o.summary = "average process at n=1e4, 1e5 paths vs stated profile, " + f(secs, 3) + " s";
  return o;
}

Outcome superposition() {
  auto block = [](double m, double g) { return SuperpositionBlock{m, g, 1.0, LevyModel::brownian(1.0)}; };
  SuperpositionConfig two;
  two.blocks = {block(0.5, 1.0), block(0.3, 2.0)};
  SuperpositionConfig three = two;
  three.blocks.push_back(block(0.2, 10.0));
  const double eps = 1e-8;
  const auto rep = validate_superposition(two);
  const double sd = std::sqrt(0.25 / 2.0 + 0.09 / 4.0);
  const auto s = superposition_schedule(two, eps);
  double dev = 0.0, change = 0.0;
  for (double c : c_grid_25()) {
    const double d2 = superposition_distance(two, eps, s.time(c)).value;
    const double d3 = superposition_distance(three, eps, s.time(c)).value;
    dev = std::max(dev, std::abs(d2 - gauss_tv(std::exp(-c) * rep.leading_sum, sd)));
    change = std::max(change, std::abs(d3 - d2));
  }
  Outcome o;
  o.pass = rep.pass && dev <= 0.02 && change < 0.005;
  o.summary = "superposition: max deviation from erf profile " + f(dev, 3) + " (<= 0.02), fast block changes it by " +
              f(change, 3) + " (< 0.005)";
  o.notes.push_back("gamma_hat=" + f(rep.gamma_hat) + ", sum over J of m_j x_j=" + f(rep.leading_sum));
  return o;
}

Outcome factorial_conditions() {
  const auto m = LevyModel::factorial_series();
  std::vector<double> r;
  for (int k = 1; k <= 300; ++k) r.push_back(std::pow(10.0, -k));
  const auto bk = check_small_jump_activity(m, r, SmallJumpVariant::BK1d);
  const auto ka = check_small_jump_activity(m, r, SmallJumpVariant::Kallenberg);
  Outcome o;
  o.pass = bk.verdict == Verdict::PassNumeric && ka.verdict == Verdict::FailNumeric;
  o.summary = "sum n delta_{1/n!}: BK1d " + to_string(bk.verdict) + ", Kallenberg " + to_string(ka.verdict);
  return o;
}

Outcome rotation_band() {
  const auto rot = DriftSpectrum::validate(m2(1.0, -1.0, 1.0, 1.0));
  const auto asym = asymptotic_decomposition(rot, v2(1.0, 0.0));
  const auto iso = oscillation_profile_band(LevyModel::stable_isotropic(2, 1.0, 1.0), rot, asym, 0.0);
  const auto an = oscillation_profile_band(LevyModel::brownian(m2(1.0, 0.0, 0.0, 4.0)), rot, asym, 0.0);
  Outcome o;
  o.pass = iso.width() < 1e-3 && an.width() > 0.05;
  o.summary = "rotation Q: isotropic band width " + f(iso.width(), 3) + " (< 1e-3), anisotropic band width " +
              f(an.width(), 3) + " (> 0.05)";
  return o;
}

Outcome determinism(const fs::path& scratch) {
  const fs::path configs = fs::path(OULCUT_SOURCE_DIR) / "configs";
  fs::remove_all(scratch);
  Outcome o;
  o.pass = true;
  // a Monte Carlo profile exercises the sampler as well
  const fs::path mc = scratch / "mc_profile.json";
  fs::create_directories(scratch);
  std::ofstream(mc) << R"({"kind": "Profile", "seed": 11, "model": {"type": "stable", "alpha": 1.5},
    "gamma": 1.0, "x0": [1.0], "c": [-1, 0, 1], "method": "monte_carlo", "samples": 50000})";
  for (const fs::path cfg : {configs / "gaussian_distance.json", configs / "superposition.json", mc}) {
    cli::RunOptions a, b;
    a.out_dir = (scratch / (cfg.stem().string() + "_a")).string();
    b.out_dir = (scratch / (cfg.stem().string() + "_b")).string();
    b.workers = 2;
    const auto ra = cli::run(cfg.string(), a), rb = cli::run(cfg.string(), b);
    bool same = ra.exit_code == 0 && rb.exit_code == 0;
    int n = 0;
    for (const auto& name : ra.files) {
      if (fs::path(name).extension() != ".csv") continue;
      auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
      };
      same = same && slurp(fs::path(a.out_dir) / name) == slurp(fs::path(b.out_dir) / name);
      ++n;
    }
    o.notes.push_back(cfg.filename().string() + ": " + std::to_string(n) + " CSV files " +
                      (same ? "identical" : "DIFFER"));
    o.pass = o.pass && same;
  }
  o.summary = "repeated runs with the same config and seed give byte-identical CSV";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> expect_fail, only;
  std::string scratch = (fs::temp_directory_path() / "oulcut_acceptance").string();
  app.add_option("--expect-fail", expect_fail, "criteria known to be unattainable");
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--scratch", scratch, "directory for the determinism runs");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  const std::set<int> chosen(only.begin(), only.end());

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gaussian_profile},     {2, cauchy_profile},    {3, cutoff_step},
      {4, sandwich},             {5, error_decay},       {6, spectral_asymptotics},
      {7, scaling_limit},        {8, tv_identities},     {9, average_process},
      {10, superposition},       {11, factorial_conditions}, {12, rotation_band},
      {13, [&] { return determinism(scratch); }}};
  int unexpected = 0;
  for (const auto& [id, fn] : criteria) {
    if (!chosen.empty() && !chosen.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string tag = o.pass ? "PASS" : "FAIL";
    if (!o.pass && expected.count(id)) tag = "FAIL (expected)";
    if (!o.pass && !expected.count(id)) ++unexpected;
    std::cout << "criterion " << id << ": " << tag << " - " << o.summary << " [" << f(secs, 3) << " s]\n";
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    std::cout.flush();
  }
  return unexpected == 0 ? 0 : 1;
}
