#include <doctest.h>

#include "oulcut/errors.hpp"
#include "oulcut/matrix_dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace oulcut;

namespace {
Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("validate_mplus") {
  const auto diag = DriftSpectrum::validate(m2(1, 0, 0, 3));
  REQUIRE(diag.eigenvalues().size() == 2);
  CHECK(diag.eigenvalues()[0].real() == doctest::Approx(1.0));
  CHECK(diag.eigenvalues()[1].real() == doctest::Approx(3.0));
  CHECK(diag.diagonalizable());

  CHECK_THROWS_AS(DriftSpectrum::validate(m2(0, -1, 1, 0)), NotMPlus);

  const auto jordan = DriftSpectrum::validate(m2(1, 1, 0, 1));
  REQUIRE(jordan.clusters().size() == 1);
  CHECK(jordan.clusters()[0].value.real() == doctest::Approx(1.0));
  REQUIRE(jordan.clusters()[0].jordan_sizes.size() == 1);
  CHECK(jordan.clusters()[0].jordan_sizes[0] == 2);
  CHECK_FALSE(jordan.diagonalizable());
}

TEST_CASE("size-3 Jordan block is recovered") {
  Mat J = Mat::Zero(4, 4);
  J << 2, 1, 0, 0, 0, 2, 1, 0, 0, 0, 2, 0, 0, 0, 0, 5;
  Mat S(4, 4);
  S << 1, 0.2, 0, 0.1, 0, 1, 0.3, 0, 0.1, 0, 1, 0.2, 0, 0.1, 0, 1;
  const auto spec = DriftSpectrum::validate(S * J * S.inverse());
  bool found = false;
  for (const auto& c : spec.clusters())
    if (std::abs(c.value - cplx(2.0, 0.0)) < 1e-4) {
      found = true;
      REQUIRE(c.jordan_sizes.size() == 1);
      CHECK(c.jordan_sizes[0] == 3);
    }
  CHECK(found);
  CHECK(spec.basis_condition() <= 1e8);
}

TEST_CASE("decay constants") {
  const auto dc = DriftSpectrum::validate(m2(1, 0, 0, 3)).decay();
  CHECK(dc.c1 == doctest::Approx(1.0));
  CHECK(dc.c2 == doctest::Approx(3.0));
  CHECK(dc.c3 == doctest::Approx(1.0));
  CHECK(dc.c4 == doctest::Approx(1.0));

  const auto id = DriftSpectrum::validate(Mat::Identity(2, 2)).decay();
  CHECK(id.c1 == doctest::Approx(1.0));
  CHECK(id.c2 == doctest::Approx(1.0));
  CHECK(id.c3 == doctest::Approx(1.0));
  CHECK(id.c4 == doctest::Approx(1.0));

  const auto spec = DriftSpectrum::validate(m2(1, 1, 0, 1));
  const auto jd = spec.decay();
  CHECK(jd.c1 < 1.0);
  CHECK(jd.c2 > 1.0);
  CHECK(jd.c1 > 0.0);
  // oracle: e^{-tQ^T} = e^{-t}[[1, 0], [-t, 1]]
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ut(0.0, 200.0);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 1000; ++i) {
    const double t = ut(gen);
    const Vec l = v2(nd(gen), nd(gen));
    const Vec y = std::exp(-t) * v2(l[0], -t * l[0] + l[1]);
    CHECK(y.norm() <= jd.c3 * std::exp(-jd.c1 * t) * l.norm() * (1 + 1e-10));
    CHECK(y.norm() >= jd.c4 * std::exp(-jd.c2 * t) * l.norm() * (1 - 1e-10));
  }
}

TEST_CASE("exp_action") {
  const auto diag = DriftSpectrum::validate(m2(1, 0, 0, 3));
  const Vec x = v2(0.3, -1.2);
  CHECK((exp_action(diag, 0.0, x) - x).norm() == 0.0);
  const Vec y = exp_action(diag, 1.0, v2(1, 1));
  CHECK(y[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(y[1] == doctest::Approx(std::exp(-3.0)).epsilon(1e-13));

  // e^{-tQ} = e^{-t}[[1, -t], [0, 1]] for Q = [[1, 1], [0, 1]]
  const auto jordan = DriftSpectrum::validate(m2(1, 1, 0, 1));
  const Vec z = exp_action(jordan, 2.0, v2(0, 1));
  CHECK(z[0] == doctest::Approx(-2.0 * std::exp(-2.0)).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(exp_action(diag, -1.0, x), ValidationError);
}

TEST_CASE("exp_action semigroup") {
  Mat Q(3, 3);
  Q << 1.0, -2.0, 0.3, 2.0, 1.0, 0.0, 0.1, 0.4, 2.5;
  const auto spec = DriftSpectrum::validate(Q);
  Vec x(3);
  x << 1.0, -0.5, 2.0;
  for (double t : {0.1, 1.0, 3.7})
    for (double s : {0.2, 2.5}) {
      const Vec a = exp_action(spec, t + s, x);
      const Vec b = exp_action(spec, t, exp_action(spec, s, x));
      CHECK((a - b).norm() <= 1e-10 * a.norm());
    }
}

TEST_CASE("asymptotic decomposition: diagonal") {
  const auto spec = DriftSpectrum::validate(m2(1, 0, 0, 3));
  const auto a = asymptotic_decomposition(spec, v2(0, 1));
  CHECK(a.gamma == doctest::Approx(3.0));
  CHECK(a.ell == 1);
  CHECK(a.m == 1);
  REQUIRE(a.thetas.size() == 1);
  CHECK(a.thetas[0] == 0.0);
  CHECK(std::abs(a.v_sum[0]) < 1e-12);
  CHECK(a.v_sum[1].real() == doctest::Approx(1.0));
  CHECK_FALSE(a.oscillatory);
  CHECK_THROWS_AS(asymptotic_decomposition(spec, v2(0, 0)), ValidationError);
}

TEST_CASE("asymptotic decomposition: Jordan block") {
  const auto spec = DriftSpectrum::validate(m2(1, 1, 0, 1));
  const auto a = asymptotic_decomposition(spec, v2(0, 1));
  CHECK(a.gamma == doctest::Approx(1.0));
  CHECK(a.ell == 2);
  // (e^t / t) e^{-tQ} x0 = (-1, 1/t) -> (-1, 0)
  CHECK(a.v_sum[0].real() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(a.v_sum[1]) < 1e-9);
  // leading residual decays like 1/t; the full chain expansion is exact
  CHECK(a.leading_residual(spec, 50.0) == doctest::Approx(1.0 / 50.0).epsilon(1e-6));
  CHECK(a.expansion_residual(spec, 50.0) < 1e-10);
}

TEST_CASE("asymptotic decomposition: rotation block") {
  const auto spec = DriftSpectrum::validate(m2(1, -1, 1, 1));
  const auto a = asymptotic_decomposition(spec, v2(1, 0));
  CHECK(a.gamma == doctest::Approx(1.0));
  CHECK(a.ell == 1);
  CHECK(a.m == 2);
  REQUIRE(a.thetas.size() == 2);
  std::vector<double> th = a.thetas;
  std::sort(th.begin(), th.end());
  CHECK(th[0] == doctest::Approx(1.0));
  CHECK(th[1] == doctest::Approx(2 * std::numbers::pi - 1.0));
  CHECK(a.oscillatory);
  for (double t : {0.0, 0.3, 1.7, 10.2}) {
    const CVec L = a.leading(t);
    CHECK(L.norm() == doctest::Approx(1.0));
    // e^{-tQ} x0 = e^{-t}(cos t, -sin t)
    CHECK(L[0].real() == doctest::Approx(std::cos(t)));
    CHECK(L[1].real() == doctest::Approx(-std::sin(t)));
  }
  CHECK(a.leading_residual(spec, 50.0) < 1e-10);
}

TEST_CASE("oscillation envelope") {
  const auto spec = DriftSpectrum::validate(m2(1, -1, 1, 1));
  const auto a = asymptotic_decomposition(spec, v2(1, 0));
  std::vector<double> grid;
  for (int k = 0; k < 400; ++k) grid.push_back(50.0 + k * 0.05);
  const auto env = oscillation_envelope(a, grid);
  CHECK(env.liminf_est == doctest::Approx(1.0));
  CHECK(env.limsup_est == doctest::Approx(1.0));
  CHECK(env.basin_samples.size() > 50);
  for (const auto& s : env.basin_samples) CHECK(s.norm() == doctest::Approx(1.0));

  const auto d = asymptotic_decomposition(DriftSpectrum::validate(m2(1, 0, 0, 3)), v2(1, 1));
  const auto flat = oscillation_envelope(d, grid);
  CHECK(flat.liminf_est == doctest::Approx(flat.limsup_est));
  CHECK(flat.liminf_est == doctest::Approx(1.0));

  AsymptoticData manual;
  manual.x0 = v2(1, 0);
  manual.terms = {{0.0, v2(1, 0).cast<cplx>()}, {std::numbers::pi, v2(0, 0.5).cast<cplx>()}};
  manual.oscillatory = true;
  const auto env2 = oscillation_envelope(manual, {0.0, 0.25, 0.5, 1.0});
  CHECK(env2.liminf_est == doctest::Approx(std::sqrt(1.25)));
  CHECK(env2.limsup_est == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("Lyapunov solve") {
  Mat Q = m2(1, -1, 1, 1);
  Mat S = m2(1, 0, 0, 4);
  const Mat X = lyapunov(Q, S);
  CHECK((Q * X + X * Q.transpose() - S).norm() < 1e-12);
  CHECK(lyapunov(Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0))(0, 0) ==
        doctest::Approx(0.25));
}

TEST_CASE("non-normal Q with a wide spectral spread calibrates") {
  const Mat P = m2(2.3, 0.7, -1.1, 1.6);
  const Mat Q = P * m2(0.5, 0, 0, 3) * P.inverse();
  const auto spec = DriftSpectrum::validate(Q);
  const auto dc = decay_constants(spec);
  CHECK(dc.c4 > 0.0);
  CHECK(dc.c3 >= 1.0);
}

TEST_CASE("Jordan block sharing its eigenvalue with a simple one stays one cluster") {
  Mat J = Mat::Zero(3, 3);
  J << 1, 1, 0, 0, 1, 0, 0, 0, 1;
  Mat P(3, 3);
  P << 2.4, -0.3, 0.8, 0.5, 1.7, -0.6, -0.9, 0.4, 2.2;
  const auto spec = DriftSpectrum::validate(P * J * P.inverse());
  REQUIRE(spec.clusters().size() == 1);
  CHECK(spec.clusters()[0].jordan_sizes == std::vector<int>{2, 1});
  Vec x0(3);
  x0 << 0.3, -1.2, 0.7;
  const auto asym = asymptotic_decomposition(spec, x0);
  CHECK(asym.ell == 2);
  CHECK(asym.leading_residual(spec, 400.0) < 0.05);
}
