#include <doctest.h>

#include "oulcut/errors.hpp"
#include "oulcut/levy_models.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace oulcut;

namespace {
Vec v1(double x) { return Vec::Constant(1, x); }

std::vector<double> decades(int from, int to) {
  std::vector<double> r;
  for (int k = from; k <= to; ++k) r.push_back(std::pow(10.0, -k));
  return r;
}
}  // namespace

TEST_CASE("char_exponent closed forms") {
  CHECK(char_exponent(LevyModel::brownian(1.0), v1(1.0)).real() == doctest::Approx(-0.5));
  CHECK(char_exponent(LevyModel::brownian(1.0), v1(1.0)).imag() == doctest::Approx(0.0));

  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    const auto m = LevyModel::stable_1d({alpha, 1.3, alpha == 1.0 ? 0.0 : 0.4, 0.7});
    CHECK(std::abs(char_exponent(m, v1(0.0))) == 0.0);
  }

  const auto cp = LevyModel::compound_poisson(2.0, JumpLaw::atoms_1d({1.0}, {1.0}));
  const cplx psi = char_exponent(cp, v1(std::numbers::pi));
  CHECK(psi.real() == doctest::Approx(-4.0));
  CHECK(psi.imag() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("char_exponent invariants on random probes") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  std::vector<LevyModel> models{
      LevyModel::brownian(2.0, 0.3),
      LevyModel::stable_1d({1.5, 0.8, -0.6, 0.2}),
      LevyModel::stable_1d({0.7, 1.1, 0.9, 0.0}),
      LevyModel::compound_poisson(1.5, JumpLaw::exponential(0.5)),
      LevyModel::compound_poisson(0.7, JumpLaw::pareto(1.0, 1.5)),
  };
  for (const auto& m : models)
    for (int i = 0; i < 20; ++i) {
      const Vec z = v1(3.0 * nd(gen));
      const cplx a = char_exponent(m, z), b = char_exponent(m, -z);
      CHECK(a.real() <= 1e-12);
      CHECK(std::abs(std::exp(a)) <= 1.0 + 1e-12);
      CHECK(std::abs(b - std::conj(a)) <= 1e-8);
    }
}

TEST_CASE("sum of jump parts adds exponents") {
  const StableParams sp{1.2, 0.9, 0.3, 0.0};
  const auto law = JumpLaw::exponential(2.0);
  LevyModel sum(v1(0.1), Mat::Constant(1, 1, 0.4),
                {CompoundPoisson{1.3, law}, StableJumps{sp, 1}});
  LevyModel a(v1(0.1), Mat::Constant(1, 1, 0.4), {CompoundPoisson{1.3, law}});
  LevyModel b(v1(0.0), Mat::Zero(1, 1), {StableJumps{sp, 1}});
  CHECK(sum.jump_kind() == JumpKind::Sum);
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 20; ++i) {
    const Vec z = v1(2.0 * nd(gen));
    CHECK(std::abs(char_exponent(sum, z) - char_exponent(a, z) - char_exponent(b, z)) <= 1e-10);
  }
}

TEST_CASE("strictly stable scaling") {
  for (double alpha : {0.6, 1.0, 1.4, 1.9}) {
    const auto m = LevyModel::stable_1d({alpha, 1.0, alpha == 1.0 ? 0.0 : -0.5, 0.0});
    for (double z : {-2.0, -0.3, 0.5, 1.7})
      for (double k : {0.5, 2.0, 7.0}) {
        const cplx lhs = char_exponent(m, v1(k * z));
        const cplx rhs = std::pow(k, alpha) * char_exponent(m, v1(z));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
      }
  }
}

TEST_CASE("heavy-tail jump characteristic function against direct sampling mean") {
  // Pareto(1, 3) has mean 1.5: phi'(0) = i E X
  const auto law = JumpLaw::pareto(1.0, 3.0);
  const double h = 1e-3;
  const cplx d = (law.cf(v1(h)) - law.cf(v1(-h))) / (2.0 * h);
  CHECK(d.imag() == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(std::abs(law.cf(v1(2.0))) <= 1.0);
}

TEST_CASE("stable parameter validation") {
  CHECK_THROWS_AS(StableParams({1.0, 1.0, 0.5, 0.0}).validate(), ValidationError);
  CHECK_THROWS_AS(StableParams({0.0, 1.0, 0.0, 0.0}).validate(), ValidationError);
  CHECK_THROWS_AS(StableParams({2.5, 1.0, 0.0, 0.0}).validate(), ValidationError);
  CHECK_NOTHROW(StableParams({2.0, 0.5, 0.0, 0.0}).validate());
  CHECK_THROWS_AS(LevyModel(v1(0.0), Mat::Constant(1, 1, -1.0)), ValidationError);
  CHECK_THROWS_AS(JumpLaw::atoms_1d({1.0, 2.0}, {0.5, 0.6}), ValidationError);
}

TEST_CASE("stable measure constant reproduces the exponent") {
  // 2 K C_alpha = c for the symmetric stable measure K|x|^{-1-alpha}
  CHECK(stable_measure_constant(1.0) == doctest::Approx(std::numbers::pi / 2));
  CHECK(stable_measure_constant(0.5) == doctest::Approx(std::sqrt(2.0 * std::numbers::pi)));
  CHECK(stable_measure_constant(1.5) ==
        doctest::Approx(4.0 * std::sqrt(std::numbers::pi) / 3.0 * std::sqrt(0.5)));
}

TEST_CASE("log moment condition") {
  CHECK(has_log_moment(LevyModel::stable_1d({1.5, 1.0, 0.0, 0.0})).verdict ==
        Verdict::PassNumeric);
  CHECK(has_log_moment(LevyModel::brownian(1.0)).verdict == Verdict::PassNumeric);
  const auto bad = has_log_moment(LevyModel::compound_poisson(1.0, JumpLaw::log_tail()));
  CHECK(bad.verdict == Verdict::FailNumeric);
  // truncated integrals grow like ln ln T
  REQUIRE(bad.evidence.size() >= 3);
  const auto n = bad.evidence.size();
  CHECK(bad.evidence[n - 1].second - bad.evidence[n - 2].second ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(has_log_moment(LevyModel::compound_poisson(1.0, JumpLaw::pareto(1.0, 0.5))).verdict ==
        Verdict::PassNumeric);
  CHECK(has_log_moment(LevyModel::compound_poisson(1.0, JumpLaw::exponential(3.0))).verdict ==
        Verdict::PassNumeric);
}

TEST_CASE("Orey-Masuda checker") {
  const double alpha = 1.2, c = 1.0;
  const auto m = LevyModel::stable_1d({alpha, c, 0.0, 0.0});
  // closed form: 2K|v|^alpha/(2-alpha) with 2K = c / C_alpha
  const double k2 = c / stable_measure_constant(alpha);
  const Vec v = v1(3.0);
  CHECK(truncated_second_moment_scaled(m, v, 1.0) ==
        doctest::Approx(k2 * std::pow(3.0, alpha) / (2.0 - alpha)));
  const std::vector<Vec> dirs{v1(1.0)};
  const std::vector<double> radii{1.0, 2.0, 10.0, 100.0};
  CHECK(check_orey_masuda(m, alpha, 0.1, dirs, radii).verdict == Verdict::PassNumeric);
  CHECK(check_orey_masuda(LevyModel::brownian(1.0), alpha, 0.1, dirs, radii).verdict ==
        Verdict::FailNumeric);
  const auto cp = LevyModel::compound_poisson(1.0, JumpLaw::atoms_1d({1.0}, {1.0}));
  CHECK(check_orey_masuda(cp, 1.0, 0.1, dirs, {10.0}).verdict == Verdict::FailNumeric);
  CHECK_THROWS_AS(check_orey_masuda(m, 2.0, 0.1, dirs, radii), ValidationError);
}

TEST_CASE("small-jump activity: factorial series separates BK1d from Kallenberg") {
  const auto m = LevyModel::factorial_series();
  const auto r = decades(1, 300);
  const auto bk = check_small_jump_activity(m, r, SmallJumpVariant::BK1d);
  const auto ka = check_small_jump_activity(m, r, SmallJumpVariant::Kallenberg);
  CHECK(bk.verdict == Verdict::PassNumeric);
  CHECK(ka.verdict == Verdict::FailNumeric);
}

TEST_CASE("small-jump activity: Cauchy passes Kallenberg with closed form") {
  const auto m = LevyModel::stable_1d({1.0, 1.0, 0.0, 0.0});
  const auto r = decades(1, 30);
  const auto rep = check_small_jump_activity(m, r, SmallJumpVariant::Kallenberg);
  CHECK(rep.verdict == Verdict::PassNumeric);
  // int_{-r}^{r} z^2 K z^{-2} dz = 2 K r with 2K = 1 / C_1
  const double k2 = 1.0 / stable_measure_constant(1.0);
  for (const auto& [rr, q] : rep.evidence)
    CHECK(q == doctest::Approx(-k2 * rr / (rr * rr * std::log(rr))));
}

TEST_CASE("small-jump activity: multivariate variants and grid checks") {
  const auto iso = LevyModel::stable_isotropic(2, 1.5, 1.0);
  const auto r = decades(1, 12);
  CHECK(check_small_jump_activity(iso, r, SmallJumpVariant::BKmulti).verdict ==
        Verdict::PassNumeric);
  CHECK(check_small_jump_activity(iso, r, SmallJumpVariant::NecessaryBound).verdict ==
        Verdict::PassNumeric);
  CHECK_THROWS_AS(check_small_jump_activity(iso, r, SmallJumpVariant::BK1d), ValidationError);
  CHECK(check_small_jump_activity(LevyModel::stable_1d({1.0, 1.0, 0.0, 0.0}), decades(1, 3),
                                  SmallJumpVariant::Kallenberg)
            .verdict == Verdict::Inconclusive);
  CHECK_THROWS_AS(check_small_jump_activity(LevyModel::brownian(1.0), {0.1, 0.2},
                                            SmallJumpVariant::BK1d),
                  ValidationError);
}
