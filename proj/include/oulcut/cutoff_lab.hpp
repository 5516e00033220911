#pragma once

#include "oulcut/char_engine.hpp"
#include "oulcut/errors.hpp"
#include "oulcut/sampler.hpp"
#include "oulcut/tv_metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace oulcut {

class NonpositiveCutoffTime : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientEpsilonRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ComplexShiftResidual : public NumericError {
 public:
  using NumericError::NumericError;
};

//! No density regime: neither a closed-form smoothness regime nor a passing (H) check.
class DensityRegimeUnavailable : public NumericError {
 public:
  DensityRegimeUnavailable(const std::string& what, ConditionReport report)
      : NumericError(what), report_(std::move(report)) {}
  const ConditionReport& report() const { return report_; }

 private:
  ConditionReport report_;
};

struct CutoffSchedule {
  double t_eps = 0.0;
  double w_eps = 0.0;
  double gamma = 0.0;
  int ell = 1;
  double eps = 0.0;
  double w_correction = 0.0;  // the vanishing part of the window, 0 by default

  double time(double c) const { return t_eps + c * w_eps; }
};

CutoffSchedule cutoff_schedule(double gamma, int ell, double eps, double w_correction = 0.0);

//! ((t^{ell-1} e^{-gamma t}) / sqrt(eps)) at t = t_eps + c / gamma, next to its limit
//! (2 gamma)^{1-ell} e^{-c}. Evaluated in log space.
struct ScalingRatio {
  double value = 0.0;
  double target = 0.0;
  double relative_error() const { return std::abs(value - target) / target; }
};
ScalingRatio scaling_limit_ratio(double gamma, int ell, double eps, double c);

enum class ProfileMethod { DensityShift, MonteCarlo };
std::string to_string(ProfileMethod m);

struct MonteCarloOptions {
  long samples = 100000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: hardware concurrency
};

//! Accepts closed-form regimes directly, otherwise runs the (H) checker; throws
//! DensityRegimeUnavailable carrying the checker report on failure.
RegimeCertificate require_density_regime(const LevyModel& model, const DriftSpectrum& spec);

//! Density of the drift-free invariant functional (eps = 1) on a lattice centred at 0 that
//! admits translates up to `span`.
DensityGrid natural_invariant_density(const CfEvaluator& ev, double span);

//! (2 gamma)^{1-ell} e^{-c} v_sum; throws ComplexShiftResidual if Im v_sum exceeds 1e-10.
Vec profile_shift(const AsymptoticData& asym, double c);

TvEstimate profile_value(const LevyModel& model, const DriftSpectrum& spec,
                         const AsymptoticData& asym, double c,
                         ProfileMethod method = ProfileMethod::DensityShift,
                         const MonteCarloOptions& mc = {});

struct ProfileCurve {
  std::vector<double> c_grid;
  std::vector<TvEstimate> values;
  ProfileMethod method = ProfileMethod::DensityShift;
  double left_limit = 0.0;   // G at the smallest c
  double right_limit = 0.0;  // G at the largest c
  bool monotone = true;
  bool limits_ok() const { return left_limit >= 0.95 && right_limit <= 0.05; }
};

//! Profile on a c grid sharing one invariant density.
ProfileCurve profile_curve(const LevyModel& model, const DriftSpectrum& spec,
                           const AsymptoticData& asym, const std::vector<double>& c_grid,
                           ProfileMethod method = ProfileMethod::DensityShift,
                           const MonteCarloOptions& mc = {});

struct InvarianceReport {
  double radius = 0.0;
  std::vector<Vec> directions;
  std::vector<double> values;
  double max_difference = 0.0;
  bool pass = false;
};

//! Compares tv_shift(f, r u) over the directions u; passes when the spread is <= 2e-3.
InvarianceReport check_invariance_property(const DensityGrid& f_inf, double radius,
                                           std::vector<Vec> dirs = {});

struct OscillationBand {
  TvEstimate lower;
  TvEstimate upper;
  std::vector<Vec> shifts;
  std::vector<double> band_samples;
  bool collapsed = false;
  bool envelope_constant = false;
  InvarianceReport isotropy;
  double width() const { return upper.value - lower.value; }
};

//! Default probe times: 512 points on [0, 64]. At most 64 basin points are evaluated.
OscillationBand oscillation_profile_band(const LevyModel& model, const DriftSpectrum& spec,
                                         const AsymptoticData& asym, double c,
                                         std::vector<double> t_probe_grid = {});

//! tv_shift of the drift-free invariant density by e^{-tQ}x0 / sqrt(eps). Translates beyond the
//! lattice are reported as 1 with beyond_resolution set.
TvEstimate auxiliary_metric(const LevyModel& model, const DriftSpectrum& spec, double eps,
                            const Vec& x0, double t);

//! TV between the laws of C_t + I_t and the invariant law at eps = 1 (t > 0).
TvEstimate error_term(const LevyModel& model, const DriftSpectrum& spec, double t);

struct DistancePoint {
  double t = 0.0;
  TvEstimate estimate;
};

//! Distance to equilibrium on a time grid. Density method inverts both laws on a shared
//! lattice; Monte Carlo compares exact transition and invariant samples.
std::vector<DistancePoint> distance_curve(const LevyModel& model, const DriftSpectrum& spec,
                                          double eps, const Vec& x0,
                                          const std::vector<double>& t_grid,
                                          ProfileMethod method = ProfileMethod::DensityShift,
                                          const MonteCarloOptions& mc = {});

struct SandwichProbe {
  double eps = 0.0, t = 0.0;
  TvEstimate d, D, R;
  //! |d - D| - R
  double excess() const { return std::abs(d.value - D.value) - R.value; }
};

SandwichProbe sandwich_probe(const LevyModel& model, const DriftSpectrum& spec, double eps,
                             const Vec& x0, double t);

enum class CutoffLevel { Cutoff, Window, Profile };
std::string to_string(CutoffLevel l);

struct CutoffCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CutoffRow {
  double eps = 0.0;
  double c = 0.0;
  double t = 0.0;
  TvEstimate estimate;
  double reference = -1.0;  // profile value where applicable
  std::string tag;
};

struct CutoffReport {
  CutoffLevel level = CutoffLevel::Cutoff;
  AsymptoticData asym;
  std::vector<CutoffSchedule> schedules;
  std::vector<CutoffRow> rows;
  std::vector<CutoffCheck> checks;
  double max_profile_deviation = 0.0;
  double band_width = 0.0;
  bool pass = false;
};

//! Needs at least 3 decreasing epsilons spanning 4 decades.
CutoffReport verify_cutoff(const LevyModel& model, const DriftSpectrum& spec,
                           const std::vector<double>& eps_list, const Vec& x0, CutoffLevel level,
                           int workers = 0);

}  // namespace oulcut
