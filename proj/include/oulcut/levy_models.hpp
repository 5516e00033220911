#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace oulcut {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;

//! Stable parameters for psi(z) = i z a - c |z|^alpha (1 - i beta tan(pi alpha / 2) sgn z).
struct StableParams {
  double alpha = 2.0;
  double c = 0.5;
  double beta = 0.0;
  double a = 0.0;

  void validate() const;
  //! Exponent with a = 0.
  cplx exponent_natural(double z) const;
  cplx exponent(double z) const { return exponent_natural(z) + cplx(0.0, a * z); }
};

//! -Gamma(-alpha) cos(pi alpha / 2) for alpha != 1, pi/2 at alpha = 1: the constant with
//! int (1 - cos(z x)) |x|^{-1-alpha} dx over (0, inf) = C_alpha |z|^alpha.
double stable_measure_constant(double alpha);

enum class JumpLawKind { Atoms, Exponential, Pareto, LogTail, Gaussian };

//! Normalized jump-size law of a compound Poisson part.
//! Exponential, Pareto and LogTail are one-dimensional and supported on (0, inf);
//! LogTail has density 1 / (x (ln x)^2) on (e, inf).
struct JumpLaw {
  JumpLawKind kind = JumpLawKind::Atoms;
  std::vector<Vec> points;
  std::vector<double> weights;
  double scale = 1.0;  // Exponential mean, Pareto x_min
  double index = 1.0;  // Pareto tail index
  Vec mean;
  Mat cov;

  static JumpLaw atoms(std::vector<Vec> points, std::vector<double> weights);
  static JumpLaw atoms_1d(const std::vector<double>& xs, std::vector<double> weights);
  static JumpLaw exponential(double mean);
  static JumpLaw pareto(double x_min, double index);
  static JumpLaw log_tail();
  static JumpLaw gaussian(Vec mean, Mat cov);
  //! CSV with header and columns x, weight (one-dimensional atoms).
  static JumpLaw from_csv(const std::string& path);

  int dim() const;
  bool continuous_1d() const;
  cplx cf(const Vec& z) const;
  //! 1D continuous laws only.
  double density(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  double support_min() const;
};

struct CompoundPoisson {
  double rate = 1.0;
  JumpLaw law;
};

//! Stable jump part; in dimension >= 2 it is rotation invariant with beta = 0 and a = 0.
struct StableJumps {
  StableParams params;
  int dim = 1;
};

using JumpComponent = std::variant<CompoundPoisson, StableJumps>;

enum class JumpKind { None, CompoundPoisson, Stable, Sum };

class LevyModel {
 public:
  LevyModel() = default;
  LevyModel(Vec drift, Mat gaussian, std::vector<JumpComponent> jumps = {});

  static LevyModel brownian(double variance, double drift = 0.0);
  static LevyModel brownian(const Mat& cov);
  static LevyModel stable_1d(const StableParams& p);
  static LevyModel stable_isotropic(int dim, double alpha, double c);
  static LevyModel compound_poisson(double rate, JumpLaw law, Vec drift = Vec());
  //! nu = sum_{n >= 1} n delta_{1/n!}, truncated where 1/n! leaves the double range.
  static LevyModel factorial_series();

  int dim() const { return static_cast<int>(drift_.size()); }
  const Vec& drift() const { return drift_; }
  const Mat& gaussian() const { return gaussian_; }
  const std::vector<JumpComponent>& jumps() const { return jumps_; }
  JumpKind jump_kind() const;

  //! Linear drift coefficient of psi (model drift plus stable drifts).
  Vec total_drift() const;
  //! Gaussian covariance including alpha = 2 stable parts (psi = -c|z|^2 -> 2c I).
  Mat effective_gaussian() const;
  bool has_stable(double* alpha_min = nullptr) const;
  bool has_compound_poisson() const;
  //! Jump parts with genuine Levy measure (alpha < 2 stable or compound Poisson).
  bool has_levy_measure() const;

 private:
  Vec drift_;
  Mat gaussian_;
  std::vector<JumpComponent> jumps_;
};

cplx char_exponent(const LevyModel& model, const Vec& z);
//! psi minus its linear drift term.
cplx char_exponent_natural(const LevyModel& model, const Vec& z);

// Projected Levy-measure functionals, divided by r^2 so atoms near underflow stay finite.
//! r^{-2} int_{|<v,z>| <= r} <v,z>^2 nu(dz)
double truncated_second_moment_scaled(const LevyModel& model, const Vec& v, double r);
//! r^{-2} int min(<v,z>^2, r^2) nu(dz)
double capped_second_moment_scaled(const LevyModel& model, const Vec& v, double r);

enum class ConditionName {
  LogMoment,
  OreyMasuda,
  Kallenberg,
  BodnarchukKulyk1d,
  BodnarchukKulykMultiD,
  NecessaryBound,
  HypothesisH
};
enum class Verdict { PassNumeric, FailNumeric, Inconclusive };

//! Numeric evidence at probe scale; never a proof.
struct ConditionReport {
  ConditionName name;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::pair<double, double>> evidence;
  std::string note;
};

std::string to_string(ConditionName n);
std::string to_string(Verdict v);

ConditionReport has_log_moment(const LevyModel& model);

ConditionReport check_orey_masuda(const LevyModel& model, double alpha, double c,
                                  const std::vector<Vec>& probe_dirs,
                                  const std::vector<double>& radii);

enum class SmallJumpVariant { Kallenberg, BK1d, BKmulti, NecessaryBound };

struct DivergenceOptions {
  double threshold = 0.25;
  int min_points = 9;
};

//! Directions default to the coordinate axes plus a fixed set of unit vectors.
ConditionReport check_small_jump_activity(const LevyModel& model,
                                          const std::vector<double>& r_grid,
                                          SmallJumpVariant variant,
                                          const std::vector<Vec>& directions = {},
                                          const DivergenceOptions& opt = {});

//! Deterministic probe directions on the unit sphere.
std::vector<Vec> probe_directions(int dim, int count);

}  // namespace oulcut
