#pragma once

#include "oulcut/levy_models.hpp"
#include "oulcut/matrix_dynamics.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace oulcut {

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();

using CfFunction = std::function<cplx(const Vec&)>;

//! Characteristic functions of the OU transition law, the drift-free functional and the
//! invariant law for one (model, Q) pair. Caches the Lyapunov solution and log-moment verdict.
class CfEvaluator {
 public:
  CfEvaluator(LevyModel model, DriftSpectrum spec);

  const LevyModel& model() const { return model_; }
  const DriftSpectrum& spec() const { return spec_; }
  int dim() const { return model_.dim(); }
  bool log_moment_ok() const { return log_moment_ok_; }

  //! int_0^t psi_nat(e^{-sQ^T} lambda) ds, t may be kInfiniteHorizon.
  cplx log_inatural(double t, const Vec& lambda) const;
  cplx inatural(double t, const Vec& lambda) const { return std::exp(log_inatural(t, lambda)); }
  //! (I - e^{-tQ}) Q^{-1} a for the total drift a (t may be infinite).
  Vec drift_center(double t) const;
  //! int_0^t e^{-sQ} Sigma e^{-sQ^T} ds.
  Mat gaussian_cov(double t) const;
  cplx transition(double eps, const Vec& x0, double t, const Vec& lambda) const;
  cplx invariant(double eps, const Vec& lambda) const;

  //! CF of the law of X^{(eps)}_t / sqrt(eps) (t may be infinite; x0 ignored then).
  CfFunction scaled_law(double eps, const Vec& x0, double t) const;

  //! e^{-sQ^T} v
  Vec propagate_transpose(double s, const Vec& v) const;

 private:
  cplx quadrature_part(double t, const Vec& lambda) const;

  LevyModel model_;
  DriftSpectrum spec_;
  bool log_moment_ok_ = false;
  bool conformal_ = false;
  double conformal_rate_ = 0.0;
  Mat sigma_inf_;
  Vec drift_inf_;
  bool use_eigen_ = false;
  CMat eig_vectors_, eig_inverse_;
  CVec eig_values_;
  mutable double cached_t_ = -1.0;
  mutable Mat cached_cov_;
};

cplx cf_inatural(const LevyModel& model, const DriftSpectrum& spec, double t, const Vec& lambda);
cplx cf_transition(const LevyModel& model, const DriftSpectrum& spec, double eps, const Vec& x0,
                   double t, const Vec& lambda);
cplx cf_invariant(const LevyModel& model, const DriftSpectrum& spec, double eps,
                  const Vec& lambda);

struct GridMeta {
  std::string model_id;
  std::string q_id;
  double eps = 1.0;
  double t = kInfiniteHorizon;
  bool includes_drift = false;
};

//! Regular lattice in d <= 2: x_j = center + (j - n/2) dx per axis; the dual frequency lattice
//! has spacing 2 pi / (n dx) and half-width lambda_max = pi / dx.
struct LatticePlan {
  int dim = 1;
  int n = 1 << 14;
  double half_width = 1.0;
  Vec center;

  double dx() const { return 2.0 * half_width / n; }
  double lambda_max() const;
  double dlambda() const { return 2.0 * lambda_max() / n; }
};

struct LatticeOptions {
  int n_start = 0;            // 0: 2^14 in 1D, 2^10 in 2D
  int n_max = 0;              // 0: 2^20 in 1D, 2^12 in 2D
  double width_factor = 0.0;  // half-width in units of the widest law scale; 0: 200 / 25
  double spacing_factor = 0.0;  // narrowest law scale per lattice cell; 0: 40 / 20
  double shell_tol = 1e-8;
  int refinements = 2;
};

struct LawScale {
  double narrow = 0.0;  // 1 / largest half-decay frequency
  double wide = 0.0;    // 1 / smallest half-decay frequency
};

//! Scale of a law from the frequencies where |cf| first drops to 1/2 along probe rays.
//! Throws UnderResolved for laws whose |cf| does not drop (point masses, atoms).
LawScale law_scale(const CfFunction& cf, int dim);

//! Lattice shared by several laws; `span` is added to the half-width for separated centers.
//! Throws OffLattice when the required resolution exceeds n_max.
LatticePlan plan_lattice(const std::vector<CfFunction>& cfs, int dim, const Vec& center,
                         double span, const LatticeOptions& opt = {});

struct CharFunctionGrid {
  int dim = 1;
  int n = 0;
  double lambda_max = 0.0;
  std::vector<cplx> values;  // row-major, first axis slowest
  GridMeta meta;

  double dlambda() const { return 2.0 * lambda_max / n; }
  double node(int k) const { return (k - n / 2) * dlambda(); }
  //! max |value| over nodes with sup-norm >= 0.95 lambda_max
  double shell_max() const;
};

struct DensityGrid {
  int dim = 1;
  int n = 0;
  double dx = 0.0;
  Vec center;
  std::vector<double> values;  // row-major, first axis slowest
  double mass = 1.0;
  double pre_clip_mass = 1.0;
  double clipped_mass = 0.0;
  double noise_floor = 0.0;
  double boundary_ratio = 0.0;
  bool under_resolved = false;
  GridMeta meta;

  double half_width() const { return 0.5 * n * dx; }
  double cell_volume() const { return dim == 1 ? dx : dx * dx; }
  double coord(int j, int axis = 0) const { return center[axis] + (j - n / 2) * dx; }
  bool same_lattice(const DensityGrid& o) const;
};

CharFunctionGrid sample_cf(const CfFunction& cf, const LatticePlan& plan, const GridMeta& meta = {});

//! FFT inversion onto the lattice centered at `center` (zero by default). Throws UnderResolved
//! when the outer 5% shell of the CF grid exceeds 1e-8.
DensityGrid invert_to_density(const CharFunctionGrid& grid, const Vec& center = Vec(),
                              double shell_tol = 1e-8);

//! sample_cf + invert_to_density with up to opt.refinements doublings of n on shell failure.
DensityGrid density_from_cf(const CfFunction& cf, LatticePlan plan, const GridMeta& meta = {},
                            const LatticeOptions& opt = {});

enum class PushforwardKind { None, CompoundPoisson, Stable, Mixed };

//! Jump part of a transition or invariant law.
struct Pushforward {
  PushforwardKind kind = PushforwardKind::None;
  //! Transformed stable parameters (one per stable part, when closed form applies).
  std::vector<StableJumps> stable;
  //! g -> int g(y) nu_t(dy) over the compound Poisson image measure.
  std::function<double(const std::function<double(const Vec&)>&)> integrate;
};

struct GeneratingTriple {
  Vec a;
  Mat sigma;
  Pushforward nu;
  double t = 0.0;
  double eps = 1.0;
};

GeneratingTriple generating_triple(const LevyModel& model, const DriftSpectrum& spec,
                                   double eps, const Vec& x0, double t);

ConditionReport check_condition_H(const LevyModel& model, const DriftSpectrum& spec,
                                  const std::vector<double>& R_grid,
                                  const std::function<double(double)>& t0_rule);

enum class SmoothnessRegime { FullRankGaussian, StableTail, RadialKappa, None };
std::string to_string(SmoothnessRegime r);

//! Tail bound -Re psi(lambda) >= constant * kappa(|lambda|) for |lambda| >= 1.
struct RegimeCertificate {
  SmoothnessRegime regime = SmoothnessRegime::None;
  double alpha = 0.0;
  double constant = 0.0;
  std::string kappa_family;
  DecayConstants decay;
  std::vector<std::pair<double, double>> evidence;
  std::string note;
};

RegimeCertificate smoothness_regime(const LevyModel& model, const DriftSpectrum& spec);

}  // namespace oulcut
