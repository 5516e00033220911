#pragma once

#include "oulcut/cutoff_lab.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace oulcut {

class CoercivityViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateLeadingTerm : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

//! One weighted one-dimensional OU component started at x with friction gamma.
struct SuperpositionBlock {
  double m = 0.0;
  double gamma = 1.0;
  double x = 0.0;
  LevyModel model;
};

struct SuperpositionConfig {
  std::vector<SuperpositionBlock> blocks;
  //! declared bounds for the dropped tail of each series, keyed by series name
  std::map<std::string, double> tail_certificates;
  int j_max = 64;

  double weights_total() const;
};

//! Stored-block partial sums of one well-posedness series.
struct SeriesCheck {
  std::string name;
  std::vector<double> partial_sums;
  bool finite = true;
  bool divergence_trend = false;
  double declared_tail = 0.0;
};

struct SuperpositionReport {
  bool pass = false;
  bool coercive = true;
  bool degenerate_leading_term = false;
  double gamma_hat = 0.0;
  std::vector<int> J;  // zero-based indices of the slowest blocks
  double leading_sum = 0.0;  // sum over J of m_j x_j
  double declared_tail_mass = 0.0;
  std::vector<SeriesCheck> series;
  std::vector<std::string> flags;
};

SuperpositionReport validate_superposition(const SuperpositionConfig& config);

struct SuperpositionTriple {
  GeneratingTriple triple;  // Gaussian part carries the eps factor
  double sigma_unscaled = 0.0;  // sum m_j^2 sigma_j / (2 gamma_j) without eps
  std::vector<std::string> flags;
};

SuperpositionTriple superposition_limit_triple(const SuperpositionConfig& config, double eps);

CutoffSchedule superposition_schedule(const SuperpositionConfig& config, double eps);

//! CF of the drift-free superposed invariant functional: product of block CFs at m_j lambda.
CfFunction superposition_natural_cf(const SuperpositionConfig& config,
                                    std::vector<std::shared_ptr<CfEvaluator>>* keep);

TvEstimate superposition_profile(const SuperpositionConfig& config, double c,
                                 ProfileMethod method = ProfileMethod::DensityShift,
                                 const MonteCarloOptions& mc = {});

//! Profile on a c grid sharing one density (density method).
std::vector<TvEstimate> superposition_profile_curve(const SuperpositionConfig& config,
                                                    const std::vector<double>& c_grid);

//! Distance to equilibrium of the superposition at (eps, t) by density inversion.
TvEstimate superposition_distance(const SuperpositionConfig& config, double eps, double t);

struct AverageConfig {
  StableParams stable;
  double gamma = 1.0;
  double x0 = 1.0;
  long n = 1;
  double eps_n = 0.5;

  void validate() const;
};

//! The average of n copies is an OU process driven by the stable law with scale c n^{1-alpha}.
LevyModel average_driving_model(const AverageConfig& cfg);

CutoffSchedule average_schedule(const AverageConfig& cfg);

//! Profile with the strictly stable law of exponent psi_alpha (a = 0) and shift e^{-c} x0.
TvEstimate average_profile(const AverageConfig& cfg, double c);

//! Same shape with the shift multiplied by (alpha gamma)^{1/alpha}: the limit obtained from the
//! exact transition laws.
TvEstimate average_profile_transition_scale(const AverageConfig& cfg, double c);

//! Empirical TV between exact samples of A_t and of the stationary average (paths >= 10^4).
TvEstimate average_distance_mc(const AverageConfig& cfg, double t, long paths,
                               std::uint64_t seed = 1, int workers = 0);

//! Density-method distance for the same pair.
TvEstimate average_distance_density(const AverageConfig& cfg, double t);

}  // namespace oulcut
