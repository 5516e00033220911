#pragma once

#include "oulcut/char_engine.hpp"
#include "oulcut/levy_models.hpp"
#include "oulcut/matrix_dynamics.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace oulcut {

//! Reproducible substream: (seed, stream_id) fixes the whole draw sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::mt19937_64& engine() { return engine_; }

  double uniform();           // (0, 1)
  double normal();            // N(0, 1)
  double exponential();       // Exp(1)
  long poisson(double mean);

 private:
  std::uint64_t seed_, stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class Exactness { ExactInLaw, EulerApprox, HorizonApprox };
std::string to_string(Exactness e);

//! Samples stored column-wise (dim x count).
struct SampleBatch {
  Mat values;
  std::string law_tag;
  Exactness exactness = Exactness::ExactInLaw;
  double step = 0.0;     // Euler step or burn-in horizon
  double diagnostic = 0.0;  // max |empirical cf - analytic cf| over probes, when computed

  int dim() const { return static_cast<int>(values.rows()); }
  long size() const { return static_cast<long>(values.cols()); }
};

//! Empirical characteristic function at lambda.
cplx empirical_cf(const SampleBatch& batch, const Vec& lambda);

SampleBatch sample_stable(const StableParams& params, long n, RngStream& rng);
//! Rotation-invariant stable vectors with psi(z) = -c |z|^alpha.
SampleBatch sample_isotropic_stable(int dim, double alpha, double c, long n, RngStream& rng);

//! Whether X_t admits exact transition sampling for this (model, Q).
bool exact_transition_available(const LevyModel& model, const DriftSpectrum& spec);

SampleBatch sample_ou_exact(const LevyModel& model, const DriftSpectrum& spec, double eps,
                            const Vec& x0, double t, long n, RngStream& rng);

//! Jump-adapted Euler scheme; one batch per grid time. Steps above 1/(2 c2) are rejected.
std::vector<SampleBatch> sample_ou_path(const LevyModel& model, const DriftSpectrum& spec,
                                        double eps, const Vec& x0,
                                        const std::vector<double>& t_grid, long n, double step,
                                        RngStream& rng);

SampleBatch sample_invariant(const LevyModel& model, const DriftSpectrum& spec, double eps, long n,
                             RngStream& rng);

//! Splits n draws into fixed blocks of `block` samples, block k drawn from stream (seed, k),
//! run on up to `workers` threads and concatenated in block order.
SampleBatch sample_blocks(long n, std::uint64_t seed, int workers,
                          const std::function<SampleBatch(long, RngStream&)>& draw,
                          long block = 8192);

}  // namespace oulcut
