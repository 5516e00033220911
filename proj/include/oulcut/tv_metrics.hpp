#pragma once

#include "oulcut/char_engine.hpp"
#include "oulcut/sampler.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace oulcut {

enum class TvMethod { DensityGrid, EmpiricalHistogram };
std::string to_string(TvMethod m);

struct TvEstimate {
  double value = 0.0;
  TvMethod method = TvMethod::DensityGrid;
  double std_error = 0.0;
  double resolution = 0.0;    // lattice spacing or histogram bin width
  double clipped_mass = 0.0;
  double bias = 0.0;          // same-law calibration value (empirical only)
  bool beyond_resolution = false;  // value set to 1 because the shift left the lattice
};

//! Half the L1 distance of two densities on one lattice.
TvEstimate tv_densities(const DensityGrid& f, const DensityGrid& g);

//! TV between f(. - shift) and f, translate by (bi)linear interpolation. Throws OffLattice
//! when the translate leaves the lattice.
TvEstimate tv_shift(const DensityGrid& f, const Vec& shift);

struct EmpiricalTvOptions {
  int bootstrap = 200;
  std::uint64_t seed = 0x7eb0u;
};

//! Histogram estimator on pooled Freedman-Diaconis bins; bootstrap standard error and a
//! half-split same-law bias calibration. Both batches need at least 1000 draws, d <= 3.
TvEstimate tv_empirical(const SampleBatch& xs, const SampleBatch& ys,
                        const EmpiricalTvOptions& opt = {});

//! Translate by whole lattice cells (exact, no interpolation).
DensityGrid lattice_shift(const DensityGrid& f, const std::vector<int>& cells);
//! Density of c X on the lattice scaled by |c| (exact Jacobian transform).
DensityGrid rescale(const DensityGrid& f, double c);
//! Density of X + Y for independent X ~ f, Y ~ g on the same spacing (1D).
DensityGrid convolve(const DensityGrid& f, const DensityGrid& g);
//! Density of -X reflected about the lattice center.
DensityGrid reflect(const DensityGrid& f);

struct AppendixParams {
  Vec a;
  Vec b;
  double scale = 2.0;
  //! shifts for the divergence-to-1 trend; default 2^k lattice cells
  std::vector<double> shift_sequence;
  double tol = 1e-6;
};

struct PropertyItem {
  std::string name;
  double max_violation = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

struct PropertyReport {
  std::vector<PropertyItem> items;
  bool all_pass() const;
};

PropertyReport property_suite_appendix(const DensityGrid& f, const AppendixParams& p);

}  // namespace oulcut
