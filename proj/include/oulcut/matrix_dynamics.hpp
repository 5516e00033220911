#pragma once

#include "oulcut/levy_models.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace oulcut {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

//! One generalized eigenspace: spectral value, basis (d x k) and nilpotent part (k x k).
struct EigenCluster {
  cplx value;
  int multiplicity = 1;
  std::vector<int> jordan_sizes;  // descending
  CMat basis;
  CMat nilpotent;
};

struct DecayConstants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
};

//! Validated drift matrix Q in M+(d).
class DriftSpectrum {
 public:
  DriftSpectrum() = default;
  //! Throws NotMPlus when the smallest real part is <= 1e-12.
  static DriftSpectrum validate(const Mat& Q);
  static DriftSpectrum scalar(double gamma) { return validate(Mat::Constant(1, 1, gamma)); }

  int dim() const { return static_cast<int>(Q_.rows()); }
  const Mat& Q() const { return Q_; }
  const std::vector<cplx>& eigenvalues() const { return eigenvalues_; }
  const std::vector<EigenCluster>& clusters() const { return clusters_; }
  bool diagonalizable() const;
  double basis_condition() const { return basis_cond_; }
  double cluster_tolerance() const { return cluster_tol_; }
  bool ill_conditioned() const { return basis_cond_ > 1e8; }
  double min_real() const { return min_re_; }
  double max_real() const { return max_re_; }
  //! Q - gamma I is skew-symmetric, so |e^{-tQ^T} x| = e^{-gamma t}|x|.
  bool conformal(double* gamma = nullptr) const;
  //! Coordinates of x in the concatenated generalized eigenbasis.
  CVec coordinates(const Vec& x) const;
  const DecayConstants& decay() const { return decay_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Mat Q_;
  std::vector<cplx> eigenvalues_;
  std::vector<EigenCluster> clusters_;
  CMat basis_;
  Eigen::PartialPivLU<CMat> basis_lu_;
  double basis_cond_ = 1.0;
  double cluster_tol_ = 1e-8;
  double min_re_ = 0, max_re_ = 0;
  DecayConstants decay_;
  std::vector<std::string> warnings_;

  friend DecayConstants decay_constants(const DriftSpectrum&);
};

//! Calibrated c1..c4 with c4 e^{-c2 t}|l| <= |e^{-tQ^T} l| <= c3 e^{-c1 t}|l|.
DecayConstants decay_constants(const DriftSpectrum& spec);

//! e^{-tQ} x (t >= 0).
Vec exp_action(const DriftSpectrum& spec, double t, const Vec& x);
//! e^{-tQ} as a matrix.
Mat exp_matrix(const DriftSpectrum& spec, double t);
//! e^{-tQ^T} x.
Vec exp_action_transpose(const DriftSpectrum& spec, double t, const Vec& x);

struct AsymptoticTerm {
  double omega = 0.0;  // signed frequency: term is e^{i omega t} v
  CVec v;
};

//! e^{-tQ} x0 = sum_j e^{-mu_j t} sum_p t^p w_{j,p}
struct ChainExpansion {
  cplx rate;
  std::vector<CVec> coeffs;
};

struct AsymptoticData {
  double gamma = 0.0;
  int ell = 1;
  int m = 1;
  std::vector<double> thetas;  // omega mod 2 pi, in [0, 2 pi)
  std::vector<AsymptoticTerm> terms;
  CVec v_sum;
  bool oscillatory = false;
  std::vector<ChainExpansion> expansion;
  Vec x0;

  //! sum_k e^{i t omega_k} v_k
  CVec leading(double t) const;
  //! Full Jordan-chain expansion of e^{-tQ} x0.
  Vec expansion_value(double t) const;
  //! ||(e^{gamma t}/t^{ell-1}) e^{-tQ}x0 - leading(t)|| / |leading(t)|
  double leading_residual(const DriftSpectrum& spec, double t) const;
  //! ||e^{-tQ}x0 - expansion_value(t)|| / ||e^{-tQ}x0||
  double expansion_residual(const DriftSpectrum& spec, double t) const;
};

AsymptoticData asymptotic_decomposition(const DriftSpectrum& spec, const Vec& x0);

struct OscillationEnvelope {
  double liminf_est = 0.0;
  double limsup_est = 0.0;
  std::vector<Vec> basin_samples;
};

OscillationEnvelope oscillation_envelope(const AsymptoticData& asym,
                                         const std::vector<double>& t_grid);

//! Lyapunov solve Q X + X Q^T = S.
Mat lyapunov(const Mat& Q, const Mat& S);

}  // namespace oulcut
