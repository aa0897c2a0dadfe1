// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include "blindrx/encoder.hpp"
#include "blindrx/priors.hpp"
#include "blindrx/random.hpp"
#include "blindrx/types.hpp"

namespace blindrx {

/// Exponential noise levels sigma_j = sigma_1 (sigma_J / sigma_1)^{j/J} for
/// j >= 1, with sigma_0 = 0.
struct NoiseSchedule {
  double sigma_min = 0.01;   // sigma_1
  double sigma_max = 100.0;  // sigma_J
  int steps = 30;            // J

  void validate() const;
};

double schedule_value(const NoiseSchedule& s, int j);

inline constexpr double kInfinitePrecision = std::numeric_limits<double>::infinity();

/// Precision of the step-j variational Gaussian. Infinite at j = 0.
double precision(const NoiseSchedule& s, int j);

struct Precisions {
  double h = 0;
  double d = 0;
  bool deterministic() const { return std::isinf(h) && std::isinf(d); }
};

Precisions precisions(const NoiseSchedule& s_h, const NoiseSchedule& s_d, int j);

struct PvdConfig {
  NoiseSchedule schedule_h;
  NoiseSchedule schedule_d;
  int inner_iterations = 20;  // J_in
  int samples = 1;            // L
  double zeta_h = 0.1;
  double zeta_d = 0.1;
  /// Chain likelihood gradients through the exact Tweedie Jacobian; identity otherwise.
  bool chain_through_score = true;
  std::size_t probes = 8;
  std::size_t exact_threshold = kExactJacobianThreshold;

  void validate() const;
};

/// Latents of one user at the current reverse step.
struct UserLatents {
  ComplexVector h_mean;    // \hat H_j, free entries
  ComplexVector h_anchor;  // H_{j+1}
  RealVector d_mean;       // \hat D_j
  RealVector d_anchor;     // D_{j+1}
};

struct PvdState {
  int step = 0;  // j
  Precisions lambda;
  std::vector<UserLatents> users;
};

struct UserSample {
  ComplexVector h;
  RealVector d;
};

/// H_j ~ CN(mean, 1/Lambda_H) entrywise, D_j ~ N(mean, 1/Lambda_D). Infinite
/// precision returns the means.
std::vector<UserSample> sample_variational(const PvdState& state, Rng& rng);

struct TweedieEstimate {
  ComplexVector h;
  RealVector d;
};

/// MMSE estimates \hat H_{0|j} = H_j + sigma^2 S(H_j, sigma) and likewise for D.
TweedieEstimate tweedie(const ChannelPrior& prior_h, const SourcePrior& prior_d,
                        const ComplexVector& h_j, const RealVector& d_j, double sigma_h,
                        double sigma_d);

/// Error variances sigma^2 + sigma^4 tr(score Hessian) / dim, clamped to [0, sigma^2].
std::pair<double, double> error_variances(const ChannelPrior& prior_h, const SourcePrior& prior_d,
                                          const ComplexVector& h_j, const RealVector& d_j,
                                          double sigma_h, double sigma_d);

/// Expected per-entry power of the aggregated estimation noise
///   (var_h N_r ||f(d)||^2 + var_d ||H J||^2 + var_h var_d N_r ||J||^2) / (N_r K T)
/// with J the encoder Jacobian at d.
double aggregated_noise_variance(const Encoder& enc, const ComplexVector& h0, const RealVector& d0,
                                 double var_h, double var_d, const MimoDims& dims,
                                 std::size_t probes, Rng& rng,
                                 std::size_t exact_threshold = kExactJacobianThreshold);

/// ||H J||_F^2 for the composite map d -> H_0 J d.
double composite_jacobian_frobenius2(const Encoder& enc, const ComplexVector& h0,
                                     const RealVector& d0, const MimoDims& dims,
                                     std::size_t probes, Rng& rng,
                                     std::size_t exact_threshold = kExactJacobianThreshold);

struct UserGradient {
  ComplexVector h;  // conjugate-Wirtinger, free entries
  RealVector d;
};

/// Gradients of -||Y - sum_i H_i f_i(D_i)||_F^2 / (noise_agg + noise_var) with
/// respect to each user's Tweedie estimates (identity chaining).
std::vector<UserGradient> likelihood_scores(const ComplexMatrix& y,
                                            const std::vector<EncoderPtr>& encoders,
                                            const std::vector<TweedieEstimate>& estimates,
                                            double noise_agg, double noise_var,
                                            const MimoDims& dims);

/// Pulls a gradient with respect to the Tweedie estimate back to the latent x.
template <typename Scalar>
typename ScorePrior<Scalar>::Vector chain_through_tweedie(
    const ScorePrior<Scalar>& prior, const typename ScorePrior<Scalar>::Vector& x, double sigma,
    const typename ScorePrior<Scalar>::Vector& g) {
  if (sigma == 0.0) return g;
  return g + (sigma * sigma) * prior.score_jacobian_apply(x, sigma, g);
}

/// Transition scores (H_{j+1} - H_j) / (sigma^2_{j+1} - sigma^2_j) and likewise for D.
UserGradient transition_scores(const ComplexVector& h_next, const ComplexVector& h_j,
                               const RealVector& d_next, const RealVector& d_j,
                               const NoiseSchedule& s_h, const NoiseSchedule& s_d, int j);

/// Step sizes zeta (sigma^2_{j+1} - sigma^2_j).
std::pair<double, double> step_sizes(const PvdConfig& cfg, int j);

/// mean <- mean + eps * score, per user.
void update_means(PvdState& state, const std::vector<UserGradient>& averaged_scores, double eps_h,
                  double eps_d);

struct StepDiagnostics {
  int step = 0;
  double sigma_h = 0;
  double sigma_d = 0;
  double residual = 0;
  double noise_agg = 0;
  double grad_norm_h = 0;
  double grad_norm_d = 0;
};

struct RecoveryResult {
  std::vector<ComplexVector> h;  // \hat H_0 per user, free entries
  std::vector<RealVector> d;     // \hat D_0 per user
  double residual = 0;
  double initial_residual = 0;
  std::vector<StepDiagnostics> trace;
};

/// Residual ||Y - sum_i H_i f_i(D_i)||_F.
double residual_norm(const ComplexMatrix& y, const std::vector<EncoderPtr>& encoders,
                     const std::vector<ComplexVector>& h, const std::vector<RealVector>& d,
                     const MimoDims& dims);

/// Reverse process from step J-1 down to 0 for all users jointly. Throws
/// NumericalError carrying the step index if any mean turns non-finite.
RecoveryResult run_pvd(const ComplexMatrix& y, const std::vector<EncoderPtr>& encoders,
                       const ChannelPrior& prior_h, const SourcePrior& prior_d,
                       const MimoDims& dims, const PvdConfig& cfg, Rng& rng);

/// Single-user convenience form.
RecoveryResult run_pvd(const ComplexMatrix& y, const EncoderPtr& encoder,
                       const ChannelPrior& prior_h, const SourcePrior& prior_d,
                       const MimoDims& dims, const PvdConfig& cfg, Rng& rng);

void write_diagnostics_csv(const std::vector<StepDiagnostics>& trace, std::ostream& out);

}  // namespace blindrx
