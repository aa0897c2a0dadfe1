// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "blindrx/channel.hpp"
#include "blindrx/encoder.hpp"
#include "blindrx/priors.hpp"
#include "blindrx/types.hpp"

namespace blindrx {

/// Pilot symbols of one block: N_t x N_p, rows taken from a scaled DFT matrix.
struct PilotMatrix {
  ComplexMatrix x;
  std::size_t n_p = 0;
};

/// Rows r = 0..N_t-1 of sqrt(P) exp(-2 pi i r c / N_p). Rows are mutually
/// orthogonal with X X^H = N_p P I whenever N_p >= N_t.
PilotMatrix make_pilots(std::size_t n_t, std::size_t n_p, double power);

/// Per-block LMMSE estimate from pilots, i.i.d. CN(0, var_h) prior:
///   H_k = Y_k X^H (X X^H + (noise_var / var_h) I)^{-1}.
/// y_p is N_r K x N_p, x_p is N_t x N_p and is reused in every block.
BlockFadingChannel lmmse_channel(const ComplexMatrix& y_p, const ComplexMatrix& x_p, std::size_t n_r,
                                 double var_h, double noise_var);

/// Generalized per-block LMMSE for one or more users with a known transmit-side
/// covariance r_tx (N_u N_t square, users stacked):
///   H_k = Y_k X_k^H (r_tx X_k X_k^H + noise_var I)^{-1} r_tx.
/// `signals` holds each user's known N_t K x cols matrix. Throws DomainError
/// when the normal matrix is singular.
MultiUserChannel lmmse_blocks(const ComplexMatrix& y, const std::vector<ComplexMatrix>& signals,
                              std::size_t n_r, std::size_t n_t, const ComplexMatrix& r_tx,
                              double noise_var);

/// LMMSE with the true transmitted signal playing the role of the pilot.
MultiUserChannel oracle_lmmse(const ComplexMatrix& y, const std::vector<ComplexMatrix>& x_true,
                              std::size_t n_r, std::size_t n_t, double var_h, double noise_var);

/// Stacks one pilot matrix per block into an N_t K x N_p signal.
ComplexMatrix repeat_pilots(const ComplexMatrix& x_p, std::size_t k);

/// Closed-form linear-Gaussian MMSE of every user's source given Y_d and
/// channel estimates treated as exact. Only LinearEncoder is supported;
/// anything else raises UnsupportedError.
std::vector<RealVector> two_stage_decode(const ComplexMatrix& y_d, const MultiUserChannel& h_est,
                                         const std::vector<EncoderPtr>& encoders,
                                         const SourceGaussianPrior& prior, double noise_var);

RealVector two_stage_decode(const ComplexMatrix& y_d, const BlockFadingChannel& h_est,
                            const EncoderPtr& encoder, const SourceGaussianPrior& prior,
                            double noise_var);

/// Least-squares channel per block (no prior); reference point for LMMSE.
MultiUserChannel least_squares_blocks(const ComplexMatrix& y, const std::vector<ComplexMatrix>& signals,
                                      std::size_t n_r, std::size_t n_t);

}  // namespace blindrx
