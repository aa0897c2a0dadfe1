// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "blindrx/random.hpp"
#include "blindrx/types.hpp"

namespace blindrx {

/// K per-block N_r x N_t channel matrices of one user. The compound matrix
/// H_0 is block-diagonal in these blocks and is only built on request.
struct BlockFadingChannel {
  std::size_t n_r = 0;
  std::size_t n_t = 0;
  std::vector<ComplexMatrix> blocks;

  std::size_t k() const { return blocks.size(); }

  /// Free entries, block by block, row-major inside each block.
  ComplexVector flatten() const;
  static BlockFadingChannel from_flat(const ComplexVector& flat, std::size_t n_r, std::size_t n_t,
                                      std::size_t k);
};

/// One channel per user.
using MultiUserChannel = std::vector<BlockFadingChannel>;

/// i.i.d. CN(0,1) entries for every block of every user.
MultiUserChannel draw_rayleigh(const MimoDims& dims, Rng& rng);

/// H_k = R_rx^{1/2} G R_tx^{1/2} with G i.i.d. CN(0,1). Throws DomainError
/// unless both covariances are Hermitian positive semidefinite.
MultiUserChannel draw_kronecker_correlated(const MimoDims& dims, const ComplexMatrix& r_rx,
                                           const ComplexMatrix& r_tx, Rng& rng);

/// Hermitian PSD square root. Throws DomainError for non-Hermitian or
/// indefinite input.
ComplexMatrix psd_sqrt(const ComplexMatrix& r);

/// Materialized block-diagonal H_0 of shape N_r K x N_t K.
ComplexMatrix compound(const BlockFadingChannel& ch);

/// H_0 X evaluated block-wise, X of shape N_t K x T.
ComplexMatrix apply_channel(const BlockFadingChannel& ch, const ComplexMatrix& x);

/// Same as apply_channel with H given as flat free entries.
ComplexMatrix apply_channel(const ComplexVector& flat, std::size_t n_r, std::size_t n_t,
                            const ComplexMatrix& x);

/// Y = sum_i H_0^{(i)} X^{(i)} + N, N i.i.d. CN(0, noise_var).
ComplexMatrix transmit(const MultiUserChannel& channels, const std::vector<ComplexMatrix>& signals,
                       double noise_var, Rng& rng);

/// Noiseless part of transmit().
ComplexMatrix superpose(const MultiUserChannel& channels, const std::vector<ComplexMatrix>& signals);

}  // namespace blindrx
