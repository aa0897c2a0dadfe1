// SPDX-License-Identifier: Apache-2.0
#include "blindrx/channel.hpp"

#include <cmath>
#include <string>

namespace blindrx {

void MimoDims::validate() const {
  if (n_r < 1 || n_t < 1 || k < 1 || t < 1 || n_u < 1 || n < 1)
    throw DomainError("MimoDims: all counts must be >= 1");
  if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("MimoDims: power must be > 0");
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var))
    throw DomainError("MimoDims: noise_var must be >= 0");
}

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const cd v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

ComplexVector BlockFadingChannel::flatten() const {
  ComplexVector flat(blocks.size() * n_r * n_t);
  Eigen::Index pos = 0;
  for (const auto& b : blocks)
    for (std::size_t r = 0; r < n_r; ++r)
      for (std::size_t c = 0; c < n_t; ++c) flat(pos++) = b(r, c);
  return flat;
}

BlockFadingChannel BlockFadingChannel::from_flat(const ComplexVector& flat, std::size_t n_r,
                                                 std::size_t n_t, std::size_t k) {
  if (static_cast<std::size_t>(flat.size()) != n_r * n_t * k)
    throw ShapeError("from_flat: expected " + std::to_string(n_r * n_t * k) + " entries, got " +
                     std::to_string(flat.size()));
  BlockFadingChannel ch{n_r, n_t, {}};
  ch.blocks.reserve(k);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    ComplexMatrix m(n_r, n_t);
    for (std::size_t r = 0; r < n_r; ++r)
      for (std::size_t c = 0; c < n_t; ++c) m(r, c) = flat(pos++);
    ch.blocks.push_back(std::move(m));
  }
  return ch;
}

MultiUserChannel draw_rayleigh(const MimoDims& dims, Rng& rng) {
  dims.validate();
  MultiUserChannel out;
  out.reserve(dims.n_u);
  for (std::size_t u = 0; u < dims.n_u; ++u) {
    BlockFadingChannel ch{dims.n_r, dims.n_t, {}};
    ch.blocks.reserve(dims.k);
    for (std::size_t b = 0; b < dims.k; ++b)
      ch.blocks.push_back(complex_gaussian(dims.n_r, dims.n_t, 1.0, rng));
    out.push_back(std::move(ch));
  }
  return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& r) {
  if (r.rows() != r.cols()) throw DomainError("covariance must be square");
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  if ((r - r.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw DomainError("covariance is not Hermitian");
  const Eigen::MatrixXcd dense = r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) throw DomainError("covariance eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * scale) throw DomainError("covariance is indefinite");
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  const Eigen::MatrixXcd& v = es.eigenvectors();
  return v * ev.asDiagonal() * v.adjoint();
}

MultiUserChannel draw_kronecker_correlated(const MimoDims& dims, const ComplexMatrix& r_rx,
                                           const ComplexMatrix& r_tx, Rng& rng) {
  dims.validate();
  if (static_cast<std::size_t>(r_rx.rows()) != dims.n_r)
    throw ShapeError("R_rx must be N_r x N_r");
  if (static_cast<std::size_t>(r_tx.rows()) != dims.n_t)
    throw ShapeError("R_tx must be N_t x N_t");
  const ComplexMatrix rx_half = psd_sqrt(r_rx);
  const ComplexMatrix tx_half = psd_sqrt(r_tx);
  MultiUserChannel out = draw_rayleigh(dims, rng);
  for (auto& ch : out)
    for (auto& b : ch.blocks) b = rx_half * b * tx_half;
  return out;
}

ComplexMatrix compound(const BlockFadingChannel& ch) {
  const std::size_t k = ch.k();
  ComplexMatrix h0 = ComplexMatrix::Zero(ch.n_r * k, ch.n_t * k);
  for (std::size_t b = 0; b < k; ++b) h0.block(b * ch.n_r, b * ch.n_t, ch.n_r, ch.n_t) = ch.blocks[b];
  return h0;
}

ComplexMatrix apply_channel(const BlockFadingChannel& ch, const ComplexMatrix& x) {
  const std::size_t k = ch.k();
  if (static_cast<std::size_t>(x.rows()) != ch.n_t * k)
    throw ShapeError("apply_channel: signal has " + std::to_string(x.rows()) +
                     " rows, expected N_t K = " + std::to_string(ch.n_t * k));
  ComplexMatrix y(ch.n_r * k, x.cols());
  for (std::size_t b = 0; b < k; ++b)
    y.middleRows(b * ch.n_r, ch.n_r).noalias() = ch.blocks[b] * x.middleRows(b * ch.n_t, ch.n_t);
  return y;
}

ComplexMatrix apply_channel(const ComplexVector& flat, std::size_t n_r, std::size_t n_t,
                            const ComplexMatrix& x) {
  const std::size_t per_block = n_r * n_t;
  if (per_block == 0 || static_cast<std::size_t>(flat.size()) % per_block != 0)
    throw ShapeError("apply_channel: flat channel size is not a multiple of N_r N_t");
  const std::size_t k = flat.size() / per_block;
  if (static_cast<std::size_t>(x.rows()) != n_t * k)
    throw ShapeError("apply_channel: signal rows do not match N_t K");
  ComplexMatrix y(n_r * k, x.cols());
  for (std::size_t b = 0; b < k; ++b) {
    Eigen::Map<const ComplexMatrix> hb(flat.data() + b * per_block, n_r, n_t);
    y.middleRows(b * n_r, n_r).noalias() = hb * x.middleRows(b * n_t, n_t);
  }
  return y;
}

ComplexMatrix superpose(const MultiUserChannel& channels, const std::vector<ComplexMatrix>& signals) {
  if (channels.empty()) throw ShapeError("transmit: no users");
  if (channels.size() != signals.size())
    throw ShapeError("transmit: " + std::to_string(channels.size()) + " channels but " +
                     std::to_string(signals.size()) + " signals");
  const auto& first = channels.front();
  ComplexMatrix y = apply_channel(first, signals.front());
  for (std::size_t u = 1; u < channels.size(); ++u) {
    if (channels[u].n_r != first.n_r || channels[u].k() != first.k())
      throw ShapeError("transmit: users disagree on N_r or K");
    if (signals[u].cols() != signals.front().cols())
      throw ShapeError("transmit: users disagree on T");
    y += apply_channel(channels[u], signals[u]);
  }
  return y;
}

ComplexMatrix transmit(const MultiUserChannel& channels, const std::vector<ComplexMatrix>& signals,
                       double noise_var, Rng& rng) {
  if (!(noise_var >= 0.0)) throw DomainError("transmit: noise variance must be >= 0");
  ComplexMatrix y = superpose(channels, signals);
  y += complex_gaussian(y.rows(), y.cols(), noise_var, rng);
  return y;
}

}  // namespace blindrx
