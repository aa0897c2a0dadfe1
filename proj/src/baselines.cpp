// SPDX-License-Identifier: Apache-2.0
#include "blindrx/baselines.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace blindrx {

PilotMatrix make_pilots(std::size_t n_t, std::size_t n_p, double power) {
  if (n_t == 0 || n_p == 0) throw DomainError("make_pilots: N_t and N_p must be >= 1");
  if (!(power > 0.0)) throw DomainError("make_pilots: power must be > 0");
  PilotMatrix p{ComplexMatrix(n_t, n_p), n_p};
  const double amp = std::sqrt(power);
  for (std::size_t r = 0; r < n_t; ++r)
    for (std::size_t c = 0; c < n_p; ++c) {
      // r*c mod N_p keeps the phase argument small and exact.
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((r * c) % n_p) /
                           static_cast<double>(n_p);
      p.x(r, c) = amp * cd(std::cos(phase), std::sin(phase));
    }
  return p;
}

ComplexMatrix repeat_pilots(const ComplexMatrix& x_p, std::size_t k) {
  ComplexMatrix out(x_p.rows() * k, x_p.cols());
  for (std::size_t b = 0; b < k; ++b) out.middleRows(b * x_p.rows(), x_p.rows()) = x_p;
  return out;
}

namespace {

// Rows of block b of every user's signal, stacked user by user.
ComplexMatrix stacked_block(const std::vector<ComplexMatrix>& signals, std::size_t n_t,
                            std::size_t b) {
  const Eigen::Index cols = signals.front().cols();
  ComplexMatrix x(n_t * signals.size(), cols);
  for (std::size_t u = 0; u < signals.size(); ++u) {
    if (signals[u].cols() != cols) throw ShapeError("lmmse: users disagree on column count");
    x.middleRows(u * n_t, n_t) = signals[u].middleRows(b * n_t, n_t);
  }
  return x;
}

std::size_t block_count(const ComplexMatrix& y, const std::vector<ComplexMatrix>& signals,
                        std::size_t n_r, std::size_t n_t) {
  if (signals.empty()) throw ShapeError("lmmse: no users");
  if (n_r == 0 || y.rows() % static_cast<Eigen::Index>(n_r) != 0)
    throw ShapeError("lmmse: Y rows are not a multiple of N_r");
  const std::size_t k = y.rows() / n_r;
  for (const auto& s : signals)
    if (static_cast<std::size_t>(s.rows()) != n_t * k || s.cols() != y.cols())
      throw ShapeError("lmmse: signal must be N_t K x cols(Y)");
  return k;
}

MultiUserChannel split_users(const std::vector<ComplexMatrix>& stacked_blocks, std::size_t n_users,
                             std::size_t n_r, std::size_t n_t) {
  MultiUserChannel out(n_users, BlockFadingChannel{n_r, n_t, {}});
  for (const auto& hb : stacked_blocks)
    for (std::size_t u = 0; u < n_users; ++u) out[u].blocks.push_back(hb.middleCols(u * n_t, n_t));
  return out;
}

}  // namespace

MultiUserChannel lmmse_blocks(const ComplexMatrix& y, const std::vector<ComplexMatrix>& signals,
                              std::size_t n_r, std::size_t n_t, const ComplexMatrix& r_tx,
                              double noise_var) {
  const std::size_t k = block_count(y, signals, n_r, n_t);
  const std::size_t width = n_t * signals.size();
  if (static_cast<std::size_t>(r_tx.rows()) != width || r_tx.cols() != r_tx.rows())
    throw ShapeError("lmmse: transmit covariance must be N_u N_t square");
  if (!(noise_var >= 0.0)) throw DomainError("lmmse: noise variance must be >= 0");
  std::vector<ComplexMatrix> blocks;
  blocks.reserve(k);
  for (std::size_t b = 0; b < k; ++b) {
    const ComplexMatrix x = stacked_block(signals, n_t, b);
    const ComplexMatrix normal =
        r_tx * (x * x.adjoint()) + noise_var * ComplexMatrix::Identity(width, width);
    Eigen::FullPivLU<ComplexMatrix> lu(normal);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw DomainError("lmmse: singular normal matrix in block " + std::to_string(b));
    const ComplexMatrix yk = y.middleRows(b * n_r, n_r);
    blocks.push_back((yk * x.adjoint()) * lu.solve(r_tx));
  }
  return split_users(blocks, signals.size(), n_r, n_t);
}

BlockFadingChannel lmmse_channel(const ComplexMatrix& y_p, const ComplexMatrix& x_p, std::size_t n_r,
                                 double var_h, double noise_var) {
  if (!(var_h > 0.0)) throw DomainError("lmmse: prior variance must be > 0");
  if (n_r == 0 || y_p.rows() % static_cast<Eigen::Index>(n_r) != 0)
    throw ShapeError("lmmse: Y_p rows are not a multiple of N_r");
  const std::size_t k = y_p.rows() / n_r;
  const std::size_t n_t = x_p.rows();
  const ComplexMatrix r_tx = var_h * ComplexMatrix::Identity(n_t, n_t);
  return lmmse_blocks(y_p, {repeat_pilots(x_p, k)}, n_r, n_t, r_tx, noise_var).front();
}

MultiUserChannel oracle_lmmse(const ComplexMatrix& y, const std::vector<ComplexMatrix>& x_true,
                              std::size_t n_r, std::size_t n_t, double var_h, double noise_var) {
  if (!(var_h > 0.0)) throw DomainError("lmmse: prior variance must be > 0");
  const std::size_t width = n_t * x_true.size();
  return lmmse_blocks(y, x_true, n_r, n_t, var_h * ComplexMatrix::Identity(width, width), noise_var);
}

MultiUserChannel least_squares_blocks(const ComplexMatrix& y, const std::vector<ComplexMatrix>& signals,
                                      std::size_t n_r, std::size_t n_t) {
  const std::size_t k = block_count(y, signals, n_r, n_t);
  std::vector<ComplexMatrix> blocks;
  for (std::size_t b = 0; b < k; ++b) {
    const ComplexMatrix x = stacked_block(signals, n_t, b);
    const ComplexMatrix yk = y.middleRows(b * n_r, n_r);
    // H X = Y  <=>  X^T H^T = Y^T
    const ComplexMatrix ht = x.transpose().completeOrthogonalDecomposition().solve(yk.transpose());
    blocks.push_back(ht.transpose());
  }
  return split_users(blocks, signals.size(), n_r, n_t);
}

std::vector<RealVector> two_stage_decode(const ComplexMatrix& y_d, const MultiUserChannel& h_est,
                                         const std::vector<EncoderPtr>& encoders,
                                         const SourceGaussianPrior& prior, double noise_var) {
  if (h_est.size() != encoders.size() || encoders.empty())
    throw ShapeError("two_stage_decode: one channel per encoder required");
  if (!(noise_var >= 0.0)) throw DomainError("two_stage_decode: noise variance must be >= 0");
  const std::size_t n = prior.dim();
  const Eigen::Index obs = y_d.size();

  // Columns of the composite real-input map, all users side by side.
  ComplexMatrix m(obs, n * encoders.size());
  for (std::size_t u = 0; u < encoders.size(); ++u) {
    const auto* lin = dynamic_cast<const LinearEncoder*>(encoders[u].get());
    if (!lin) throw UnsupportedError("two_stage_decode: only linear encoders have a closed form");
    if (lin->input_dim() != n) throw ShapeError("two_stage_decode: encoder/prior dimension mismatch");
    RealVector e = RealVector::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      e(i) = 1.0;
      const ComplexMatrix col = apply_channel(h_est[u], lin->encode(e));
      if (col.rows() != y_d.rows() || col.cols() != y_d.cols())
        throw ShapeError("two_stage_decode: Y_d shape does not match channel and encoder");
      m.col(u * n + i) = Eigen::Map<const ComplexVector>(col.data(), col.size());
      e(i) = 0.0;
    }
  }
  const Eigen::Index width = m.cols();
  RealMatrix mr(2 * obs, width);
  mr << m.real(), m.imag();
  const ComplexVector yv = Eigen::Map<const ComplexVector>(y_d.data(), obs);
  RealVector yr(2 * obs);
  yr << yv.real(), yv.imag();
  RealVector mean(width);
  for (std::size_t u = 0; u < encoders.size(); ++u) mean.segment(u * n, n) = prior.mean();

  // Real noise per coordinate has variance noise_var / 2.
  const RealVector innovation = yr - mr * mean;
  RealVector delta;
  if (noise_var > 0.0) {
    const double ridge = noise_var / (2.0 * prior.variance());
    const RealMatrix normal = mr.transpose() * mr + ridge * RealMatrix::Identity(width, width);
    delta = normal.ldlt().solve(mr.transpose() * innovation);
  } else {
    // Noiseless limit: minimum-norm correction of the prior mean.
    delta = mr.completeOrthogonalDecomposition().solve(innovation);
  }
  const RealVector d = mean + delta;
  std::vector<RealVector> out;
  for (std::size_t u = 0; u < encoders.size(); ++u) out.push_back(d.segment(u * n, n));
  return out;
}

RealVector two_stage_decode(const ComplexMatrix& y_d, const BlockFadingChannel& h_est,
                            const EncoderPtr& encoder, const SourceGaussianPrior& prior,
                            double noise_var) {
  return two_stage_decode(y_d, MultiUserChannel{h_est}, {encoder}, prior, noise_var).front();
}

}  // namespace blindrx
