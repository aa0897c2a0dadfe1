// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "blindrx/random.hpp"
#include "blindrx/types.hpp"

namespace blindrx {

/// Deterministic map from a real source vector of length n to a complex
/// N_t K x T signal matrix.
///
/// Gradients over complex quantities follow the conjugate-Wirtinger
/// convention: a cotangent c is dL/d(conj X) for a real loss L, and vjp()
/// returns dL/dd = 2 Re(J^H c) where J is the Jacobian of encode() at d.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t signal_rows() const = 0;
  virtual std::size_t signal_cols() const = 0;

  virtual ComplexMatrix encode(const RealVector& d) const = 0;
  virtual RealVector vjp(const RealVector& d, const ComplexMatrix& cotangent) const = 0;
  /// Directional derivative J v.
  virtual ComplexMatrix jvp(const RealVector& d, const RealVector& direction) const = 0;

  std::size_t output_size() const { return signal_rows() * signal_cols(); }

 protected:
  void check_input(const RealVector& d) const;
  void check_output(const ComplexMatrix& c) const;
};

using EncoderPtr = std::shared_ptr<const Encoder>;

/// X = reshape(A d), A of shape (rows*cols) x n, reshaped row-major.
class LinearEncoder final : public Encoder {
 public:
  LinearEncoder(ComplexMatrix a, std::size_t rows, std::size_t cols);

  std::size_t input_dim() const override { return static_cast<std::size_t>(a_.cols()); }
  std::size_t signal_rows() const override { return rows_; }
  std::size_t signal_cols() const override { return cols_; }

  ComplexMatrix encode(const RealVector& d) const override;
  RealVector vjp(const RealVector& d, const ComplexMatrix& cotangent) const override;
  ComplexMatrix jvp(const RealVector& d, const RealVector& direction) const override;

  const ComplexMatrix& matrix() const { return a_; }

 private:
  ComplexMatrix a_;
  std::size_t rows_;
  std::size_t cols_;
};

/// X = tanh(g Re(A d)) + i tanh(g Im(A d)), elementwise, reshaped row-major.
class SaturatingEncoder final : public Encoder {
 public:
  SaturatingEncoder(ComplexMatrix a, double gain, std::size_t rows, std::size_t cols);

  std::size_t input_dim() const override { return static_cast<std::size_t>(a_.cols()); }
  std::size_t signal_rows() const override { return rows_; }
  std::size_t signal_cols() const override { return cols_; }

  ComplexMatrix encode(const RealVector& d) const override;
  RealVector vjp(const RealVector& d, const ComplexMatrix& cotangent) const override;
  ComplexMatrix jvp(const RealVector& d, const RealVector& direction) const override;

  const ComplexMatrix& matrix() const { return a_; }
  double gain() const { return gain_; }

 private:
  ComplexMatrix a_;
  double gain_;
  std::size_t rows_;
  std::size_t cols_;
};

/// Wraps an encoder so every output meets the average power constraint
/// exactly: f(d) = sqrt(P m) / ||g(d)||_F * g(d), m = rows*cols.
class PowerNormalizedEncoder final : public Encoder {
 public:
  PowerNormalizedEncoder(EncoderPtr base, double power);

  std::size_t input_dim() const override { return base_->input_dim(); }
  std::size_t signal_rows() const override { return base_->signal_rows(); }
  std::size_t signal_cols() const override { return base_->signal_cols(); }

  ComplexMatrix encode(const RealVector& d) const override;
  RealVector vjp(const RealVector& d, const ComplexMatrix& cotangent) const override;
  ComplexMatrix jvp(const RealVector& d, const RealVector& direction) const override;

  const Encoder& base() const { return *base_; }

 private:
  EncoderPtr base_;
  double power_;
};

/// Random encoder matrix with i.i.d. CN(0, power/n) entries, so that a source
/// with unit per-entry second moment yields average power `power`.
ComplexMatrix random_encoder_matrix(std::size_t rows, std::size_t cols, std::size_t n, double power,
                                    Rng& rng);

/// Returns c X with c > 0 such that ||c X||_F^2 / (N_t K T) = P.
/// Throws DomainError for X = 0 and ShapeError when X is not N_t K x T.
ComplexMatrix normalize_power(const ComplexMatrix& x, const MimoDims& dims);

/// Exact column-by-column count used below this many Jacobian entries.
inline constexpr std::size_t kExactJacobianThreshold = 1 << 14;

/// ||J||_F^2 at d. Exact when n * output_size() <= exact_threshold, otherwise a
/// Hutchinson estimate from `probes` complex Rademacher probes through vjp().
double jacobian_frobenius2(const Encoder& enc, const RealVector& d, std::size_t probes, Rng& rng,
                           std::size_t exact_threshold = kExactJacobianThreshold);

// Encoder files are plain text:
//
//   blindrx-encoder 1
//   type <linear|saturating>
//   shape <rows> <cols> <n>
//   gain <g>                  (saturating only)
//   <rows*cols lines of n "re im" pairs: A row-major>
void save_encoder(const Encoder& enc, std::ostream& out);
void save_encoder(const Encoder& enc, const std::string& path);
EncoderPtr load_encoder(std::istream& in);
EncoderPtr load_encoder(const std::string& path);

}  // namespace blindrx
