// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace blindrx {

using cd = std::complex<double>;

/// Dense complex matrix, row-major. Carrier for Y, H, X and N.
using ComplexMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Raised when a reverse-diffusion step produces NaN or Inf.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// System dimensions of a (multi-user) block-fading MIMO link.
struct MimoDims {
  std::size_t n_r = 1;   // receive antennas
  std::size_t n_t = 1;   // transmit antennas per user
  std::size_t k = 1;     // transmission blocks
  std::size_t t = 1;     // slots per block
  std::size_t n_u = 1;   // users
  std::size_t n = 1;     // source dimension
  double power = 1.0;    // average transmit power P
  double noise_var = 0;  // sigma_n^2

  /// Rows of the per-user signal matrix X (N_t K).
  std::size_t signal_rows() const { return n_t * k; }
  /// Rows of the received matrix Y (N_r K).
  std::size_t receive_rows() const { return n_r * k; }
  /// Free complex channel entries per user (N_r N_t K).
  std::size_t channel_entries() const { return n_r * n_t * k; }
  std::size_t signal_entries() const { return n_t * k * t; }

  /// Throws DomainError on the first violated invariant.
  void validate() const;
};

bool all_finite(const ComplexMatrix& m);

}  // namespace blindrx
