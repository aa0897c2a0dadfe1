// SPDX-License-Identifier: Apache-2.0
#include "blindrx/encoder.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace blindrx {

namespace {

ComplexMatrix reshape(const ComplexVector& v, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const ComplexMatrix>(v.data(), rows, cols);
}

ComplexVector flat(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

void check_matrix(const ComplexMatrix& a, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || a.cols() == 0)
    throw ShapeError("encoder: empty shape");
  if (static_cast<std::size_t>(a.rows()) != rows * cols)
    throw ShapeError("encoder: matrix has " + std::to_string(a.rows()) + " rows, expected " +
                     std::to_string(rows * cols));
}

}  // namespace

void Encoder::check_input(const RealVector& d) const {
  if (static_cast<std::size_t>(d.size()) != input_dim())
    throw ShapeError("encoder: source length " + std::to_string(d.size()) + ", expected " +
                     std::to_string(input_dim()));
  if (!d.allFinite()) throw DomainError("encoder: non-finite source");
}

void Encoder::check_output(const ComplexMatrix& c) const {
  if (static_cast<std::size_t>(c.rows()) != signal_rows() ||
      static_cast<std::size_t>(c.cols()) != signal_cols())
    throw ShapeError("encoder: cotangent shape mismatch");
}

LinearEncoder::LinearEncoder(ComplexMatrix a, std::size_t rows, std::size_t cols)
    : a_(std::move(a)), rows_(rows), cols_(cols) {
  check_matrix(a_, rows_, cols_);
}

ComplexMatrix LinearEncoder::encode(const RealVector& d) const {
  check_input(d);
  return reshape(a_ * d.cast<cd>(), rows_, cols_);
}

RealVector LinearEncoder::vjp(const RealVector& d, const ComplexMatrix& cotangent) const {
  check_input(d);
  check_output(cotangent);
  return 2.0 * (a_.adjoint() * flat(cotangent)).real();
}

ComplexMatrix LinearEncoder::jvp(const RealVector& d, const RealVector& direction) const {
  check_input(d);
  if (direction.size() != d.size()) throw ShapeError("jvp: direction length mismatch");
  return reshape(a_ * direction.cast<cd>(), rows_, cols_);
}

SaturatingEncoder::SaturatingEncoder(ComplexMatrix a, double gain, std::size_t rows,
                                     std::size_t cols)
    : a_(std::move(a)), gain_(gain), rows_(rows), cols_(cols) {
  check_matrix(a_, rows_, cols_);
  if (!std::isfinite(gain_) || gain_ <= 0.0) throw DomainError("saturating encoder: gain must be > 0");
}

ComplexMatrix SaturatingEncoder::encode(const RealVector& d) const {
  check_input(d);
  const ComplexVector z = gain_ * (a_ * d.cast<cd>());
  ComplexVector x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    x(i) = cd(std::tanh(z(i).real()), std::tanh(z(i).imag()));
  return reshape(x, rows_, cols_);
}

RealVector SaturatingEncoder::vjp(const RealVector& d, const ComplexMatrix& cotangent) const {
  check_input(d);
  check_output(cotangent);
  const ComplexVector z = gain_ * (a_ * d.cast<cd>());
  const ComplexVector c = flat(cotangent);
  // Back through the elementwise tanh, then through g A restricted to real d.
  Eigen::VectorXd wr(z.size()), wi(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double tr = std::tanh(z(i).real());
    const double ti = std::tanh(z(i).imag());
    wr(i) = (1.0 - tr * tr) * c(i).real();
    wi(i) = (1.0 - ti * ti) * c(i).imag();
  }
  return 2.0 * gain_ * (a_.real().transpose() * wr + a_.imag().transpose() * wi);
}

ComplexMatrix SaturatingEncoder::jvp(const RealVector& d, const RealVector& direction) const {
  check_input(d);
  if (direction.size() != d.size()) throw ShapeError("jvp: direction length mismatch");
  const ComplexVector z = gain_ * (a_ * d.cast<cd>());
  const Eigen::VectorXd vr = a_.real() * direction;
  const Eigen::VectorXd vi = a_.imag() * direction;
  ComplexVector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double tr = std::tanh(z(i).real());
    const double ti = std::tanh(z(i).imag());
    out(i) = gain_ * cd((1.0 - tr * tr) * vr(i), (1.0 - ti * ti) * vi(i));
  }
  return reshape(out, rows_, cols_);
}

PowerNormalizedEncoder::PowerNormalizedEncoder(EncoderPtr base, double power)
    : base_(std::move(base)), power_(power) {
  if (!base_) throw DomainError("power-normalized encoder: null base");
  if (!(power_ > 0.0)) throw DomainError("power-normalized encoder: power must be > 0");
}

ComplexMatrix PowerNormalizedEncoder::encode(const RealVector& d) const {
  const ComplexMatrix g = base_->encode(d);
  const double norm2 = g.squaredNorm();
  if (!(norm2 > 0.0)) throw DomainError("power normalization of a zero signal");
  return std::sqrt(power_ * static_cast<double>(g.size()) / norm2) * g;
}

RealVector PowerNormalizedEncoder::vjp(const RealVector& d, const ComplexMatrix& cotangent) const {
  check_output(cotangent);
  const ComplexMatrix g = base_->encode(d);
  const double norm2 = g.squaredNorm();
  if (!(norm2 > 0.0)) throw DomainError("power normalization of a zero signal");
  const double s = std::sqrt(power_ * static_cast<double>(g.size()) / norm2);
  // vjp is real-linear in the cotangent, so both terms go through one pass.
  const double radial = (g.conjugate().cwiseProduct(cotangent)).sum().real();
  const ComplexMatrix pulled = s * cotangent - (s * radial / norm2) * g;
  return base_->vjp(d, pulled);
}

ComplexMatrix PowerNormalizedEncoder::jvp(const RealVector& d, const RealVector& direction) const {
  const ComplexMatrix g = base_->encode(d);
  const double norm2 = g.squaredNorm();
  if (!(norm2 > 0.0)) throw DomainError("power normalization of a zero signal");
  const double s = std::sqrt(power_ * static_cast<double>(g.size()) / norm2);
  const ComplexMatrix dg = base_->jvp(d, direction);
  const double radial = (g.conjugate().cwiseProduct(dg)).sum().real();
  return s * dg - (s * radial / norm2) * g;
}

ComplexMatrix random_encoder_matrix(std::size_t rows, std::size_t cols, std::size_t n, double power,
                                    Rng& rng) {
  return complex_gaussian(rows * cols, n, power / static_cast<double>(n), rng);
}

ComplexMatrix normalize_power(const ComplexMatrix& x, const MimoDims& dims) {
  if (static_cast<std::size_t>(x.rows()) != dims.signal_rows() ||
      static_cast<std::size_t>(x.cols()) != dims.t)
    throw ShapeError("normalize_power: signal must be N_t K x T");
  const double norm2 = x.squaredNorm();
  if (!(norm2 > 0.0)) throw DomainError("normalize_power: zero signal has no feasible scaling");
  const double target = dims.power * static_cast<double>(x.size());
  if (norm2 == target) return x;
  return std::sqrt(target / norm2) * x;
}

double jacobian_frobenius2(const Encoder& enc, const RealVector& d, std::size_t probes, Rng& rng,
                           std::size_t exact_threshold) {
  const std::size_t n = enc.input_dim();
  if (n * enc.output_size() <= exact_threshold) {
    double total = 0.0;
    RealVector e = RealVector::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      e(i) = 1.0;
      total += enc.jvp(d, e).squaredNorm();
      e(i) = 0.0;
    }
    return total;
  }
  if (probes == 0) throw DomainError("jacobian_frobenius2: probes must be >= 1");
  // E ||2 Re(J^H c)||^2 = 4 ||J||_F^2 for c with independent +-1 real and imaginary parts.
  std::bernoulli_distribution coin(0.5);
  ComplexMatrix c(enc.signal_rows(), enc.signal_cols());
  double total = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double re = coin(rng) ? 1.0 : -1.0;
      const double im = coin(rng) ? 1.0 : -1.0;
      c.data()[i] = cd(re, im);
    }
    total += enc.vjp(d, c).squaredNorm() / 4.0;
  }
  return total / static_cast<double>(probes);
}

void save_encoder(const Encoder& enc, std::ostream& out) {
  const ComplexMatrix* a = nullptr;
  out << "blindrx-encoder 1\n";
  if (const auto* lin = dynamic_cast<const LinearEncoder*>(&enc)) {
    out << "type linear\n";
    a = &lin->matrix();
  } else if (const auto* sat = dynamic_cast<const SaturatingEncoder*>(&enc)) {
    out << "type saturating\n";
    a = &sat->matrix();
  } else {
    throw UnsupportedError("save_encoder: only linear and saturating encoders are serializable");
  }
  out << "shape " << enc.signal_rows() << ' ' << enc.signal_cols() << ' ' << enc.input_dim() << '\n';
  if (const auto* sat = dynamic_cast<const SaturatingEncoder*>(&enc)) {
    std::ostringstream g;
    g.precision(17);
    g << sat->gain();
    out << "gain " << g.str() << '\n';
  }
  std::ostringstream row;
  row.precision(17);
  for (Eigen::Index r = 0; r < a->rows(); ++r) {
    row.str("");
    for (Eigen::Index c = 0; c < a->cols(); ++c) {
      if (c) row << ' ';
      row << (*a)(r, c).real() << ' ' << (*a)(r, c).imag();
    }
    out << row.str() << '\n';
  }
}

void save_encoder(const Encoder& enc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_encoder(enc, out);
}

EncoderPtr load_encoder(std::istream& in) {
  std::string word, type;
  int version = 0;
  if (!(in >> word >> version) || word != "blindrx-encoder" || version != 1)
    throw Error("load_encoder: bad header");
  if (!(in >> word >> type) || word != "type") throw Error("load_encoder: missing type");
  std::size_t rows = 0, cols = 0, n = 0;
  if (!(in >> word >> rows >> cols >> n) || word != "shape") throw Error("load_encoder: missing shape");
  double gain = 1.0;
  if (type == "saturating" && (!(in >> word >> gain) || word != "gain"))
    throw Error("load_encoder: missing gain");
  ComplexMatrix a(rows * cols, n);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      double re = 0, im = 0;
      if (!(in >> re >> im)) throw Error("load_encoder: truncated matrix");
      a(r, c) = cd(re, im);
    }
  if (type == "linear") return std::make_shared<LinearEncoder>(std::move(a), rows, cols);
  if (type == "saturating") return std::make_shared<SaturatingEncoder>(std::move(a), gain, rows, cols);
  throw Error("load_encoder: unknown type '" + type + "'");
}

EncoderPtr load_encoder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_encoder(in);
}

}  // namespace blindrx
