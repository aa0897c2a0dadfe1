// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include "blindrx/types.hpp"

namespace blindrx {

/// Analytic score prior over a flat vector of free entries.
///
/// For complex domains every score is the conjugate-Wirtinger gradient
/// d/d(conj x) of the log density, and the trace score is the trace of the
/// Wirtinger Hessian d^2/(dx d conj x), i.e. a quarter of the real Laplacian.
/// Smoothing by sigma convolves with N(0, sigma^2) per real entry or
/// CN(0, sigma^2) per complex entry.
template <typename Scalar>
class ScorePrior {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  static constexpr bool kComplex = !std::is_same_v<Scalar, double>;
  /// Real degrees of freedom per free entry.
  static constexpr double kKappa = kComplex ? 2.0 : 1.0;

  virtual ~ScorePrior() = default;

  virtual std::size_t dim() const = 0;
  virtual Vector first_order(const Vector& x, double sigma) const = 0;
  virtual double second_order_trace(const Vector& x, double sigma) const = 0;
  virtual double smoothed_log_density(const Vector& x, double sigma) const = 0;

  /// Applies the (self-adjoint) derivative of first_order() with respect to
  /// x to a gradient g given in the same convention. The adjoint of the
  /// Tweedie map x + sigma^2 S(x) is then g + sigma^2 * score_jacobian_apply.
  virtual Vector score_jacobian_apply(const Vector& x, double sigma, const Vector& g) const = 0;

 protected:
  void check(const Vector& x, double sigma) const {
    if (static_cast<std::size_t>(x.size()) != dim())
      throw ShapeError("prior: input has " + std::to_string(x.size()) + " entries, expected " +
                       std::to_string(dim()));
    if (!(sigma >= 0.0)) throw DomainError("prior: sigma must be >= 0");
  }
};

using ChannelPrior = ScorePrior<cd>;
using SourcePrior = ScorePrior<double>;
using ChannelPriorPtr = std::shared_ptr<const ChannelPrior>;
using SourcePriorPtr = std::shared_ptr<const SourcePrior>;

template <typename Scalar>
class GaussianPrior final : public ScorePrior<Scalar> {
 public:
  using Base = ScorePrior<Scalar>;
  using typename Base::Vector;

  GaussianPrior(Vector mean, double variance) : mean_(std::move(mean)), variance_(variance) {
    if (!(variance_ > 0.0) || !std::isfinite(variance_))
      throw DomainError("gaussian prior: variance must be > 0");
    if (mean_.size() == 0) throw ShapeError("gaussian prior: empty mean");
  }

  std::size_t dim() const override { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  double variance() const { return variance_; }

  Vector first_order(const Vector& x, double sigma) const override {
    this->check(x, sigma);
    return (mean_ - x) / (variance_ + sigma * sigma);
  }

  double second_order_trace(const Vector& x, double sigma) const override {
    this->check(x, sigma);
    return -static_cast<double>(dim()) / (variance_ + sigma * sigma);
  }

  double smoothed_log_density(const Vector& x, double sigma) const override {
    this->check(x, sigma);
    const double v = variance_ + sigma * sigma;
    constexpr double kappa = Base::kKappa;
    return -0.5 * kappa * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi * v / kappa) -
           0.5 * kappa * (x - mean_).squaredNorm() / v;
  }

  Vector score_jacobian_apply(const Vector& x, double sigma, const Vector& g) const override {
    this->check(x, sigma);
    return -g / (variance_ + sigma * sigma);
  }

 private:
  Vector mean_;
  double variance_;
};

/// Mixture of isotropic Gaussians with a shared per-entry variance.
template <typename Scalar>
class GaussianMixturePrior final : public ScorePrior<Scalar> {
 public:
  using Base = ScorePrior<Scalar>;
  using typename Base::Vector;

  GaussianMixturePrior(std::vector<Vector> means, std::vector<double> weights, double variance)
      : means_(std::move(means)), log_weights_(weights.size()), variance_(variance) {
    if (means_.empty() || means_.size() != weights.size())
      throw DomainError("mixture prior: need one positive weight per component");
    if (!(variance_ > 0.0) || !std::isfinite(variance_))
      throw DomainError("mixture prior: variance must be > 0");
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw DomainError("mixture prior: weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("mixture prior: weights must sum to 1");
    for (std::size_t c = 0; c < weights.size(); ++c) {
      if (means_[c].size() != means_.front().size() || means_[c].size() == 0)
        throw ShapeError("mixture prior: component means differ in length");
      log_weights_[c] = std::log(weights[c]);
    }
  }

  std::size_t dim() const override { return static_cast<std::size_t>(means_.front().size()); }
  std::size_t components() const { return means_.size(); }
  const std::vector<Vector>& means() const { return means_; }
  std::vector<double> weights() const {
    std::vector<double> w;
    for (double lw : log_weights_) w.push_back(std::exp(lw));
    return w;
  }
  double variance() const { return variance_; }

  Vector first_order(const Vector& x, double sigma) const override {
    this->check(x, sigma);
    const double v = variance_ + sigma * sigma;
    return (posterior_mean(x, v) - x) / v;
  }

  double second_order_trace(const Vector& x, double sigma) const override {
    this->check(x, sigma);
    const double v = variance_ + sigma * sigma;
    const auto r = responsibilities(x, v);
    const Vector centre = weighted_mean(r);
    double spread = 0.0;
    for (std::size_t c = 0; c < means_.size(); ++c) spread += r[c] * (means_[c] - centre).squaredNorm();
    return -static_cast<double>(dim()) / v + spread / (v * v);
  }

  double smoothed_log_density(const Vector& x, double sigma) const override {
    this->check(x, sigma);
    const double v = variance_ + sigma * sigma;
    constexpr double kappa = Base::kKappa;
    const auto logits = component_logits(x, v);
    const double top = *std::max_element(logits.begin(), logits.end());
    double acc = 0.0;
    for (double l : logits) acc += std::exp(l - top);
    return top + std::log(acc) -
           0.5 * kappa * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi * v / kappa);
  }

  Vector score_jacobian_apply(const Vector& x, double sigma, const Vector& g) const override {
    this->check(x, sigma);
    const double v = variance_ + sigma * sigma;
    const auto r = responsibilities(x, v);
    const Vector centre = weighted_mean(r);
    Vector out = -g / v;
    for (std::size_t c = 0; c < means_.size(); ++c) {
      const Vector delta = means_[c] - centre;
      const double proj = std::real(delta.dot(g));  // Re(delta^H g)
      out += (Base::kKappa * r[c] * proj / (v * v)) * delta;
    }
    return out;
  }

 private:
  std::vector<double> component_logits(const Vector& x, double v) const {
    std::vector<double> logits(means_.size());
    for (std::size_t c = 0; c < means_.size(); ++c)
      logits[c] = log_weights_[c] - 0.5 * Base::kKappa * (x - means_[c]).squaredNorm() / v;
    return logits;
  }

  // Max-subtracted softmax of the component logits.
  std::vector<double> responsibilities(const Vector& x, double v) const {
    auto logits = component_logits(x, v);
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
      l = std::exp(l - top);
      total += l;
    }
    for (double& l : logits) l /= total;
    return logits;
  }

  Vector weighted_mean(const std::vector<double>& r) const {
    Vector m = Vector::Zero(means_.front().size());
    for (std::size_t c = 0; c < means_.size(); ++c) m += r[c] * means_[c];
    return m;
  }

  Vector posterior_mean(const Vector& x, double v) const { return weighted_mean(responsibilities(x, v)); }

  std::vector<Vector> means_;
  std::vector<double> log_weights_;
  double variance_;
};

using ChannelGaussianPrior = GaussianPrior<cd>;
using SourceGaussianPrior = GaussianPrior<double>;
using ChannelMixturePrior = GaussianMixturePrior<cd>;
using SourceMixturePrior = GaussianMixturePrior<double>;

}  // namespace blindrx
