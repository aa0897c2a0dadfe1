// SPDX-License-Identifier: Apache-2.0
#include "blindrx/pvd.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "blindrx/channel.hpp"

namespace blindrx {

namespace {

ComplexMatrix apply_channel_adjoint(const ComplexVector& flat, std::size_t n_r, std::size_t n_t,
                                    const ComplexMatrix& r) {
  const std::size_t per_block = n_r * n_t;
  const std::size_t k = flat.size() / per_block;
  ComplexMatrix out(n_t * k, r.cols());
  for (std::size_t b = 0; b < k; ++b) {
    Eigen::Map<const ComplexMatrix> hb(flat.data() + b * per_block, n_r, n_t);
    out.middleRows(b * n_t, n_t).noalias() = hb.adjoint() * r.middleRows(b * n_r, n_r);
  }
  return out;
}

// Block-diagonal restriction of R X^H, flattened like BlockFadingChannel::flatten.
ComplexVector block_outer(const ComplexMatrix& r, const ComplexMatrix& x, std::size_t n_r,
                          std::size_t n_t, std::size_t k) {
  ComplexVector g(n_r * n_t * k);
  for (std::size_t b = 0; b < k; ++b) {
    ComplexMatrix gb = r.middleRows(b * n_r, n_r) * x.middleRows(b * n_t, n_t).adjoint();
    Eigen::Map<ComplexMatrix>(g.data() + b * n_r * n_t, n_r, n_t) = gb;
  }
  return g;
}

bool finite(const ComplexVector& v) { return v.allFinite(); }

}  // namespace

void NoiseSchedule::validate() const {
  if (steps < 1) throw DomainError("schedule: J must be >= 1");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max))
    throw DomainError("schedule: need 0 < sigma_1 < sigma_J");
}

double schedule_value(const NoiseSchedule& s, int j) {
  if (j < 0 || j > s.steps)
    throw DomainError("schedule: step " + std::to_string(j) + " outside [0, " +
                      std::to_string(s.steps) + "]");
  if (j == 0) return 0.0;
  if (j == s.steps) return s.sigma_max;
  return s.sigma_min *
         std::pow(s.sigma_max / s.sigma_min, static_cast<double>(j) / static_cast<double>(s.steps));
}

double precision(const NoiseSchedule& s, int j) {
  if (j < 0 || j > s.steps - 1)
    throw DomainError("precision: step " + std::to_string(j) + " outside [0, J-1]");
  const double lo = schedule_value(s, j);
  const double hi = schedule_value(s, j + 1);
  const double v_lo = lo * lo;
  const double v_hi = hi * hi;
  if (!(v_hi > v_lo)) throw DomainError("precision: noise levels must increase with j");
  if (v_lo == 0.0) return kInfinitePrecision;
  return v_hi / (v_lo * (v_hi - v_lo));
}

Precisions precisions(const NoiseSchedule& s_h, const NoiseSchedule& s_d, int j) {
  return {precision(s_h, j), precision(s_d, j)};
}

void PvdConfig::validate() const {
  schedule_h.validate();
  schedule_d.validate();
  if (schedule_h.steps != schedule_d.steps)
    throw DomainError("pvd: channel and source schedules must have the same J");
  if (inner_iterations < 1) throw DomainError("pvd: J_in must be >= 1");
  if (samples < 1) throw DomainError("pvd: L must be >= 1");
  if (!(zeta_h > 0.0) || !(zeta_d > 0.0)) throw DomainError("pvd: zeta must be > 0");
  if (probes < 1) throw DomainError("pvd: probes must be >= 1");
}

std::vector<UserSample> sample_variational(const PvdState& state, Rng& rng) {
  std::vector<UserSample> out;
  out.reserve(state.users.size());
  const double var_h = std::isinf(state.lambda.h) ? 0.0 : 1.0 / state.lambda.h;
  const double var_d = std::isinf(state.lambda.d) ? 0.0 : 1.0 / state.lambda.d;
  for (const auto& u : state.users) {
    UserSample s;
    s.h = var_h > 0.0 ? ComplexVector(u.h_mean + complex_gaussian(u.h_mean.size(), var_h, rng))
                      : u.h_mean;
    s.d = var_d > 0.0 ? RealVector(u.d_mean + real_gaussian(u.d_mean.size(), var_d, rng)) : u.d_mean;
    out.push_back(std::move(s));
  }
  return out;
}

TweedieEstimate tweedie(const ChannelPrior& prior_h, const SourcePrior& prior_d,
                        const ComplexVector& h_j, const RealVector& d_j, double sigma_h,
                        double sigma_d) {
  if (!(sigma_h >= 0.0) || !(sigma_d >= 0.0)) throw DomainError("tweedie: sigma must be >= 0");
  TweedieEstimate est;
  est.h = sigma_h == 0.0 ? h_j : ComplexVector(h_j + (sigma_h * sigma_h) * prior_h.first_order(h_j, sigma_h));
  est.d = sigma_d == 0.0 ? d_j : RealVector(d_j + (sigma_d * sigma_d) * prior_d.first_order(d_j, sigma_d));
  return est;
}

std::pair<double, double> error_variances(const ChannelPrior& prior_h, const SourcePrior& prior_d,
                                          const ComplexVector& h_j, const RealVector& d_j,
                                          double sigma_h, double sigma_d) {
  auto one = [](double sigma, double trace, std::size_t dim) {
    const double v = sigma * sigma;
    if (v == 0.0) return 0.0;
    return std::clamp(v + v * v * trace / static_cast<double>(dim), 0.0, v);
  };
  return {one(sigma_h, prior_h.second_order_trace(h_j, sigma_h), prior_h.dim()),
          one(sigma_d, prior_d.second_order_trace(d_j, sigma_d), prior_d.dim())};
}

double composite_jacobian_frobenius2(const Encoder& enc, const ComplexVector& h0,
                                     const RealVector& d0, const MimoDims& dims,
                                     std::size_t probes, Rng& rng, std::size_t exact_threshold) {
  const std::size_t n = enc.input_dim();
  if (n * enc.output_size() <= exact_threshold) {
    double total = 0.0;
    RealVector e = RealVector::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      e(i) = 1.0;
      total += apply_channel(h0, dims.n_r, dims.n_t, enc.jvp(d0, e)).squaredNorm();
      e(i) = 0.0;
    }
    return total;
  }
  if (probes == 0) throw DomainError("composite_jacobian_frobenius2: probes must be >= 1");
  std::bernoulli_distribution coin(0.5);
  ComplexMatrix c(dims.receive_rows(), enc.signal_cols());
  double total = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double re = coin(rng) ? 1.0 : -1.0;
      const double im = coin(rng) ? 1.0 : -1.0;
      c.data()[i] = cd(re, im);
    }
    total += enc.vjp(d0, apply_channel_adjoint(h0, dims.n_r, dims.n_t, c)).squaredNorm() / 4.0;
  }
  return total / static_cast<double>(probes);
}

double aggregated_noise_variance(const Encoder& enc, const ComplexVector& h0, const RealVector& d0,
                                 double var_h, double var_d, const MimoDims& dims,
                                 std::size_t probes, Rng& rng, std::size_t exact_threshold) {
  if (!(var_h >= 0.0) || !(var_d >= 0.0))
    throw DomainError("aggregated_noise_variance: variances must be >= 0");
  const double n_r = static_cast<double>(dims.n_r);
  const double entries = static_cast<double>(dims.receive_rows() * dims.t);
  double total = 0.0;
  if (var_h > 0.0) total += var_h * n_r * enc.encode(d0).squaredNorm();
  if (var_d > 0.0) {
    total += var_d * composite_jacobian_frobenius2(enc, h0, d0, dims, probes, rng, exact_threshold);
    if (var_h > 0.0)
      total += var_h * var_d * n_r * jacobian_frobenius2(enc, d0, probes, rng, exact_threshold);
  }
  return total / entries;
}

double residual_norm(const ComplexMatrix& y, const std::vector<EncoderPtr>& encoders,
                     const std::vector<ComplexVector>& h, const std::vector<RealVector>& d,
                     const MimoDims& dims) {
  ComplexMatrix r = y;
  for (std::size_t u = 0; u < encoders.size(); ++u)
    r -= apply_channel(h[u], dims.n_r, dims.n_t, encoders[u]->encode(d[u]));
  return r.norm();
}

std::vector<UserGradient> likelihood_scores(const ComplexMatrix& y,
                                            const std::vector<EncoderPtr>& encoders,
                                            const std::vector<TweedieEstimate>& estimates,
                                            double noise_agg, double noise_var,
                                            const MimoDims& dims) {
  if (encoders.size() != estimates.size())
    throw ShapeError("likelihood_scores: one estimate per encoder required");
  const double s2 = noise_agg + noise_var;
  if (!(s2 > 0.0)) throw DomainError("likelihood_scores: total noise variance must be > 0");
  std::vector<ComplexMatrix> signals;
  signals.reserve(encoders.size());
  ComplexMatrix r = y;
  for (std::size_t u = 0; u < encoders.size(); ++u) {
    signals.push_back(encoders[u]->encode(estimates[u].d));
    r -= apply_channel(estimates[u].h, dims.n_r, dims.n_t, signals.back());
  }
  r /= s2;
  std::vector<UserGradient> out;
  out.reserve(encoders.size());
  for (std::size_t u = 0; u < encoders.size(); ++u) {
    UserGradient g;
    g.h = block_outer(r, signals[u], dims.n_r, dims.n_t, dims.k);
    g.d = encoders[u]->vjp(estimates[u].d,
                           apply_channel_adjoint(estimates[u].h, dims.n_r, dims.n_t, r));
    out.push_back(std::move(g));
  }
  return out;
}

UserGradient transition_scores(const ComplexVector& h_next, const ComplexVector& h_j,
                               const RealVector& d_next, const RealVector& d_j,
                               const NoiseSchedule& s_h, const NoiseSchedule& s_d, int j) {
  auto gap = [j](const NoiseSchedule& s) {
    const double lo = schedule_value(s, j);
    const double hi = schedule_value(s, j + 1);
    const double g = hi * hi - lo * lo;
    if (!(g > 0.0)) throw DomainError("transition_scores: zero variance gap");
    return g;
  };
  if (j < 0 || j >= s_h.steps) throw DomainError("transition_scores: step outside [0, J-1]");
  return {(h_next - h_j) / gap(s_h), (d_next - d_j) / gap(s_d)};
}

std::pair<double, double> step_sizes(const PvdConfig& cfg, int j) {
  auto gap = [j](const NoiseSchedule& s) {
    const double lo = schedule_value(s, j);
    const double hi = schedule_value(s, j + 1);
    return hi * hi - lo * lo;
  };
  return {cfg.zeta_h * gap(cfg.schedule_h), cfg.zeta_d * gap(cfg.schedule_d)};
}

void update_means(PvdState& state, const std::vector<UserGradient>& averaged_scores, double eps_h,
                  double eps_d) {
  if (averaged_scores.size() != state.users.size())
    throw ShapeError("update_means: one score per user required");
  if (!(eps_h > 0.0) || !(eps_d > 0.0)) throw DomainError("update_means: step sizes must be > 0");
  for (std::size_t u = 0; u < state.users.size(); ++u) {
    state.users[u].h_mean += eps_h * averaged_scores[u].h;
    state.users[u].d_mean += eps_d * averaged_scores[u].d;
  }
}

RecoveryResult run_pvd(const ComplexMatrix& y, const std::vector<EncoderPtr>& encoders,
                       const ChannelPrior& prior_h, const SourcePrior& prior_d,
                       const MimoDims& dims, const PvdConfig& cfg, Rng& rng) {
  dims.validate();
  cfg.validate();
  if (encoders.size() != dims.n_u)
    throw ShapeError("run_pvd: expected " + std::to_string(dims.n_u) + " encoders");
  if (static_cast<std::size_t>(y.rows()) != dims.receive_rows() ||
      static_cast<std::size_t>(y.cols()) != dims.t)
    throw ShapeError("run_pvd: Y must be N_r K x T");
  if (prior_h.dim() != dims.channel_entries())
    throw ShapeError("run_pvd: channel prior must cover N_r N_t K entries");
  if (prior_d.dim() != dims.n) throw ShapeError("run_pvd: source prior must cover n entries");
  for (const auto& enc : encoders) {
    if (!enc || enc->input_dim() != dims.n || enc->signal_rows() != dims.signal_rows() ||
        enc->signal_cols() != dims.t)
      throw ShapeError("run_pvd: encoder shape does not match dims");
  }

  const int big_j = cfg.schedule_h.steps;
  const double sh_top = schedule_value(cfg.schedule_h, big_j);
  const double sh_next = schedule_value(cfg.schedule_h, big_j - 1);
  const double sd_top = schedule_value(cfg.schedule_d, big_j);
  const double sd_next = schedule_value(cfg.schedule_d, big_j - 1);

  PvdState state;
  state.users.resize(dims.n_u);
  for (auto& u : state.users) {
    u.h_anchor = complex_gaussian(dims.channel_entries(), sh_top * sh_top, rng);
    u.h_mean = complex_gaussian(dims.channel_entries(), sh_next * sh_next, rng);
    u.d_anchor = real_gaussian(dims.n, sd_top * sd_top, rng);
    u.d_mean = real_gaussian(dims.n, sd_next * sd_next, rng);
  }

  auto means_h = [&state] {
    std::vector<ComplexVector> v;
    for (const auto& u : state.users) v.push_back(u.h_mean);
    return v;
  };
  auto means_d = [&state] {
    std::vector<RealVector> v;
    for (const auto& u : state.users) v.push_back(u.d_mean);
    return v;
  };

  RecoveryResult result;
  result.initial_residual = residual_norm(y, encoders, means_h(), means_d(), dims);
  result.trace.reserve(big_j);

  const std::size_t n_users = dims.n_u;
  std::vector<UserGradient> acc(n_users);
  std::vector<TweedieEstimate> estimates(n_users);

  for (int j = big_j - 1; j >= 0; --j) {
    state.step = j;
    state.lambda = precisions(cfg.schedule_h, cfg.schedule_d, j);
    const auto [eps_h, eps_d] = step_sizes(cfg, j);
    const double sigma_h = schedule_value(cfg.schedule_h, j);
    const double sigma_d = schedule_value(cfg.schedule_d, j);
    double noise_agg = 0.0;

    for (int it = 0; it < cfg.inner_iterations; ++it) {
      for (auto& a : acc) {
        a.h = ComplexVector::Zero(dims.channel_entries());
        a.d = RealVector::Zero(dims.n);
      }
      for (int l = 0; l < cfg.samples; ++l) {
        const auto samples = sample_variational(state, rng);
        noise_agg = 0.0;
        for (std::size_t u = 0; u < n_users; ++u) {
          estimates[u] = tweedie(prior_h, prior_d, samples[u].h, samples[u].d, sigma_h, sigma_d);
          const auto [var_h, var_d] =
              error_variances(prior_h, prior_d, samples[u].h, samples[u].d, sigma_h, sigma_d);
          noise_agg += aggregated_noise_variance(*encoders[u], estimates[u].h, estimates[u].d,
                                                 var_h, var_d, dims, cfg.probes, rng,
                                                 cfg.exact_threshold);
        }
        const auto lik = likelihood_scores(y, encoders, estimates, noise_agg, dims.noise_var, dims);
        for (std::size_t u = 0; u < n_users; ++u) {
          const auto& s = samples[u];
          const auto trans = transition_scores(state.users[u].h_anchor, s.h, state.users[u].d_anchor,
                                               s.d, cfg.schedule_h, cfg.schedule_d, j);
          if (cfg.chain_through_score) {
            acc[u].h += chain_through_tweedie(prior_h, s.h, sigma_h, lik[u].h);
            acc[u].d += chain_through_tweedie(prior_d, s.d, sigma_d, lik[u].d);
          } else {
            acc[u].h += lik[u].h;
            acc[u].d += lik[u].d;
          }
          acc[u].h += trans.h + prior_h.first_order(s.h, sigma_h);
          acc[u].d += trans.d + prior_d.first_order(s.d, sigma_d);
        }
      }
      if (cfg.samples > 1)
        for (auto& a : acc) {
          a.h /= static_cast<double>(cfg.samples);
          a.d /= static_cast<double>(cfg.samples);
        }
      update_means(state, acc, eps_h, eps_d);
      for (const auto& u : state.users)
        if (!finite(u.h_mean) || !u.d_mean.allFinite())
          throw NumericalError("pvd: non-finite mean at reverse step " + std::to_string(j), j);
    }

    StepDiagnostics diag;
    diag.step = j;
    diag.sigma_h = sigma_h;
    diag.sigma_d = sigma_d;
    diag.noise_agg = noise_agg;
    for (const auto& a : acc) {
      diag.grad_norm_h += a.h.squaredNorm();
      diag.grad_norm_d += a.d.squaredNorm();
    }
    diag.grad_norm_h = std::sqrt(diag.grad_norm_h);
    diag.grad_norm_d = std::sqrt(diag.grad_norm_d);
    diag.residual = residual_norm(y, encoders, means_h(), means_d(), dims);
    if (!std::isfinite(diag.residual))
      throw NumericalError("pvd: non-finite residual at reverse step " + std::to_string(j), j);
    result.trace.push_back(diag);

    // H_j <- \hat H_j; \hat H_{j-1} starts from \hat H_j.
    for (auto& u : state.users) {
      u.h_anchor = u.h_mean;
      u.d_anchor = u.d_mean;
    }
  }

  result.h = means_h();
  result.d = means_d();
  result.residual = result.trace.back().residual;
  return result;
}

RecoveryResult run_pvd(const ComplexMatrix& y, const EncoderPtr& encoder,
                       const ChannelPrior& prior_h, const SourcePrior& prior_d,
                       const MimoDims& dims, const PvdConfig& cfg, Rng& rng) {
  return run_pvd(y, std::vector<EncoderPtr>{encoder}, prior_h, prior_d, dims, cfg, rng);
}

void write_diagnostics_csv(const std::vector<StepDiagnostics>& trace, std::ostream& out) {
  out << "step,sigma_h,sigma_d,residual,noise_agg,grad_norm_h,grad_norm_d\n";
  const auto old = out.precision(12);
  for (const auto& d : trace)
    out << d.step << ',' << d.sigma_h << ',' << d.sigma_d << ',' << d.residual << ','
        << d.noise_agg << ',' << d.grad_norm_h << ',' << d.grad_norm_d << '\n';
  out.precision(old);
}

}  // namespace blindrx
