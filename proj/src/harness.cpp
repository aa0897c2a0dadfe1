// SPDX-License-Identifier: Apache-2.0
#include "blindrx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>
#include <thread>

#include "blindrx/baselines.hpp"
#include "blindrx/channel.hpp"
#include "blindrx/random.hpp"

namespace blindrx {

namespace {

constexpr std::uint64_t kEncoderTag = 0x454e43;  // "ENC"
constexpr std::uint64_t kSweepTag = 0x535750;    // "SWP"
constexpr double kDivergentZeta = 1e300;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join_violations(const std::vector<Violation>& v) {
  std::ostringstream os;
  os << "invalid configuration";
  for (const auto& x : v) os << "\n  " << (x.path.empty() ? "<root>" : x.path) << ": " << x.message;
  return os.str();
}

std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// ---- config reading -------------------------------------------------------

class Reader {
 public:
  explicit Reader(std::vector<Violation>& out) : out_(out) {}

  void fail(const std::string& path, std::string msg) { out_.push_back({path, std::move(msg)}); }

  bool object(const Json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [k, _] : j.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(child(path, k), "unknown key");
    return true;
  }

  double real(const Json& j, std::string_view key, const std::string& path, double def) {
    if (!j.contains(key)) return def;
    const Json& v = j.at(key);
    if (!v.is_number()) {
      fail(child(path, key), "expected a number");
      return def;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(child(path, key), "must be finite");
    return x;
  }

  std::uint64_t count(const Json& j, std::string_view key, const std::string& path, std::uint64_t def) {
    if (!j.contains(key)) return def;
    const Json& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      const auto x = v.get<std::int64_t>();
      if (x >= 0) return static_cast<std::uint64_t>(x);
      fail(child(path, key), "must be >= 0");
      return def;
    }
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0 && x == std::floor(x) && x < 9.0e15) return static_cast<std::uint64_t>(x);
    }
    fail(child(path, key), "expected a non-negative integer");
    return def;
  }

  bool boolean(const Json& j, std::string_view key, const std::string& path, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) {
      fail(child(path, key), "expected true or false");
      return def;
    }
    return j.at(key).get<bool>();
  }

  std::string string(const Json& j, std::string_view key, const std::string& path, std::string def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) {
      fail(child(path, key), "expected a string");
      return def;
    }
    return j.at(key).get<std::string>();
  }

 private:
  std::vector<Violation>& out_;
};

NoiseSchedule read_schedule(Reader& r, const Json& j, const std::string& path, NoiseSchedule s) {
  if (!r.object(j, path, {"sigma_min", "sigma_max", "steps"})) return s;
  s.sigma_min = r.real(j, "sigma_min", path, s.sigma_min);
  s.sigma_max = r.real(j, "sigma_max", path, s.sigma_max);
  s.steps = static_cast<int>(r.count(j, "steps", path, static_cast<std::uint64_t>(s.steps)));
  return s;
}

std::optional<cd> read_complex(const Json& v) {
  if (v.is_number()) return cd(v.get<double>(), 0.0);
  if (v.is_object() && v.size() == 2 && v.contains("re") && v.contains("im") && v["re"].is_number() &&
      v["im"].is_number())
    return cd(v["re"].get<double>(), v["im"].get<double>());
  return std::nullopt;
}

std::optional<RealVector> read_source_mean(const Json& v, std::size_t n) {
  if (v.is_number()) return RealVector::Constant(n, v.get<double>());
  if (!v.is_array() || v.size() != n) return std::nullopt;
  RealVector m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) return std::nullopt;
    m(i) = v[i].get<double>();
  }
  return m;
}

void check_weights(Reader& r, const std::vector<double>& w, const std::string& path) {
  double total = 0.0;
  for (double x : w) {
    if (!(x > 0.0)) r.fail(path, "component weights must be positive");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) r.fail(path, "component weights must sum to 1");
}

ChannelPriorSpec read_channel_prior(Reader& r, const Json& j, const std::string& path) {
  ChannelPriorSpec s;
  if (!r.object(j, path, {"type", "mean", "variance", "components"})) return s;
  const std::string type = r.string(j, "type", path, "gaussian");
  s.variance = r.real(j, "variance", path, 1.0);
  if (!(s.variance > 0.0)) r.fail(child(path, "variance"), "must be > 0");
  if (type == "gaussian") {
    if (j.contains("components")) r.fail(child(path, "components"), "only valid for a mixture");
    if (j.contains("mean")) {
      const Json& m = j.at("mean");
      if (m == "truth") {
        s.mean_is_truth = true;
      } else if (m == "zero") {
        s.means = {cd{}};
      } else if (auto c = read_complex(m)) {
        s.means = {*c};
      } else {
        r.fail(child(path, "mean"), R"(expected "zero", "truth", a number or {"re","im"})");
      }
    }
  } else if (type == "mixture") {
    s.mixture = true;
    if (j.contains("mean")) r.fail(child(path, "mean"), "a mixture takes its means from components");
    const std::string cp = child(path, "components");
    if (!j.contains("components") || !j.at("components").is_array() || j.at("components").empty()) {
      r.fail(cp, "expected a non-empty array");
      return s;
    }
    s.means.clear();
    s.weights.clear();
    for (std::size_t c = 0; c < j.at("components").size(); ++c) {
      const Json& comp = j.at("components")[c];
      const std::string p = cp + "[" + std::to_string(c) + "]";
      if (!r.object(comp, p, {"mean", "weight"})) continue;
      auto m = comp.contains("mean") ? read_complex(comp.at("mean")) : std::nullopt;
      if (!m) r.fail(child(p, "mean"), R"(expected a number or {"re","im"})");
      s.means.push_back(m.value_or(cd{}));
      s.weights.push_back(r.real(comp, "weight", p, 0.0));
    }
    check_weights(r, s.weights, cp);
  } else {
    r.fail(child(path, "type"), "expected gaussian or mixture");
  }
  return s;
}

SourcePriorSpec read_source_prior(Reader& r, const Json& j, const std::string& path, std::size_t n) {
  SourcePriorSpec s;
  s.means = {RealVector::Zero(n)};
  if (!r.object(j, path, {"type", "mean", "variance", "components"})) return s;
  const std::string type = r.string(j, "type", path, "gaussian");
  s.variance = r.real(j, "variance", path, 1.0);
  if (!(s.variance > 0.0)) r.fail(child(path, "variance"), "must be > 0");
  if (type == "gaussian") {
    if (j.contains("components")) r.fail(child(path, "components"), "only valid for a mixture");
    if (j.contains("mean")) {
      if (auto m = read_source_mean(j.at("mean"), n))
        s.means = {*m};
      else
        r.fail(child(path, "mean"), "expected a number or an array of n numbers");
    }
  } else if (type == "mixture") {
    s.mixture = true;
    if (j.contains("mean")) r.fail(child(path, "mean"), "a mixture takes its means from components");
    const std::string cp = child(path, "components");
    if (!j.contains("components") || !j.at("components").is_array() || j.at("components").empty()) {
      r.fail(cp, "expected a non-empty array");
      return s;
    }
    s.means.clear();
    s.weights.clear();
    for (std::size_t c = 0; c < j.at("components").size(); ++c) {
      const Json& comp = j.at("components")[c];
      const std::string p = cp + "[" + std::to_string(c) + "]";
      if (!r.object(comp, p, {"mean", "weight"})) continue;
      auto m = comp.contains("mean") ? read_source_mean(comp.at("mean"), n) : std::nullopt;
      if (!m) r.fail(child(p, "mean"), "expected a number or an array of n numbers");
      s.means.push_back(m.value_or(RealVector::Zero(n)));
      s.weights.push_back(r.real(comp, "weight", p, 0.0));
    }
    check_weights(r, s.weights, cp);
  } else {
    r.fail(child(path, "type"), "expected gaussian or mixture");
  }
  return s;
}

// ---- dotted paths and linkage ---------------------------------------------

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

const Json* find_path(const Json& root, const std::string& path) {
  const Json* cur = &root;
  for (const auto& p : split_path(path)) {
    if (p.empty() || !cur->is_object() || !cur->contains(p)) return nullptr;
    cur = &cur->at(p);
  }
  return cur;
}

// Numeric leaf in cfg, falling back to the shipped defaults for omitted keys.
const Json* numeric_leaf(const Json& cfg, const std::string& path) {
  static const Json defaults = default_config_json();
  const Json* v = find_path(cfg, path);
  if (!v) v = find_path(defaults, path);
  return (v && v->is_number()) ? v : nullptr;
}

bool integer_field(const std::string& path) {
  static const Json defaults = default_config_json();
  const Json* v = find_path(defaults, path);
  return v && v->is_number_integer();
}

bool set_numeric(Json& cfg, const std::string& path, double value, std::string& err) {
  Json* cur = &cfg;
  const auto parts = split_path(path);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    Json& next = (*cur)[parts[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) {
      err = "path crosses a non-object";
      return false;
    }
    cur = &next;
  }
  if (integer_field(path)) {
    const double r = std::round(value);
    if (std::abs(value - r) > 1e-9 || r < 0) {
      err = "value " + std::to_string(value) + " is not a non-negative integer";
      return false;
    }
    (*cur)[parts.back()] = static_cast<std::uint64_t>(r);
  } else {
    (*cur)[parts.back()] = value;
  }
  return true;
}

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const Json& cfg) : s_(text), cfg_(cfg) {}

  double parse() {
    const double v = sum();
    skip();
    if (pos_ != s_.size()) throw DomainError("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double sum() {
    double v = product();
    for (;;) {
      if (eat('+')) v += product();
      else if (eat('-')) v -= product();
      else return v;
    }
  }
  double product() {
    double v = unary();
    for (;;) {
      if (eat('*')) {
        v *= unary();
      } else if (eat('/')) {
        const double d = unary();
        if (d == 0.0) throw DomainError("division by zero");
        v /= d;
      } else {
        return v;
      }
    }
  }
  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return atom();
  }
  double atom() {
    if (eat('(')) {
      const double v = sum();
      if (!eat(')')) throw DomainError("missing ')'");
      return v;
    }
    skip();
    const std::size_t start = pos_;
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' || s_[pos_] == 'e' ||
              s_[pos_] == 'E' ||
              ((s_[pos_] == '-' || s_[pos_] == '+') && (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
        ++pos_;
      const std::string num(s_.substr(start, pos_ - start));
      std::size_t used = 0;
      const double v = std::stod(num, &used);
      if (used != num.size()) throw DomainError("bad number '" + num + "'");
      return v;
    }
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '.'))
      ++pos_;
    if (start == pos_) throw DomainError("expected a number or a path");
    const std::string path(s_.substr(start, pos_ - start));
    const Json* v = numeric_leaf(cfg_, path);
    if (!v) throw DomainError("'" + path + "' is not a numeric field");
    return v->get<double>();
  }

  std::string_view s_;
  const Json& cfg_;
  std::size_t pos_ = 0;
};

// ---- sampling and construction -------------------------------------------

std::size_t pick_component(const std::vector<double>& weights, Rng& rng) {
  if (weights.size() == 1) return 0;
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return pick(rng);
}

ChannelGaussianPrior moment_matched(const ChannelPriorSpec& s, std::size_t dim) {
  return ChannelGaussianPrior(ComplexVector::Constant(dim, s.means.front()), s.variance);
}

SourceGaussianPrior moment_matched(const SourcePriorSpec& s) {
  RealVector mean = RealVector::Zero(s.means.front().size());
  for (std::size_t c = 0; c < s.means.size(); ++c) mean += s.weights[c] * s.means[c];
  double spread = 0.0;
  for (std::size_t c = 0; c < s.means.size(); ++c) spread += s.weights[c] * (s.means[c] - mean).squaredNorm();
  return SourceGaussianPrior(mean, s.variance + spread / static_cast<double>(mean.size()));
}

EncoderPtr reshaped(const EncoderPtr& enc, std::size_t rows, std::size_t cols) {
  if (const auto* lin = dynamic_cast<const LinearEncoder*>(enc.get()))
    return std::make_shared<LinearEncoder>(lin->matrix(), rows, cols);
  if (const auto* sat = dynamic_cast<const SaturatingEncoder*>(enc.get()))
    return std::make_shared<SaturatingEncoder>(sat->matrix(), sat->gain(), rows, cols);
  throw UnsupportedError("reshape: unknown encoder type");
}

EncoderPtr reshaped_any(const EncoderPtr& enc, std::size_t rows, std::size_t cols, double power) {
  if (const auto* pn = dynamic_cast<const PowerNormalizedEncoder*>(enc.get())) {
    // Rebuild the wrapped base through a non-owning alias of the same object.
    EncoderPtr base(enc, &pn->base());
    return std::make_shared<PowerNormalizedEncoder>(reshaped(base, rows, cols), power);
  }
  return reshaped(enc, rows, cols);
}

BlockFadingChannel constant_channel(cd value, std::size_t n_r, std::size_t n_t, std::size_t k) {
  return BlockFadingChannel::from_flat(ComplexVector::Constant(n_r * n_t * k, value), n_r, n_t, k);
}

std::vector<ComplexVector> flatten_all(const MultiUserChannel& ch) {
  std::vector<ComplexVector> out;
  for (const auto& c : ch) out.push_back(c.flatten());
  return out;
}

ComplexMatrix exponential_correlation(std::size_t size, double rho) {
  ComplexMatrix r(size, size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j)
      r(i, j) = std::pow(rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
  return r;
}

MultiUserChannel draw_channels(const ExperimentConfig& cfg, const MimoDims& dims, Rng& rng) {
  switch (cfg.channel.model) {
    case ChannelModel::rayleigh:
      return draw_rayleigh(dims, rng);
    case ChannelModel::kronecker:
      return draw_kronecker_correlated(dims, exponential_correlation(dims.n_r, cfg.channel.rx_correlation),
                                       exponential_correlation(dims.n_t, cfg.channel.tx_correlation), rng);
    case ChannelModel::prior: {
      MultiUserChannel out;
      for (std::size_t u = 0; u < dims.n_u; ++u)
        out.push_back(BlockFadingChannel::from_flat(
            sample_channel_prior(cfg.prior_h, dims.channel_entries(), rng), dims.n_r, dims.n_t, dims.k));
      return out;
    }
  }
  throw DomainError("unknown channel model");
}

// Channel statistics the baselines are matched to: per-user mean block value
// and the stacked transmit-side covariance.
struct ChannelStatistics {
  cd mean{};
  ComplexMatrix r_tx;
};

ChannelStatistics channel_statistics(const ExperimentConfig& cfg) {
  const std::size_t n_t = cfg.dims.n_t;
  const std::size_t width = n_t * cfg.dims.n_u;
  ChannelStatistics st;
  st.r_tx = ComplexMatrix::Zero(width, width);
  ComplexMatrix block = ComplexMatrix::Identity(n_t, n_t);
  if (cfg.channel.model == ChannelModel::kronecker) block = exponential_correlation(n_t, cfg.channel.tx_correlation);
  if (cfg.channel.model == ChannelModel::prior) {
    st.mean = cfg.prior_h.means.front();
    block *= cfg.prior_h.variance;
  }
  for (std::size_t u = 0; u < cfg.dims.n_u; ++u) st.r_tx.block(u * n_t, u * n_t, n_t, n_t) = block;
  return st;
}

// LMMSE with a possibly nonzero constant prior mean.
MultiUserChannel matched_lmmse(const ExperimentConfig& cfg, const ComplexMatrix& y,
                               const std::vector<ComplexMatrix>& signals, std::size_t k,
                               double noise_var) {
  const auto st = channel_statistics(cfg);
  const std::size_t n_r = cfg.dims.n_r, n_t = cfg.dims.n_t;
  MultiUserChannel means(signals.size(), constant_channel(st.mean, n_r, n_t, k));
  const ComplexMatrix centred = st.mean == cd{} ? y : ComplexMatrix(y - superpose(means, signals));
  MultiUserChannel est = lmmse_blocks(centred, signals, n_r, n_t, st.r_tx, noise_var);
  if (st.mean != cd{})
    for (std::size_t u = 0; u < est.size(); ++u)
      for (std::size_t b = 0; b < k; ++b) est[u].blocks[b] += means[u].blocks[b];
  return est;
}

// Two-stage source decode when the closed form applies; NaN otherwise.
double decoded_source_mse(const ExperimentConfig& cfg, const ComplexMatrix& y, const MultiUserChannel& h,
                          const std::vector<EncoderPtr>& encs, const std::vector<RealVector>& d,
                          double noise_var) {
  for (const auto& e : encs)
    if (!dynamic_cast<const LinearEncoder*>(e.get())) return kNaN;
  const auto prior = moment_matched(cfg.prior_d);
  return source_mse(d, two_stage_decode(y, h, encs, prior, noise_var));
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct ExperimentContext {
  const ExperimentConfig& cfg;
  std::vector<EncoderPtr> encoders;  // empty when drawn per trial
  std::vector<std::string> methods;
};

MetricsRecord base_record(const ExperimentConfig& cfg, std::size_t trial, std::uint64_t seed, double snr,
                          const std::string& method) {
  MetricsRecord r;
  r.trial = trial;
  r.seed = seed;
  r.snr_db = snr;
  r.method = method;
  r.cbr = method == "lmmse" ? cbr(cfg.dims, cfg.dims.t - cfg.methods.n_p) : cbr(cfg.dims);
  r.nmse_db = r.source_mse = r.residual = kNaN;
  return r;
}

void mark_failed(MetricsRecord& r, const std::exception& e) {
  r.error = true;
  r.nmse_db = r.source_mse = r.residual = kNaN;
  r.message = e.what();
}

std::vector<MetricsRecord> run_trial(const ExperimentContext& ctx, std::size_t si, std::size_t trial) {
  const ExperimentConfig& cfg = ctx.cfg;
  const double snr = cfg.snr_db[si];
  const std::uint64_t seed = trial_seed(cfg.seed, si, trial);
  std::vector<MetricsRecord> rows;
  for (const auto& m : ctx.methods) rows.push_back(base_record(cfg, trial, seed, snr, m));
  auto row = [&](const std::string& m) -> MetricsRecord& {
    return *std::find_if(rows.begin(), rows.end(), [&](const MetricsRecord& r) { return r.method == m; });
  };

  MimoDims dims = cfg.dims;
  MultiUserChannel h;
  std::vector<RealVector> d;
  std::vector<EncoderPtr> encs = ctx.encoders;
  std::vector<ComplexMatrix> x;
  ComplexMatrix y;
  try {
    Rng rng_ch(stream_seed(seed, TrialStream::channel));
    Rng rng_src(stream_seed(seed, TrialStream::source));
    Rng rng_noise(stream_seed(seed, TrialStream::noise));
    h = draw_channels(cfg, dims, rng_ch);
    if (encs.empty()) {
      Rng rng_enc(stream_seed(seed, TrialStream::encoder));
      for (std::size_t u = 0; u < dims.n_u; ++u) encs.push_back(make_encoder(cfg, rng_enc));
    }
    for (std::size_t u = 0; u < dims.n_u; ++u) {
      d.push_back(sample_source(cfg.prior_d, rng_src));
      x.push_back(encs[u]->encode(d.back()));
    }
    const double energy = superpose(h, x).squaredNorm();
    dims.noise_var = noise_variance_for_snr(energy, dims.n_r * dims.k * dims.t, snr);
    y = transmit(h, x, dims.noise_var, rng_noise);
  } catch (const std::exception& e) {
    for (auto& r : rows) mark_failed(r, e);
    return rows;
  }
  const auto truth = flatten_all(h);

  if (cfg.methods.pvd) {
    MetricsRecord& r = row("pvd");
    const auto start = Clock::now();
    try {
      PvdConfig pc = cfg.pvd;
      if (std::find(cfg.force_divergence.begin(), cfg.force_divergence.end(), TrialId{si, trial}) !=
          cfg.force_divergence.end())
        pc.zeta_h = pc.zeta_d = kDivergentZeta;
      const ComplexVector* centre = cfg.prior_h.mean_is_truth ? &truth.front() : nullptr;
      const auto prior_h = make_channel_prior(cfg.prior_h, dims.channel_entries(), centre);
      const auto prior_d = make_source_prior(cfg.prior_d);
      Rng rng(stream_seed(seed, TrialStream::pvd));
      const RecoveryResult res = run_pvd(y, encs, *prior_h, *prior_d, dims, pc, rng);
      r.nmse_db = nmse_db(truth, res.h);
      r.source_mse = source_mse(d, res.d);
      r.residual = res.residual;
      if (!cfg.diagnostics_dir.empty()) {
        std::filesystem::create_directories(cfg.diagnostics_dir);
        std::ofstream out(std::filesystem::path(cfg.diagnostics_dir) /
                          ("pvd_snr" + std::to_string(si) + "_trial" + std::to_string(trial) + ".csv"));
        write_diagnostics_csv(res.trace, out);
      }
    } catch (const std::exception& e) {
      mark_failed(r, e);
    }
    if (cfg.timing) r.wall_ms = elapsed_ms(start);
  }

  if (cfg.methods.lmmse) {
    MetricsRecord& r = row("lmmse");
    const auto start = Clock::now();
    try {
      // Same payload, N_p of T slots spent on pilots, so K' = K T / (T - N_p) blocks.
      const std::size_t slots = dims.t - cfg.methods.n_p;
      MimoDims pd = dims;
      pd.k = dims.k * dims.t / slots;
      Rng rng(stream_seed(seed, TrialStream::pilot));
      const MultiUserChannel hp = draw_channels(cfg, pd, rng);
      const PilotMatrix pilots = make_pilots(dims.n_u * dims.n_t, cfg.methods.n_p, dims.power);
      std::vector<ComplexMatrix> xp, xd;
      std::vector<EncoderPtr> data_encs;
      for (std::size_t u = 0; u < dims.n_u; ++u) {
        xp.push_back(repeat_pilots(pilots.x.middleRows(u * dims.n_t, dims.n_t), pd.k));
        data_encs.push_back(reshaped_any(encs[u], dims.n_t * pd.k, slots, dims.power));
        xd.push_back(data_encs.back()->encode(d[u]));
      }
      const ComplexMatrix yp = transmit(hp, xp, dims.noise_var, rng);
      const ComplexMatrix yd = transmit(hp, xd, dims.noise_var, rng);
      const MultiUserChannel est = matched_lmmse(cfg, yp, xp, pd.k, dims.noise_var);
      r.nmse_db = nmse_db(hp, est);
      r.residual = (yp - superpose(est, xp)).norm();
      r.source_mse = decoded_source_mse(cfg, yd, est, data_encs, d, dims.noise_var);
    } catch (const std::exception& e) {
      mark_failed(r, e);
    }
    if (cfg.timing) r.wall_ms = elapsed_ms(start);
  }

  if (cfg.methods.oracle) {
    MetricsRecord& r = row("oracle");
    const auto start = Clock::now();
    try {
      const MultiUserChannel est = matched_lmmse(cfg, y, x, dims.k, dims.noise_var);
      r.nmse_db = nmse_db(h, est);
      r.residual = (y - superpose(est, x)).norm();
      r.source_mse = decoded_source_mse(cfg, y, est, encs, d, dims.noise_var);
    } catch (const std::exception& e) {
      mark_failed(r, e);
    }
    if (cfg.timing) r.wall_ms = elapsed_ms(start);
  }
  return rows;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ConfigError::ConfigError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

Json default_config_json() {
  return Json::parse(R"({
    "dims": {"N_r": 4, "N_t": 1, "K": 1, "T": 16, "N_u": 1, "n": 8, "P": 1.0},
    "channel": {"model": "rayleigh", "rx_correlation": 0.0, "tx_correlation": 0.0},
    "encoder": {"type": "linear", "gain": 1.0, "normalization": "expected", "file": "", "per_trial": false},
    "priors": {
      "channel": {"type": "gaussian", "mean": "zero", "variance": 1.0},
      "source": {"type": "gaussian", "mean": [1, -1, 1, -1, 1, -1, 1, -1], "variance": 0.01}
    },
    "pvd": {
      "enabled": true,
      "schedule_h": {"sigma_min": 0.01, "sigma_max": 100.0, "steps": 30},
      "schedule_d": {"sigma_min": 0.01, "sigma_max": 100.0, "steps": 30},
      "inner_iterations": 20, "samples": 1, "zeta_h": 0.1, "zeta_d": 0.1,
      "chain_through_score": true, "probes": 8, "exact_threshold": 16384
    },
    "baselines": {"lmmse": true, "oracle": true, "n_p": 8},
    "snr_db": [0, 10, 20],
    "trials": 300,
    "seed": 1,
    "output": "results.csv",
    "workers": 1,
    "timing": false,
    "diagnostics": ""
  })");
}

Json apply_linkage(const Json& cfg, std::vector<Violation>& report) {
  Json out = cfg;
  if (!cfg.is_object() || !cfg.contains("linkage")) return out;
  const Json& link = cfg.at("linkage");
  if (!link.is_object()) {
    report.push_back({"linkage", "expected an object of path: expression"});
    return out;
  }
  for (const auto& [target, expr] : link.items()) {
    const std::string p = "linkage." + target;
    if (!expr.is_string()) {
      report.push_back({p, "expected an expression string"});
      continue;
    }
    if (!numeric_leaf(out, target)) {
      report.push_back({p, "target is not a numeric field"});
      continue;
    }
    try {
      const double v = ExpressionParser(expr.get<std::string>(), out).parse();
      std::string err;
      if (!set_numeric(out, target, v, err)) report.push_back({p, err});
    } catch (const std::exception& e) {
      report.push_back({p, e.what()});
    }
  }
  return out;
}

ExperimentConfig parse_config(const Json& raw) {
  std::vector<Violation> v;
  Reader r(v);
  ExperimentConfig cfg;
  const Json j = apply_linkage(raw, v);
  if (!r.object(j, "", {"dims", "channel", "encoder", "priors", "pvd", "baselines", "snr_db", "trials", "seed",
                        "output", "workers", "timing", "diagnostics", "linkage", "fault_injection"}))
    throw ConfigError(v);

  const Json empty = Json::object();
  auto section = [&](const char* key) -> const Json& { return j.contains(key) ? j.at(key) : empty; };

  {
    const Json& s = section("dims");
    if (r.object(s, "dims", {"N_r", "N_t", "K", "T", "N_u", "n", "P"})) {
      cfg.dims.n_r = r.count(s, "N_r", "dims", 4);
      cfg.dims.n_t = r.count(s, "N_t", "dims", 1);
      cfg.dims.k = r.count(s, "K", "dims", 1);
      cfg.dims.t = r.count(s, "T", "dims", 16);
      cfg.dims.n_u = r.count(s, "N_u", "dims", 1);
      cfg.dims.n = r.count(s, "n", "dims", 8);
      cfg.dims.power = r.real(s, "P", "dims", 1.0);
    }
  }
  {
    const Json& s = section("channel");
    if (r.object(s, "channel", {"model", "rx_correlation", "tx_correlation"})) {
      const std::string m = r.string(s, "model", "channel", "rayleigh");
      if (m == "rayleigh") cfg.channel.model = ChannelModel::rayleigh;
      else if (m == "kronecker") cfg.channel.model = ChannelModel::kronecker;
      else if (m == "prior") cfg.channel.model = ChannelModel::prior;
      else r.fail("channel.model", "expected rayleigh, kronecker or prior");
      cfg.channel.rx_correlation = r.real(s, "rx_correlation", "channel", 0.0);
      cfg.channel.tx_correlation = r.real(s, "tx_correlation", "channel", 0.0);
    }
  }
  {
    const Json& s = section("encoder");
    if (r.object(s, "encoder", {"type", "gain", "normalization", "file", "per_trial"})) {
      const std::string t = r.string(s, "type", "encoder", "linear");
      if (t == "linear") cfg.encoder.kind = EncoderKind::linear;
      else if (t == "saturating") cfg.encoder.kind = EncoderKind::saturating;
      else r.fail("encoder.type", "expected linear or saturating");
      cfg.encoder.gain = r.real(s, "gain", "encoder", 1.0);
      const std::string n = r.string(s, "normalization", "encoder", "expected");
      if (n == "none") cfg.encoder.normalization = Normalization::none;
      else if (n == "expected") cfg.encoder.normalization = Normalization::expected;
      else if (n == "per_signal") cfg.encoder.normalization = Normalization::per_signal;
      else r.fail("encoder.normalization", "expected none, expected or per_signal");
      cfg.encoder.file = r.string(s, "file", "encoder", "");
      cfg.encoder.per_trial = r.boolean(s, "per_trial", "encoder", false);
    }
  }
  {
    const Json& s = section("priors");
    if (r.object(s, "priors", {"channel", "source"})) {
      cfg.prior_h = read_channel_prior(r, s.contains("channel") ? s.at("channel") : empty, "priors.channel");
      cfg.prior_d = read_source_prior(r, s.contains("source") ? s.at("source") : empty, "priors.source",
                                      cfg.dims.n);
    }
  }
  {
    const Json& s = section("pvd");
    if (r.object(s, "pvd", {"enabled", "schedule_h", "schedule_d", "inner_iterations", "samples", "zeta_h",
                            "zeta_d", "chain_through_score", "probes", "exact_threshold"})) {
      PvdConfig& p = cfg.pvd;
      cfg.methods.pvd = r.boolean(s, "enabled", "pvd", true);
      if (s.contains("schedule_h")) p.schedule_h = read_schedule(r, s.at("schedule_h"), "pvd.schedule_h", p.schedule_h);
      if (s.contains("schedule_d")) p.schedule_d = read_schedule(r, s.at("schedule_d"), "pvd.schedule_d", p.schedule_d);
      p.inner_iterations = static_cast<int>(r.count(s, "inner_iterations", "pvd", 20));
      p.samples = static_cast<int>(r.count(s, "samples", "pvd", 1));
      p.zeta_h = r.real(s, "zeta_h", "pvd", p.zeta_h);
      p.zeta_d = r.real(s, "zeta_d", "pvd", p.zeta_d);
      p.chain_through_score = r.boolean(s, "chain_through_score", "pvd", true);
      p.probes = r.count(s, "probes", "pvd", 8);
      p.exact_threshold = r.count(s, "exact_threshold", "pvd", kExactJacobianThreshold);
    }
  }
  {
    const Json& s = section("baselines");
    if (r.object(s, "baselines", {"lmmse", "oracle", "n_p"})) {
      cfg.methods.lmmse = r.boolean(s, "lmmse", "baselines", false);
      cfg.methods.oracle = r.boolean(s, "oracle", "baselines", false);
      cfg.methods.n_p = r.count(s, "n_p", "baselines", 1);
    }
  }
  if (j.contains("snr_db")) {
    const Json& s = j.at("snr_db");
    cfg.snr_db.clear();
    if (s.is_number()) {
      cfg.snr_db.push_back(s.get<double>());
    } else if (s.is_array()) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].is_number() && std::isfinite(s[i].get<double>()))
          cfg.snr_db.push_back(s[i].get<double>());
        else
          r.fail("snr_db[" + std::to_string(i) + "]", "expected a finite number");
      }
    } else {
      r.fail("snr_db", "expected a number or an array of numbers");
    }
  }
  cfg.trials = r.count(j, "trials", "", 300);
  cfg.seed = r.count(j, "seed", "", 1);
  cfg.output = r.string(j, "output", "", "results.csv");
  cfg.workers = r.count(j, "workers", "", 1);
  cfg.timing = r.boolean(j, "timing", "", false);
  cfg.diagnostics_dir = r.string(j, "diagnostics", "", "");
  if (j.contains("fault_injection")) {
    const Json& s = j.at("fault_injection");
    if (r.object(s, "fault_injection", {"diverge"}) && s.contains("diverge")) {
      const Json& list = s.at("diverge");
      bool ok = list.is_array();
      for (std::size_t i = 0; ok && i < list.size(); ++i) {
        const Json& e = list[i];
        const auto index = [](const Json& x) { return x.is_number_integer() && x.get<std::int64_t>() >= 0; };
        if (!e.is_array() || e.size() != 2 || !index(e[0]) || !index(e[1])) {
          ok = false;
          break;
        }
        cfg.force_divergence.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
      }
      if (!ok) r.fail("fault_injection.diverge", "expected an array of [snr_index, trial] pairs");
    }
  }

  for (auto& x : validate(cfg)) v.push_back(std::move(x));
  if (!v.empty()) throw ConfigError(v);
  return cfg;
}

std::vector<Violation> validate(const ExperimentConfig& cfg) {
  std::vector<Violation> v;
  auto fail = [&](std::string p, std::string m) { v.push_back({std::move(p), std::move(m)}); };
  const MimoDims& d = cfg.dims;
  if (d.n_r < 1) fail("dims.N_r", "must be >= 1");
  if (d.n_t < 1) fail("dims.N_t", "must be >= 1");
  if (d.k < 1) fail("dims.K", "must be >= 1");
  if (d.t < 1) fail("dims.T", "must be >= 1");
  if (d.n_u < 1) fail("dims.N_u", "must be >= 1");
  if (d.n < 1) fail("dims.n", "must be >= 1");
  if (!(d.power > 0.0)) fail("dims.P", "must be > 0");

  if (cfg.channel.model == ChannelModel::kronecker) {
    if (!(cfg.channel.rx_correlation >= 0.0 && cfg.channel.rx_correlation < 1.0))
      fail("channel.rx_correlation", "must lie in [0, 1)");
    if (!(cfg.channel.tx_correlation >= 0.0 && cfg.channel.tx_correlation < 1.0))
      fail("channel.tx_correlation", "must lie in [0, 1)");
  }

  const EncoderSpec& e = cfg.encoder;
  if (!(e.gain > 0.0)) fail("encoder.gain", "must be > 0");
  if (e.file.empty() && e.kind == EncoderKind::saturating && e.normalization == Normalization::expected)
    fail("encoder.normalization", "expected-power scaling needs a linear encoder; use per_signal or none");
  if (!e.file.empty()) {
    try {
      const EncoderPtr enc = load_encoder(e.file);
      if (enc->input_dim() != d.n || enc->signal_rows() != d.signal_rows() || enc->signal_cols() != d.t)
        fail("encoder.file", "encoder shape does not match N_t K x T with input n");
      if (e.normalization == Normalization::expected && !dynamic_cast<const LinearEncoder*>(enc.get()))
        fail("encoder.normalization", "expected-power scaling needs a linear encoder");
    } catch (const std::exception& ex) {
      fail("encoder.file", ex.what());
    }
    if (e.per_trial) fail("encoder.per_trial", "cannot redraw an encoder loaded from file");
  }

  const ChannelPriorSpec& ph = cfg.prior_h;
  if (ph.mean_is_truth && d.n_u > 1) fail("priors.channel.mean", "\"truth\" needs a single user");
  if (ph.mean_is_truth && cfg.channel.model == ChannelModel::prior)
    fail("priors.channel.mean", "\"truth\" cannot also generate the channel");
  if ((cfg.methods.lmmse || cfg.methods.oracle) && cfg.channel.model == ChannelModel::prior && ph.mixture)
    fail("channel.model", "baselines need a Gaussian channel prior when channels are drawn from it");
  for (const auto& m : cfg.prior_d.means)
    if (static_cast<std::size_t>(m.size()) != d.n) fail("priors.source.mean", "length must equal n");

  const PvdConfig& p = cfg.pvd;
  auto check_schedule = [&](const NoiseSchedule& s, const std::string& path) {
    if (!(s.sigma_min > 0.0)) fail(path + ".sigma_min", "must be > 0");
    if (!(s.sigma_max > s.sigma_min)) fail(path, "sigma_min must be below sigma_max");
    if (s.steps < 1) fail(path + ".steps", "must be >= 1");
  };
  check_schedule(p.schedule_h, "pvd.schedule_h");
  check_schedule(p.schedule_d, "pvd.schedule_d");
  if (p.schedule_h.steps != p.schedule_d.steps) fail("pvd.schedule_d.steps", "must equal pvd.schedule_h.steps");
  if (p.inner_iterations < 1) fail("pvd.inner_iterations", "must be >= 1");
  if (p.samples < 1) fail("pvd.samples", "must be >= 1");
  if (!(p.zeta_h > 0.0)) fail("pvd.zeta_h", "must be > 0");
  if (!(p.zeta_d > 0.0)) fail("pvd.zeta_d", "must be > 0");
  if (p.probes < 1) fail("pvd.probes", "must be >= 1");

  if (!cfg.methods.pvd && !cfg.methods.lmmse && !cfg.methods.oracle)
    fail("baselines", "no method enabled");
  if (cfg.methods.lmmse) {
    if (cfg.methods.n_p < 1 || cfg.methods.n_p >= d.t) fail("baselines.n_p", "must lie in [1, T-1]");
    else if ((d.k * d.t) % (d.t - cfg.methods.n_p) != 0)
      fail("baselines.n_p", "K T must be divisible by T - N_p so the pilot scheme has whole blocks");
  }

  if (cfg.snr_db.empty()) fail("snr_db", "must contain at least one value");
  if (cfg.trials < 1) fail("trials", "must be >= 1");
  if (cfg.workers < 1) fail("workers", "must be >= 1");
  for (const auto& t : cfg.force_divergence)
    if (t.snr_index >= cfg.snr_db.size() || t.trial >= cfg.trials)
      fail("fault_injection.diverge", "trial index out of range");
  return v;
}

std::vector<Violation> validate(const Json& cfg) {
  try {
    parse_config(cfg);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<Violation>{{"", "cannot open " + path}});
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::vector<Violation>{{"", std::string("malformed JSON: ") + e.what()}});
  }
}

void ResultTable::write_csv(std::ostream& out) const {
  write_csv_header(out);
  for (const auto& r : rows) write_csv_row(r, out);
}

void ResultTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_csv(out);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t snr_index, std::size_t trial) {
  return derive_seed(master, {snr_index, trial});
}

std::uint64_t stream_seed(std::uint64_t seed, TrialStream s) {
  return derive_seed(seed, {static_cast<std::uint64_t>(s)});
}

std::uint64_t encoder_seed(std::uint64_t master, std::size_t user) {
  return derive_seed(master, {kEncoderTag, user});
}

double noise_variance_for_snr(double signal_energy, std::size_t entries, double snr_db) {
  if (!(signal_energy > 0.0)) throw DomainError("snr targeting: received signal has zero energy");
  return signal_energy / (static_cast<double>(entries) * std::pow(10.0, snr_db / 10.0));
}

EncoderPtr make_encoder(const ExperimentConfig& cfg, Rng& rng) {
  const MimoDims& d = cfg.dims;
  const EncoderSpec& e = cfg.encoder;
  EncoderPtr enc;
  if (!e.file.empty()) {
    enc = load_encoder(e.file);
  } else {
    ComplexMatrix a = random_encoder_matrix(d.signal_rows(), d.t, d.n, d.power, rng);
    if (e.kind == EncoderKind::linear)
      enc = std::make_shared<LinearEncoder>(std::move(a), d.signal_rows(), d.t);
    else
      enc = std::make_shared<SaturatingEncoder>(std::move(a), e.gain, d.signal_rows(), d.t);
  }
  switch (e.normalization) {
    case Normalization::none:
      return enc;
    case Normalization::per_signal:
      return std::make_shared<PowerNormalizedEncoder>(enc, d.power);
    case Normalization::expected: {
      const auto* lin = dynamic_cast<const LinearEncoder*>(enc.get());
      if (!lin) throw UnsupportedError("expected-power scaling needs a linear encoder");
      const ComplexMatrix& a = lin->matrix();
      // E||A d||^2 = v ||A||_F^2 + sum_c w_c ||A m_c||^2 for real d.
      double power = cfg.prior_d.variance * a.squaredNorm();
      for (std::size_t c = 0; c < cfg.prior_d.means.size(); ++c)
        power += cfg.prior_d.weights[c] * (a * cfg.prior_d.means[c].cast<cd>()).squaredNorm();
      const double target = d.power * static_cast<double>(d.signal_entries());
      return std::make_shared<LinearEncoder>(std::sqrt(target / power) * a, d.signal_rows(), d.t);
    }
  }
  return enc;
}

ChannelPriorPtr make_channel_prior(const ChannelPriorSpec& spec, std::size_t dim, const ComplexVector* truth) {
  if (spec.mean_is_truth) {
    if (!truth) throw DomainError("channel prior centred on the truth needs the true channel");
    return std::make_shared<ChannelGaussianPrior>(*truth, spec.variance);
  }
  if (!spec.mixture) return std::make_shared<ChannelGaussianPrior>(moment_matched(spec, dim));
  std::vector<ComplexVector> means;
  for (const cd& m : spec.means) means.push_back(ComplexVector::Constant(dim, m));
  return std::make_shared<ChannelMixturePrior>(std::move(means), spec.weights, spec.variance);
}

SourcePriorPtr make_source_prior(const SourcePriorSpec& spec) {
  if (!spec.mixture) return std::make_shared<SourceGaussianPrior>(spec.means.front(), spec.variance);
  return std::make_shared<SourceMixturePrior>(spec.means, spec.weights, spec.variance);
}

RealVector sample_source(const SourcePriorSpec& spec, Rng& rng) {
  const std::size_t c = pick_component(spec.weights, rng);
  return spec.means[c] + real_gaussian(spec.means[c].size(), spec.variance, rng);
}

ComplexVector sample_channel_prior(const ChannelPriorSpec& spec, std::size_t dim, Rng& rng) {
  const std::size_t c = pick_component(spec.weights, rng);
  return ComplexVector::Constant(dim, spec.means[c]) + complex_gaussian(dim, spec.variance, rng);
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  if (auto v = validate(cfg); !v.empty()) throw ConfigError(v);
  ExperimentContext ctx{cfg, {}, {}};
  if (cfg.methods.pvd) ctx.methods.push_back("pvd");
  if (cfg.methods.lmmse) ctx.methods.push_back("lmmse");
  if (cfg.methods.oracle) ctx.methods.push_back("oracle");
  if (!cfg.encoder.per_trial)
    for (std::size_t u = 0; u < cfg.dims.n_u; ++u) {
      Rng rng(encoder_seed(cfg.seed, u));
      ctx.encoders.push_back(make_encoder(cfg, rng));
    }

  const std::size_t jobs = cfg.snr_db.size() * cfg.trials;
  std::vector<std::vector<MetricsRecord>> results(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++)
      results[i] = run_trial(ctx, i / cfg.trials, i % cfg.trials);
  };
  const std::size_t n_workers = std::min(cfg.workers, jobs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  ResultTable table;
  table.rows.reserve(jobs * ctx.methods.size());
  for (auto& r : results) table.rows.insert(table.rows.end(), r.begin(), r.end());
  return table;
}

std::vector<SummaryRow> summarize(const ResultTable& table, double value) {
  std::vector<SummaryRow> out;
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& r : table.rows) {
    const auto key = std::make_pair(r.method, r.snr_db);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [method, snr] : keys) {
    SummaryRow s;
    s.value = value;
    s.method = method;
    s.snr_db = snr;
    std::vector<double> nmse, mse, res;
    for (const auto& r : table.rows) {
      if (r.method != method || r.snr_db != snr) continue;
      ++s.rows;
      if (r.error) {
        ++s.errors;
        continue;
      }
      nmse.push_back(r.nmse_db);
      if (!std::isnan(r.source_mse)) mse.push_back(r.source_mse);
      res.push_back(r.residual);
    }
    s.median_nmse_db = median(nmse);
    s.mean_nmse_db = mean(nmse);
    s.median_source_mse = median(mse);
    s.mean_source_mse = mean(mse);
    s.mean_residual = mean(res);
    out.push_back(s);
  }
  return out;
}

SweepResult sweep(const Json& cfg, const std::string& path, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError(std::vector<Violation>{{"values", "sweep needs at least one value"}});
  const bool is_snr = path == "snr_db";
  if (!is_snr && !numeric_leaf(cfg, path)) throw ConfigError(std::vector<Violation>{{path, "unknown or non-numeric parameter path"}});
  if (cfg.contains("linkage") && cfg.at("linkage").is_object() && cfg.at("linkage").contains(path))
    throw ConfigError(std::vector<Violation>{{path, "parameter is the target of a linkage expression"}});
  const std::uint64_t master = parse_config(cfg).seed;

  SweepResult out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Json point = cfg;
    std::string err;
    if (is_snr) {
      point["snr_db"] = Json::array({values[i]});
    } else if (!set_numeric(point, path, values[i], err)) {
      throw ConfigError(std::vector<Violation>{{path, err}});
    }
    if (path != "seed") point["seed"] = derive_seed(master, {kSweepTag, i});
    ResultTable t = run_experiment(parse_config(point));
    for (auto& s : summarize(t, values[i])) out.summary.push_back(std::move(s));
    out.tables.push_back(std::move(t));
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& param, std::ostream& out) {
  out << "param,value,method,snr_db,rows,errors,median_nmse_db,mean_nmse_db,median_source_mse,"
         "mean_source_mse,mean_residual\n";
  for (const auto& s : rows)
    out << param << ',' << format_real(s.value) << ',' << s.method << ',' << format_real(s.snr_db) << ','
        << s.rows << ',' << s.errors << ',' << format_real(s.median_nmse_db) << ','
        << format_real(s.mean_nmse_db) << ',' << format_real(s.median_source_mse) << ','
        << format_real(s.mean_source_mse) << ',' << format_real(s.mean_residual) << '\n';
}

}  // namespace blindrx
