// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blindrx/encoder.hpp"
#include "blindrx/metrics.hpp"
#include "blindrx/priors.hpp"
#include "blindrx/pvd.hpp"
#include "blindrx/types.hpp"

namespace blindrx {

using Json = nlohmann::json;

struct Violation {
  std::string path;
  std::string message;
};

/// Thrown when a configuration cannot be turned into an experiment. Carries
/// every violation found, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

enum class ChannelModel { rayleigh, kronecker, prior };
enum class EncoderKind { linear, saturating };
enum class Normalization { none, expected, per_signal };

struct ChannelModelSpec {
  ChannelModel model = ChannelModel::rayleigh;
  double rx_correlation = 0.0;  // exponential model rho^|i-j|
  double tx_correlation = 0.0;
};

struct EncoderSpec {
  EncoderKind kind = EncoderKind::linear;
  double gain = 1.0;
  Normalization normalization = Normalization::expected;
  std::string file;        // load instead of drawing when non-empty
  bool per_trial = false;  // redraw the random matrix every trial
};

struct ChannelPriorSpec {
  bool mixture = false;
  bool mean_is_truth = false;    // known-channel runs: prior centred on the true channel
  std::vector<cd> means{cd{}};   // per-component value broadcast over all entries
  std::vector<double> weights{1.0};
  double variance = 1.0;
};

struct SourcePriorSpec {
  bool mixture = false;
  std::vector<RealVector> means;  // one full-length vector per component
  std::vector<double> weights{1.0};
  double variance = 1.0;
};

struct BaselineSpec {
  bool pvd = true;
  bool lmmse = false;
  bool oracle = false;
  std::size_t n_p = 1;
};

struct TrialId {
  std::size_t snr_index = 0;
  std::size_t trial = 0;
  bool operator==(const TrialId&) const = default;
};

struct ExperimentConfig {
  MimoDims dims;
  ChannelModelSpec channel;
  EncoderSpec encoder;
  ChannelPriorSpec prior_h;
  SourcePriorSpec prior_d;
  PvdConfig pvd;
  BaselineSpec methods;
  std::vector<double> snr_db{10.0};
  std::size_t trials = 300;
  std::uint64_t seed = 1;
  std::string output = "results.csv";
  std::size_t workers = 1;
  bool timing = false;              // wall_ms is 0 unless enabled, keeping output reproducible
  std::string diagnostics_dir;      // per-trial PVD traces when non-empty
  std::vector<TrialId> force_divergence;
};

/// The configuration shipped in configs/default.json.
Json default_config_json();

/// Substitutes "linkage" expressions ("dims.N_r": "8*dims.N_t") in order.
/// Expressions support numbers, dotted paths, + - * / and parentheses.
Json apply_linkage(const Json& cfg, std::vector<Violation>& report);

/// Parses after applying linkage. Missing keys take defaults; unknown keys are
/// violations. Throws ConfigError listing every violation.
ExperimentConfig parse_config(const Json& cfg);

/// Every violation, each with a dotted field path. Empty means valid.
std::vector<Violation> validate(const Json& cfg);
std::vector<Violation> validate(const ExperimentConfig& cfg);

Json load_config(const std::string& path);

struct ResultTable {
  std::vector<MetricsRecord> rows;  // (snr, trial, method) order
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

/// Seed of one trial: derive_seed(master, {snr_index, trial}).
std::uint64_t trial_seed(std::uint64_t master, std::size_t snr_index, std::size_t trial);

/// Sub-streams used inside a trial, derive_seed(trial_seed, {stream}).
enum class TrialStream : std::uint64_t { channel = 1, source = 2, noise = 3, pvd = 4, pilot = 5, encoder = 6 };
std::uint64_t stream_seed(std::uint64_t trial_seed, TrialStream s);

/// Experiment-wide encoder seed for user u.
std::uint64_t encoder_seed(std::uint64_t master, std::size_t user);

/// Noise variance that puts a signal with energy `signal_energy` over
/// `entries` receive entries at `snr_db`.
double noise_variance_for_snr(double signal_energy, std::size_t entries, double snr_db);

/// Builds one user's encoder from the spec. `rng` supplies the random matrix.
EncoderPtr make_encoder(const ExperimentConfig& cfg, Rng& rng);

ChannelPriorPtr make_channel_prior(const ChannelPriorSpec& spec, std::size_t dim,
                                   const ComplexVector* truth = nullptr);
SourcePriorPtr make_source_prior(const SourcePriorSpec& spec);

RealVector sample_source(const SourcePriorSpec& spec, Rng& rng);
ComplexVector sample_channel_prior(const ChannelPriorSpec& spec, std::size_t dim, Rng& rng);

/// Runs every (snr, trial) pair. Trial failures become rows with the error flag.
ResultTable run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  double value = 0;
  std::string method;
  double snr_db = 0;
  std::size_t rows = 0;
  std::size_t errors = 0;
  double median_nmse_db = 0;
  double mean_nmse_db = 0;
  double median_source_mse = 0;
  double mean_source_mse = 0;
  double mean_residual = 0;
};

/// Medians and means per (method, snr) over rows without the error flag.
std::vector<SummaryRow> summarize(const ResultTable& table, double value);

struct SweepResult {
  std::vector<SummaryRow> summary;
  std::vector<ResultTable> tables;  // one per value
};

/// Sets `path` (a numeric leaf, or "snr_db") to each value, reapplies linkage
/// and runs the experiment with seed derive_seed(master, {kSweepTag, index}).
/// Throws ConfigError for an unknown path or an empty value list.
SweepResult sweep(const Json& cfg, const std::string& path, const std::vector<double>& values);

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& param, std::ostream& out);

}  // namespace blindrx
