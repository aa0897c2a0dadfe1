// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blindrx/channel.hpp"
#include "blindrx/types.hpp"

namespace blindrx {

/// NMSE in dB: 10 log10( sum_i ||H_i - Hhat_i||^2 / (N_u ||H_i||^2) ).
/// Exact recovery yields -infinity. Throws DomainError on a zero-norm true channel.
double nmse_db(const MultiUserChannel& truth, const MultiUserChannel& estimate);
double nmse_db(const BlockFadingChannel& truth, const BlockFadingChannel& estimate);

/// Same quantity on flattened free entries, one vector per user.
double nmse_db(const std::vector<ComplexVector>& truth, const std::vector<ComplexVector>& estimate);

/// 10 log10(||signal||^2 / ||noise||^2). Throws DomainError when noise is zero.
double snr_db(const ComplexMatrix& signal, const ComplexMatrix& noise);

/// N_t K T / n for a blind scheme.
double cbr(const MimoDims& dims);

/// Pilot scheme carrying the same payload as `dims` with only `data_slots`
/// of T usable per block: K' = K T / data_slots, CBR = N_t K' T / n.
double cbr(const MimoDims& dims, std::size_t data_slots);

/// K' = K T / data_slots (may be fractional).
double pilot_block_count(const MimoDims& dims, std::size_t data_slots);

double source_mse(const RealVector& truth, const RealVector& estimate);
double source_mse(const std::vector<RealVector>& truth, const std::vector<RealVector>& estimate);

struct MetricsRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double snr_db = 0;
  double cbr = 0;
  double nmse_db = 0;
  double source_mse = 0;
  double residual = 0;
  std::string method;
  double wall_ms = 0;
  bool error = false;
  std::string message;
};

/// CSV columns, in order.
extern const char* const kCsvHeader;

/// Text used for a -infinity NMSE in CSV output.
inline constexpr const char* kNegInfSentinel = "-inf";

void write_csv_header(std::ostream& out);
void write_csv_row(const MetricsRecord& r, std::ostream& out);

/// Fixed-format real with 17 significant digits; -inf/inf/nan spelled out.
std::string format_real(double v);

}  // namespace blindrx
