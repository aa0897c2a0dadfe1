// SPDX-License-Identifier: Apache-2.0
#include "blindrx/metrics.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>

namespace blindrx {

namespace {

double db_ratio(double num, double den) {
  if (num == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

}  // namespace

double nmse_db(const std::vector<ComplexVector>& truth, const std::vector<ComplexVector>& estimate) {
  if (truth.empty() || truth.size() != estimate.size())
    throw ShapeError("nmse_db: user counts differ or are zero");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].size() != estimate[i].size()) throw ShapeError("nmse_db: channel shapes differ");
    const double ref = truth[i].squaredNorm();
    if (ref == 0.0) throw DomainError("nmse_db: true channel has zero norm");
    total += (truth[i] - estimate[i]).squaredNorm() / ref;
  }
  return db_ratio(total, static_cast<double>(truth.size()));
}

double nmse_db(const MultiUserChannel& truth, const MultiUserChannel& estimate) {
  std::vector<ComplexVector> t, e;
  for (const auto& c : truth) t.push_back(c.flatten());
  for (const auto& c : estimate) e.push_back(c.flatten());
  return nmse_db(t, e);
}

double nmse_db(const BlockFadingChannel& truth, const BlockFadingChannel& estimate) {
  return nmse_db(MultiUserChannel{truth}, MultiUserChannel{estimate});
}

double snr_db(const ComplexMatrix& signal, const ComplexMatrix& noise) {
  const double n = noise.squaredNorm();
  if (n == 0.0) throw DomainError("snr_db: noise part is zero");
  return db_ratio(signal.squaredNorm(), n);
}

double cbr(const MimoDims& dims) {
  if (dims.n == 0 || dims.n_t == 0 || dims.k == 0 || dims.t == 0)
    throw DomainError("cbr: dimensions must be positive");
  return static_cast<double>(dims.n_t * dims.k * dims.t) / static_cast<double>(dims.n);
}

double pilot_block_count(const MimoDims& dims, std::size_t data_slots) {
  if (data_slots == 0 || data_slots > dims.t) throw DomainError("cbr: data slots must lie in [1, T]");
  return static_cast<double>(dims.k * dims.t) / static_cast<double>(data_slots);
}

double cbr(const MimoDims& dims, std::size_t data_slots) {
  cbr(dims);
  if (data_slots == 0 || data_slots > dims.t) throw DomainError("cbr: data slots must lie in [1, T]");
  // Single rounding: numerator and denominator are exact integers.
  const std::size_t num = dims.n_t * dims.k * dims.t * dims.t;
  const std::size_t den = data_slots * dims.n;
  return static_cast<double>(num) / static_cast<double>(den);
}

double source_mse(const RealVector& truth, const RealVector& estimate) {
  if (truth.size() != estimate.size()) throw ShapeError("source_mse: length mismatch");
  if (truth.size() == 0) throw ShapeError("source_mse: empty vectors");
  return (truth - estimate).squaredNorm() / static_cast<double>(truth.size());
}

double source_mse(const std::vector<RealVector>& truth, const std::vector<RealVector>& estimate) {
  if (truth.empty() || truth.size() != estimate.size()) throw ShapeError("source_mse: user counts differ");
  double sum = 0.0;
  Eigen::Index count = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].size() != estimate[i].size()) throw ShapeError("source_mse: length mismatch");
    sum += (truth[i] - estimate[i]).squaredNorm();
    count += truth[i].size();
  }
  if (count == 0) throw ShapeError("source_mse: empty vectors");
  return sum / static_cast<double>(count);
}

const char* const kCsvHeader = "trial,seed,snr_db,cbr,nmse_db,source_mse,residual,method,wall_ms,error";

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? kNegInfSentinel : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_csv_row(const MetricsRecord& r, std::ostream& out) {
  out << r.trial << ',' << r.seed << ',' << format_real(r.snr_db) << ',' << format_real(r.cbr) << ','
      << format_real(r.nmse_db) << ',' << format_real(r.source_mse) << ','
      << format_real(r.residual) << ',' << r.method << ',' << format_real(r.wall_ms) << ','
      << (r.error ? 1 : 0) << '\n';
}

}  // namespace blindrx
