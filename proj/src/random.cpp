// SPDX-License-Identifier: Apache-2.0
#include "blindrx/random.hpp"

#include <cmath>

namespace blindrx {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

ComplexMatrix complex_gaussian(std::size_t rows, std::size_t cols, double var, Rng& rng) {
  ComplexMatrix m = ComplexMatrix::Zero(rows, cols);
  if (var <= 0.0) return m;
  std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double re = g(rng);
      const double im = g(rng);
      m(r, c) = cd(re, im);
    }
  return m;
}

ComplexVector complex_gaussian(std::size_t size, double var, Rng& rng) {
  ComplexVector v = ComplexVector::Zero(size);
  if (var <= 0.0) return v;
  std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
  for (std::size_t i = 0; i < size; ++i) {
    const double re = g(rng);
    const double im = g(rng);
    v(i) = cd(re, im);
  }
  return v;
}

RealVector real_gaussian(std::size_t size, double var, Rng& rng) {
  RealVector v = RealVector::Zero(size);
  if (var <= 0.0) return v;
  std::normal_distribution<double> g(0.0, std::sqrt(var));
  for (std::size_t i = 0; i < size; ++i) v(i) = g(rng);
  return v;
}

}  // namespace blindrx
