// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "blindrx/types.hpp"

namespace blindrx {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic child seed from a master seed and a path of indices.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// CN(0, var) entries: real and imaginary parts each N(0, var/2), drawn row-major.
ComplexMatrix complex_gaussian(std::size_t rows, std::size_t cols, double var, Rng& rng);
ComplexVector complex_gaussian(std::size_t size, double var, Rng& rng);
RealVector real_gaussian(std::size_t size, double var, Rng& rng);

}  // namespace blindrx
