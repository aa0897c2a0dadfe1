// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "blindrx/channel.hpp"
#include "blindrx/random.hpp"

using namespace blindrx;

namespace {

MimoDims make_dims(std::size_t n_r, std::size_t n_t, std::size_t k, std::size_t t, std::size_t n_u = 1) {
  MimoDims d;
  d.n_r = n_r;
  d.n_t = n_t;
  d.k = k;
  d.t = t;
  d.n_u = n_u;
  return d;
}

BlockFadingChannel scalar_channel(std::initializer_list<cd> values) {
  BlockFadingChannel ch{1, 1, {}};
  for (cd v : values) ch.blocks.push_back(ComplexMatrix::Constant(1, 1, v));
  return ch;
}

}  // namespace

TEST_CASE("MimoDims rejects zero counts and bad power") {
  MimoDims d = make_dims(2, 2, 1, 4);
  CHECK_NOTHROW(d.validate());
  d.k = 0;
  CHECK_THROWS_AS(d.validate(), DomainError);
  d = make_dims(2, 2, 1, 4);
  d.power = 0;
  CHECK_THROWS_AS(d.validate(), DomainError);
  d = make_dims(2, 2, 1, 4);
  d.noise_var = -1;
  CHECK_THROWS_AS(d.validate(), DomainError);
}

TEST_CASE("draw_rayleigh shape and determinism") {
  const MimoDims d = make_dims(2, 1, 2, 4, 3);
  Rng a(11), b(11);
  const auto ch = draw_rayleigh(d, a);
  REQUIRE(ch.size() == 3);
  for (const auto& u : ch) {
    REQUIRE(u.k() == 2);
    for (const auto& blk : u.blocks) CHECK((blk.rows() == 2 && blk.cols() == 1));
  }
  const auto again = draw_rayleigh(d, b);
  for (std::size_t u = 0; u < 3; ++u) CHECK(ch[u].flatten() == again[u].flatten());
}

TEST_CASE("draw_rayleigh entries are CN(0,1)") {
  const MimoDims d = make_dims(10, 10, 1000, 1);
  Rng rng(3);
  const ComplexVector h = draw_rayleigh(d, rng).front().flatten();
  const double n = static_cast<double>(h.size());
  const double var = h.squaredNorm() / n;
  const double re = h.real().squaredNorm() / n;
  const double cross = (h.real().array() * h.imag().array()).sum() / n;
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  CHECK(re == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(cross) < 0.01);
  CHECK(std::abs(h.mean()) < 0.01);
}

TEST_CASE("Kronecker with identity covariances reproduces Rayleigh bit for bit") {
  const MimoDims d = make_dims(3, 2, 4, 1, 2);
  Rng a(5), b(5);
  const auto r = draw_rayleigh(d, a);
  const auto k = draw_kronecker_correlated(d, ComplexMatrix::Identity(3, 3), ComplexMatrix::Identity(2, 2), b);
  for (std::size_t u = 0; u < 2; ++u) CHECK(r[u].flatten() == k[u].flatten());
}

TEST_CASE("Kronecker with zero receive covariance is the zero channel") {
  const MimoDims d = make_dims(2, 2, 3, 1);
  Rng rng(1);
  const auto k = draw_kronecker_correlated(d, ComplexMatrix::Zero(2, 2), ComplexMatrix::Identity(2, 2), rng);
  CHECK(k.front().flatten().squaredNorm() == 0.0);
}

TEST_CASE("rank-one transmit covariance confines rows to the eigenvector") {
  const MimoDims d = make_dims(3, 2, 1000, 1);
  ComplexVector v(2);
  v << cd(1, 0), cd(0, 1);
  v /= std::sqrt(2.0);
  const ComplexMatrix r_tx = v * v.adjoint();
  const ComplexMatrix off = ComplexMatrix::Identity(2, 2) - r_tx;
  Rng rng(8);
  const auto ch = draw_kronecker_correlated(d, ComplexMatrix::Identity(3, 3), r_tx, rng);
  double leak = 0.0, energy = 0.0;
  for (const auto& blk : ch.front().blocks) {
    leak += (blk * off).squaredNorm();
    energy += blk.squaredNorm();
  }
  CHECK(leak < 1e-20 * energy);
  // Row energy concentrates on the single eigenvalue 1, so E||H_k||^2 = N_r.
  CHECK(energy / 1000.0 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("Kronecker rejects non-Hermitian and indefinite covariances") {
  const MimoDims d = make_dims(2, 2, 1, 1);
  Rng rng(1);
  ComplexMatrix skew(2, 2);
  skew << 1, cd(0.5, 0), cd(0.1, 0), 1;
  ComplexMatrix indef(2, 2);
  indef << 1, 2, 2, 1;
  CHECK_THROWS_AS(draw_kronecker_correlated(d, skew, ComplexMatrix::Identity(2, 2), rng), DomainError);
  CHECK_THROWS_AS(draw_kronecker_correlated(d, ComplexMatrix::Identity(2, 2), indef, rng), DomainError);
  CHECK_THROWS_AS(draw_kronecker_correlated(d, ComplexMatrix::Identity(3, 3), ComplexMatrix::Identity(2, 2), rng),
                  ShapeError);
}

TEST_CASE("psd_sqrt squares back to its input") {
  ComplexMatrix r(2, 2);
  r << 2, cd(0.5, 0.5), cd(0.5, -0.5), 1;
  const ComplexMatrix s = psd_sqrt(r);
  CHECK((s * s - r).norm() < 1e-12);
  CHECK((s - s.adjoint()).norm() < 1e-12);
}

TEST_CASE("compound builds the block diagonal") {
  Rng rng(2);
  const auto one = draw_rayleigh(make_dims(3, 2, 1, 1), rng).front();
  CHECK(compound(one) == one.blocks.front());

  ComplexMatrix want = ComplexMatrix::Zero(2, 2);
  want(0, 0) = 2;
  want(1, 1) = 3;
  CHECK(compound(scalar_channel({2.0, 3.0})) == want);

  const auto multi = draw_rayleigh(make_dims(2, 3, 3, 1), rng).front();
  const ComplexMatrix h0 = compound(multi);
  REQUIRE((h0.rows() == 6 && h0.cols() == 9));
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 9; ++j)
      if (i / 2 != j / 3) CHECK(h0(i, j) == cd(0, 0));
}

TEST_CASE("transmit hand examples") {
  Rng rng(4);
  const MimoDims d = make_dims(2, 2, 3, 5);
  BlockFadingChannel eye{2, 2, std::vector<ComplexMatrix>(3, ComplexMatrix::Identity(2, 2))};
  const ComplexMatrix x = complex_gaussian(6, 5, 1.0, rng);
  CHECK(transmit({eye}, {x}, 0.0, rng) == x);
  (void)d;

  const ComplexMatrix six = transmit({scalar_channel({2.0})}, {ComplexMatrix::Constant(1, 1, 3.0)}, 0.0, rng);
  CHECK(six(0, 0) == cd(6, 0));

  const ComplexMatrix one = ComplexMatrix::Constant(1, 1, 1.0);
  const ComplexMatrix three =
      transmit({scalar_channel({1.0}), scalar_channel({2.0})}, {one, one}, 0.0, rng);
  CHECK(three(0, 0) == cd(3, 0));
}

TEST_CASE("transmit validates shapes") {
  Rng rng(4);
  const auto ch = draw_rayleigh(make_dims(2, 2, 2, 3), rng);
  CHECK_THROWS_AS(transmit(ch, {ComplexMatrix::Zero(3, 3)}, 0.0, rng), ShapeError);
  CHECK_THROWS_AS(transmit(ch, {ComplexMatrix::Zero(4, 3), ComplexMatrix::Zero(4, 3)}, 0.0, rng), ShapeError);
  CHECK_THROWS_AS(transmit(ch, {ComplexMatrix::Zero(4, 3)}, -1.0, rng), DomainError);
}

TEST_CASE("block locality and linearity of the noiseless channel") {
  Rng rng(6);
  const MimoDims d = make_dims(3, 2, 4, 5, 2);
  const auto ch = draw_rayleigh(d, rng);
  const ComplexMatrix x1 = complex_gaussian(8, 5, 1.0, rng), x2 = complex_gaussian(8, 5, 1.0, rng);
  const ComplexMatrix x3 = complex_gaussian(8, 5, 1.0, rng), x4 = complex_gaussian(8, 5, 1.0, rng);

  for (std::size_t k = 0; k < 4; ++k) {
    ComplexMatrix masked1 = ComplexMatrix::Zero(8, 5), masked2 = ComplexMatrix::Zero(8, 5);
    masked1.middleRows(2 * k, 2) = x1.middleRows(2 * k, 2);
    masked2.middleRows(2 * k, 2) = x2.middleRows(2 * k, 2);
    const ComplexMatrix full = superpose(ch, {x1, x2});
    const ComplexMatrix part = superpose(ch, {masked1, masked2});
    for (std::size_t b = 0; b < 4; ++b) {
      if (b == k)
        CHECK((part.middleRows(3 * b, 3) - full.middleRows(3 * b, 3)).norm() < 1e-12);
      else
        CHECK(part.middleRows(3 * b, 3).norm() == 0.0);
    }
  }

  const cd alpha(0.7, -0.2), beta(-1.3, 0.4);
  const ComplexMatrix lhs = superpose(ch, {alpha * x1 + beta * x3, alpha * x2 + beta * x4});
  const ComplexMatrix rhs = alpha * superpose(ch, {x1, x2}) + beta * superpose(ch, {x3, x4});
  CHECK((lhs - rhs).norm() < 1e-12 * rhs.norm());
}

TEST_CASE("noise statistics") {
  Rng rng(9);
  const MimoDims d = make_dims(4, 1, 25, 1000);
  const auto ch = draw_rayleigh(d, rng);
  const ComplexMatrix y = transmit(ch, {ComplexMatrix::Zero(25, 1000)}, 0.3, rng);
  CHECK(y.squaredNorm() / static_cast<double>(y.size()) == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("transmit is deterministic under a fixed seed") {
  Rng a(21), b(21);
  const MimoDims d = make_dims(2, 2, 2, 3);
  const auto ch_a = draw_rayleigh(d, a);
  const auto ch_b = draw_rayleigh(d, b);
  const ComplexMatrix x = ComplexMatrix::Constant(4, 3, cd(1, -1));
  CHECK(transmit(ch_a, {x}, 0.5, a) == transmit(ch_b, {x}, 0.5, b));
}

TEST_CASE("flatten and from_flat round trip") {
  Rng rng(1);
  const auto ch = draw_rayleigh(make_dims(2, 3, 4, 1), rng).front();
  const ComplexVector f = ch.flatten();
  REQUIRE(f.size() == 24);
  CHECK(f(3) == ch.blocks[0](1, 0));
  CHECK(f(6) == ch.blocks[1](0, 0));
  CHECK(BlockFadingChannel::from_flat(f, 2, 3, 4).flatten() == f);
  CHECK(apply_channel(f, 2, 3, ComplexMatrix::Identity(12, 12)) == apply_channel(ch, ComplexMatrix::Identity(12, 12)));
}

TEST_CASE("seed derivation separates paths") {
  CHECK(derive_seed(1, {0, 1}) != derive_seed(1, {1, 0}));
  CHECK(derive_seed(1, {0, 1}) == derive_seed(1, {0, 1}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}
