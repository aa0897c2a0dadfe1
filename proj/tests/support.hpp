// SPDX-License-Identifier: Apache-2.0
// Finite-difference oracles and small helpers shared by the unit tests.
#pragma once

#include <cmath>
#include <functional>

#include "blindrx/types.hpp"

namespace blindrx::test {

inline constexpr double kStep = 1e-5;

/// Central difference gradient of a real function of a real vector.
inline RealVector fd_gradient(const std::function<double(const RealVector&)>& f, const RealVector& x,
                              double h = kStep) {
  RealVector g(x.size());
  RealVector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + h;
    const double up = f(p);
    p(i) = x(i) - h;
    const double down = f(p);
    p(i) = x(i);
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

/// Conjugate-Wirtinger gradient 0.5 (d/da + i d/db) by central differences.
inline ComplexVector fd_wirtinger(const std::function<double(const ComplexVector&)>& f, const ComplexVector& x,
                                  double h = kStep) {
  ComplexVector g(x.size());
  ComplexVector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + cd(h, 0);
    const double re_up = f(p);
    p(i) = x(i) - cd(h, 0);
    const double re_down = f(p);
    p(i) = x(i) + cd(0, h);
    const double im_up = f(p);
    p(i) = x(i) - cd(0, h);
    const double im_down = f(p);
    p(i) = x(i);
    g(i) = 0.5 * cd((re_up - re_down) / (2 * h), (im_up - im_down) / (2 * h));
  }
  return g;
}

/// Sum of second derivatives over every real coordinate.
inline double fd_laplacian(const std::function<double(const RealVector&)>& f, const RealVector& x,
                           double h = 1e-4) {
  const double centre = f(x);
  double total = 0.0;
  RealVector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + h;
    const double up = f(p);
    p(i) = x(i) - h;
    const double down = f(p);
    p(i) = x(i);
    total += (up - 2 * centre + down) / (h * h);
  }
  return total;
}

inline double fd_laplacian(const std::function<double(const ComplexVector&)>& f, const ComplexVector& x,
                           double h = 1e-4) {
  const double centre = f(x);
  double total = 0.0;
  ComplexVector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (const cd dir : {cd(h, 0), cd(0, h)}) {
      p(i) = x(i) + dir;
      const double up = f(p);
      p(i) = x(i) - dir;
      const double down = f(p);
      p(i) = x(i);
      total += (up - 2 * centre + down) / (h * h);
    }
  return total;
}

template <typename A, typename B>
double rel_err(const A& got, const B& want) {
  return (got - want).norm() / std::max(1.0, static_cast<double>(want.norm()));
}

}  // namespace blindrx::test
