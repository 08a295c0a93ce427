#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "mpe/rng.hpp"
#include "mpe/types.hpp"

namespace mpe::oracle {

struct SimplexMinimum {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd point;
  std::size_t evaluations = 0;
};

/// Minimizes f over the probability simplex in dimension n. For n <= 3 every
/// point of the lattice with spacing `step` is tried; above that, `samples`
/// Dirichlet(1) draws plus the vertices.
template <typename F>
SimplexMinimum minimize_on_simplex(Index n, F&& f, double step = 1e-3,
                                   std::size_t samples = 100000, std::uint64_t seed = 0) {
  SimplexMinimum best;
  Eigen::VectorXd x(n);
  auto visit = [&](const Eigen::VectorXd& p) {
    ++best.evaluations;
    const double value = f(p);
    if (value < best.value) {
      best.value = value;
      best.point = p;
    }
  };
  const auto steps = static_cast<long>(std::llround(1.0 / step));
  if (n == 1) {
    visit(Eigen::VectorXd::Ones(1));
  } else if (n == 2) {
    for (long i = 0; i <= steps; ++i) {
      x << static_cast<double>(i) / static_cast<double>(steps),
          static_cast<double>(steps - i) / static_cast<double>(steps);
      visit(x);
    }
  } else if (n == 3) {
    for (long i = 0; i <= steps; ++i) {
      for (long j = 0; i + j <= steps; ++j) {
        x << static_cast<double>(i) / static_cast<double>(steps),
            static_cast<double>(j) / static_cast<double>(steps),
            static_cast<double>(steps - i - j) / static_cast<double>(steps);
        visit(x);
      }
    }
  } else {
    for (Index i = 0; i < n; ++i) visit(Eigen::VectorXd::Unit(n, i));
    SplitMix64 rng(seed);
    for (std::size_t draw = 0; draw < samples; ++draw) {
      for (Index i = 0; i < n; ++i) x(i) = -std::log1p(-rng.uniform());
      visit(x / x.sum());
    }
  }
  return best;
}

}  // namespace mpe::oracle
