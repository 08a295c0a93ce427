#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpe {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Time-indexed |S| x |A| tables, addressed as table[t](s, a).
template <typename Scalar>
using StateActionTable = std::vector<Matrix<Scalar>>;

/// Time-indexed |S| tables, addressed as table[t](s).
template <typename Scalar>
using StateTable = std::vector<Vector<Scalar>>;

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Tolerances shared by every module.
inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr double kOracleTolerance = 1e-10;
inline constexpr double kZeroThreshold = 1e-12;
inline constexpr double kVarianceClampTolerance = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class EnumerationCapError : public Error {
 public:
  using Error::Error;
};

/// A computed quantity disagrees with an identity it must satisfy.
class NumericalError : public Error {
 public:
  using Error::Error;
};

template <typename Scalar>
StateActionTable<Scalar> zero_table(Index horizon, Index rows, Index cols) {
  return StateActionTable<Scalar>(static_cast<std::size_t>(horizon),
                                  Matrix<Scalar>::Zero(rows, cols));
}

template <typename Scalar>
StateTable<Scalar> zero_state_table(Index horizon, Index rows) {
  return StateTable<Scalar>(static_cast<std::size_t>(horizon), Vector<Scalar>::Zero(rows));
}

template <typename Scalar>
Scalar max_abs_difference(const StateActionTable<Scalar>& a, const StateActionTable<Scalar>& b) {
  if (a.size() != b.size()) throw DimensionError("table horizons differ");
  Scalar worst = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    worst = std::max(worst, (a[t] - b[t]).cwiseAbs().maxCoeff());
  }
  return worst;
}

template <typename Scalar>
Scalar max_abs_difference(const StateTable<Scalar>& a, const StateTable<Scalar>& b) {
  if (a.size() != b.size()) throw DimensionError("table horizons differ");
  Scalar worst = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    worst = std::max(worst, (a[t] - b[t]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace mpe
