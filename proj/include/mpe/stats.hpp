#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace mpe {

/// Welford streaming mean and variance with a parallel (Chan et al.) merge.
class RunningMoments {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningMoments& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double n = static_cast<double>(count_ + other.count_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * static_cast<double>(other.count_) / n;
    m2_ += other.m2_ + delta * delta * static_cast<double>(count_) *
                           static_cast<double>(other.count_) / n;
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; zero with fewer than two samples.
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double standard_error() const {
    return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Moments plus the raw samples, the latter kept only up to `cap`.
class SampleStore {
 public:
  explicit SampleStore(std::size_t cap = 1'000'000) : cap_(cap) {}

  void add(double x) {
    moments_.add(x);
    if (values_.size() < cap_) values_.push_back(x);
  }

  const RunningMoments& moments() const { return moments_; }
  const std::vector<double>& values() const { return values_; }
  bool truncated() const { return moments_.count() > values_.size(); }

 private:
  std::size_t cap_;
  RunningMoments moments_;
  std::vector<double> values_;
};

}  // namespace mpe
