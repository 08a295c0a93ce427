#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mpe/harness/config.hpp"

namespace mpe::harness {

/// Mean relative error of one strategy at one sample size; k = -1 aggregates
/// over targets.
struct CurvePoint {
  Strategy strategy = Strategy::mpe;
  long k = -1;
  std::size_t n = 0;
  double mean_rel_error = 0.0;
  double se_rel_error = 0.0;
};

/// Estimator MSE divided by the on-policy MSE at the reference sample size.
struct RelativeVarianceRow {
  Strategy strategy = Strategy::mpe;
  std::size_t reference_n = 0;
  /// Mean and standard error over groups of the per-group ratio.
  double mean = 0.0;
  double se = 0.0;
  double fraction_below_one = 0.0;
  /// Ratio of MSEs pooled over every group, run and target.
  double pooled = 0.0;
  std::size_t groups = 0;
};

struct ParityRow {
  Strategy strategy = Strategy::mpe;
  std::size_t reference_n = 0;
  double episodes = 0.0;
  /// False when the value is extrapolated beyond the largest grid point.
  bool within_grid = true;
};

struct RunCell {
  double estimate = 0.0;
  double emp_variance = 0.0;
  std::size_t n_used = 0;
};

struct ResultBundle {
  std::uint64_t seed = 0;
  std::vector<Strategy> strategies;
  std::vector<std::size_t> grid;
  std::size_t reference_n = 0;
  std::size_t groups = 0;
  std::size_t runs = 0;
  std::size_t num_targets = 0;
  /// Exact J_k per group.
  std::vector<std::vector<double>> truth;
  /// cells[g][strategy][grid index][run][k].
  std::vector<std::vector<std::vector<std::vector<std::vector<RunCell>>>>> cells;
  std::vector<CurvePoint> curves;
  std::vector<CurvePoint> curves_by_target;
  std::vector<RelativeVarianceRow> table1;
  std::vector<ParityRow> table2;

  const RelativeVarianceRow& relative_variance(Strategy s) const;
  const ParityRow& parity(Strategy s) const;
};

/// Episodes at which the squared-error curve first reaches `target`, with
/// linear interpolation in 1/n between grid points and c/n extrapolation
/// outside the grid.
ParityRow parity_episodes(const std::vector<std::size_t>& grid,
                          const std::vector<double>& mean_squared_error, double target);

/// Runs every strategy over groups x runs x grid. On-policy MC is always run
/// because it defines the normalization.
ResultBundle run_compare(const ExperimentConfig& config);

/// curves.csv, curves_by_target.csv, table1.csv, table2.csv, curves.svg and,
/// when configured, reports.csv.
void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir,
                  bool write_reports = false);

std::string render_svg(const std::vector<CurvePoint>& curves);

/// Paper-layout text rendering of table1.csv and table2.csv in `dir`.
std::string render_tables(const std::filesystem::path& dir);

}  // namespace mpe::harness
