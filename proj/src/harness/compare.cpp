#include "mpe/harness/compare.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "mpe/harness/experiment.hpp"
#include "mpe/harness/io.hpp"
#include "mpe/rng.hpp"

namespace mpe::harness {

namespace {

using Cube = std::vector<std::vector<std::vector<RunCell>>>;  // [grid][run][k]

Cube run_strategy(const GroupInstance& inst, Strategy strategy, const ExperimentConfig& config,
                  std::size_t group) {
  const std::size_t K = inst.problem.targets.size();
  Cube cube(config.sample_grid.size(), std::vector<std::vector<RunCell>>(config.runs));
  for (std::size_t r = 0; r < config.runs; ++r) {
    for (std::size_t i = 0; i < config.sample_grid.size(); ++i) {
      const std::size_t n = config.sample_grid[i];
      const auto seed = derive_seed(config.seed, {kRunPath, group, r, i});
      const auto split = even_split(n, K);
      EstimatorReport report;
      switch (strategy) {
        case Strategy::mpe:
          report = run_mpe(inst.problem, inst.synthesis.behavior.policy, n, seed, config.pdis);
          break;
        case Strategy::onpolicy: report = run_onpolicy_mc(inst.problem, split, seed); break;
        case Strategy::odi: report = run_odi(inst.problem, inst.odi, split, seed, config.pdis); break;
        case Strategy::son: report = run_son(inst.problem, split, seed, config.pdis); break;
        case Strategy::sodi:
          report = run_sodi(inst.problem, inst.odi, split, seed, config.pdis);
          break;
      }
      auto& row = cube[i][r];
      row.resize(K);
      for (const auto& est : report.per_target) {
        row[est.k] = {est.estimate, est.emp_variance, est.n_used};
      }
    }
  }
  return cube;
}

double mean_of(const std::vector<double>& xs) {
  double total = 0;
  for (double x : xs) total += x;
  return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

double standard_error(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

std::string fmt(double x) {
  std::ostringstream out;
  out << std::setprecision(12) << x;
  return out.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("missing bundle file " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

const RelativeVarianceRow& ResultBundle::relative_variance(Strategy s) const {
  for (const auto& row : table1) {
    if (row.strategy == s) return row;
  }
  throw InvalidInputError("strategy " + to_string(s) + " was not run");
}

const ParityRow& ResultBundle::parity(Strategy s) const {
  for (const auto& row : table2) {
    if (row.strategy == s) return row;
  }
  throw InvalidInputError("strategy " + to_string(s) + " was not run");
}

ParityRow parity_episodes(const std::vector<std::size_t>& grid,
                          const std::vector<double>& mse, double target) {
  if (grid.empty() || grid.size() != mse.size()) throw DimensionError("grid and curve differ");
  ParityRow row;
  if (!(target > 0.0)) {
    row.episodes = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const auto n_at = [&](std::size_t i) { return static_cast<double>(grid[i]); };
  if (mse[0] <= target) {
    row.episodes = std::max(1.0, n_at(0) * mse[0] / target);
    row.within_grid = mse[0] == target;
    return row;
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (mse[i] > target) continue;
    const double x0 = 1.0 / n_at(i - 1), x1 = 1.0 / n_at(i);
    const double x = x0 + (target - mse[i - 1]) * (x1 - x0) / (mse[i] - mse[i - 1]);
    row.episodes = std::max(1.0, 1.0 / x);
    return row;
  }
  row.episodes = n_at(grid.size() - 1) * mse.back() / target;
  row.within_grid = false;
  return row;
}

ResultBundle run_compare(const ExperimentConfig& config) {
  config.validate();
  ResultBundle bundle;
  bundle.seed = config.seed;
  bundle.grid = config.sample_grid;
  bundle.reference_n = config.reference_n;
  bundle.groups = config.groups;
  bundle.runs = config.runs;
  bundle.strategies.push_back(Strategy::onpolicy);
  for (auto s : config.strategies) {
    if (std::find(bundle.strategies.begin(), bundle.strategies.end(), s) == bundle.strategies.end()) {
      bundle.strategies.push_back(s);
    }
  }
  const MDP env = build_environment(config);
  bundle.num_targets = build_targets(config, env, 0).size();
  if (config.sample_grid.front() < bundle.num_targets) {
    throw ConfigError("sample_grid values must be at least K so every target gets episodes");
  }

  const std::size_t G = config.groups;
  bundle.truth.assign(G, {});
  bundle.cells.assign(G, {});
  std::vector<std::exception_ptr> errors(G);
  unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(G)));
  auto work = [&](unsigned w) {
    for (std::size_t g = w; g < G; g += workers) {
      try {
        const auto inst = build_group(config, g);
        std::size_t gaps = 0;
        for (const auto& tab : inst.synthesis.tables) gaps += tab.coverage_gaps.size();
        if (gaps > 0) spdlog::warn("group {}: {} target-supported cells were never logged", g, gaps);
        for (std::size_t k = 0; k < inst.problem.targets.size(); ++k) {
          bundle.truth[g].push_back(inst.problem.truth(k));
        }
        for (auto s : bundle.strategies) bundle.cells[g].push_back(run_strategy(inst, s, config, g));
        spdlog::debug("group {} done", g);
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t K = bundle.num_targets, R = config.runs, N = config.sample_grid.size();
  const std::size_t S = bundle.strategies.size();
  const std::size_t ref_idx = static_cast<std::size_t>(
      std::find(config.sample_grid.begin(), config.sample_grid.end(), config.reference_n) -
      config.sample_grid.begin());

  // Per-(group, target) scale: on-policy mean absolute error at the first grid point.
  std::vector<std::vector<double>> scale(G, std::vector<double>(K));
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < K; ++k) {
      double total = 0;
      for (std::size_t r = 0; r < R; ++r) {
        total += std::abs(bundle.cells[g][0][0][r][k].estimate - bundle.truth[g][k]);
      }
      scale[g][k] = total > 0 ? total / static_cast<double>(R) : 1.0;
    }
  }
  auto rel = [&](std::size_t g, std::size_t s, std::size_t i, std::size_t r, std::size_t k) {
    return std::abs(bundle.cells[g][s][i][r][k].estimate - bundle.truth[g][k]) / scale[g][k];
  };
  // Units of the standard error: groups when there are several, else runs.
  auto unit_means = [&](std::size_t s, std::size_t i, long k) {
    std::vector<double> out;
    if (G > 1) {
      for (std::size_t g = 0; g < G; ++g) {
        double total = 0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t kk = 0; kk < K; ++kk) {
            if (k >= 0 && kk != static_cast<std::size_t>(k)) continue;
            total += rel(g, s, i, r, kk);
            ++count;
          }
        }
        out.push_back(total / static_cast<double>(count));
      }
    } else {
      for (std::size_t r = 0; r < R; ++r) {
        double total = 0;
        std::size_t count = 0;
        for (std::size_t kk = 0; kk < K; ++kk) {
          if (k >= 0 && kk != static_cast<std::size_t>(k)) continue;
          total += rel(0, s, i, r, kk);
          ++count;
        }
        out.push_back(total / static_cast<double>(count));
      }
    }
    return out;
  };
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto all = unit_means(s, i, -1);
      bundle.curves.push_back(
          {bundle.strategies[s], -1, config.sample_grid[i], mean_of(all), standard_error(all)});
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < N; ++i) {
        const auto per = unit_means(s, i, static_cast<long>(k));
        bundle.curves_by_target.push_back({bundle.strategies[s], static_cast<long>(k),
                                           config.sample_grid[i], mean_of(per),
                                           standard_error(per)});
      }
    }
  }

  auto squared = [&](std::size_t g, std::size_t s, std::size_t i) {
    double total = 0;
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t k = 0; k < K; ++k) total += rel(g, s, i, r, k) * rel(g, s, i, r, k);
    }
    return total / static_cast<double>(R * K);
  };
  std::vector<std::vector<double>> pooled(S, std::vector<double>(N, 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t g = 0; g < G; ++g) pooled[s][i] += squared(g, s, i) / static_cast<double>(G);
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> ratios;
    double below = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const double ratio = squared(g, s, ref_idx) / squared(g, 0, ref_idx);
      ratios.push_back(ratio);
      if (ratio < 1.0) below += 1.0;
    }
    bundle.table1.push_back({bundle.strategies[s], config.reference_n, mean_of(ratios),
                             standard_error(ratios), below / static_cast<double>(G),
                             pooled[s][ref_idx] / pooled[0][ref_idx], G});
    ParityRow parity;
    if (s == 0) {
      parity.episodes = static_cast<double>(config.reference_n);
    } else {
      parity = parity_episodes(config.sample_grid, pooled[s], pooled[0][ref_idx]);
    }
    parity.strategy = bundle.strategies[s];
    parity.reference_n = config.reference_n;
    bundle.table2.push_back(parity);
  }
  return bundle;
}

void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir,
                  bool write_reports) {
  std::ostringstream curves, by_target, t1, t2;
  curves << "strategy,n,mean_rel_error,se_rel_error\n";
  for (const auto& p : bundle.curves) {
    curves << to_string(p.strategy) << ',' << p.n << ',' << fmt(p.mean_rel_error) << ','
           << fmt(p.se_rel_error) << '\n';
  }
  by_target << "strategy,k,n,mean_rel_error,se_rel_error\n";
  for (const auto& p : bundle.curves_by_target) {
    by_target << to_string(p.strategy) << ',' << p.k << ',' << p.n << ',' << fmt(p.mean_rel_error)
              << ',' << fmt(p.se_rel_error) << '\n';
  }
  t1 << "strategy,reference_n,mean,se,fraction_below_one,pooled,groups\n";
  for (const auto& row : bundle.table1) {
    t1 << to_string(row.strategy) << ',' << row.reference_n << ',' << fmt(row.mean) << ','
       << fmt(row.se) << ',' << fmt(row.fraction_below_one) << ',' << fmt(row.pooled) << ','
       << row.groups << '\n';
  }
  t2 << "strategy,reference_n,episodes,within_grid\n";
  for (const auto& row : bundle.table2) {
    t2 << to_string(row.strategy) << ',' << row.reference_n << ',' << fmt(row.episodes) << ','
       << (row.within_grid ? "true" : "false") << '\n';
  }
  write_text_file(dir / "curves.csv", curves.str());
  write_text_file(dir / "curves_by_target.csv", by_target.str());
  write_text_file(dir / "table1.csv", t1.str());
  write_text_file(dir / "table2.csv", t2.str());
  write_text_file(dir / "curves.svg", render_svg(bundle.curves));
  if (!write_reports) return;
  std::ostringstream reports;
  reports << "group,run," << kReportCsvHeader << '\n';
  for (std::size_t g = 0; g < bundle.groups; ++g) {
    for (std::size_t s = 0; s < bundle.strategies.size(); ++s) {
      for (std::size_t i = 0; i < bundle.grid.size(); ++i) {
        for (std::size_t r = 0; r < bundle.runs; ++r) {
          EstimatorReport report;
          report.strategy = bundle.strategies[s];
          report.seed = derive_seed(bundle.seed, {kRunPath, g, r, i});
          for (std::size_t k = 0; k < bundle.num_targets; ++k) {
            const auto& cell = bundle.cells[g][s][i][r][k];
            TargetEstimate est;
            est.k = k;
            est.n_used = cell.n_used;
            est.estimate = cell.estimate;
            est.ground_truth = bundle.truth[g][k];
            est.abs_error = std::abs(cell.estimate - est.ground_truth);
            est.rel_error =
                est.ground_truth != 0.0 ? est.abs_error / std::abs(est.ground_truth) : est.abs_error;
            est.emp_variance = cell.emp_variance;
            report.per_target.push_back(std::move(est));
          }
          std::ostringstream rows;
          write_report_csv(rows, std::span<const EstimatorReport>(&report, 1), false);
          std::istringstream lines(rows.str());
          std::string line;
          while (std::getline(lines, line)) reports << g << ',' << r << ',' << line << '\n';
        }
      }
    }
  }
  write_text_file(dir / "reports.csv", reports.str());
}

std::string render_svg(const std::vector<CurvePoint>& curves) {
  constexpr double W = 720, H = 480, L = 70, Rm = 150, Tm = 30, B = 60;
  static const std::map<Strategy, const char*> colors{{Strategy::onpolicy, "#1f77b4"},
                                                      {Strategy::odi, "#ff7f0e"},
                                                      {Strategy::son, "#2ca02c"},
                                                      {Strategy::sodi, "#9467bd"},
                                                      {Strategy::mpe, "#d62728"}};
  double nmin = 1e300, nmax = 0, ymax = 0;
  for (const auto& p : curves) {
    nmin = std::min(nmin, static_cast<double>(p.n));
    nmax = std::max(nmax, static_cast<double>(p.n));
    ymax = std::max(ymax, p.mean_rel_error + p.se_rel_error);
  }
  if (curves.empty()) nmin = nmax = 1;
  if (ymax <= 0) ymax = 1;
  const double lx0 = std::log10(nmin), lx1 = std::max(std::log10(nmax), lx0 + 1e-9);
  auto px = [&](double n) { return L + (std::log10(n) - lx0) / (lx1 - lx0) * (W - L - Rm); };
  auto py = [&](double y) { return H - B - y / (1.05 * ymax) * (H - B - Tm); };
  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  std::vector<std::size_t> ticks;
  for (const auto& p : curves) {
    if (std::find(ticks.begin(), ticks.end(), p.n) == ticks.end()) ticks.push_back(p.n);
  }
  for (auto n : ticks) {
    svg << "<text x=\"" << px(static_cast<double>(n)) << "\" y=\"" << H - B + 18
        << "\" text-anchor=\"middle\">" << n << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = 1.05 * ymax * i / 4;
    svg << "<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << std::setprecision(2) << y << "</text>\n";
  }
  svg << "<text x=\"" << (L + W - Rm) / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\">episodes (log scale)</text>\n";
  svg << "<text x=\"18\" y=\"" << (Tm + H - B) / 2 << "\" transform=\"rotate(-90 18 "
      << (Tm + H - B) / 2 << ")\" text-anchor=\"middle\">relative error</text>\n";
  std::vector<Strategy> order;
  for (const auto& p : curves) {
    if (std::find(order.begin(), order.end(), p.strategy) == order.end()) order.push_back(p.strategy);
  }
  for (std::size_t li = 0; li < order.size(); ++li) {
    const auto s = order[li];
    const char* color = colors.at(s);
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves) {
      if (p.strategy == s) svg << px(static_cast<double>(p.n)) << ',' << py(p.mean_rel_error) << ' ';
    }
    svg << "\"/>\n";
    for (const auto& p : curves) {
      if (p.strategy != s) continue;
      const double x = px(static_cast<double>(p.n));
      svg << "<line x1=\"" << x << "\" y1=\"" << py(p.mean_rel_error - p.se_rel_error)
          << "\" x2=\"" << x << "\" y2=\"" << py(p.mean_rel_error + p.se_rel_error)
          << "\" stroke=\"" << color << "\"/>\n";
      svg << "<circle cx=\"" << x << "\" cy=\"" << py(p.mean_rel_error) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
    }
    const double ly = Tm + 20 * static_cast<double>(li);
    svg << "<line x1=\"" << W - Rm + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - Rm + 40
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << W - Rm + 46 << "\" y=\"" << ly + 4 << "\">" << to_string(s)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_tables(const std::filesystem::path& dir) {
  const auto t1 = read_csv(dir / "table1.csv");
  const auto t2 = read_csv(dir / "table2.csv");
  if (t1.empty() || t2.empty()) throw InvalidInputError("empty bundle tables in " + dir.string());
  std::ostringstream out;
  auto header = [&](const std::vector<std::vector<std::string>>& rows) {
    out << std::left << std::setw(14) << "";
    for (const auto& row : rows) out << std::right << std::setw(11) << row.at(0);
    out << '\n';
  };
  auto line = [&](const char* label, const std::vector<std::vector<std::string>>& rows,
                  std::size_t col, int precision) {
    out << std::left << std::setw(14) << label;
    for (const auto& row : rows) {
      const std::string& cell = row.at(col);
      std::ostringstream v;
      if (cell == "true" || cell == "false") {
        v << (cell == "true" ? "yes" : "no");
      } else {
        v << std::fixed << std::setprecision(precision) << std::stod(cell);
      }
      out << std::right << std::setw(11) << v.str();
    }
    out << '\n';
  };
  out << "Relative variance (MSE / on-policy MSE at n = " << t1[0].at(1) << ", " << t1[0].at(6)
      << " groups)\n";
  header(t1);
  line("mean", t1, 2, 3);
  line("std. error", t1, 3, 3);
  line("frac < 1", t1, 4, 3);
  line("pooled", t1, 5, 3);
  out << "\nEpisodes to parity with on-policy MC at n = " << t2[0].at(1) << "\n";
  header(t2);
  line("episodes", t2, 2, 0);
  line("on grid", t2, 3, 0);
  return out.str();
}

}  // namespace mpe::harness
