#include "mpe/fqe.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mpe/sampling.hpp"

namespace mpe {

namespace {

std::vector<std::vector<std::size_t>> tuples_by_time(const OfflineDataset& data) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(data.horizon));
  for (std::size_t i = 0; i < data.tuples.size(); ++i) {
    out[static_cast<std::size_t>(data.tuples[i].t)].push_back(i);
  }
  return out;
}

void require_target(const OfflineDataset& data, const PolicyD& target) {
  if (target.num_states() != data.num_states || target.num_actions() != data.num_actions ||
      target.horizon() != data.horizon) {
    throw DimensionError("target dimensions do not match the dataset");
  }
}

/// Shared backward pass: cell-weighted means of reward(tuple) + E_pi[table_{t+1}(s', .)].
template <typename Reward>
StateActionTable<double> backward_average(const OfflineDataset& data, const PolicyD& target,
                                          Reward reward, StateActionTable<double>* counts) {
  data.validate();
  require_target(data, target);
  const Index T = data.horizon, S = data.num_states, A = data.num_actions;
  const auto by_time = tuples_by_time(data);
  auto table = zero_table<double>(T, S, A);
  if (counts) *counts = zero_table<double>(T, S, A);
  for (Index t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    Eigen::VectorXd next_value;
    if (t + 1 < T) next_value = target.at(t + 1).cwiseProduct(table[ti + 1]).rowwise().sum();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(S, A);
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(S, A);
    for (std::size_t i : by_time[ti]) {
      const auto& x = data.tuples[i];
      const double w = data.weight(i);
      double y = reward(x, i);
      if (t + 1 < T) y += next_value(x.s_next);
      sum(x.s, x.a) += w * y;
      mass(x.s, x.a) += w;
    }
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) {
        table[ti](s, a) = mass(s, a) > 0 ? sum(s, a) / mass(s, a) : 0.0;
      }
    }
    if (counts) (*counts)[ti] = mass;
  }
  return table;
}

/// State distribution at each t under `policy`, started from p0.
StateTable<double> state_distribution(const MDP& mdp, const PolicyD& policy) {
  StateTable<double> d(static_cast<std::size_t>(mdp.horizon()));
  d[0] = mdp.initial_dist();
  for (Index t = 0; t + 1 < mdp.horizon(); ++t) {
    const auto ti = static_cast<std::size_t>(t);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(mdp.num_states());
    for (Index s = 0; s < mdp.num_states(); ++s) {
      for (Index a = 0; a < mdp.num_actions(); ++a) {
        next += d[ti](s) * policy(t, s, a) * mdp.transition_row(s, a).transpose();
      }
    }
    d[ti + 1] = next;
  }
  return d;
}

}  // namespace

void OfflineDataset::validate() const {
  if (num_states <= 0 || num_actions <= 0 || horizon <= 0) {
    throw DimensionError("dataset dimensions must be positive");
  }
  if (!weights.empty() && weights.size() != tuples.size()) {
    throw DimensionError("dataset weights must match the tuple count");
  }
  for (const auto& x : tuples) {
    const bool last = x.t == horizon - 1;
    if (x.t < 0 || x.t >= horizon || x.s < 0 || x.s >= num_states || x.a < 0 ||
        x.a >= num_actions || !std::isfinite(x.r) ||
        (!last && (x.s_next < 0 || x.s_next >= num_states))) {
      throw InvalidInputError("dataset tuple out of range at t=" + std::to_string(x.t) +
                              ",s=" + std::to_string(x.s) + ",a=" + std::to_string(x.a));
    }
  }
}

OfflineDataset generate_offline_data(const MDP& mdp, std::span<const PolicyD> loggers,
                                     std::size_t episodes_per_policy, std::uint64_t seed) {
  OfflineDataset data{mdp.num_states(), mdp.num_actions(), mdp.horizon(), {}, {}, {}};
  data.tuples.reserve(loggers.size() * episodes_per_policy * static_cast<std::size_t>(mdp.horizon()));
  for (std::size_t l = 0; l < loggers.size(); ++l) {
    for (std::size_t i = 0; i < episodes_per_policy; ++i) {
      const auto traj = sample_episode(mdp, loggers[l], episode_seed(seed, l, i));
      for (const auto& step : traj.steps) {
        data.tuples.push_back({step.t, step.state, step.action, step.reward, step.next_state});
      }
    }
  }
  data.metadata = std::to_string(episodes_per_policy) + " episodes from each of " +
                  std::to_string(loggers.size()) + " logging policies, seed " +
                  std::to_string(seed);
  return data;
}

OfflineDataset exact_weighted_dataset(const MDP& mdp, std::span<const PolicyD> loggers) {
  if (loggers.empty()) throw InvalidInputError("need at least one logging policy");
  OfflineDataset data{mdp.num_states(), mdp.num_actions(), mdp.horizon(), {}, {}, {}};
  const Index T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  auto mass = zero_table<double>(T, S, A);
  for (const auto& mu : loggers) {
    const auto d = state_distribution(mdp, mu);
    for (Index t = 0; t < T; ++t) {
      for (Index s = 0; s < S; ++s) {
        for (Index a = 0; a < A; ++a) {
          mass[static_cast<std::size_t>(t)](s, a) +=
              d[static_cast<std::size_t>(t)](s) * mu(t, s, a) / static_cast<double>(loggers.size());
        }
      }
    }
  }
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) {
        const double m = mass[static_cast<std::size_t>(t)](s, a);
        if (m <= 0) continue;
        if (t + 1 == T) {
          data.tuples.push_back({t, s, a, mdp.reward(s, a), kNoState});
          data.weights.push_back(m);
          continue;
        }
        for (Index n = 0; n < S; ++n) {
          const double p = mdp.transition(s, a, n);
          if (p <= 0) continue;
          data.tuples.push_back({t, s, a, mdp.reward(s, a), n});
          data.weights.push_back(m * p);
        }
      }
    }
  }
  data.metadata = "exact visitation weights under " + std::to_string(loggers.size()) +
                  " logging policies";
  return data;
}

StateActionTable<double> fqe_q(const OfflineDataset& data, const PolicyD& target,
                               std::vector<CellIndex>* gaps) {
  StateActionTable<double> counts;
  auto q = backward_average(
      data, target, [](const OfflineTuple& x, std::size_t) { return x.r; }, &counts);
  if (gaps) {
    gaps->clear();
    for (Index t = 0; t < data.horizon; ++t) {
      for (Index s = 0; s < data.num_states; ++s) {
        for (Index a = 0; a < data.num_actions; ++a) {
          if (counts[static_cast<std::size_t>(t)](s, a) <= 0 && target(t, s, a) > 0) {
            gaps->push_back({t, s, a});
          }
        }
      }
    }
  }
  return q;
}

StateActionTable<double> fqe_q_hat(const OfflineDataset& data, const PolicyD& target,
                                   const StateActionTable<double>& q_est, double* min_unclamped) {
  if (static_cast<Index>(q_est.size()) != data.horizon) {
    throw DimensionError("q_est horizon does not match the dataset");
  }
  auto q_hat = backward_average(
      data, target,
      [&](const OfflineTuple& x, std::size_t) {
        return 2.0 * x.r * q_est[static_cast<std::size_t>(x.t)](x.s, x.a) - x.r * x.r;
      },
      nullptr);
  double lowest = 0.0;
  for (auto& m : q_hat) {
    lowest = std::min(lowest, m.minCoeff());
    m = m.cwiseMax(0.0);
  }
  if (min_unclamped) *min_unclamped = lowest;
  return q_hat;
}

FqeTables fqe_evaluate(const OfflineDataset& data, const PolicyD& target) {
  FqeTables out;
  out.q_est = fqe_q(data, target, &out.coverage_gaps);
  backward_average(
      data, target, [](const OfflineTuple&, std::size_t) { return 0.0; }, &out.visit_counts);
  out.q_hat_est = fqe_q_hat(data, target, out.q_est, &out.min_unclamped_q_hat);
  return out;
}

MpeSynthesis algorithm1_mpe(const OfflineDataset& data, const PolicySetD& targets) {
  if (data.tuples.empty()) throw InvalidInputError("offline dataset is empty");
  MpeSynthesis out;
  std::vector<StateActionTable<double>> q_hat;
  for (const auto& pi : targets) {
    out.tables.push_back(fqe_evaluate(data, pi));
    q_hat.push_back(out.tables.back().q_hat_est);
  }
  out.behavior = mu_hat_rl(targets, std::span<const StateActionTable<double>>(q_hat));
  return out;
}

void write_dataset_csv(std::ostream& out, const OfflineDataset& data) {
  out << kDatasetCsvHeader << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& x : data.tuples) {
    out << x.t << ',' << x.s << ',' << x.a << ',' << x.r << ',' << x.s_next << '\n';
  }
  out.precision(old_precision);
}

OfflineDataset read_dataset_csv(std::istream& in, Index num_states, Index num_actions,
                                Index horizon) {
  OfflineDataset data{num_states, num_actions, horizon, {}, {}, {}};
  std::string line;
  if (!std::getline(in, line) || line != kDatasetCsvHeader) {
    throw InvalidInputError("dataset CSV must start with header " + std::string(kDatasetCsvHeader));
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    OfflineTuple x;
    char c1, c2, c3, c4;
    if (!(row >> x.t >> c1 >> x.s >> c2 >> x.a >> c3 >> x.r >> c4 >> x.s_next) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw InvalidInputError("malformed dataset CSV line " + std::to_string(line_no));
    }
    data.tuples.push_back(x);
  }
  data.validate();
  return data;
}

}  // namespace mpe
