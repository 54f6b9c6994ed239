// Copyright 2026 The smoothmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "smoothmech/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "smoothmech/lp.hpp"

namespace smoothmech {

std::string to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::kCorrelated: return "correlated_exact";
    case EquilibriumKind::kCoarseCorrelated: return "coarse_correlated_exact";
    case EquilibriumKind::kLearned: return "learned_empirical";
    case EquilibriumKind::kBayes: return "bayes_strategy";
  }
  return "?";
}

namespace {

bool invalid_for(const GameTable& t, std::size_t p, int i) {
  return !t.invalid.empty() && t.invalid[p * t.num_players + i] != 0;
}

bool invalid_any(const GameTable& t, std::size_t p) {
  for (int i = 0; i < t.num_players; ++i)
    if (invalid_for(t, p, i)) return true;
  return false;
}

// Opponent profiles of player i, as table indices with i's action at 0.
std::vector<std::size_t> opponent_profiles(const GameTable& t, int i) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < t.num_profiles; ++p)
    if (t.action_of(p, i) == 0) out.push_back(p);
  return out;
}

// A swap a -> b for player i is dropped when b is unaffordable somewhere.
bool swap_affordable(const GameTable& t, int i, int b, const std::vector<std::size_t>& opp) {
  if (t.invalid.empty()) return true;
  for (std::size_t base : opp)
    if (invalid_for(t, t.with_action(base, i, b), i)) return false;
  return true;
}

void summarize(const GameTable& t, EquilibriumDistribution& d) {
  d.welfare = 0.0;
  d.revenue = 0.0;
  for (std::size_t p = 0; p < t.num_profiles; ++p) {
    if (d.probability[p] == 0.0) continue;
    d.welfare += d.probability[p] * t.welfare(p);
    d.revenue += d.probability[p] * t.revenue(p);
  }
}

}  // namespace

EquilibriumDistribution ce_extreme_welfare(const GameTable& table, WelfareSense sense,
                                           Refinement refinement, bool coarse,
                                           std::size_t max_cells) {
  const std::size_t N = table.num_profiles;
  const int n = table.num_players;
  if (refinement == Refinement::kNoOverbidding && table.willingness.size() != N * n)
    throw DomainError("no-overbidding refinement needs willingness to pay on the table");

  // Cells that may carry probability.
  std::vector<std::size_t> cells;
  std::vector<std::ptrdiff_t> position(N, -1);
  for (std::size_t p = 0; p < N; ++p)
    if (!invalid_any(table, p)) {
      position[p] = static_cast<std::ptrdiff_t>(cells.size());
      cells.push_back(p);
    }

  // Incentive rows sum_a A[r][a] p(a) <= 0, kept sparse.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  for (int i = 0; i < n; ++i) {
    const auto opp = opponent_profiles(table, i);
    const int g = table.num_actions[i];
    for (int b = 0; b < g; ++b) {
      if (!swap_affordable(table, i, b, opp)) continue;
      if (coarse) {
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t p = 0; p < N; ++p)
          row.emplace_back(p, table.u(table.with_action(p, i, b), i) - table.u(p, i));
        rows.push_back(std::move(row));
        continue;
      }
      for (int a = 0; a < g; ++a) {
        if (a == b) continue;
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t base : opp) {
          const std::size_t from = table.with_action(base, i, a);
          row.emplace_back(from, table.u(table.with_action(base, i, b), i) - table.u(from, i));
        }
        rows.push_back(std::move(row));
      }
    }
  }
  if (refinement == Refinement::kNoOverbidding)
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<std::size_t, double>> row;
      for (std::size_t p = 0; p < N; ++p)
        row.emplace_back(p, table.willingness[p * n + i] - table.value[p * n + i]);
      rows.push_back(std::move(row));
    }

  EquilibriumDistribution d;
  d.kind = coarse ? EquilibriumKind::kCoarseCorrelated : EquilibriumKind::kCorrelated;
  d.probability.assign(N, 0.0);
  if (cells.empty()) {
    d.refinement_empty = true;
    return d;
  }
  const std::size_t R = rows.size();
  if (cells.size() * (R + 1 + cells.size()) > max_cells)
    throw SizeError("correlated equilibrium LP too large (cells)",
                    cells.size() * (R + 1 + cells.size()), max_cells);

  // Minimize sum_a c(a) p(a) with c >= 0 (welfare shifted by its extreme,
  // negated for max) over {p >= 0, A p <= 0, sum p = 1}. Its dual,
  //   max z  s.t.  z - sum_r A[r][a] y_r <= c(a),  y >= 0,
  // starts feasible at y = 0, z = 0; p is the dual solution.
  std::vector<double> c(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) c[k] = table.welfare(cells[k]);
  const double shift = sense == WelfareSense::kMin ? *std::min_element(c.begin(), c.end())
                                                   : *std::max_element(c.begin(), c.end());
  for (double& x : c) x = sense == WelfareSense::kMin ? x - shift : shift - x;

  lp::LinearProgram dual(lp::Sense::kMaximize, std::vector<double>(R + 1, 0.0));
  dual.objective[R] = 1.0;
  std::vector<std::vector<double>> coeff(cells.size(), std::vector<double>(R + 1, 0.0));
  for (std::size_t r = 0; r < R; ++r)
    for (const auto& [p, a] : rows[r])
      if (position[p] >= 0) coeff[position[p]][r] -= a;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    coeff[k][R] = 1.0;
    dual.add(std::move(coeff[k]), lp::Relation::kLessEqual, c[k]);
  }
  dual.set_bounds(R, -kInf, kInf);

  lp::Options opts;
  opts.max_variables = R + 2;
  opts.max_rows = cells.size() + 1;
  const auto res = lp::solve(dual, opts);
  if (res.status == lp::Status::kUnbounded) {
    d.refinement_empty = true;
    return d;
  }
  if (res.status != lp::Status::kOptimal)
    throw NumericError("correlated equilibrium LP: " + lp::to_string(res.status));
  double total = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    d.probability[cells[k]] = std::max(res.duals[k], 0.0);
    total += d.probability[cells[k]];
  }
  if (!(total > 0.0)) throw NumericError("correlated equilibrium LP returned no distribution");
  for (double& x : d.probability) x /= total;
  summarize(table, d);
  d.incentive_residual = incentive_residual(table, d.probability, coarse);
  return d;
}

double incentive_residual(const GameTable& table, const std::vector<double>& probability,
                          bool coarse) {
  double worst = 0.0;
  for (int i = 0; i < table.num_players; ++i) {
    const auto opp = opponent_profiles(table, i);
    const int g = table.num_actions[i];
    for (int b = 0; b < g; ++b) {
      if (!swap_affordable(table, i, b, opp)) continue;
      double coarse_gain = 0.0;
      for (int a = 0; a < g; ++a) {
        double gain = 0.0;
        for (std::size_t base : opp) {
          const std::size_t from = table.with_action(base, i, a);
          gain += probability[from] * (table.u(table.with_action(base, i, b), i) - table.u(from, i));
        }
        coarse_gain += gain;
        if (!coarse && a != b) worst = std::max(worst, gain);
      }
      if (coarse) worst = std::max(worst, coarse_gain);
    }
  }
  return worst;
}

std::vector<double> swap_regret(const GameTable& table, const std::vector<double>& probability) {
  std::vector<double> out(table.num_players, 0.0);
  for (int i = 0; i < table.num_players; ++i) {
    const auto opp = opponent_profiles(table, i);
    const int g = table.num_actions[i];
    for (int a = 0; a < g; ++a) {
      double best = 0.0;
      for (int b = 0; b < g; ++b) {
        if (b == a || !swap_affordable(table, i, b, opp)) continue;
        double gain = 0.0;
        for (std::size_t base : opp) {
          const std::size_t from = table.with_action(base, i, a);
          gain += probability[from] * (table.u(table.with_action(base, i, b), i) - table.u(from, i));
        }
        best = std::max(best, gain);
      }
      out[i] += best;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Swap-regret dynamics

namespace {

// Stationary distribution p = p Q of a row-stochastic matrix, warm-started
// from p. Falls back to a direct solve if iteration stalls.
void stationary(const std::vector<std::vector<double>>& Q, std::vector<double>& p, double tol) {
  const std::size_t g = Q.size();
  std::vector<double> next(g);
  for (int it = 0; it < 100000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t k = 0; k < g; ++k)
      for (std::size_t a = 0; a < g; ++a) next[a] += p[k] * Q[k][a];
    double diff = 0.0;
    for (std::size_t a = 0; a < g; ++a) diff += std::abs(next[a] - p[a]);
    p.swap(next);
    if (diff < tol) return;
  }
  // (Q^T - I) p = 0 with sum p = 1, by Gaussian elimination.
  std::vector<std::vector<double>> A(g, std::vector<double>(g + 1, 0.0));
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t k = 0; k < g; ++k) A[a][k] = Q[k][a] - (a == k ? 1.0 : 0.0);
  for (std::size_t k = 0; k < g; ++k) A[g - 1][k] = 1.0;
  A[g - 1][g] = 1.0;
  for (std::size_t c = 0; c < g; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < g; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    if (std::abs(A[c][c]) < 1e-300) throw NumericError("stationary distribution is singular");
    for (std::size_t r = 0; r < g; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t j = c; j <= g; ++j) A[r][j] -= f * A[c][j];
    }
  }
  for (std::size_t a = 0; a < g; ++a) p[a] = std::max(0.0, A[a][g] / A[a][a]);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= s;
}

}  // namespace

EquilibriumDistribution swap_regret_learn(const GameTable& table, std::size_t rounds,
                                          const LearnOptions& options) {
  if (rounds < 1) throw DomainError("swap_regret_learn needs at least one round");
  const int n = table.num_players;
  const std::size_t N = table.num_profiles;

  // Utility range per player for rescaling gains into [0, 1].
  std::vector<double> lo(n, kInf), hi(n, -kInf);
  for (std::size_t p = 0; p < N; ++p)
    for (int i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], table.u(p, i));
      hi[i] = std::max(hi[i], table.u(p, i));
    }

  // log_w[i][k][a]: log weight of action a in expert k of player i.
  std::vector<std::vector<std::vector<double>>> log_w(n);
  std::vector<std::vector<double>> play(n);
  std::vector<double> eta(n);
  for (int i = 0; i < n; ++i) {
    const int g = table.num_actions[i];
    log_w[i].assign(g, std::vector<double>(g, 0.0));
    play[i].assign(g, 1.0 / g);
    eta[i] = g > 1 ? std::sqrt(std::log(static_cast<double>(g)) / static_cast<double>(rounds)) : 0.0;
  }

  std::mt19937_64 rng(options.seed);
  std::vector<double> joint(N, 0.0);
  std::vector<std::vector<double>> Q;
  std::vector<std::vector<double>> gain(n);
  std::vector<int> idx(n);

  for (std::size_t t = 0; t < rounds; ++t) {
    for (int i = 0; i < n; ++i) {
      const int g = table.num_actions[i];
      Q.assign(g, std::vector<double>(g));
      for (int k = 0; k < g; ++k) {
        const double m = *std::max_element(log_w[i][k].begin(), log_w[i][k].end());
        double s = 0.0;
        for (int a = 0; a < g; ++a) s += (Q[k][a] = std::exp(log_w[i][k][a] - m));
        for (int a = 0; a < g; ++a) Q[k][a] /= s;
      }
      stationary(Q, play[i], options.fixed_point_tolerance);
    }

    // Expected utilities against the others' mixed play, and the joint.
    for (int i = 0; i < n; ++i) gain[i].assign(table.num_actions[i], 0.0);
    std::vector<double> sample_point;
    if (options.sampled) {
      for (int i = 0; i < n; ++i) {
        std::discrete_distribution<int> pick(play[i].begin(), play[i].end());
        idx[i] = pick(rng);
      }
      joint[table.index(idx)] += 1.0;
    }
    for (std::size_t p = 0; p < N; ++p) {
      table.decode(p, idx);
      double all = 1.0;
      for (int k = 0; k < n; ++k) all *= play[k][idx[k]];
      if (!options.sampled) joint[p] += all;
      for (int i = 0; i < n; ++i) {
        double w = 1.0;
        for (int k = 0; k < n; ++k)
          if (k != i) w *= play[k][idx[k]];
        if (w != 0.0) gain[i][idx[i]] += w * table.u(p, i);
      }
    }

    for (int i = 0; i < n; ++i) {
      const int g = table.num_actions[i];
      const double range = hi[i] - lo[i];
      for (int k = 0; k < g; ++k) {
        const double share = play[i][k] * eta[i];
        if (share == 0.0) continue;
        for (int a = 0; a < g; ++a) {
          const double r = range > 0.0 ? (gain[i][a] - lo[i]) / range : 0.0;
          log_w[i][k][a] += share * r;
        }
      }
    }
  }

  EquilibriumDistribution d;
  d.kind = EquilibriumKind::kLearned;
  d.rounds = rounds;
  d.probability = std::move(joint);
  for (double& x : d.probability) x /= static_cast<double>(rounds);
  summarize(table, d);
  d.swap_regret = swap_regret(table, d.probability);
  d.incentive_residual = incentive_residual(table, d.probability, false);
  return d;
}

// ---------------------------------------------------------------------------
// Bayesian dynamics

void BayesianGame::validate(int players) const {
  if (static_cast<int>(types.size()) != players || static_cast<int>(priors.size()) != players)
    throw DomainError("Bayesian game must list types and priors for every player");
  for (int i = 0; i < players; ++i) {
    if (types[i].empty() || types[i].size() != priors[i].size())
      throw DomainError("player " + std::to_string(i) + ": types and priors differ in length");
    double s = 0.0;
    for (double f : priors[i]) {
      if (!(f >= 0.0)) throw DomainError("prior probabilities must be nonnegative");
      s += f;
    }
    if (std::abs(s - 1.0) > 1e-9) throw DomainError("prior of player " + std::to_string(i) + " does not sum to 1");
    for (const auto& v : types[i])
      if (!v) throw DomainError("null type valuation");
  }
}

namespace {

struct BayesTables {
  int n = 0;
  std::vector<int> g;
  std::vector<std::vector<int>> decoded;  // per profile
  // util[i][t][profile], value[i][t][profile]
  std::vector<std::vector<std::vector<double>>> util, value;
};

BayesTables bayes_tables(const Mechanism& m, const BayesianGame& game) {
  BayesTables T;
  T.n = m.num_players();
  for (int i = 0; i < T.n; ++i) T.g.push_back(static_cast<int>(m.grid(i).size()));
  const std::size_t N = m.profile_count();
  if (N > kDefaultTableCap) throw SizeError("Bayesian game grid too large", N, kDefaultTableCap);
  T.util.resize(T.n);
  T.value.resize(T.n);
  for (int i = 0; i < T.n; ++i) {
    T.util[i].assign(game.types[i].size(), std::vector<double>(N));
    T.value[i].assign(game.types[i].size(), std::vector<double>(N));
  }
  std::vector<int> idx(T.n);
  std::vector<Action> a(T.n);
  for (std::size_t p = 0; p < N; ++p) {
    std::size_t c = p;
    for (int i = T.n - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(c % T.g[i]);
      c /= T.g[i];
    }
    T.decoded.push_back(idx);
    for (int i = 0; i < T.n; ++i) a[i] = m.grid(i)[idx[i]];
    const Outcome o = m.run(a);
    for (int i = 0; i < T.n; ++i)
      for (std::size_t t = 0; t < game.types[i].size(); ++t) {
        const double v = game.types[i][t]->value(o.allocation[i]);
        T.value[i][t][p] = v;
        T.util[i][t][p] = v - o.payments[i];
      }
  }
  return T;
}

// Marginal action distribution of player k averaged over types.
std::vector<double> marginal(const BayesianGame& game, const BayesResult& r, int k) {
  std::vector<double> m(r.strategy[k][0].size(), 0.0);
  for (std::size_t t = 0; t < game.types[k].size(); ++t)
    for (std::size_t a = 0; a < m.size(); ++a) m[a] += game.priors[k][t] * r.strategy[k][t][a];
  return m;
}

// interim[i][t][a]: expected utility of action a for type t of player i.
std::vector<std::vector<std::vector<double>>> interim(const BayesTables& T, const BayesianGame& game,
                                                      const BayesResult& r) {
  std::vector<std::vector<double>> marg(T.n);
  for (int k = 0; k < T.n; ++k) marg[k] = marginal(game, r, k);
  std::vector<std::vector<std::vector<double>>> out(T.n);
  for (int i = 0; i < T.n; ++i) {
    out[i].assign(game.types[i].size(), std::vector<double>(T.g[i], 0.0));
    for (std::size_t p = 0; p < T.decoded.size(); ++p) {
      const auto& idx = T.decoded[p];
      double w = 1.0;
      for (int k = 0; k < T.n; ++k)
        if (k != i) w *= marg[k][idx[k]];
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < game.types[i].size(); ++t) out[i][t][idx[i]] += w * T.util[i][t][p];
    }
  }
  return out;
}

void evaluate(const BayesTables& T, const BayesianGame& game, BayesResult& r) {
  const auto u = interim(T, game, r);
  r.epsilon = 0.0;
  r.utility.assign(T.n, {});
  for (int i = 0; i < T.n; ++i)
    for (std::size_t t = 0; t < game.types[i].size(); ++t) {
      double cur = 0.0;
      for (int a = 0; a < T.g[i]; ++a) cur += r.strategy[i][t][a] * u[i][t][a];
      const double best = *std::max_element(u[i][t].begin(), u[i][t].end());
      r.utility[i].push_back(cur);
      r.epsilon = std::max(r.epsilon, best - cur);
    }

  // Welfare over type profiles and induced action profiles.
  r.welfare = 0.0;
  std::vector<int> types(T.n, 0);
  while (true) {
    double pt = 1.0;
    for (int k = 0; k < T.n; ++k) pt *= game.priors[k][types[k]];
    if (pt > 0.0)
      for (std::size_t p = 0; p < T.decoded.size(); ++p) {
        const auto& idx = T.decoded[p];
        double w = pt;
        for (int k = 0; k < T.n && w != 0.0; ++k) w *= r.strategy[k][types[k]][idx[k]];
        if (w == 0.0) continue;
        double sw = 0.0;
        for (int k = 0; k < T.n; ++k) sw += T.value[k][types[k]][p];
        r.welfare += w * sw;
      }
    int k = T.n - 1;
    while (k >= 0 && ++types[k] == static_cast<int>(game.types[k].size())) types[k--] = 0;
    if (k < 0) break;
  }
}

}  // namespace

BayesResult bayes_best_response(const Mechanism& mechanism, const BayesianGame& game,
                                const BayesOptions& options) {
  const int n = mechanism.num_players();
  game.validate(n);
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw DomainError("damping must lie in (0, 1]");
  const auto T = bayes_tables(mechanism, game);

  BayesResult cur;
  cur.strategy.resize(n);
  for (int i = 0; i < n; ++i)
    cur.strategy[i].assign(game.types[i].size(),
                           std::vector<double>(T.g[i], 1.0 / T.g[i]));
  evaluate(T, game, cur);
  BayesResult best = cur;

  for (int it = 1; it <= options.max_iters; ++it) {
    const auto u = interim(T, game, cur);
    for (int i = 0; i < n; ++i)
      for (std::size_t t = 0; t < game.types[i].size(); ++t) {
        const int br = static_cast<int>(std::max_element(u[i][t].begin(), u[i][t].end()) - u[i][t].begin());
        for (int a = 0; a < T.g[i]; ++a)
          cur.strategy[i][t][a] = (1.0 - options.damping) * cur.strategy[i][t][a] +
                                  (a == br ? options.damping : 0.0);
      }
    evaluate(T, game, cur);
    cur.iterations = it;
    if (cur.epsilon < best.epsilon) best = cur;
    if (best.epsilon <= options.target_epsilon) break;
  }
  best.iterations = cur.iterations;

  best.expected_optimum = 0.0;
  std::vector<int> types(n, 0);
  while (true) {
    double pt = 1.0;
    ValuationProfile v;
    for (int k = 0; k < n; ++k) {
      pt *= game.priors[k][types[k]];
      v.push_back(game.types[k][types[k]]);
    }
    if (pt > 0.0) best.expected_optimum += pt * mechanism.optimum(v).value;
    int k = n - 1;
    while (k >= 0 && ++types[k] == static_cast<int>(game.types[k].size())) types[k--] = 0;
    if (k < 0) break;
  }
  return best;
}

double bayes_interim_utility(const Mechanism& mechanism, const BayesianGame& game,
                             const BayesResult& result, int player, int type,
                             const std::vector<double>& mix) {
  const auto T = bayes_tables(mechanism, game);
  const auto u = interim(T, game, result);
  double s = 0.0;
  for (std::size_t a = 0; a < mix.size(); ++a) s += mix[a] * u[player][type][a];
  return s;
}

std::vector<double> project_to_grid(const DeviationDistribution& dist,
                                    const std::vector<Action>& grid) {
  using Family = DeviationDistribution::Family;
  for (const auto& a : grid)
    if (a.size() != 1) throw DomainError("grid projection needs a scalar grid");
  if (dist.embed.coords != std::vector<int>{0} || dist.embed.base.size() != 1)
    throw DomainError("grid projection needs a scalar embedding");
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return grid[x][0] < grid[y][0]; });

  std::vector<double> mix(grid.size(), 0.0);
  auto at_or_above = [&](double b) {
    for (std::size_t k : order)
      if (grid[k][0] >= b - 1e-12) return k;
    return order.back();
  };
  // CDF on [0, cap] for the continuous families.
  auto cdf = [&](double t) {
    t = std::clamp(t, 0.0, dist.cap);
    if (dist.family == Family::kUniform) return dist.cap > 0.0 ? t / dist.cap : 1.0;
    return dist.beta * std::log(dist.value / (dist.value - t));
  };
  switch (dist.family) {
    case Family::kPoint: mix[at_or_above(dist.point)] = 1.0; break;
    case Family::kDiscrete:
      for (const auto& [w, a] : dist.discrete) mix[at_or_above(a.at(0))] += w;
      break;
    case Family::kMixture:
      for (const auto& [w, part] : dist.mixture) {
        const auto sub = project_to_grid(part, grid);
        for (std::size_t k = 0; k < mix.size(); ++k) mix[k] += w * sub[k];
      }
      break;
    case Family::kUniform:
    case Family::kReciprocal: {
      if (dist.cap <= 0.0) {
        mix[at_or_above(0.0)] = 1.0;
        break;
      }
      double prev = 0.0;  // bids in (prev, grid value] move up to it
      double covered = 0.0;
      for (std::size_t k : order) {
        const double g = grid[k][0];
        if (g <= prev && covered > 0.0) continue;
        const double m = cdf(g) - covered;
        if (m > 0.0) {
          mix[k] += m;
          covered += m;
        }
        prev = g;
      }
      if (covered < 1.0) mix[order.back()] += 1.0 - covered;
      break;
    }
    case Family::kCustom: throw DomainError("grid projection of a custom deviation");
  }
  return mix;
}

BluffingCheck check_bluffing(const Mechanism& mechanism, const BayesianGame& game,
                             const BayesResult& result, const DeviationSource& source) {
  const int n = mechanism.num_players();
  game.validate(n);
  const auto T = bayes_tables(mechanism, game);
  const auto u = interim(T, game, result);
  std::vector<std::vector<double>> marg(n);
  for (int k = 0; k < n; ++k) marg[k] = marginal(game, result, k);

  BluffingCheck out;
  for (int i = 0; i < n; ++i) {
    for (std::size_t ti = 0; ti < game.types[i].size(); ++ti) {
      double projected = 0.0, continuous = 0.0;
      std::vector<int> w(n, 0);
      while (true) {
        double pw = 1.0;
        ValuationProfile v;
        for (int k = 0; k < n; ++k) {
          pw *= game.priors[k][w[k]];
          v.push_back(k == i ? game.types[i][ti] : game.types[k][w[k]]);
        }
        if (pw > 0.0) {
          const Optimum opt = mechanism.optimum(v);
          for (int a = 0; a < T.g[i]; ++a) {
            const double pa = source.uses_own_action ? result.strategy[i][w[i]][a] : (a == 0 ? 1.0 : 0.0);
            if (pa == 0.0) continue;
            const auto dev = source.make(mechanism, v, i, mechanism.grid(i)[a], opt);
            const auto mix = project_to_grid(dev, mechanism.grid(i));
            for (int b = 0; b < T.g[i]; ++b) projected += pw * pa * mix[b] * u[i][ti][b];
            // Continuous deviation against the others' marginal play.
            for (std::size_t p = 0; p < T.decoded.size(); ++p) {
              const auto& idx = T.decoded[p];
              if (idx[i] != 0) continue;
              double q = 1.0;
              std::vector<Action> prof(n);
              for (int k = 0; k < n; ++k) {
                prof[k] = mechanism.grid(k)[idx[k]];
                if (k != i) q *= marg[k][idx[k]];
              }
              if (q == 0.0) continue;
              continuous += pw * pa * q *
                            deviation_expected_utility(mechanism, *game.types[i][ti], dev, prof, i);
            }
          }
        }
        int k = n - 1;
        while (k >= 0 && ++w[k] == static_cast<int>(game.types[k].size())) w[k--] = 0;
        if (k < 0) break;
      }
      const double base = result.utility[i][ti];
      if (projected - base > out.max_gain) {
        out.max_gain = projected - base;
        out.player = i;
        out.type = static_cast<int>(ti);
      }
      out.max_continuous_gain = std::max(out.max_continuous_gain, continuous - base);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

PoaReport verify_poa(double welfare, double residual, int players, double opt, double bound) {
  PoaReport r;
  r.bound = bound;
  if (opt <= 0.0) {
    r.ratio = 1.0;
    r.pass = true;
    return r;
  }
  r.ratio = welfare / opt;
  r.slack = residual * players / opt + 1e-7;
  r.pass = r.ratio >= bound - r.slack;
  return r;
}

PoaReport verify_poa(const EquilibriumDistribution& dist, int players, double opt, double bound) {
  return verify_poa(dist.welfare, dist.incentive_residual, players, opt, bound);
}

NoOverbiddingReport check_no_overbidding(const GameTable& table,
                                         const std::vector<double>& probability,
                                         double tolerance) {
  const int n = table.num_players;
  if (table.willingness.size() != table.num_profiles * n)
    throw DomainError("no-overbidding check needs willingness to pay on the table");
  NoOverbiddingReport r;
  r.expected_willingness.assign(n, 0.0);
  r.expected_value.assign(n, 0.0);
  for (std::size_t p = 0; p < table.num_profiles; ++p)
    for (int i = 0; i < n; ++i) {
      r.expected_willingness[i] += probability[p] * table.willingness[p * n + i];
      r.expected_value[i] += probability[p] * table.value[p * n + i];
    }
  for (int i = 0; i < n; ++i)
    if (r.expected_willingness[i] > r.expected_value[i] + tolerance) {
      r.pass = false;
      r.player = i;
      break;
    }
  return r;
}

NoOverbiddingReport check_no_overbidding(const Mechanism& mechanism,
                                         const ValuationProfile& profile,
                                         const std::vector<double>& probability,
                                         double tolerance) {
  GameTable table = to_normal_form(mechanism, profile);
  attach_willingness_to_pay(table, mechanism);
  if (probability.size() != table.num_profiles)
    throw DomainError("distribution size differs from the game's profile count");
  return check_no_overbidding(table, probability, tolerance);
}

}  // namespace smoothmech
