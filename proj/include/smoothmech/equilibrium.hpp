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


#ifndef SMOOTHMECH_EQUILIBRIUM_HPP_
#define SMOOTHMECH_EQUILIBRIUM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "smoothmech/model.hpp"
#include "smoothmech/smoothness.hpp"

namespace smoothmech {

enum class EquilibriumKind { kCorrelated, kCoarseCorrelated, kLearned, kBayes };
std::string to_string(EquilibriumKind kind);

enum class WelfareSense { kMin, kMax };
enum class Refinement { kNone, kNoOverbidding };

struct EquilibriumDistribution {
  EquilibriumKind kind = EquilibriumKind::kCorrelated;
  std::vector<double> probability;  // dense over the table's profiles
  double incentive_residual = 0.0;
  double welfare = 0.0;
  double revenue = 0.0;
  // The LP was infeasible: the refinement (or budget exclusions) emptied the
  // polytope and no welfare claim is made.
  bool refinement_empty = false;
  std::vector<double> swap_regret;  // learned: per player
  std::size_t rounds = 0;
};

inline constexpr std::size_t kDefaultCeCells = 40'000'000;

// Extremal expected welfare over the (coarse) correlated equilibria of the
// table. No-overbidding needs table.willingness. Cells marked invalid get
// probability 0, and a swap a_i -> a_i' whose target is invalid for i against
// some a_-i imposes no constraint.
EquilibriumDistribution ce_extreme_welfare(const GameTable& table, WelfareSense sense,
                                           Refinement refinement = Refinement::kNone,
                                           bool coarse = false,
                                           std::size_t max_cells = kDefaultCeCells);

// Largest expected gain of a swap (or, coarse, of a fixed action) for any
// player under the distribution; 0 for an exact equilibrium.
double incentive_residual(const GameTable& table, const std::vector<double>& probability,
                          bool coarse = false);
// Per player: sum over own actions of the best swap gain.
std::vector<double> swap_regret(const GameTable& table, const std::vector<double>& probability);

struct LearnOptions {
  std::uint64_t seed = 0;
  // Record sampled play instead of the product of mixed strategies.
  bool sampled = false;
  double fixed_point_tolerance = 1e-12;
};

// Blum-Mansour swap-regret dynamics: per player, one Hedge expert per action
// with rate sqrt(ln g / T); play is the stationary distribution of the
// experts' stochastic matrix. Gains are expected utilities against the
// others' mixed play, rescaled to [0, 1].
EquilibriumDistribution swap_regret_learn(const GameTable& table, std::size_t rounds,
                                          const LearnOptions& options = {});

struct BayesianGame {
  std::vector<std::vector<ValuationPtr>> types;  // per player
  std::vector<std::vector<double>> priors;        // independent, per player
  void validate(int players) const;
};

struct BayesOptions {
  int max_iters = 2000;
  double damping = 0.5;
  std::uint64_t seed = 0;
  double target_epsilon = 0.0;  // stop early once reached
};

struct BayesResult {
  // strategy[i][t][a]: probability that player i of type t plays grid action a.
  std::vector<std::vector<std::vector<double>>> strategy;
  double epsilon = kInf;  // max per-type gain of a grid deviation
  double welfare = 0.0;
  double expected_optimum = 0.0;
  int iterations = 0;
  // Interim expected utility per player and type.
  std::vector<std::vector<double>> utility;
};

// Damped simultaneous best response over behavioral strategies; returns the
// iterate with the smallest epsilon.
BayesResult bayes_best_response(const Mechanism& mechanism, const BayesianGame& game,
                                const BayesOptions& options = {});

// Expected interim utility of player i with type t against the others'
// strategies in `result` when playing the grid mixture `mix`.
double bayes_interim_utility(const Mechanism& mechanism, const BayesianGame& game,
                             const BayesResult& result, int player, int type,
                             const std::vector<double>& mix);

// Rounds a scalar deviation to a mixture over a scalar grid: each bid moves
// to the smallest grid bid at or above it (the top bid when none is).
std::vector<double> project_to_grid(const DeviationDistribution& dist,
                                    const std::vector<Action>& grid);

struct BluffingCheck {
  double max_gain = -kInf;  // over players and types, grid-projected deviation
  double max_continuous_gain = -kInf;
  int player = -1;
  int type = -1;
};

// The random-sample deviation: draw w from the prior, play the source's
// deviation for (v_i, w_-i) given own action s_i(w_i).
BluffingCheck check_bluffing(const Mechanism& mechanism, const BayesianGame& game,
                             const BayesResult& result, const DeviationSource& source);

struct PoaReport {
  double ratio = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = false;
};

// ratio = welfare / opt against bound - (residual n / opt + 1e-7).
PoaReport verify_poa(double welfare, double residual, int players, double opt, double bound);
PoaReport verify_poa(const EquilibriumDistribution& dist, int players, double opt, double bound);

struct NoOverbiddingReport {
  bool pass = true;
  int player = -1;  // first violating player
  std::vector<double> expected_willingness;
  std::vector<double> expected_value;
};

NoOverbiddingReport check_no_overbidding(const GameTable& table,
                                         const std::vector<double>& probability,
                                         double tolerance = 1e-9);
NoOverbiddingReport check_no_overbidding(const Mechanism& mechanism,
                                         const ValuationProfile& profile,
                                         const std::vector<double>& probability,
                                         double tolerance = 1e-9);

}  // namespace smoothmech

#endif  // SMOOTHMECH_EQUILIBRIUM_HPP_
