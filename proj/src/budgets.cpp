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


#include "smoothmech/budgets.hpp"

#include <algorithm>
#include <cmath>

#include "smoothmech/composition.hpp"
#include "smoothmech/valuations.hpp"

namespace smoothmech {

void validate_budgets(const BudgetProfile& budgets, int players) {
  if (static_cast<int>(budgets.size()) != players)
    throw DomainError("budget profile has " + std::to_string(budgets.size()) + " entries for " +
                      std::to_string(players) + " players");
  for (double b : budgets)
    if (!(b >= 0.0)) throw DomainError("budgets must be nonnegative");
}

CappedValuation::CappedValuation(ValuationPtr base, double budget)
    : base_(std::move(base)), budget_(budget) {
  if (!base_) throw DomainError("capped valuation needs a base valuation");
  if (!(budget >= 0.0)) throw DomainError("budget must be nonnegative");
}

double CappedValuation::value(std::span<const double> allocation) const {
  return std::min(base_->value(allocation), budget_);
}

double CappedValuation::max_value() const { return std::min(base_->max_value(), budget_); }

ValuationProfile cap_profile(const ValuationProfile& profile, const BudgetProfile& budgets) {
  validate_budgets(budgets, static_cast<int>(profile.size()));
  ValuationProfile out;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (std::isinf(budgets[i])) {
      out.push_back(profile[i]);
    } else if (const auto* t = dynamic_cast<const TabulatedValuation*>(profile[i].get())) {
      out.push_back(std::make_shared<TabulatedValuation>(cap_valuation(*t, budgets[i])));
    } else {
      out.push_back(std::make_shared<CappedValuation>(profile[i], budgets[i]));
    }
  }
  return out;
}

double effective_welfare(const ValuationProfile& profile, const BudgetProfile& budgets,
                         const std::vector<Allocation>& allocation) {
  validate_budgets(budgets, static_cast<int>(profile.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i)
    s += std::min(profile[i]->value(allocation[i]), budgets[i]);
  return s;
}

Optimum optimal_effective_welfare(const ValuationProfile& profile, const BudgetProfile& budgets,
                                  const OutcomeSpace& space) {
  return optimal_welfare(cap_profile(profile, budgets), space);
}

std::optional<double> budgeted_utility(const Valuation& value, const Outcome& outcome, int player,
                                       double budget) {
  if (outcome.payments[player] > budget) return std::nullopt;
  return value.value(outcome.allocation[player]) - outcome.payments[player];
}

GameTable budgeted_table(const Mechanism& mechanism, const ValuationProfile& profile,
                         const BudgetProfile& budgets) {
  const int n = mechanism.num_players();
  validate_budgets(budgets, n);
  GameTable t = to_normal_form(mechanism, profile);
  t.invalid.assign(t.num_profiles * n, 0);
  for (std::size_t p = 0; p < t.num_profiles; ++p)
    for (int i = 0; i < n; ++i)
      if (t.payment[p * n + i] > budgets[i]) t.invalid[p * n + i] = 1;
  return t;
}

EffectiveBoundReport certify_effective_bound(const Mechanism& mechanism,
                                             const ValuationProfile& profile,
                                             const BudgetProfile& budgets, double lambda,
                                             double mu, const DeviationSource& source) {
  if (dynamic_cast<const SequentialComposition*>(&mechanism))
    throw DomainError("budget bounds do not extend to sequential composition");
  const int n = mechanism.num_players();
  validate_budgets(budgets, n);

  EffectiveBoundReport r;
  const ValuationProfile capped = cap_profile(profile, budgets);

  // Capping must keep XOS bidders XOS.
  for (int i = 0; i < n; ++i) {
    const auto* t = dynamic_cast<const TabulatedValuation*>(profile[i].get());
    if (!t || std::isinf(budgets[i]) || !dynamic_cast<const SimultaneousComposition*>(&mechanism))
      continue;
    const auto rep = xos_from_fractional(*t);
    if (rep.beta > 1.0 + 1e-9) continue;
    const auto capped_rep = cap_xos(rep, t->space(), budgets[i]);
    if (!verify_xos(capped_rep, cap_valuation(*t, budgets[i])).pass)
      throw NumericError("capped XOS representation does not reproduce min(v, B)");
  }

  const Optimum capped_opt = mechanism.optimum(capped);
  for (int i = 0; i < n; ++i) {
    const auto dev = source.make(mechanism, capped, i, mechanism.grid(i)[0], capped_opt);
    const auto audit = check_conservative(mechanism, dev, *capped[i], i);
    if (!audit.pass) {
      r.refused = true;
      r.reason = "deviation of player " + std::to_string(i) + " is not conservative";
      r.audit = audit;
      r.audit_player = i;
      return r;
    }
  }

  r.effective_optimum = optimal_effective_welfare(profile, budgets, mechanism.outcome_space()).value;
  r.bound = poa_bound(lambda, mu);
  const GameTable table = budgeted_table(mechanism, profile, budgets);
  const auto ce = ce_extreme_welfare(table, WelfareSense::kMin);
  if (ce.refinement_empty) {
    r.refinement_empty = true;
    r.reason = "no budget-feasible correlated equilibrium";
    return r;
  }
  r.min_welfare = ce.welfare;
  for (std::size_t p = 0; p < table.num_profiles; ++p) {
    if (ce.probability[p] == 0.0) continue;
    for (int i = 0; i < n; ++i)
      r.min_effective_welfare += ce.probability[p] * std::min(table.value[p * n + i], budgets[i]);
  }
  const auto poa = verify_poa(ce, n, r.effective_optimum, r.bound);
  r.ratio = poa.ratio;
  r.pass = poa.pass;
  return r;
}

}  // namespace smoothmech
