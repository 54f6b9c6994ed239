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


#ifndef SMOOTHMECH_BUDGETS_HPP_
#define SMOOTHMECH_BUDGETS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "smoothmech/equilibrium.hpp"
#include "smoothmech/model.hpp"
#include "smoothmech/smoothness.hpp"

namespace smoothmech {

// Per-player budgets; +inf means unconstrained.
using BudgetProfile = std::vector<double>;

void validate_budgets(const BudgetProfile& budgets, int players);

// min(v, B) for an arbitrary valuation.
class CappedValuation : public Valuation {
 public:
  CappedValuation(ValuationPtr base, double budget);
  double value(std::span<const double> allocation) const override;
  double max_value() const override;
  const ValuationPtr& base() const { return base_; }
  double budget() const { return budget_; }

 private:
  ValuationPtr base_;
  double budget_;
};

// Tabulated inputs stay tabulated so class checks still apply.
ValuationProfile cap_profile(const ValuationProfile& profile, const BudgetProfile& budgets);

double effective_welfare(const ValuationProfile& profile, const BudgetProfile& budgets,
                         const std::vector<Allocation>& allocation);
Optimum optimal_effective_welfare(const ValuationProfile& profile, const BudgetProfile& budgets,
                                  const OutcomeSpace& space);

// v_i(x_i) - p_i, or nullopt when p_i exceeds the budget.
std::optional<double> budgeted_utility(const Valuation& value, const Outcome& outcome, int player,
                                       double budget);

// Normal form with cells flagged invalid for players paying above budget.
GameTable budgeted_table(const Mechanism& mechanism, const ValuationProfile& profile,
                         const BudgetProfile& budgets);

struct EffectiveBoundReport {
  bool refused = false;
  std::string reason;
  ConservativeAudit audit;  // the failing audit when refused
  int audit_player = -1;
  double effective_optimum = 0.0;
  double bound = 0.0;  // poa_bound(lambda, mu)
  double min_welfare = 0.0;
  double min_effective_welfare = 0.0;  // of the welfare-minimizing CE
  double ratio = 0.0;
  bool refinement_empty = false;
  bool pass = false;
};

// Audits the source's deviations on the capped profile for conservativeness,
// then compares the minimum budgeted-CE welfare with
// poa_bound(lambda, mu) times the optimal effective welfare. Sequential
// compositions are refused.
EffectiveBoundReport certify_effective_bound(const Mechanism& mechanism,
                                             const ValuationProfile& profile,
                                             const BudgetProfile& budgets, double lambda,
                                             double mu,
                                             const DeviationSource& source = canonical_deviation_source());

}  // namespace smoothmech

#endif  // SMOOTHMECH_BUDGETS_HPP_
