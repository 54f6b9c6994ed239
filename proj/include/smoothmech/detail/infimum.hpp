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

#ifndef SMOOTHMECH_DETAIL_INFIMUM_HPP_
#define SMOOTHMECH_DETAIL_INFIMUM_HPP_

#include <algorithm>
#include <vector>

namespace smoothmech {

template <class Predicate>
double infimum_winning(std::vector<double> candidates, Predicate wins) {
  candidates.push_back(0.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  while (!candidates.empty() && candidates.front() < 0.0) candidates.erase(candidates.begin());
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const double c = candidates[r];
    const double next = r + 1 < candidates.size() ? candidates[r + 1] : 2.0 * c + 1.0;
    if (wins(c) || wins(0.5 * (c + next))) return c;
  }
  return kInf;
}

}  // namespace smoothmech

#endif  // SMOOTHMECH_DETAIL_INFIMUM_HPP_
