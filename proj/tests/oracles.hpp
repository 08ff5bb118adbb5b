// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reference implementations used as test oracles. They favour obviousness
// over speed and share no code with the library.

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace uttsel::test {

using Words = std::vector<std::string>;

namespace detail {
inline void walk(const Words& r, const Words& h, std::size_t i, std::size_t j, std::size_t cost, std::size_t& best) {
  if (cost >= best) return;
  if (i == r.size() && j == h.size()) {
    best = cost;
    return;
  }
  if (i < r.size() && j < h.size()) walk(r, h, i + 1, j + 1, cost + (r[i] == h[j] ? 0 : 1), best);
  if (i < r.size()) walk(r, h, i + 1, j, cost + 1, best);
  if (j < h.size()) walk(r, h, i, j + 1, cost + 1, best);
}
}  // namespace detail

// Minimum S+D+I over every monotone alignment path, by enumeration. Paths
// whose running cost already reaches the best complete path are cut off,
// which never discards a cheaper alignment.
inline std::size_t brute_force_edit_cost(const Words& ref, const Words& hyp) {
  std::size_t best = ref.size() + hyp.size() + 1;
  detail::walk(ref, hyp, 0, 0, 0, best);
  return best;
}

// Largest set of index pairs (i, j) with a[i] == b[j], strictly increasing in
// both coordinates, found by trying every subset of candidate pairs.
template <class T>
std::size_t brute_force_max_monotone_matching(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (a[i] == b[j]) candidates.emplace_back(i, j);
    }
  }
  std::size_t best = 0;
  const std::size_t n = candidates.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::pair<std::size_t, std::size_t>> chosen;
    for (std::size_t c = 0; c < n; ++c) {
      if (mask & (std::size_t{1} << c)) chosen.push_back(candidates[c]);
    }
    bool ok = true;
    for (std::size_t c = 1; c < chosen.size() && ok; ++c) {
      ok = chosen[c].first > chosen[c - 1].first && chosen[c].second > chosen[c - 1].second;
    }
    if (ok) best = std::max(best, chosen.size());
  }
  return best;
}

}  // namespace uttsel::test
