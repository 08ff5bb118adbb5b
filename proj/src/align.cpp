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

#include "uttsel/align.hpp"

#include <algorithm>
#include <stdexcept>

namespace uttsel {

AlignmentResult align_words(const Tokens& ref, const Tokens& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t width = m + 1;
  std::vector<std::size_t> cost((n + 1) * width);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * width + j]; };

  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  AlignmentResult result;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (same) {
          result.path.push_back({EditKind::kHit, i - 1, j - 1});
          ++result.hits;
        } else {
          result.path.push_back({EditKind::kSubstitution, i - 1, j - 1});
          ++result.substitutions;
        }
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      result.path.push_back({EditKind::kDeletion, i - 1, EditOp::npos});
      ++result.deletions;
      --i;
    } else {
      result.path.push_back({EditKind::kInsertion, EditOp::npos, j - 1});
      ++result.insertions;
      --j;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

double wer(const AlignmentResult& a, std::size_t ref_len) {
  if (ref_len != a.ref_length()) {
    throw std::invalid_argument("reference length " + std::to_string(ref_len) +
                                " does not match alignment counts H+S+D=" +
                                std::to_string(a.ref_length()));
  }
  if (ref_len == 0) return a.insertions == 0 ? 0.0 : 1.0;
  return static_cast<double>(a.errors()) / static_cast<double>(ref_len);
}

bool utterance_correct(std::string_view ref, std::string_view hyp, const NormalizationConfig& cfg) {
  return normalize_reference_tokens(ref, cfg) == normalize_tokens(hyp, cfg);
}

}  // namespace uttsel
