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

#include <cstddef>
#include <string_view>
#include <vector>

#include "uttsel/textnorm.hpp"

namespace uttsel {

enum class EditKind { kHit, kSubstitution, kDeletion, kInsertion };

/// One step of an alignment path. `ref` is unset (npos) for insertions and
/// `hyp` is unset for deletions.
struct EditOp {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  EditKind kind;
  std::size_t ref = npos;
  std::size_t hyp = npos;

  bool operator==(const EditOp&) const = default;
};

struct AlignmentResult {
  std::size_t hits = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::vector<EditOp> path;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  std::size_t ref_length() const { return hits + substitutions + deletions; }
  std::size_t hyp_length() const { return hits + substitutions + insertions; }
};

/// Minimum edit distance alignment with unit costs. Among equal-cost paths the
/// backtrace prefers hit/substitution, then deletion, then insertion.
AlignmentResult align_words(const Tokens& ref, const Tokens& hyp);

/// (S + D + I) / ref_len. For an empty reference the result is 0 without
/// insertions and 1 otherwise. Throws std::invalid_argument if ref_len does
/// not equal H + S + D.
double wer(const AlignmentResult& a, std::size_t ref_len);

/// True iff the normalized reference and hypothesis token sequences are equal.
/// The hypothesis side also gets repeat collapsing.
bool utterance_correct(std::string_view ref, std::string_view hyp, const NormalizationConfig& cfg);

}  // namespace uttsel
