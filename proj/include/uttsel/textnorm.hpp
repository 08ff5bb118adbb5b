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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uttsel {

using Tokens = std::vector<std::string>;

/// Text normalization applied before any comparison of ASR output, prompts and
/// manual annotations.
///
/// `strip_punctuation` holds the characters deleted from the text; when empty
/// (std::nullopt) every code point in Unicode general category P* is deleted.
struct NormalizationConfig {
  bool lowercase = true;
  std::optional<std::u32string> strip_punctuation;
  bool collapse_whitespace = true;
  int hallucination_repeat_ngram_max = 3;
  int hallucination_repeat_threshold = 3;
  bool space_repair_enabled = true;
  int space_repair_min_run = 3;

  /// Throws std::invalid_argument when a threshold is out of range.
  void check() const;
};

/// Splits on Unicode white space.
Tokens split_tokens(std::string_view text);
std::string join_tokens(const Tokens& tokens);

/// Collapses any run of >= k consecutive identical n-grams (n = 1..n_max,
/// smallest first) to a single occurrence, repeating until no such run is left.
Tokens collapse_hallucinated_repeats(Tokens tokens, int n_max, int k);

/// Joins every maximal run of >= min_run single-letter tokens into one token.
Tokens repair_spurious_spaces(Tokens tokens, int min_run);

/// Normalizes ASR output: case folding, punctuation removal, whitespace
/// cleanup, then repeat collapsing and space repair when enabled.
std::string normalize(std::string_view text, const NormalizationConfig& cfg);
Tokens normalize_tokens(std::string_view text, const NormalizationConfig& cfg);

/// Same as normalize() but never collapses repeats. Human-written prompts and
/// annotations go through this path.
std::string normalize_reference(std::string_view text, const NormalizationConfig& cfg);
Tokens normalize_reference_tokens(std::string_view text, const NormalizationConfig& cfg);

}  // namespace uttsel
