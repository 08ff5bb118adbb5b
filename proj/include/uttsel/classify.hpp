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

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "uttsel/corpus.hpp"
#include "uttsel/llmgate.hpp"
#include "uttsel/textnorm.hpp"

namespace uttsel {

enum class SelectorKind { kPrompt, kLlm, kAgreementPrompt, kAgreementLlm };

std::string_view to_string(SelectorKind kind);
SelectorKind parse_selector(std::string_view text);
/// Material a selector applies to.
MaterialKind selector_material(SelectorKind kind);
bool is_agreement(SelectorKind kind);

struct Prediction {
  std::string utterance_id;
  SelectorKind selector = SelectorKind::kPrompt;
  /// Model name, or "A+B" for agreement selectors.
  std::string model;
  bool positive = false;

  bool operator==(const Prediction&) const = default;
};

enum class TruthSource { kReferenceMatch, kReadFlag };

std::string_view to_string(TruthSource source);

struct GroundTruth {
  std::string utterance_id;
  std::string model;
  bool reliable = false;
  TruthSource source = TruthSource::kReferenceMatch;

  bool operator==(const GroundTruth&) const = default;
};

/// True iff the normalized ASR output equals the normalized prompt.
bool select_by_prompt(std::string_view asr_output, std::string_view prompt, const NormalizationConfig& cfg);

/// Overload taking the record; throws std::invalid_argument without a prompt.
bool select_by_prompt(const UtteranceRecord& record, std::string_view model, const NormalizationConfig& cfg);

/// Asks the classifier about the normalized output. Empty output is negative
/// without a classifier call; failed or unparseable verdicts are negative.
bool select_by_llm(std::string_view asr_output, std::string_view language, llm::Backend& backend,
                   const NormalizationConfig& cfg);

/// Both models' normalized outputs are identical and both base verdicts are
/// positive. Throws std::invalid_argument unless exactly two models are given.
bool select_by_agreement(const ModelOutputs& outputs, const std::map<std::string, bool>& base_positive,
                         const NormalizationConfig& cfg);

/// Reliability of `model`'s output for a record: exact normalized match with
/// the reference when there is one, otherwise read_correct AND prompt match.
GroundTruth ground_truth_label(const UtteranceRecord& record, std::string_view model,
                               const NormalizationConfig& cfg);

}  // namespace uttsel
