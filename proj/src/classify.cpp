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

#include "uttsel/classify.hpp"

#include "uttsel/align.hpp"

namespace uttsel {
namespace {

const std::string& output_of(const UtteranceRecord& record, std::string_view model) {
  auto it = record.asr_outputs.find(std::string(model));
  if (it == record.asr_outputs.end()) {
    throw std::invalid_argument("record \"" + record.id + "\" has no output for model \"" +
                                std::string(model) + "\"");
  }
  return it->second;
}

}  // namespace

std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::kPrompt: return "prompt";
    case SelectorKind::kLlm: return "llm";
    case SelectorKind::kAgreementPrompt: return "agreement_prompt";
    case SelectorKind::kAgreementLlm: break;
  }
  return "agreement_llm";
}

SelectorKind parse_selector(std::string_view text) {
  if (text == "prompt") return SelectorKind::kPrompt;
  if (text == "llm") return SelectorKind::kLlm;
  if (text == "agreement_prompt") return SelectorKind::kAgreementPrompt;
  if (text == "agreement_llm") return SelectorKind::kAgreementLlm;
  throw std::invalid_argument("unknown selector \"" + std::string(text) + "\"");
}

MaterialKind selector_material(SelectorKind kind) {
  return (kind == SelectorKind::kPrompt || kind == SelectorKind::kAgreementPrompt) ? MaterialKind::kRead
                                                                                   : MaterialKind::kDialogue;
}

bool is_agreement(SelectorKind kind) {
  return kind == SelectorKind::kAgreementPrompt || kind == SelectorKind::kAgreementLlm;
}

std::string_view to_string(TruthSource source) {
  return source == TruthSource::kReferenceMatch ? "reference_match" : "read_flag";
}

bool select_by_prompt(std::string_view asr_output, std::string_view prompt, const NormalizationConfig& cfg) {
  return normalize_tokens(asr_output, cfg) == normalize_reference_tokens(prompt, cfg);
}

bool select_by_prompt(const UtteranceRecord& record, std::string_view model, const NormalizationConfig& cfg) {
  if (!record.prompt) throw std::invalid_argument("record \"" + record.id + "\" has no prompt");
  return select_by_prompt(output_of(record, model), *record.prompt, cfg);
}

bool select_by_llm(std::string_view asr_output, std::string_view language, llm::Backend& backend,
                   const NormalizationConfig& cfg) {
  const std::string sentence = normalize(asr_output, cfg);
  if (sentence.empty()) return false;
  llm::Cassette passthrough;
  const llm::BatchItem item{sentence, std::string(language)};
  return llm::classify_batch(std::span(&item, 1), &backend, passthrough, {.max_in_flight = 1})[0].positive();
}

bool select_by_agreement(const ModelOutputs& outputs, const std::map<std::string, bool>& base_positive,
                         const NormalizationConfig& cfg) {
  if (outputs.size() != 2) {
    throw std::invalid_argument("agreement needs exactly two models, got " + std::to_string(outputs.size()));
  }
  const auto& [model_a, text_a] = *outputs.begin();
  const auto& [model_b, text_b] = *std::next(outputs.begin());
  auto verdict = [&](const std::string& model) {
    auto it = base_positive.find(model);
    if (it == base_positive.end()) {
      throw std::invalid_argument("no base verdict for model \"" + model + "\"");
    }
    return it->second;
  };
  return verdict(model_a) && verdict(model_b) && normalize_tokens(text_a, cfg) == normalize_tokens(text_b, cfg);
}

GroundTruth ground_truth_label(const UtteranceRecord& record, std::string_view model,
                               const NormalizationConfig& cfg) {
  const std::string& ao = output_of(record, model);
  GroundTruth truth{record.id, std::string(model), false, TruthSource::kReferenceMatch};
  if (record.reference) {
    truth.reliable = utterance_correct(*record.reference, ao, cfg);
    return truth;
  }
  if (record.read_correct && record.prompt) {
    truth.source = TruthSource::kReadFlag;
    truth.reliable = *record.read_correct && select_by_prompt(ao, *record.prompt, cfg);
    return truth;
  }
  throw std::invalid_argument("record \"" + record.id + "\" has no ground truth (reference or read_correct with prompt)");
}

}  // namespace uttsel
