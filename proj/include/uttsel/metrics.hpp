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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "uttsel/align.hpp"
#include "uttsel/classify.hpp"

namespace uttsel {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  std::uint64_t selected() const { return tp + fp; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Percentages. Any 0/0 ratio is reported as 0.
struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Percentage with a flag for results that are defined by convention only.
struct FlaggedRate {
  double percent = 0.0;
  bool degenerate = false;
};

/// One evaluated condition, e.g. "whisper-ft [prompt]".
struct ConditionResult {
  std::string name;
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double subset_share = 0.0;
  double uer = 0.0;
  /// Pooled WER over selected utterances with a reference; absent when none has one.
  std::optional<double> wer;
};

/// Tallies predictions against truths matched by utterance id. Throws
/// std::invalid_argument unless the id sets correspond one-to-one.
ConfusionCounts confusion(std::span<const Prediction> preds, std::span<const GroundTruth> truths);

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c);

/// F1 from percentage precision and recall (harmonic mean, 0 when both are 0).
double f1_from(double precision, double recall);

/// Matthews correlation with an exact integer numerator; 0 when any marginal is 0.
double mcc(const ConfusionCounts& c);

/// Share of selected utterances that are not reliable. An empty selection
/// yields 0 with `degenerate` set.
FlaggedRate uer(const std::unordered_set<std::string>& selected, std::span<const GroundTruth> truths);

/// UER implied by a selector's precision: 100 - P over a non-empty selection.
double uer_from_precision(double precision);

/// 100 * sum(S+D+I) / sum(ref_len). Flags an empty reference total that
/// still has insertions (reported as 100).
FlaggedRate corpus_wer(std::span<const AlignmentResult> alignments);

/// 100 * selected / total. Throws on total == 0 or selected > total.
double subset_share(std::size_t selected, std::size_t total);

}  // namespace uttsel
