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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uttsel/classify.hpp"
#include "uttsel/corpus.hpp"
#include "uttsel/metrics.hpp"
#include "uttsel/textnorm.hpp"

namespace uttsel::synth {

/// Error model for one simulated ASR system. Substitutions, deletions and
/// insertions are real errors; hallucination loops (the final n-gram repeated
/// three more times) and letter splits ("cat" -> "c a t") are surface
/// artifacts that normalization repairs.
struct ErrorChannel {
  double substitution_rate = 0.0;
  double deletion_rate = 0.0;
  double insertion_rate = 0.0;
  double hallucination_loop_rate = 0.0;
  double letter_split_rate = 0.0;
  std::uint64_t seed = 0;
};

struct SynthSpec {
  std::vector<std::string> vocabulary;
  std::size_t n_utterances = 100;
  /// Fraction of read material.
  double material_mix = 0.7;
  std::map<std::string, ErrorChannel> channels;
  /// When set, each (utterance, model) output contains at least one real
  /// error with this probability and none otherwise.
  std::optional<double> target_error_fraction;
  std::uint64_t seed = 0;
  std::size_t min_words = 1;
  std::size_t max_words = 8;
  std::string language = "en";
  std::string id_prefix = "utt";
  NormalizationConfig normalization;

  void check() const;
};

SynthSpec spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json spec_to_json(const SynthSpec& spec);

struct TruthEntry {
  std::string utterance_id;
  std::string model;
  bool reliable = false;

  bool operator==(const TruthEntry&) const = default;
};

using TruthTable = std::vector<TruthEntry>;

struct SynthCorpus {
  Manifest manifest;
  TruthTable truth;
};

/// Pure function of the spec: the same spec yields byte-identical output.
SynthCorpus generate_corpus(const SynthSpec& spec);

void write_truth_table(std::ostream& out, const TruthTable& truth);
TruthTable read_truth_table(std::istream& in);
TruthTable load_truth_table(const std::filesystem::path& path);
void save_truth_table(const std::filesystem::path& path, const TruthTable& truth);

/// Scores one condition's predictions by direct tallies against the truth
/// table, without going through the metrics module. Agreement predictions
/// ("A+B") are scored against the first model's truth and output. Throws
/// std::invalid_argument when predictions do not cover every utterance of
/// the selector's material exactly once.
ConditionResult oracle_evaluate(const Manifest& manifest, const TruthTable& truth,
                                std::span<const Prediction> predictions, const std::string& name,
                                const NormalizationConfig& cfg = {});

}  // namespace uttsel::synth
