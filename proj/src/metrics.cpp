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

#include "uttsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace uttsel {
namespace {

double percent(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(std::span<const Prediction> preds, std::span<const GroundTruth> truths) {
  if (preds.size() != truths.size()) {
    throw std::invalid_argument("prediction/truth count mismatch: " + std::to_string(preds.size()) +
                                " vs " + std::to_string(truths.size()));
  }
  std::unordered_map<std::string_view, bool> reliable;
  reliable.reserve(truths.size());
  for (const auto& t : truths) {
    if (!reliable.emplace(t.utterance_id, t.reliable).second) {
      throw std::invalid_argument("duplicate truth for \"" + t.utterance_id + "\"");
    }
  }
  ConfusionCounts c;
  std::unordered_map<std::string_view, bool> seen;
  for (const auto& p : preds) {
    auto it = reliable.find(p.utterance_id);
    if (it == reliable.end()) throw std::invalid_argument("no truth for \"" + p.utterance_id + "\"");
    if (!seen.emplace(p.utterance_id, true).second) {
      throw std::invalid_argument("duplicate prediction for \"" + p.utterance_id + "\"");
    }
    if (p.positive) {
      ++(it->second ? c.tp : c.fp);
    } else {
      ++(it->second ? c.fn : c.tn);
    }
  }
  return c;
}

double f1_from(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  PrecisionRecallF1 r;
  r.precision = percent(c.tp, c.tp + c.fp);
  r.recall = percent(c.tp, c.tp + c.fn);
  // From the counts directly; 2PR/(P+R) on rounded percentages can drift by an ulp.
  r.f1 = percent(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return r;
}

double mcc(const ConfusionCounts& c) {
  using i128 = __int128;
  using u128 = unsigned __int128;
  const u128 a = c.tp + c.fp;
  const u128 b = c.tp + c.fn;
  const u128 d = c.tn + c.fp;
  const u128 e = c.tn + c.fn;
  if (a == 0 || b == 0 || d == 0 || e == 0) return 0.0;
  const i128 num = static_cast<i128>(static_cast<u128>(c.tp) * c.tn) - static_cast<i128>(static_cast<u128>(c.fp) * c.fn);
  // Each pairwise product fits in 128 bits; the square roots are taken
  // separately so the full radicand never has to.
  const long double den = std::sqrt(static_cast<long double>(a * b)) * std::sqrt(static_cast<long double>(d * e));
  const long double r = static_cast<long double>(num) / den;
  return static_cast<double>(std::clamp(r, -1.0L, 1.0L));
}

FlaggedRate uer(const std::unordered_set<std::string>& selected, std::span<const GroundTruth> truths) {
  if (selected.empty()) return {0.0, true};
  std::uint64_t bad = 0;
  std::uint64_t found = 0;
  for (const auto& t : truths) {
    if (!selected.contains(t.utterance_id)) continue;
    ++found;
    if (!t.reliable) ++bad;
  }
  if (found != selected.size()) throw std::invalid_argument("selection contains ids without ground truth");
  return {percent(bad, found), false};
}

double uer_from_precision(double precision) { return 100.0 - precision; }

FlaggedRate corpus_wer(std::span<const AlignmentResult> alignments) {
  std::uint64_t errors = 0;
  std::uint64_t ref_len = 0;
  for (const auto& a : alignments) {
    errors += a.errors();
    ref_len += a.ref_length();
  }
  if (ref_len == 0) return errors == 0 ? FlaggedRate{0.0, false} : FlaggedRate{100.0, true};
  return {percent(errors, ref_len), false};
}

double subset_share(std::size_t selected, std::size_t total) {
  if (total == 0) throw std::invalid_argument("subset share of an empty dataset");
  if (selected > total) throw std::invalid_argument("selection larger than the dataset");
  return percent(selected, total);
}

}  // namespace uttsel
