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

#include "uttsel/segment.hpp"

#include <algorithm>

#include "uttsel/align.hpp"
#include "uttsel/unicode.hpp"

namespace uttsel {
namespace {

std::string trim(std::u32string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && unicode::is_space(s[b])) ++b;
  while (e > b && unicode::is_space(s[e - 1])) --e;
  return unicode::encode(s.substr(b, e - b));
}

}  // namespace

std::vector<std::string> segment_transcript(std::string_view text, std::u32string_view punctuation) {
  std::vector<std::string> out;
  const std::u32string cps = unicode::decode(text);
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string piece = trim(std::u32string_view(cps).substr(start, end - start));
    if (!piece.empty()) out.push_back(std::move(piece));
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (punctuation.find(cps[i]) != std::u32string_view::npos) {
      emit(i);
      start = i + 1;
    }
  }
  emit(cps.size());
  return out;
}

std::vector<AlignmentResult> attribute_alignment(const std::vector<Tokens>& segments,
                                                const Tokens& reference) {
  Tokens hyp;
  std::vector<std::size_t> owner;  // segment index per hypothesis token
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (const auto& t : segments[s]) {
      hyp.push_back(t);
      owner.push_back(s);
    }
  }
  std::vector<AlignmentResult> out(segments.size());
  if (segments.empty()) {
    if (!reference.empty()) throw std::invalid_argument("no segments to attribute deletions to");
    return out;
  }

  const AlignmentResult a = align_words(reference, hyp);
  std::size_t pending_deletions = 0;
  for (const EditOp& op : a.path) {
    if (op.kind == EditKind::kDeletion) {
      ++pending_deletions;
      continue;
    }
    AlignmentResult& seg = out[owner[op.hyp]];
    seg.deletions += pending_deletions;
    pending_deletions = 0;
    switch (op.kind) {
      case EditKind::kHit: ++seg.hits; break;
      case EditKind::kSubstitution: ++seg.substitutions; break;
      default: ++seg.insertions; break;
    }
  }
  out.back().deletions += pending_deletions;
  return out;
}

std::vector<bool> label_segments(const std::vector<Tokens>& segments, const Tokens& reference) {
  std::vector<bool> correct;
  for (const auto& counts : attribute_alignment(segments, reference)) correct.push_back(counts.errors() == 0);
  return correct;
}

std::string segment_id(std::string_view recording_id, std::string_view model, std::size_t index) {
  return std::string(recording_id) + ":" + std::string(model) + ":" + std::to_string(index + 1);
}

SegmentedDialogue segment_dialogue(std::string_view recording_id, std::string_view model,
                                   std::string_view transcript, std::string_view reference,
                                   std::u32string_view punctuation, const NormalizationConfig& cfg) {
  SegmentedDialogue out{std::string(recording_id), std::string(model), {}};
  std::vector<Tokens> token_lists;
  for (auto& raw : segment_transcript(transcript, punctuation)) {
    Tokens tokens = normalize_tokens(raw, cfg);
    if (tokens.empty()) continue;
    const std::size_t index = out.segments.size();
    out.segments.push_back({segment_id(recording_id, model, index), std::move(raw), tokens, false, {}});
    token_lists.push_back(std::move(tokens));
  }
  if (out.segments.empty()) return out;
  // The reference is a human transcript: segmentation marks are ordinary
  // punctuation there and go through the standard reference path.
  auto counts = attribute_alignment(token_lists, normalize_reference_tokens(reference, cfg));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.segments[i].correct = counts[i].errors() == 0;
    out.segments[i].alignment = std::move(counts[i]);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> match_across_models(const SegmentedDialogue& a,
                                                                     const SegmentedDialogue& b) {
  if (a.recording_id != b.recording_id) {
    throw std::invalid_argument("cannot match segments of different recordings: " + a.recording_id +
                                " vs " + b.recording_id);
  }
  const std::size_t n = a.segments.size();
  const std::size_t m = b.segments.size();
  // suffix[i][j] = size of the best matching of a[i..] with b[j..].
  std::vector<std::size_t> suffix((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return suffix[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      std::size_t best = std::max(at(i + 1, j), at(i, j + 1));
      if (a.segments[i].tokens == b.segments[j].tokens) best = std::max(best, at(i + 1, j + 1) + 1);
      at(i, j) = best;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n && j < m) {
    if (a.segments[i].tokens == b.segments[j].tokens && at(i, j) == at(i + 1, j + 1) + 1) {
      pairs.emplace_back(i, j);
      ++i, ++j;
    } else if (at(i, j) == at(i, j + 1)) {
      ++j;
    } else {
      ++i;
    }
  }
  return pairs;
}

}  // namespace uttsel
