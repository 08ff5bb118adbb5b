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

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uttsel/align.hpp"
#include "uttsel/textnorm.hpp"

namespace uttsel {

/// Characters that end an utterance in a long transcript.
inline constexpr std::u32string_view kDefaultSegmentPunctuation = U",.";

struct Segment {
  std::string id;
  std::string raw_text;
  Tokens tokens;
  bool correct = false;
  /// Edit counts attributed to this segment (no path).
  AlignmentResult alignment;
};

struct SegmentedDialogue {
  std::string recording_id;
  std::string model;
  std::vector<Segment> segments;
};

/// Splits at every character in `punctuation`. Whitespace-only pieces are
/// dropped and the remaining pieces are trimmed.
std::vector<std::string> segment_transcript(std::string_view text, std::u32string_view punctuation);

/// Labels each hypothesis segment error-free or not from a single alignment of
/// the concatenated segments against `reference`.
///
/// A segment is correct iff all of its tokens are hits and no deletion is
/// attributed to it. A deletion belongs to the segment owning the next
/// hypothesis token on the alignment path, or to the last segment if it
/// trails the hypothesis.
std::vector<bool> label_segments(const std::vector<Tokens>& segments, const Tokens& reference);

/// The per-segment edit counts behind label_segments(). Summed over all
/// segments they equal the counts of the full alignment.
std::vector<AlignmentResult> attribute_alignment(const std::vector<Tokens>& segments, const Tokens& reference);

/// Segment ids are "<recording>:<model>:<n>" with n counting from 1.
std::string segment_id(std::string_view recording_id, std::string_view model, std::size_t index);

/// Segments, normalizes and labels one model transcript of a recording.
/// Segments that normalize to nothing are dropped.
SegmentedDialogue segment_dialogue(std::string_view recording_id, std::string_view model,
                                   std::string_view transcript, std::string_view reference,
                                   std::u32string_view punctuation, const NormalizationConfig& cfg);

/// Index pairs (into a.segments, b.segments) of segments with identical
/// normalized tokens. The matching is monotone and of maximum size; among
/// maximum matchings the one pairing earliest segments wins.
std::vector<std::pair<std::size_t, std::size_t>> match_across_models(const SegmentedDialogue& a,
                                                                     const SegmentedDialogue& b);

class HookError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs `command` through /bin/sh with `text` on stdin and returns stdout.
/// Throws HookError on timeout, spawn failure or non-zero exit.
std::string run_punctuation_hook(const std::string& command, std::string_view text,
                                 std::chrono::milliseconds timeout);

}  // namespace uttsel
