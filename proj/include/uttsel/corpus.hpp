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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uttsel {

enum class MaterialKind { kRead, kDialogue };

std::string_view to_string(MaterialKind kind);
MaterialKind parse_material(std::string_view text);

/// Raw ASR output per model name.
using ModelOutputs = std::map<std::string, std::string>;

struct UtteranceRecord {
  std::string id;
  std::string language;
  MaterialKind material = MaterialKind::kRead;
  std::optional<std::string> prompt;
  std::optional<std::string> reference;
  std::optional<bool> read_correct;
  ModelOutputs asr_outputs;
  std::optional<std::string> audio_path;

  bool operator==(const UtteranceRecord&) const = default;
};

/// A long dialogue recording whose transcripts still need segmentation.
struct DialogueRecording {
  std::string id;
  std::string language;
  std::string reference;
  ModelOutputs asr_outputs;

  bool operator==(const DialogueRecording&) const = default;
};

struct Manifest {
  std::vector<UtteranceRecord> utterances;
  std::vector<DialogueRecording> recordings;
  std::map<std::string, std::string> metadata;

  bool operator==(const Manifest&) const = default;
};

struct Issue {
  std::string record_id;
  std::string description;

  bool operator==(const Issue&) const = default;
};

class ManifestError : public std::runtime_error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  /// 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadOptions {
  /// When false only syntax and schema errors abort; invariant violations are
  /// left for validate_manifest().
  bool check_invariants = true;
};

Manifest parse_manifest(std::istream& in, const LoadOptions& opts = {});
Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& opts = {});

void write_manifest(std::ostream& out, const Manifest& m);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

std::vector<Issue> validate_manifest(const Manifest& m);

bool is_language_tag(std::string_view tag);

}  // namespace uttsel
