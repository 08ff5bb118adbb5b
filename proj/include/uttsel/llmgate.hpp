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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace uttsel::llm {

inline constexpr std::string_view kPlaceholder = "{sentence}";

/// Instruction templates keyed by language tag. English and Dutch are built in
/// (the Dutch text is a translation of the English instruction); more can be
/// loaded from `<tag>.txt` files. Each template holds kPlaceholder exactly once.
class PromptTemplates {
 public:
  PromptTemplates();

  void add(std::string language, std::string text);
  /// Adds every `*.txt` file in `dir`, keyed by file stem.
  void load_directory(const std::filesystem::path& dir);

  /// Exact tag first (case-insensitive), then the primary subtag.
  const std::string* find(std::string_view language) const;
  std::string render(std::string_view sentence, std::string_view language) const;

 private:
  std::map<std::string, std::string> templates_;
};

const PromptTemplates& default_templates();

/// Throws std::invalid_argument on an empty sentence or unknown language.
std::string build_prompt(std::string_view sentence, std::string_view language);

/// Lowercase hex SHA-256 of the rendered prompt.
std::string request_hash(std::string_view rendered_prompt);

struct ClassifierRequest {
  std::string sentence;
  std::string language;
  std::string rendered_prompt;
  std::string request_hash;
};

ClassifierRequest make_request(std::string_view sentence, std::string_view language,
                               const PromptTemplates& templates = default_templates());

enum class VerdictKind { kPositive, kNegative, kUnparseable };

std::string_view to_string(VerdictKind kind);

struct Verdict {
  VerdictKind kind = VerdictKind::kUnparseable;
  std::string raw_response;

  bool positive() const { return kind == VerdictKind::kPositive; }
  bool operator==(const Verdict&) const = default;
};

struct VerdictTokens {
  std::string positive = "correct";
  std::string negative = "wrong";
};

/// Prefix rule: after dropping leading non-letters and lowercasing, a reply
/// starting with the positive token is positive, with the negative token
/// negative, and anything else unparseable. Never throws.
Verdict parse_verdict(std::string_view raw, const VerdictTokens& tokens = {});

using Lexicon = std::unordered_set<std::string>;

/// Offline stand-in for the hosted classifier. Negative when the sentence has
/// an immediately repeated token, two or more single-letter tokens in a row,
/// or (with a non-empty lexicon) a token outside the lexicon.
Verdict heuristic_classify(std::string_view sentence, const Lexicon& lexicon = {});

Lexicon load_lexicon(const std::filesystem::path& path);

/// Retryable transport failure (connection error, 429, 5xx).
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// Returns the raw reply text for one request.
  virtual std::string complete(const ClassifierRequest& request) = 0;
};

class HeuristicBackend final : public Backend {
 public:
  explicit HeuristicBackend(Lexicon lexicon = {}) : lexicon_(std::move(lexicon)) {}
  std::string complete(const ClassifierRequest& request) override;

 private:
  Lexicon lexicon_;
};

struct ChatCompletionConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-5-2025-08-07";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature = 0.0;
  /// Merged into the request body, e.g. {"reasoning_effort": "low"}.
  nlohmann::json extra_body = nlohmann::json::object();
  std::chrono::seconds timeout{60};
};

/// Single-user-message chat-completion client.
class ChatCompletionBackend final : public Backend {
 public:
  explicit ChatCompletionBackend(ChatCompletionConfig cfg);
  std::string complete(const ClassifierRequest& request) override;

  nlohmann::json request_body(const ClassifierRequest& request) const;
  /// Extracts choices[0].message.content.
  static std::string parse_response(std::string_view body);

 private:
  ChatCompletionConfig cfg_;
  std::string api_key_;
};

enum class CassetteMode { kRecord, kReplay, kPassthrough };

CassetteMode parse_cassette_mode(std::string_view text);
std::string_view to_string(CassetteMode mode);

class CassetteMiss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recorded request-hash -> raw-reply store. File form is one JSON object per
/// line with keys request_hash, rendered_prompt, raw_response. Thread-safe.
class Cassette {
 public:
  explicit Cassette(CassetteMode mode = CassetteMode::kPassthrough) : mode_(mode) {}

  /// Replay requires the file to exist; record appends to it (creating it if
  /// needed) and reuses entries already present.
  static std::unique_ptr<Cassette> open(const std::filesystem::path& path, CassetteMode mode);

  CassetteMode mode() const { return mode_; }
  std::optional<std::string> lookup(const std::string& hash) const;
  /// Stores the reply and, when file-backed, appends and flushes it.
  void record(const ClassifierRequest& request, const std::string& raw_response);
  std::size_t size() const;

 private:
  CassetteMode mode_;
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

struct BatchItem {
  std::string sentence;
  std::string language;
};

struct BatchOptions {
  std::size_t max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
};

/// One verdict per item, in input order. Items with identical prompts are sent
/// once. In replay mode a missing hash throws CassetteMiss; a request that
/// still fails after max_attempts yields an unparseable verdict and is logged.
std::vector<Verdict> classify_batch(std::span<const BatchItem> items, Backend* backend,
                                    Cassette& cassette, const BatchOptions& opts = {},
                                    const PromptTemplates& templates = default_templates());

}  // namespace uttsel::llm
