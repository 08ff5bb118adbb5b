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

#include "uttsel/llmgate.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "uttsel/textnorm.hpp"
#include "uttsel/unicode.hpp"

namespace uttsel::llm {
namespace {

constexpr std::string_view kEnglishTemplate =
    "The following sentence is a transcription of a child utterance. Indicate whether it contains "
    "repeated words, accidentally pronounced small vowels in between, or if there are other "
    "oddities present, such as strange words that do not fit: {sentence}. Answer with 'wrong' if "
    "this is the case or 'correct' otherwise.";

// Translation of the English instruction. The answer tokens stay English so
// that one verdict parser serves both languages.
constexpr std::string_view kDutchTemplate =
    "De volgende zin is een transcriptie van een uiting van een kind. Geef aan of de zin herhaalde "
    "woorden bevat, per ongeluk uitgesproken kleine klinkers ertussen, of dat er andere "
    "eigenaardigheden aanwezig zijn, zoals vreemde woorden die er niet in passen: {sentence}. "
    "Antwoord met 'wrong' als dit het geval is of anders met 'correct'.";

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool is_single_letter(std::string_view token) {
  auto cps = unicode::decode(token);
  return cps.size() == 1 && unicode::is_letter(cps[0]);
}

}  // namespace

PromptTemplates::PromptTemplates() {
  add("en", std::string(kEnglishTemplate));
  add("nl", std::string(kDutchTemplate));
}

void PromptTemplates::add(std::string language, std::string text) {
  if (count_occurrences(text, kPlaceholder) != 1) {
    throw std::invalid_argument("template for \"" + language + "\" must contain " +
                                std::string(kPlaceholder) + " exactly once");
  }
  templates_[ascii_lower(language)] = std::move(text);
}

void PromptTemplates::load_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    add(path.stem().string(), std::move(text));
  }
}

const std::string* PromptTemplates::find(std::string_view language) const {
  const std::string tag = ascii_lower(language);
  if (auto it = templates_.find(tag); it != templates_.end()) return &it->second;
  const std::string primary = tag.substr(0, tag.find('-'));
  if (auto it = templates_.find(primary); it != templates_.end()) return &it->second;
  return nullptr;
}

std::string PromptTemplates::render(std::string_view sentence, std::string_view language) const {
  if (sentence.empty()) throw std::invalid_argument("cannot build a prompt for an empty sentence");
  const std::string* tmpl = find(language);
  if (tmpl == nullptr) {
    throw std::invalid_argument("no prompt template for language \"" + std::string(language) + "\"");
  }
  std::string out = *tmpl;
  out.replace(out.find(kPlaceholder), kPlaceholder.size(), sentence);
  return out;
}

const PromptTemplates& default_templates() {
  static const PromptTemplates templates;
  return templates;
}

std::string build_prompt(std::string_view sentence, std::string_view language) {
  return default_templates().render(sentence, language);
}

std::string request_hash(std::string_view rendered_prompt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(rendered_prompt.data(), rendered_prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

ClassifierRequest make_request(std::string_view sentence, std::string_view language,
                               const PromptTemplates& templates) {
  ClassifierRequest req{std::string(sentence), std::string(language), templates.render(sentence, language), {}};
  req.request_hash = request_hash(req.rendered_prompt);
  return req;
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kPositive: return "positive";
    case VerdictKind::kNegative: return "negative";
    case VerdictKind::kUnparseable: break;
  }
  return "unparseable";
}

Verdict parse_verdict(std::string_view raw, const VerdictTokens& tokens) {
  std::u32string cps = unicode::decode(raw);
  std::size_t start = 0;
  while (start < cps.size() && !unicode::is_letter(cps[start])) ++start;
  std::u32string rest = cps.substr(start);
  for (auto& cp : rest) cp = unicode::to_lower(cp);
  auto starts_with = [&](const std::string& token) {
    if (token.empty()) return false;
    std::u32string t = unicode::decode(token);
    for (auto& cp : t) cp = unicode::to_lower(cp);
    return rest.compare(0, t.size(), t) == 0;
  };
  Verdict v{VerdictKind::kUnparseable, std::string(raw)};
  if (starts_with(tokens.positive)) {
    v.kind = VerdictKind::kPositive;
  } else if (starts_with(tokens.negative)) {
    v.kind = VerdictKind::kNegative;
  }
  return v;
}

Verdict heuristic_classify(std::string_view sentence, const Lexicon& lexicon) {
  Tokens tokens = split_tokens(unicode::lowercase(sentence));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && tokens[i] == tokens[i - 1]) {
      return {VerdictKind::kNegative, "wrong: repeated word \"" + tokens[i] + "\""};
    }
    if (i > 0 && is_single_letter(tokens[i]) && is_single_letter(tokens[i - 1])) {
      return {VerdictKind::kNegative, "wrong: run of single letters"};
    }
    if (!lexicon.empty() && !lexicon.contains(tokens[i])) {
      return {VerdictKind::kNegative, "wrong: unknown word \"" + tokens[i] + "\""};
    }
  }
  return {VerdictKind::kPositive, "correct"};
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read lexicon " + path.string());
  Lexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& t : split_tokens(unicode::lowercase(line))) lexicon.insert(std::move(t));
  }
  return lexicon;
}

std::string HeuristicBackend::complete(const ClassifierRequest& request) {
  return heuristic_classify(request.sentence, lexicon_).raw_response;
}

ChatCompletionBackend::ChatCompletionBackend(ChatCompletionConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr) api_key_ = key;
}

nlohmann::json ChatCompletionBackend::request_body(const ClassifierRequest& request) const {
  nlohmann::json body = {
      {"model", cfg_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.rendered_prompt}}})},
  };
  if (cfg_.temperature) body["temperature"] = *cfg_.temperature;
  for (const auto& [key, value] : cfg_.extra_body.items()) body[key] = value;
  return body;
}

std::string ChatCompletionBackend::parse_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("chat completion reply is not JSON");
  const auto& choices = j.value("choices", nlohmann::json::array());
  if (choices.empty() || !choices[0].contains("message") ||
      !choices[0]["message"].value("content", nlohmann::json()).is_string()) {
    throw std::runtime_error("chat completion reply has no choices[0].message.content");
  }
  return choices[0]["message"]["content"].get<std::string>();
}

std::string ChatCompletionBackend::complete(const ClassifierRequest& request) {
  // Split "scheme://host[:port]/prefix" into the client origin and path prefix.
  const auto scheme_end = cfg_.base_url.find("://");
  const auto path_start =
      cfg_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = cfg_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(prefix + "/chat/completions", headers, request_body(request).dump(),
                         "application/json");
  if (!res) throw TransientError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw std::runtime_error("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  return parse_response(res->body);
}

CassetteMode parse_cassette_mode(std::string_view text) {
  if (text == "record") return CassetteMode::kRecord;
  if (text == "replay") return CassetteMode::kReplay;
  if (text == "passthrough") return CassetteMode::kPassthrough;
  throw std::invalid_argument("unknown cassette mode \"" + std::string(text) + "\"");
}

std::string_view to_string(CassetteMode mode) {
  switch (mode) {
    case CassetteMode::kRecord: return "record";
    case CassetteMode::kReplay: return "replay";
    case CassetteMode::kPassthrough: break;
  }
  return "passthrough";
}

std::unique_ptr<Cassette> Cassette::open(const std::filesystem::path& path, CassetteMode mode) {
  auto cassette = std::make_unique<Cassette>(mode);
  if (mode == CassetteMode::kPassthrough) return cassette;
  std::ifstream in(path, std::ios::binary);
  if (!in && mode == CassetteMode::kReplay) throw std::runtime_error("cannot read cassette " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (in && std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("request_hash") || !j.contains("raw_response")) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed cassette entry");
    }
    cassette->entries_[j["request_hash"].get<std::string>()] = j["raw_response"].get<std::string>();
  }
  if (mode == CassetteMode::kRecord) cassette->path_ = path;
  return cassette;
}

std::optional<std::string> Cassette::lookup(const std::string& hash) const {
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(hash); it != entries_.end()) return it->second;
  return std::nullopt;
}

void Cassette::record(const ClassifierRequest& request, const std::string& raw_response) {
  std::lock_guard lock(mu_);
  entries_[request.request_hash] = raw_response;
  if (!path_) return;
  std::ofstream out(*path_, std::ios::binary | std::ios::app);
  nlohmann::ordered_json j;
  j["request_hash"] = request.request_hash;
  j["rendered_prompt"] = request.rendered_prompt;
  j["raw_response"] = raw_response;
  out << j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to cassette " + path_->string());
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<Verdict> classify_batch(std::span<const BatchItem> items, Backend* backend,
                                    Cassette& cassette, const BatchOptions& opts,
                                    const PromptTemplates& templates) {
  if (opts.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (opts.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");

  std::vector<ClassifierRequest> unique;
  std::vector<std::size_t> slot(items.size());
  {
    std::unordered_map<std::string, std::size_t> by_hash;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto req = make_request(items[i].sentence, items[i].language, templates);
      auto [it, inserted] = by_hash.emplace(req.request_hash, unique.size());
      if (inserted) unique.push_back(std::move(req));
      slot[i] = it->second;
    }
  }

  // Replay misses are detected up front so nothing is sent when one is missing.
  if (cassette.mode() == CassetteMode::kReplay) {
    for (const auto& req : unique) {
      if (!cassette.lookup(req.request_hash)) {
        throw CassetteMiss("cassette has no entry for request " + req.request_hash);
      }
    }
  } else if (backend == nullptr) {
    throw std::invalid_argument("a backend is required unless the cassette is in replay mode");
  }

  auto resolve = [&](const ClassifierRequest& req) -> Verdict {
    if (cassette.mode() != CassetteMode::kPassthrough) {
      if (auto hit = cassette.lookup(req.request_hash)) return parse_verdict(*hit);
    }
    auto delay = opts.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      try {
        std::string raw = backend->complete(req);
        if (cassette.mode() == CassetteMode::kRecord) cassette.record(req, raw);
        return parse_verdict(raw);
      } catch (const TransientError& e) {
        if (attempt >= opts.max_attempts) {
          spdlog::error("classifier request {} failed after {} attempts: {}", req.request_hash, attempt, e.what());
          return {};
        }
        spdlog::warn("classifier request {} attempt {} failed: {}", req.request_hash, attempt, e.what());
        std::this_thread::sleep_for(delay);
        delay *= 2;
      } catch (const CassetteMiss&) {
        throw;
      } catch (const std::exception& e) {
        spdlog::error("classifier request {} failed: {}", req.request_hash, e.what());
        return {};
      }
    }
  };

  std::vector<Verdict> resolved(unique.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < unique.size(); i = next++) {
      try {
        resolved[i] = resolve(unique[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = unique.size();
      }
    }
  };
  {
    const std::size_t workers = std::min(opts.max_in_flight, unique.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Verdict> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back(resolved[slot[i]]);
  return out;
}

}  // namespace uttsel::llm
