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

#include "uttsel/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace uttsel {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::set<std::string, std::less<>> kUtteranceKeys = {
    "id", "language", "material", "prompt", "reference", "read_correct", "asr_outputs", "audio_path"};
const std::set<std::string, std::less<>> kRecordingKeys = {"kind", "id", "language", "reference",
                                                           "asr_outputs"};
const std::set<std::string, std::less<>> kMetadataKeys = {"kind", "metadata"};

/// Parses one line, rejecting duplicate keys in any object.
json parse_strict(const std::string& line, std::size_t lineno) {
  std::vector<std::set<std::string>> seen;
  std::string duplicate;
  json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        seen.emplace_back();
        break;
      case json::parse_event_t::object_end:
        seen.pop_back();
        break;
      case json::parse_event_t::key:
        if (!seen.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default:
        break;
    }
    return true;
  };
  json j;
  try {
    j = json::parse(line, cb);
  } catch (const json::parse_error& e) {
    throw ManifestError(lineno, std::string("malformed JSON: ") + e.what());
  }
  if (!duplicate.empty()) throw ManifestError(lineno, "duplicate key \"" + duplicate + "\"");
  if (!j.is_object()) throw ManifestError(lineno, "record must be a JSON object");
  return j;
}

void check_keys(const json& j, const std::set<std::string, std::less<>>& allowed, std::size_t lineno) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ManifestError(lineno, "unknown key \"" + key + "\"");
  }
}

std::string required_string(const json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end()) throw ManifestError(lineno, std::string("missing required key \"") + key + "\"");
  if (!it->is_string()) throw ManifestError(lineno, std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_string()) throw ManifestError(lineno, std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

ModelOutputs parse_outputs(const json& j, std::size_t lineno) {
  auto it = j.find("asr_outputs");
  if (it == j.end()) throw ManifestError(lineno, "missing required key \"asr_outputs\"");
  if (!it->is_object()) throw ManifestError(lineno, "\"asr_outputs\" must be an object");
  ModelOutputs out;
  for (const auto& [model, text] : it->items()) {
    if (!text.is_string()) {
      throw ManifestError(lineno, "asr_outputs[\"" + model + "\"] must be a string");
    }
    out.emplace(model, text.get<std::string>());
  }
  return out;
}

std::map<std::string, std::string> parse_string_map(const json& j, const char* key,
                                                    std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end()) throw ManifestError(lineno, std::string("missing required key \"") + key + "\"");
  if (!it->is_object()) throw ManifestError(lineno, std::string("\"") + key + "\" must be an object");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : it->items()) {
    if (!v.is_string()) throw ManifestError(lineno, std::string(key) + "[\"" + k + "\"] must be a string");
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

void check_outputs(const std::string& id, const ModelOutputs& outputs, std::vector<Issue>& issues) {
  if (outputs.empty()) issues.push_back({id, "asr_outputs must contain at least one model"});
  for (const auto& [model, _] : outputs) {
    if (model.empty()) issues.push_back({id, "asr_outputs contains an empty model name"});
  }
}

void check_record(const UtteranceRecord& r, std::vector<Issue>& issues) {
  if (r.id.empty()) issues.push_back({r.id, "empty id"});
  if (!is_language_tag(r.language)) issues.push_back({r.id, "invalid language tag \"" + r.language + "\""});
  if (r.material == MaterialKind::kRead && !r.prompt) {
    issues.push_back({r.id, "read material requires a prompt"});
  }
  if (!r.reference && !r.read_correct) {
    issues.push_back({r.id, "no ground truth: neither reference nor read_correct is present"});
  }
  check_outputs(r.id, r.asr_outputs, issues);
}

void check_record(const DialogueRecording& r, std::vector<Issue>& issues) {
  if (r.id.empty()) issues.push_back({r.id, "empty id"});
  if (!is_language_tag(r.language)) issues.push_back({r.id, "invalid language tag \"" + r.language + "\""});
  if (r.reference.empty()) issues.push_back({r.id, "recording reference is empty"});
  check_outputs(r.id, r.asr_outputs, issues);
}

ordered_json outputs_json(const ModelOutputs& outputs) {
  ordered_json j = ordered_json::object();
  for (const auto& [model, text] : outputs) j[model] = text;
  return j;
}

}  // namespace

std::string_view to_string(MaterialKind kind) {
  return kind == MaterialKind::kRead ? "read" : "dialogue";
}

MaterialKind parse_material(std::string_view text) {
  if (text == "read") return MaterialKind::kRead;
  if (text == "dialogue") return MaterialKind::kDialogue;
  throw std::invalid_argument("unknown material \"" + std::string(text) + "\"");
}

bool is_language_tag(std::string_view tag) {
  // Primary subtag of 2-8 letters followed by optional -alnum{1,8} subtags.
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  auto alnum = [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); };
  std::size_t i = 0;
  std::size_t part = 0;
  bool first = true;
  while (true) {
    std::size_t start = i;
    while (i < tag.size() && tag[i] != '-') {
      if (first ? !alpha(tag[i]) : !alnum(tag[i])) return false;
      ++i;
    }
    part = i - start;
    if (first ? (part < 2 || part > 8) : (part < 1 || part > 8)) return false;
    if (i == tag.size()) return true;
    ++i;
    first = false;
  }
}

Manifest parse_manifest(std::istream& in, const LoadOptions& opts) {
  Manifest m;
  std::vector<std::size_t> utterance_lines;
  std::vector<std::size_t> recording_lines;
  bool have_metadata = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = parse_strict(line, lineno);
    auto kind = j.find("kind");
    if (kind == j.end()) {
      check_keys(j, kUtteranceKeys, lineno);
      UtteranceRecord r;
      r.id = required_string(j, "id", lineno);
      r.language = required_string(j, "language", lineno);
      try {
        r.material = parse_material(required_string(j, "material", lineno));
      } catch (const std::invalid_argument& e) {
        throw ManifestError(lineno, e.what());
      }
      r.prompt = optional_string(j, "prompt", lineno);
      r.reference = optional_string(j, "reference", lineno);
      if (auto it = j.find("read_correct"); it != j.end()) {
        if (!it->is_boolean()) throw ManifestError(lineno, "\"read_correct\" must be a boolean");
        r.read_correct = it->get<bool>();
      }
      r.asr_outputs = parse_outputs(j, lineno);
      r.audio_path = optional_string(j, "audio_path", lineno);
      m.utterances.push_back(std::move(r));
      utterance_lines.push_back(lineno);
    } else if (*kind == "recording") {
      check_keys(j, kRecordingKeys, lineno);
      DialogueRecording r;
      r.id = required_string(j, "id", lineno);
      r.language = required_string(j, "language", lineno);
      r.reference = required_string(j, "reference", lineno);
      r.asr_outputs = parse_outputs(j, lineno);
      m.recordings.push_back(std::move(r));
      recording_lines.push_back(lineno);
    } else if (*kind == "metadata") {
      check_keys(j, kMetadataKeys, lineno);
      if (have_metadata) throw ManifestError(lineno, "more than one metadata line");
      m.metadata = parse_string_map(j, "metadata", lineno);
      have_metadata = true;
    } else {
      throw ManifestError(lineno, "unknown record kind " + kind->dump());
    }
  }

  if (opts.check_invariants) {
    // Ids are unique across both record kinds.
    std::unordered_set<std::string> ids;
    auto claim = [&](const std::string& id, std::size_t ln) {
      if (!ids.insert(id).second) throw ManifestError(ln, "duplicate id \"" + id + "\"");
    };
    for (std::size_t i = 0; i < m.utterances.size(); ++i) claim(m.utterances[i].id, utterance_lines[i]);
    for (std::size_t i = 0; i < m.recordings.size(); ++i) claim(m.recordings[i].id, recording_lines[i]);

    std::vector<Issue> issues;
    for (std::size_t i = 0; i < m.utterances.size(); ++i) {
      check_record(m.utterances[i], issues);
      if (!issues.empty()) {
        throw ManifestError(utterance_lines[i], "record \"" + issues[0].record_id + "\": " + issues[0].description);
      }
    }
    for (std::size_t i = 0; i < m.recordings.size(); ++i) {
      check_record(m.recordings[i], issues);
      if (!issues.empty()) {
        throw ManifestError(recording_lines[i], "recording \"" + issues[0].record_id + "\": " + issues[0].description);
      }
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError(0, "cannot read manifest " + path.string());
  return parse_manifest(in, opts);
}

void write_manifest(std::ostream& out, const Manifest& m) {
  auto dump = [](const ordered_json& j) {
    return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
  };
  if (!m.metadata.empty()) {
    ordered_json j;
    j["kind"] = "metadata";
    j["metadata"] = ordered_json::object();
    for (const auto& [k, v] : m.metadata) j["metadata"][k] = v;
    out << dump(j) << '\n';
  }
  for (const auto& r : m.utterances) {
    ordered_json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["material"] = std::string(to_string(r.material));
    if (r.prompt) j["prompt"] = *r.prompt;
    if (r.reference) j["reference"] = *r.reference;
    if (r.read_correct) j["read_correct"] = *r.read_correct;
    j["asr_outputs"] = outputs_json(r.asr_outputs);
    if (r.audio_path) j["audio_path"] = *r.audio_path;
    out << dump(j) << '\n';
  }
  for (const auto& r : m.recordings) {
    ordered_json j;
    j["kind"] = "recording";
    j["id"] = r.id;
    j["language"] = r.language;
    j["reference"] = r.reference;
    j["asr_outputs"] = outputs_json(r.asr_outputs);
    out << dump(j) << '\n';
  }
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ManifestError(0, "cannot write manifest " + path.string());
  write_manifest(out, m);
  if (!out) throw ManifestError(0, "write failed for " + path.string());
}

std::vector<Issue> validate_manifest(const Manifest& m) {
  std::vector<Issue> issues;
  std::set<std::string> seen;
  auto claim = [&](const std::string& id) {
    if (!seen.insert(id).second) issues.push_back({id, "duplicate id"});
  };
  for (const auto& r : m.utterances) {
    check_record(r, issues);
    claim(r.id);
  }
  for (const auto& r : m.recordings) {
    check_record(r, issues);
    claim(r.id);
  }
  return issues;
}

}  // namespace uttsel
