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

#include "uttsel/json_io.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "uttsel/unicode.hpp"

namespace uttsel {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
  if (!j.is_object()) throw std::invalid_argument(std::string(context) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("unknown key \"" + key + "\" in " + std::string(context));
    }
  }
}

NormalizationConfig normalization_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"lowercase", "strip_punctuation", "collapse_whitespace", "hallucination_repeat_ngram_max",
                       "hallucination_repeat_threshold", "space_repair_enabled", "space_repair_min_run"},
                      "normalization");
  NormalizationConfig cfg;
  cfg.lowercase = j.value("lowercase", cfg.lowercase);
  if (auto it = j.find("strip_punctuation"); it != j.end() && !it->is_null()) {
    cfg.strip_punctuation = unicode::decode(it->get<std::string>());
  }
  cfg.collapse_whitespace = j.value("collapse_whitespace", cfg.collapse_whitespace);
  cfg.hallucination_repeat_ngram_max = j.value("hallucination_repeat_ngram_max", cfg.hallucination_repeat_ngram_max);
  cfg.hallucination_repeat_threshold = j.value("hallucination_repeat_threshold", cfg.hallucination_repeat_threshold);
  cfg.space_repair_enabled = j.value("space_repair_enabled", cfg.space_repair_enabled);
  cfg.space_repair_min_run = j.value("space_repair_min_run", cfg.space_repair_min_run);
  cfg.check();
  return cfg;
}

nlohmann::ordered_json normalization_to_json(const NormalizationConfig& cfg) {
  nlohmann::ordered_json j;
  j["lowercase"] = cfg.lowercase;
  j["strip_punctuation"] =
      cfg.strip_punctuation ? nlohmann::ordered_json(unicode::encode(*cfg.strip_punctuation)) : nlohmann::ordered_json();
  j["collapse_whitespace"] = cfg.collapse_whitespace;
  j["hallucination_repeat_ngram_max"] = cfg.hallucination_repeat_ngram_max;
  j["hallucination_repeat_threshold"] = cfg.hallucination_repeat_threshold;
  j["space_repair_enabled"] = cfg.space_repair_enabled;
  j["space_repair_min_run"] = cfg.space_repair_min_run;
  return j;
}

}  // namespace uttsel
