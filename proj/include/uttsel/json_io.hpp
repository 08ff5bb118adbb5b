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

#include <initializer_list>
#include <string_view>

#include <nlohmann/json.hpp>

#include "uttsel/textnorm.hpp"

namespace uttsel {

/// Missing keys keep their defaults; unknown keys throw std::invalid_argument.
/// "strip_punctuation" is null for all Unicode punctuation, else a string of
/// the characters to delete.
NormalizationConfig normalization_from_json(const nlohmann::json& j);
nlohmann::ordered_json normalization_to_json(const NormalizationConfig& cfg);

/// Throws std::invalid_argument naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

}  // namespace uttsel
