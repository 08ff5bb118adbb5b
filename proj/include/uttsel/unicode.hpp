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

#include <string>
#include <string_view>

namespace uttsel::unicode {

/// Decodes UTF-8. Every maximal ill-formed subpart (overlongs and surrogates
/// included) decodes as one U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

// General category P*.
bool is_punctuation(char32_t cp);
// General category L*.
bool is_letter(char32_t cp);
// White_Space property.
bool is_space(char32_t cp);
/// Simple (one-to-one) lowercase mapping.
char32_t to_lower(char32_t cp);

std::string lowercase(std::string_view utf8);

}  // namespace uttsel::unicode
