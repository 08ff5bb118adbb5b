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

// Shared helpers for the unit tests.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace uttsel::test {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("uttsel-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace uttsel::test

namespace uttsel::test {

// Random text mixing ASCII, Latin-1, other scripts, punctuation of several
// blocks, assorted white space and, when `raw_bytes` is set, arbitrary bytes
// that need not form valid UTF-8.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len = 24, bool raw_bytes = true) {
  static const char32_t kPool[] = {
      U'a', U'b', U'c', U'k', U't', U'A', U'B', U'Z', U'0', U'7', U'é', U'É', U'ß', U'ĳ', U'Ĳ', U'ø',
      U'Ω', U'ω', U'Ж', U'ж', U'中', U'ا', U'ए', U'́', U'.', U',', U'!', U'?', U'\'', U'"', U'-',
      U'(', U')', U'«', U'»', U'—', U'…', U'。', U'¿', U'#', U'%', U'@',
      U'+', U'$', U'~', U' ', U' ', U' ', U'\t', U'\n', U' ', U' ', U'　', U'😀', U'​'};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kPool) - 1);
  std::uniform_int_distribution<int> coin(0, 19);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::uint32_t> any_cp(0, 0x10FFFF);
  std::string out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = coin(rng);
    if (raw_bytes && c == 0) {
      out.push_back(static_cast<char>(byte(rng)));
      continue;
    }
    char32_t cp = kPool[pick(rng)];
    if (c == 1) {
      cp = any_cp(rng);
      if (cp >= 0xD800 && cp <= 0xDFFF) cp = U'x';
    }
    // Inline UTF-8 encoding keeps this helper independent of the library.
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

}  // namespace uttsel::test
