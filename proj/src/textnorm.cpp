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

#include "uttsel/textnorm.hpp"

#include <stdexcept>

#include "uttsel/unicode.hpp"

namespace uttsel {
namespace {

// A token together with the white space that preceded it in the input. The
// separator only matters when collapse_whitespace is off.
struct Piece {
  std::string separator;
  std::string text;
};

bool is_single_letter(std::string_view token) {
  auto cps = unicode::decode(token);
  return cps.size() == 1 && unicode::is_letter(cps[0]);
}

bool ngram_equal(const std::vector<Piece>& p, std::size_t a, std::size_t b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (p[a + i].text != p[b + i].text) return false;
  }
  return true;
}

bool collapse_pass(std::vector<Piece>& pieces, std::size_t n, std::size_t k) {
  if (pieces.size() < n * k) return false;
  std::vector<Piece> out;
  out.reserve(pieces.size());
  bool changed = false;
  std::size_t i = 0;
  while (i < pieces.size()) {
    std::size_t copies = 1;
    if (i + n <= pieces.size()) {
      while (i + (copies + 1) * n <= pieces.size() && ngram_equal(pieces, i, i + copies * n, n)) {
        ++copies;
      }
    }
    if (copies >= k) {
      for (std::size_t j = 0; j < n; ++j) out.push_back(std::move(pieces[i + j]));
      i += copies * n;
      changed = true;
    } else {
      out.push_back(std::move(pieces[i]));
      ++i;
    }
  }
  pieces = std::move(out);
  return changed;
}

bool collapse_all(std::vector<Piece>& pieces, int n_max, int k) {
  bool any = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int n = 1; n <= n_max; ++n) {
      if (collapse_pass(pieces, static_cast<std::size_t>(n), static_cast<std::size_t>(k))) {
        changed = true;
      }
    }
    any = any || changed;
  }
  return any;
}

bool repair_spaces(std::vector<Piece>& pieces, int min_run) {
  std::vector<Piece> out;
  out.reserve(pieces.size());
  bool changed = false;
  std::size_t i = 0;
  while (i < pieces.size()) {
    std::size_t j = i;
    while (j < pieces.size() && is_single_letter(pieces[j].text)) ++j;
    if (j - i >= static_cast<std::size_t>(min_run)) {
      Piece joined{std::move(pieces[i].separator), {}};
      for (std::size_t m = i; m < j; ++m) joined.text += pieces[m].text;
      out.push_back(std::move(joined));
      changed = true;
      i = j;
    } else if (j > i) {
      for (; i < j; ++i) out.push_back(std::move(pieces[i]));
    } else {
      out.push_back(std::move(pieces[i]));
      ++i;
    }
  }
  pieces = std::move(out);
  return changed;
}

std::vector<Piece> clean_pieces(std::string_view text, const NormalizationConfig& cfg) {
  std::vector<Piece> pieces;
  std::string separator;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    pieces.push_back({std::move(separator), std::move(current)});
    separator.clear();
    current.clear();
  };
  for (char32_t cp : unicode::decode(text)) {
    if (cfg.lowercase) cp = unicode::to_lower(cp);
    if (unicode::is_space(cp)) {
      flush();
      unicode::append_utf8(separator, cp);
      continue;
    }
    const bool strip = cfg.strip_punctuation
                           ? cfg.strip_punctuation->find(cp) != std::u32string::npos
                           : unicode::is_punctuation(cp);
    if (!strip) unicode::append_utf8(current, cp);
  }
  flush();
  return pieces;
}

std::vector<Piece> normalize_pieces(std::string_view text, const NormalizationConfig& cfg,
                                    bool collapse) {
  cfg.check();
  auto pieces = clean_pieces(text, cfg);
  // Joining letters can create new repeats and collapsing can bring letter runs
  // together, so alternate until neither rule fires.
  bool changed = true;
  while (changed) {
    changed = false;
    if (collapse && cfg.hallucination_repeat_ngram_max > 0) {
      changed = collapse_all(pieces, cfg.hallucination_repeat_ngram_max,
                             cfg.hallucination_repeat_threshold) || changed;
    }
    if (cfg.space_repair_enabled) {
      changed = repair_spaces(pieces, cfg.space_repair_min_run) || changed;
    }
  }
  return pieces;
}

std::string render(const std::vector<Piece>& pieces, const NormalizationConfig& cfg) {
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out += cfg.collapse_whitespace ? std::string(" ") : pieces[i].separator;
    out += pieces[i].text;
  }
  return out;
}

Tokens to_tokens(std::vector<Piece>&& pieces) {
  Tokens out;
  out.reserve(pieces.size());
  for (auto& p : pieces) out.push_back(std::move(p.text));
  return out;
}

std::vector<Piece> from_tokens(Tokens&& tokens) {
  std::vector<Piece> pieces;
  pieces.reserve(tokens.size());
  for (auto& t : tokens) pieces.push_back({" ", std::move(t)});
  return pieces;
}

}  // namespace

void NormalizationConfig::check() const {
  if (hallucination_repeat_ngram_max < 1) {
    throw std::invalid_argument("hallucination_repeat_ngram_max must be >= 1");
  }
  if (hallucination_repeat_threshold < 2) {
    throw std::invalid_argument("hallucination_repeat_threshold must be >= 2");
  }
  if (space_repair_min_run < 2) {
    throw std::invalid_argument("space_repair_min_run must be >= 2");
  }
}

Tokens split_tokens(std::string_view text) {
  Tokens out;
  std::string current;
  for (char32_t cp : unicode::decode(text)) {
    if (unicode::is_space(cp)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      unicode::append_utf8(current, cp);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Tokens collapse_hallucinated_repeats(Tokens tokens, int n_max, int k) {
  if (n_max < 1 || k < 2) throw std::invalid_argument("collapse requires n_max >= 1 and k >= 2");
  auto pieces = from_tokens(std::move(tokens));
  collapse_all(pieces, n_max, k);
  return to_tokens(std::move(pieces));
}

Tokens repair_spurious_spaces(Tokens tokens, int min_run) {
  if (min_run < 2) throw std::invalid_argument("space repair requires min_run >= 2");
  auto pieces = from_tokens(std::move(tokens));
  repair_spaces(pieces, min_run);
  return to_tokens(std::move(pieces));
}

std::string normalize(std::string_view text, const NormalizationConfig& cfg) {
  return render(normalize_pieces(text, cfg, true), cfg);
}

Tokens normalize_tokens(std::string_view text, const NormalizationConfig& cfg) {
  return to_tokens(normalize_pieces(text, cfg, true));
}

std::string normalize_reference(std::string_view text, const NormalizationConfig& cfg) {
  return render(normalize_pieces(text, cfg, false), cfg);
}

Tokens normalize_reference_tokens(std::string_view text, const NormalizationConfig& cfg) {
  return to_tokens(normalize_pieces(text, cfg, false));
}

}  // namespace uttsel
