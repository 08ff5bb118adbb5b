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

#include "uttsel/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "uttsel/align.hpp"
#include "uttsel/json_io.hpp"
#include "uttsel/unicode.hpp"

namespace uttsel::synth {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent random stream per (seed, utterance, salt). Uses only fully
// specified engine output so results do not depend on the standard library's
// distribution implementations.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    engine_.seed(seq);
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return p > 0.0 && uniform() < p; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

bool all_letters(const std::u32string& cps) {
  for (char32_t cp : cps) {
    if (!unicode::is_letter(cp)) return false;
  }
  return !cps.empty();
}

bool noisy(const ErrorChannel& ch) {
  return ch.substitution_rate > 0 || ch.deletion_rate > 0 || ch.insertion_rate > 0 ||
         ch.hallucination_loop_rate > 0 || ch.letter_split_rate > 0;
}

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec) {}

  Tokens sentence(Stream& rng) const {
    const auto& vocab = spec_.vocabulary;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const std::size_t len =
          vocab.size() == 1 ? 1 : spec_.min_words + rng.below(spec_.max_words - spec_.min_words + 1);
      Tokens words;
      while (words.size() < len) {
        const std::string& w = vocab[rng.below(vocab.size())];
        if (!words.empty() && words.back() == w) continue;
        words.push_back(w);
      }
      // References must survive normalization unchanged on both paths.
      const std::string text = join_tokens(words);
      if (normalize_reference_tokens(text, spec_.normalization) == words &&
          normalize_tokens(text, spec_.normalization) == words) {
        return words;
      }
    }
    return {vocab.front()};
  }

  std::string mangle(const std::string& word, Stream& rng) const {
    std::u32string cps = unicode::decode(word);
    if (cps.size() < 2) {
      cps.push_back(U'a' + static_cast<char32_t>(rng.below(26)));
      return unicode::encode(cps);
    }
    const std::size_t pos = rng.below(cps.size());
    char32_t replacement;
    do {
      replacement = U'a' + static_cast<char32_t>(rng.below(26));
    } while (replacement == cps[pos]);
    cps[pos] = replacement;
    return unicode::encode(cps);
  }

  std::string substitute(const std::string& word, Stream& rng) const {
    const auto& vocab = spec_.vocabulary;
    if (vocab.size() > 1 && rng.chance(0.5)) {
      while (true) {
        const std::string& w = vocab[rng.below(vocab.size())];
        if (w != word) return w;
      }
    }
    return mangle(word, rng);
  }

  Tokens corrupt(const Tokens& words, const ErrorChannel& ch, Stream& rng) const {
    Tokens out;
    for (const auto& w : words) {
      const double r = rng.uniform();
      if (r < ch.deletion_rate) {
        // dropped
      } else if (r < ch.deletion_rate + ch.substitution_rate) {
        out.push_back(substitute(w, rng));
      } else {
        out.push_back(w);
      }
      if (rng.chance(ch.insertion_rate)) out.push_back(spec_.vocabulary[rng.below(spec_.vocabulary.size())]);
    }
    return out;
  }

  std::string surface(const Tokens& core, const ErrorChannel& ch, Stream& rng) const {
    Tokens tokens;
    for (const auto& t : core) {
      const auto cps = unicode::decode(t);
      if (cps.size() >= static_cast<std::size_t>(spec_.normalization.space_repair_min_run) && all_letters(cps) &&
          rng.chance(ch.letter_split_rate)) {
        for (char32_t cp : cps) tokens.push_back(unicode::encode(std::u32string(1, cp)));
      } else {
        tokens.push_back(t);
      }
    }
    if (!tokens.empty() && rng.chance(ch.hallucination_loop_rate)) {
      const std::size_t n = 1 + rng.below(std::min<std::size_t>(3, tokens.size()));
      const Tokens tail(tokens.end() - static_cast<std::ptrdiff_t>(n), tokens.end());
      for (int copy = 0; copy < 3; ++copy) tokens.insert(tokens.end(), tail.begin(), tail.end());
    }
    std::string text = join_tokens(tokens);
    // Casing and a final period only on noisy channels; a silent channel
    // reproduces the reference verbatim.
    if (!noisy(ch)) return text;
    if (!text.empty() && text[0] >= 'a' && text[0] <= 'z' && rng.chance(0.5)) text[0] = static_cast<char>(text[0] - 32);
    if (!text.empty() && rng.chance(0.5)) text += '.';
    return text;
  }

  struct Output {
    std::string text;
    bool reliable;
  };

  Output model_output(const Tokens& words, const ErrorChannel& ch, Stream& rng) const {
    const std::string reference = join_tokens(words);
    auto consistent = [&](const std::string& text, bool reliable) {
      return utterance_correct(reference, text, spec_.normalization) == reliable;
    };

    for (int attempt = 0; attempt < 16; ++attempt) {
      Tokens core;
      if (spec_.target_error_fraction) {
        if (rng.uniform() < *spec_.target_error_fraction) {
          core = corrupt(words, ch, rng);
          if (core == words) {
            const std::size_t pos = rng.below(core.size());
            core[pos] = mangle(core[pos], rng);
          }
        } else {
          core = words;
        }
      } else {
        core = corrupt(words, ch, rng);
      }
      const bool reliable = core == words;
      for (int retry = 0; retry < 8; ++retry) {
        std::string text = surface(core, ch, rng);
        if (consistent(text, reliable)) return {std::move(text), reliable};
      }
      if (consistent(join_tokens(core), reliable)) return {join_tokens(core), reliable};
    }
    // A single fresh word in place of the first one cannot be undone by
    // normalization.
    Tokens core = words;
    core[0] = mangle(core[0], rng);
    std::string text = join_tokens(core);
    if (!consistent(text, false)) throw std::logic_error("synthetic output disagrees with its truth label");
    return {std::move(text), false};
  }

 private:
  const SynthSpec& spec_;
};

std::size_t levenshtein(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

void SynthSpec::check() const {
  if (vocabulary.empty()) throw std::invalid_argument("empty vocabulary");
  std::set<std::string> seen;
  for (const auto& w : vocabulary) {
    if (normalize_reference_tokens(w, normalization) != Tokens{w}) {
      throw std::invalid_argument("vocabulary word \"" + w + "\" is not in normalized form");
    }
    if (!seen.insert(w).second) throw std::invalid_argument("duplicate vocabulary word \"" + w + "\"");
  }
  if (n_utterances < 1) throw std::invalid_argument("n_utterances must be >= 1");
  if (!(material_mix >= 0.0 && material_mix <= 1.0)) throw std::invalid_argument("material_mix must be in [0, 1]");
  if (min_words < 1 || max_words < min_words) throw std::invalid_argument("need 1 <= min_words <= max_words");
  if (channels.empty()) throw std::invalid_argument("at least one model channel is required");
  auto rate = [](double r, const std::string& what) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument(what + " must be in [0, 1]");
  };
  for (const auto& [model, ch] : channels) {
    if (model.empty()) throw std::invalid_argument("empty model name");
    rate(ch.substitution_rate, model + ".substitution_rate");
    rate(ch.deletion_rate, model + ".deletion_rate");
    rate(ch.insertion_rate, model + ".insertion_rate");
    rate(ch.hallucination_loop_rate, model + ".hallucination_loop_rate");
    rate(ch.letter_split_rate, model + ".letter_split_rate");
    rate(ch.substitution_rate + ch.deletion_rate, model + ".substitution_rate + deletion_rate");
  }
  if (target_error_fraction) rate(*target_error_fraction, "target_error_fraction");
  if (!is_language_tag(language)) throw std::invalid_argument("invalid language tag \"" + language + "\"");
  normalization.check();
}

SynthSpec spec_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"vocabulary", "n_utterances", "material_mix", "channels", "target_error_fraction", "seed",
                       "min_words", "max_words", "language", "id_prefix", "normalization"},
                      "synth spec");
  SynthSpec spec;
  spec.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  spec.n_utterances = j.value("n_utterances", spec.n_utterances);
  spec.material_mix = j.value("material_mix", spec.material_mix);
  for (const auto& [model, cj] : j.at("channels").items()) {
    reject_unknown_keys(cj,
                        {"substitution_rate", "deletion_rate", "insertion_rate", "hallucination_loop_rate",
                         "letter_split_rate", "seed"},
                        "channel \"" + model + "\"");
    ErrorChannel ch;
    ch.substitution_rate = cj.value("substitution_rate", 0.0);
    ch.deletion_rate = cj.value("deletion_rate", 0.0);
    ch.insertion_rate = cj.value("insertion_rate", 0.0);
    ch.hallucination_loop_rate = cj.value("hallucination_loop_rate", 0.0);
    ch.letter_split_rate = cj.value("letter_split_rate", 0.0);
    ch.seed = cj.value("seed", std::uint64_t{0});
    spec.channels.emplace(model, ch);
  }
  if (auto it = j.find("target_error_fraction"); it != j.end() && !it->is_null()) {
    spec.target_error_fraction = it->get<double>();
  }
  spec.seed = j.value("seed", spec.seed);
  spec.min_words = j.value("min_words", spec.min_words);
  spec.max_words = j.value("max_words", spec.max_words);
  spec.language = j.value("language", spec.language);
  spec.id_prefix = j.value("id_prefix", spec.id_prefix);
  if (auto it = j.find("normalization"); it != j.end()) spec.normalization = normalization_from_json(*it);
  spec.check();
  return spec;
}

nlohmann::ordered_json spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["vocabulary"] = spec.vocabulary;
  j["n_utterances"] = spec.n_utterances;
  j["material_mix"] = spec.material_mix;
  j["channels"] = nlohmann::ordered_json::object();
  for (const auto& [model, ch] : spec.channels) {
    j["channels"][model] = {{"substitution_rate", ch.substitution_rate},
                            {"deletion_rate", ch.deletion_rate},
                            {"insertion_rate", ch.insertion_rate},
                            {"hallucination_loop_rate", ch.hallucination_loop_rate},
                            {"letter_split_rate", ch.letter_split_rate},
                            {"seed", ch.seed}};
  }
  j["target_error_fraction"] =
      spec.target_error_fraction ? nlohmann::ordered_json(*spec.target_error_fraction) : nlohmann::ordered_json();
  j["seed"] = spec.seed;
  j["min_words"] = spec.min_words;
  j["max_words"] = spec.max_words;
  j["language"] = spec.language;
  j["id_prefix"] = spec.id_prefix;
  j["normalization"] = normalization_to_json(spec.normalization);
  return j;
}

SynthCorpus generate_corpus(const SynthSpec& spec) {
  spec.check();
  const Generator gen(spec);
  SynthCorpus corpus;
  corpus.manifest.metadata = {{"generator", "uttsel synth"}, {"seed", std::to_string(spec.seed)}};
  const std::size_t width = std::to_string(spec.n_utterances).size();
  for (std::size_t i = 0; i < spec.n_utterances; ++i) {
    Stream rng(spec.seed, i, 0);
    std::string number = std::to_string(i + 1);
    number.insert(0, width - number.size(), '0');

    UtteranceRecord r;
    r.id = spec.id_prefix + number;
    r.language = spec.language;
    r.material = rng.uniform() < spec.material_mix ? MaterialKind::kRead : MaterialKind::kDialogue;
    const Tokens words = gen.sentence(rng);
    r.reference = join_tokens(words);
    if (r.material == MaterialKind::kRead) r.prompt = r.reference;
    for (const auto& [model, ch] : spec.channels) {
      Stream model_rng(ch.seed ^ spec.seed, i, fnv1a(model));
      auto out = gen.model_output(words, ch, model_rng);
      r.asr_outputs.emplace(model, std::move(out.text));
      corpus.truth.push_back({r.id, model, out.reliable});
    }
    corpus.manifest.utterances.push_back(std::move(r));
  }
  return corpus;
}

void write_truth_table(std::ostream& out, const TruthTable& truth) {
  for (const auto& e : truth) {
    nlohmann::ordered_json j;
    j["utterance_id"] = e.utterance_id;
    j["model"] = e.model;
    j["reliable"] = e.reliable;
    out << j.dump() << '\n';
  }
}

TruthTable read_truth_table(std::istream& in) {
  TruthTable truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::invalid_argument("truth table line " + std::to_string(lineno) + ": malformed JSON");
    }
    try {
      reject_unknown_keys(j, {"utterance_id", "model", "reliable"}, "truth table entry");
      truth.push_back({j.at("utterance_id").get<std::string>(), j.at("model").get<std::string>(),
                       j.at("reliable").get<bool>()});
    } catch (const std::exception& e) {
      throw std::invalid_argument("truth table line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return truth;
}

TruthTable load_truth_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read truth table " + path.string());
  return read_truth_table(in);
}

void save_truth_table(const std::filesystem::path& path, const TruthTable& truth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write truth table " + path.string());
  write_truth_table(out, truth);
}

ConditionResult oracle_evaluate(const Manifest& manifest, const TruthTable& truth,
                                std::span<const Prediction> predictions, const std::string& name,
                                const NormalizationConfig& cfg) {
  if (predictions.empty()) throw std::invalid_argument("no predictions to evaluate");
  const MaterialKind material = selector_material(predictions.front().selector);

  std::unordered_map<std::string, const UtteranceRecord*> records;
  for (const auto& r : manifest.utterances) {
    if (r.material == material) records.emplace(r.id, &r);
  }
  std::unordered_map<std::string, bool> reliable;
  for (const auto& e : truth) reliable.emplace(e.utterance_id + '\n' + e.model, e.reliable);

  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t errors = 0, ref_words = 0;
  bool any_reference = false;
  std::unordered_set<std::string> seen;
  for (const auto& p : predictions) {
    auto rec = records.find(p.utterance_id);
    if (rec == records.end()) throw std::invalid_argument("prediction for unknown utterance " + p.utterance_id);
    if (!seen.insert(p.utterance_id).second) throw std::invalid_argument("duplicate prediction for " + p.utterance_id);
    const std::string anchor = p.model.substr(0, p.model.find('+'));
    auto t = reliable.find(p.utterance_id + '\n' + anchor);
    if (t == reliable.end()) throw std::invalid_argument("no truth entry for " + p.utterance_id + "/" + anchor);
    if (p.positive) {
      ++(t->second ? tp : fp);
      const UtteranceRecord& r = *rec->second;
      if (r.reference) {
        any_reference = true;
        const Tokens ref = normalize_reference_tokens(*r.reference, cfg);
        errors += levenshtein(ref, normalize_tokens(r.asr_outputs.at(anchor), cfg));
        ref_words += ref.size();
      }
    } else {
      ++(t->second ? fn : tn);
    }
  }
  if (seen.size() != records.size()) {
    throw std::invalid_argument("predictions cover " + std::to_string(seen.size()) + " of " +
                                std::to_string(records.size()) + " utterances");
  }

  ConditionResult out;
  out.name = name;
  out.counts = {tp, fp, tn, fn};
  const double selected = static_cast<double>(tp + fp);
  out.precision = tp + fp == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / selected;
  out.recall = tp + fn == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
  out.f1 = tp == 0 ? 0.0 : 100.0 * 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  const double marginals = static_cast<double>(tp + fp) * static_cast<double>(tp + fn) *
                           static_cast<double>(tn + fp) * static_cast<double>(tn + fn);
  out.mcc = marginals == 0.0 ? 0.0
                             : (static_cast<double>(tp) * static_cast<double>(tn) -
                                static_cast<double>(fp) * static_cast<double>(fn)) /
                                   std::sqrt(marginals);
  out.subset_share = 100.0 * selected / static_cast<double>(predictions.size());
  out.uer = tp + fp == 0 ? 0.0 : 100.0 * static_cast<double>(fp) / selected;
  if (any_reference) {
    out.wer = ref_words == 0 ? (errors == 0 ? 0.0 : 100.0)
                             : 100.0 * static_cast<double>(errors) / static_cast<double>(ref_words);
  }
  return out;
}

}  // namespace uttsel::synth
