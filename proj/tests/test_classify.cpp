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

#include <doctest.h>

#include <random>

#include "fake_backends.hpp"
#include "uttsel/classify.hpp"

using namespace uttsel;

namespace {

UtteranceRecord read_record(std::optional<bool> read_correct, std::string ao, std::optional<std::string> reference = {}) {
  UtteranceRecord r;
  r.id = "u1";
  r.language = "nl";
  r.material = MaterialKind::kRead;
  r.prompt = "de kat";
  r.reference = std::move(reference);
  r.read_correct = read_correct;
  r.asr_outputs = {{"ft", std::move(ao)}};
  return r;
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("selector names") {
    for (auto s : {SelectorKind::kPrompt, SelectorKind::kLlm, SelectorKind::kAgreementPrompt, SelectorKind::kAgreementLlm}) {
      CHECK(parse_selector(to_string(s)) == s);
    }
    CHECK_THROWS_AS(parse_selector("vote"), std::invalid_argument);
    CHECK(selector_material(SelectorKind::kAgreementPrompt) == MaterialKind::kRead);
    CHECK(selector_material(SelectorKind::kLlm) == MaterialKind::kDialogue);
    CHECK(is_agreement(SelectorKind::kAgreementLlm));
    CHECK_FALSE(is_agreement(SelectorKind::kPrompt));
  }

  TEST_CASE("prompt selector") {
    NormalizationConfig cfg;
    CHECK(select_by_prompt("De kat.", "de kat", cfg));
    CHECK_FALSE(select_by_prompt("de kat", "de hond", cfg));
    CHECK(select_by_prompt("k a t", "kat", cfg));
    CHECK(select_by_prompt("de kat de kat de kat", "de kat", cfg));
    UtteranceRecord r = read_record(true, "De kat!");
    CHECK(select_by_prompt(r, "ft", cfg));
    CHECK_THROWS_AS(select_by_prompt(r, "v2", cfg), std::invalid_argument);
    r.prompt.reset();
    CHECK_THROWS_AS(select_by_prompt(r, "ft", cfg), std::invalid_argument);
  }

  TEST_CASE("prompt selector ignores what normalization erases") {
    std::mt19937_64 rng(51);
    NormalizationConfig cfg;
    const std::vector<std::string> words{"de", "kat", "zat", "op", "mat"};
    std::uniform_int_distribution<std::size_t> len(1, 5), pick(0, words.size() - 1);
    std::uniform_int_distribution<int> coin(0, 3);
    for (int trial = 0; trial < 1000; ++trial) {
      std::string prompt, variant;
      for (std::size_t n = len(rng); n > 0; --n) {
        const std::string w = words[pick(rng)];
        prompt += (prompt.empty() ? "" : " ") + w;
        std::string v = w;
        if (coin(rng) == 0) v[0] = static_cast<char>(std::toupper(v[0]));
        if (coin(rng) == 0) v += ",";
        variant += (variant.empty() ? "" : (coin(rng) == 0 ? " \t " : " ")) + v;
      }
      if (coin(rng) == 0) variant += ".";
      CHECK(select_by_prompt(variant, prompt, cfg) == select_by_prompt(prompt, prompt, cfg));
    }
  }

  TEST_CASE("LLM selector") {
    NormalizationConfig cfg;
    auto reply = [](std::string text) {
      return test::FunctionBackend([text](const llm::ClassifierRequest&) { return text; });
    };
    auto yes = reply("correct");
    CHECK(select_by_llm("The cat sat.", "en", yes, cfg));
    auto no = reply("Wrong — repeated words present");
    CHECK_FALSE(select_by_llm("The cat sat.", "en", no, cfg));
    auto unsure = reply("I am not sure");
    CHECK_FALSE(select_by_llm("The cat sat.", "en", unsure, cfg));

    test::FunctionBackend spy([](const llm::ClassifierRequest& r) {
      CHECK(r.sentence == "the cat sat");
      return std::string("correct");
    });
    CHECK(select_by_llm("  The CAT sat!! ", "en", spy, cfg));
    CHECK_FALSE(select_by_llm(" ... ", "en", spy, cfg));
    CHECK(spy.calls == 1);

    test::FlakyBackend down(100, "correct");
    CHECK_FALSE(select_by_llm("the cat", "en", down, cfg));
  }

  TEST_CASE("agreement selector") {
    NormalizationConfig cfg;
    const std::map<std::string, bool> both{{"a", true}, {"b", true}};
    CHECK(select_by_agreement({{"a", "de kat"}, {"b", "de kat"}}, both, cfg));
    CHECK(select_by_agreement({{"a", "De kat."}, {"b", "de  kat"}}, both, cfg));
    CHECK_FALSE(select_by_agreement({{"a", "de kat"}, {"b", "de hond"}}, both, cfg));
    CHECK_FALSE(select_by_agreement({{"a", "de kat"}, {"b", "de kat"}}, {{"a", true}, {"b", false}}, cfg));
    CHECK_THROWS_AS(select_by_agreement({{"a", "x"}}, both, cfg), std::invalid_argument);
    CHECK_THROWS_AS(select_by_agreement({{"a", "x"}, {"b", "x"}, {"c", "x"}}, both, cfg), std::invalid_argument);
    CHECK_THROWS_AS(select_by_agreement({{"a", "x"}, {"c", "x"}}, both, cfg), std::invalid_argument);
  }

  TEST_CASE("ground truth from the four read-flag cases") {
    NormalizationConfig cfg;
    struct Case {
      bool read_correct;
      bool matches;
      bool reliable;
    };
    for (const auto& c : {Case{true, true, true}, Case{true, false, false}, Case{false, true, false},
                          Case{false, false, false}}) {
      const auto r = read_record(c.read_correct, c.matches ? "De kat." : "de hond");
      const auto g = ground_truth_label(r, "ft", cfg);
      CHECK(g.reliable == c.reliable);
      CHECK(g.source == TruthSource::kReadFlag);
      CHECK(g.utterance_id == "u1");
      CHECK(g.model == "ft");
    }
  }

  TEST_CASE("ground truth from the reference") {
    NormalizationConfig cfg;
    // The reference wins over the read flag.
    auto g = ground_truth_label(read_record(false, "de kat", "de kat"), "ft", cfg);
    CHECK(g.reliable);
    CHECK(g.source == TruthSource::kReferenceMatch);
    g = ground_truth_label(read_record(true, "de kat", "de kaat"), "ft", cfg);
    CHECK_FALSE(g.reliable);

    UtteranceRecord none = read_record(std::nullopt, "de kat");
    CHECK_THROWS_AS(ground_truth_label(none, "ft", cfg), std::invalid_argument);
  }
}
