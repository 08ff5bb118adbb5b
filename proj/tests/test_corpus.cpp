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

#include <sstream>

#include "support.hpp"
#include "uttsel/corpus.hpp"
#include "uttsel/synth.hpp"

using namespace uttsel;

namespace {

Manifest parse(const std::string& text, LoadOptions opts = {}) {
  std::istringstream in(text);
  return parse_manifest(in, opts);
}

std::string write(const Manifest& m) {
  std::ostringstream out;
  write_manifest(out, m);
  return out.str();
}

// Line number carried by the ManifestError thrown for `text`, 0 if none.
std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ManifestError& e) {
    return e.line();
  }
  return 0;
}

std::string error_text(const std::string& text) {
  try {
    parse(text);
  } catch (const ManifestError& e) {
    return e.what();
  }
  return {};
}

const char* kReadLine =
    R"({"id":"r1","language":"nl","material":"read","prompt":"de kat","read_correct":true,"asr_outputs":{"ft":"de kat"}})";

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("three read lines") {
    const auto m = parse(
        R"({"id":"a","language":"nl","material":"read","prompt":"de kat","reference":"de kat","asr_outputs":{"ft":"de kat","v2":"de kat."}})"
        "\n"
        R"({"id":"b","language":"nl","material":"read","prompt":"de hond","read_correct":false,"asr_outputs":{"ft":"de hond"}})"
        "\n\n"
        R"({"id":"c","language":"en","material":"read","prompt":"a dog","read_correct":true,"asr_outputs":{"ft":"a dog"},"audio_path":"c.wav"})"
        "\n");
    REQUIRE(m.utterances.size() == 3);
    CHECK(m.recordings.empty());
    CHECK(m.utterances[0].id == "a");
    CHECK(m.utterances[0].asr_outputs.at("v2") == "de kat.");
    CHECK(m.utterances[1].read_correct == false);
    CHECK_FALSE(m.utterances[1].reference.has_value());
    CHECK(m.utterances[2].audio_path == "c.wav");
    CHECK(validate_manifest(m).empty());
  }

  TEST_CASE("recordings and metadata") {
    const auto m = parse(R"({"kind":"metadata","metadata":{"dataset":"demo","split":"test"}})"
                         "\n"
                         R"({"kind":"recording","id":"rec1","language":"en","reference":"hi there. bye","asr_outputs":{"a":"Hi there, bye."}})"
                         "\n");
    CHECK(m.metadata.at("dataset") == "demo");
    REQUIRE(m.recordings.size() == 1);
    CHECK(m.recordings[0].asr_outputs.at("a") == "Hi there, bye.");
  }

  TEST_CASE("schema errors carry the line number") {
    CHECK(error_line(std::string(kReadLine) + "\n{not json}\n") == 2);
    CHECK(error_text(R"({"id":"x","language":"nl","material":"read","prompt":"p","read_correct":true,"asr_outputs":{"a":"p"},"speaker":"s1"})")
              .find("unknown key \"speaker\"") != std::string::npos);
    CHECK(error_text(R"({"id":"x","id":"y","language":"nl","material":"read","prompt":"p","read_correct":true,"asr_outputs":{"a":"p"}})")
              .find("duplicate key") != std::string::npos);
    CHECK(error_text(R"({"id":"x","language":"nl","material":"sung","prompt":"p","read_correct":true,"asr_outputs":{"a":"p"}})")
              .find("sung") != std::string::npos);
    CHECK(error_text(R"({"id":"x","language":"nl","material":"read","prompt":"p","read_correct":"yes","asr_outputs":{"a":"p"}})")
              .find("read_correct") != std::string::npos);
    CHECK(error_text(R"({"id":"x","language":"nl","material":"read","prompt":"p","read_correct":true,"asr_outputs":{"a":1}})")
              .find("asr_outputs") != std::string::npos);
    CHECK(error_text(R"({"id":"x","language":"nl","material":"read","prompt":"p","read_correct":true})")
              .find("missing required key \"asr_outputs\"") != std::string::npos);
    CHECK(error_text(R"({"kind":"speaker","id":"s"})").find("unknown record kind") != std::string::npos);
    CHECK(error_text("[1,2]").find("object") != std::string::npos);
  }

  TEST_CASE("invariant violations name the record") {
    const std::string missing_prompt =
        R"({"id":"r9","language":"nl","material":"read","read_correct":true,"asr_outputs":{"ft":"de kat"}})";
    const std::string msg = error_text(std::string(kReadLine) + "\n" + missing_prompt + "\n");
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("r9") != std::string::npos);
    CHECK(msg.find("prompt") != std::string::npos);

    CHECK(error_text(std::string(kReadLine) + "\n" + kReadLine + "\n").find("duplicate id") != std::string::npos);
    CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.jsonl"), ManifestError);
  }

  TEST_CASE("validation lists one issue per violation") {
    Manifest m = parse(kReadLine);
    CHECK(validate_manifest(m).empty());

    Manifest no_truth = m;
    no_truth.utterances[0].read_correct.reset();
    auto issues = validate_manifest(no_truth);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].record_id == "r1");
    CHECK(issues[0].description.find("no ground truth") != std::string::npos);

    Manifest dup = m;
    dup.utterances.push_back(m.utterances[0]);
    issues = validate_manifest(dup);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].description == "duplicate id");

    Manifest cross = m;
    cross.recordings.push_back({"r1", "nl", "de kat", {{"ft", "de kat"}}});
    CHECK(validate_manifest(cross).size() == 1);

    Manifest bad = m;
    bad.utterances[0].asr_outputs.clear();
    bad.utterances[0].language = "";
    bad.utterances[0].prompt.reset();
    bad.recordings.push_back({"rec", "en", "", {{"a", "x"}}});
    issues = validate_manifest(bad);
    CHECK(issues.size() == 4);

    // Loading without invariant checks defers the problems to validation.
    const std::string two = std::string(kReadLine) + "\n" + kReadLine + "\n";
    CHECK(validate_manifest(parse(two, {.check_invariants = false})).size() == 1);
  }

  TEST_CASE("language tags") {
    for (const char* ok : {"nl", "en", "en-US", "nl-BE", "zh-Hant-TW", "es-419"}) CHECK(is_language_tag(ok));
    for (const char* bad : {"", "e", "english_us", "en-", "-en", "e n"}) CHECK_FALSE(is_language_tag(bad));
  }

  TEST_CASE("save then load is the identity on synthetic manifests") {
    synth::SynthSpec spec;
    spec.vocabulary = {"de", "kat", "zat", "op", "mat", "hond", "liep", "naar", "huis"};
    spec.n_utterances = 200;
    spec.language = "nl";
    spec.seed = 99;
    spec.channels["ft"] = {0.1, 0.05, 0.05, 0.1, 0.1, 1};
    spec.channels["v2"] = {0.2, 0.1, 0.1, 0.2, 0.1, 2};
    Manifest m = synth::generate_corpus(spec).manifest;
    m.recordings.push_back({"rec-1", "nl", "de kat zat. op de mat", {{"ft", "De kat zat, op de mat."}, {"v2", "de kat"}}});
    CHECK(validate_manifest(m).empty());

    test::TempDir dir("corpus");
    save_manifest(dir / "m.jsonl", m);
    const Manifest back = load_manifest(dir / "m.jsonl");
    CHECK(back == m);
    save_manifest(dir / "again.jsonl", back);
    CHECK(test::slurp(dir / "m.jsonl") == test::slurp(dir / "again.jsonl"));
    CHECK(write(back) == test::slurp(dir / "m.jsonl"));
  }

  TEST_CASE("non-ASCII text survives the round trip") {
    Manifest m;
    m.utterances.push_back({"ü-1", "nl", MaterialKind::kDialogue, std::nullopt, "één ijsje — «ja»", std::nullopt,
                            {{"módel", "Eén ijsje, ja!"}}, std::nullopt});
    CHECK(parse(write(m)) == m);
  }
}
