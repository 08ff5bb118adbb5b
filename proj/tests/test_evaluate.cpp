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

#include <cmath>
#include <map>
#include <sstream>

#include "support.hpp"
#include "uttsel/evaluate.hpp"
#include "uttsel/synth.hpp"

using namespace uttsel;

namespace {

synth::SynthSpec two_model_spec(std::size_t n, bool noisy) {
  synth::SynthSpec s;
  s.vocabulary = {"the", "cat", "sat", "on", "mat", "dog", "ran", "home", "big", "red", "sun", "hat"};
  s.n_utterances = n;
  s.seed = 3;
  s.channels["a"] = {};
  s.channels["b"] = {};
  if (noisy) {
    s.channels["a"] = {0.05, 0.02, 0.02, 0.05, 0.05, 1};
    s.channels["b"] = {0.08, 0.04, 0.04, 0.08, 0.08, 2};
  }
  return s;
}

EvaluationRun run_on(const Manifest& m, RunConfig cfg) {
  llm::HeuristicBackend backend;
  llm::Cassette cassette;
  return evaluate_manifest(m, cfg, &backend, cassette);
}

// Minimal RFC 4180 line splitter for our own output.
std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

double round_to(double x, int digits) {
  const double f = std::pow(10.0, digits);
  return std::round(x * f) / f;
}

Manifest recording_manifest() {
  Manifest m;
  DialogueRecording rec;
  rec.id = "rec1";
  rec.language = "en";
  rec.reference = "the cat sat on the mat the dog ran home";
  rec.asr_outputs["a"] = "the cat sat on the mat, the dog ran home";
  rec.asr_outputs["b"] = "the cat sat on the mat the dog ran hom";
  m.recordings.push_back(rec);
  return m;
}

const ConditionRow& row_named(const EvaluationReport& r, const std::string& name) {
  for (const auto& c : r.conditions) {
    if (c.result.name == name) return c;
  }
  throw std::logic_error("no row " + name);
}

}  // namespace

TEST_SUITE("evaluate") {
  TEST_CASE("read block has one row per model plus agreement") {
    const auto c = synth::generate_corpus(two_model_spec(300, true));
    RunConfig cfg;
    cfg.selectors = {SelectorKind::kAgreementPrompt, SelectorKind::kPrompt};
    const auto run = run_on(c.manifest, cfg);
    REQUIRE(run.report.conditions.size() == 3);
    CHECK(run.report.conditions[0].result.name == "a [prompt]");
    CHECK(run.report.conditions[1].result.name == "b [prompt]");
    CHECK(run.report.conditions[2].result.name == "Agreement a and b [prompt]");
    for (const auto& row : run.report.conditions) CHECK(row.material == MaterialKind::kRead);
  }

  TEST_CASE("default selectors cover both materials") {
    const auto c = synth::generate_corpus(two_model_spec(200, true));
    const auto run = run_on(c.manifest, {});
    CHECK(run.report.conditions.size() == 6);
    CHECK(run.report.baselines.size() == 4);
  }

  TEST_CASE("clean corpus is perfect") {
    const auto c = synth::generate_corpus(two_model_spec(200, false));
    RunConfig cfg;
    cfg.selectors = {SelectorKind::kPrompt};
    const auto run = run_on(c.manifest, cfg);
    REQUIRE(run.report.conditions.size() == 2);
    for (const auto& row : run.report.conditions) {
      CHECK(row.result.precision == 100.0);
      CHECK(row.result.uer == 0.0);
      CHECK(row.result.subset_share == 100.0);
      REQUIRE(row.result.wer);
      CHECK(*row.result.wer == 0.0);
    }
  }

  TEST_CASE("predictions reproduce the counts") {
    const auto c = synth::generate_corpus(two_model_spec(400, true));
    const auto run = run_on(c.manifest, {});
    std::map<std::string, ConfusionCounts> tally;
    for (const auto& p : run.predictions) {
      auto& t = tally[p.condition];
      if (p.prediction.positive) {
        ++(p.reliable ? t.tp : t.fp);
      } else {
        ++(p.reliable ? t.fn : t.tn);
      }
    }
    REQUIRE(tally.size() == run.report.conditions.size());
    for (const auto& row : run.report.conditions) CHECK(tally.at(row.result.name) == row.result.counts);
  }

  TEST_CASE("rendered precision and uer sum to 100") {
    const auto c = synth::generate_corpus(two_model_spec(400, true));
    const auto run = run_on(c.manifest, {});
    const std::string csv = render_tables(run.report, ReportFormat::kCsv);
    std::map<std::string, double> precision, uer;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
      const auto f = csv_fields(line);
      if (f.size() == 7 && f[0] == "performance") precision[f[2]] = std::stod(f[3]);
      if (f.size() == 6 && f[0] == "subset") uer[f[2]] = std::stod(f[4]);
    }
    std::size_t paired = 0;
    for (const auto& row : run.report.conditions) {
      const auto& name = row.result.name;
      if (row.result.counts.selected() == 0) continue;
      REQUIRE(precision.contains(name));
      REQUIRE(uer.contains(name));
      CHECK(std::abs(precision[name] + uer[name] - 100.0) <= 0.1 + 1e-9);
      ++paired;
    }
    CHECK(paired > 0);
  }

  TEST_CASE("csv parses back to the report numbers") {
    const auto c = synth::generate_corpus(two_model_spec(300, true));
    const auto run = run_on(c.manifest, {});
    const std::string csv = render_tables(run.report, ReportFormat::kCsv);
    std::istringstream in(csv);
    std::string line;
    std::size_t perf = 0, subset = 0;
    while (std::getline(in, line)) {
      const auto f = csv_fields(line);
      if (f.empty() || (f[0] != "performance" && f[0] != "subset")) continue;
      const ConditionRow* row = nullptr;
      for (const auto& r : run.report.conditions) {
        if (r.result.name == f[2]) row = &r;
      }
      if (!row) continue;  // baseline row
      CHECK(f[1] == std::string(to_string(row->material)));
      if (f[0] == "performance") {
        ++perf;
        CHECK(std::stod(f[3]) == doctest::Approx(round_to(row->result.precision, 1)));
        CHECK(std::stod(f[4]) == doctest::Approx(round_to(row->result.recall, 1)));
        CHECK(std::stod(f[5]) == doctest::Approx(round_to(row->result.f1, 1)));
        CHECK(std::stod(f[6]) == doctest::Approx(round_to(row->result.mcc, 2)));
      } else {
        ++subset;
        CHECK(std::stod(f[3]) == doctest::Approx(round_to(row->result.subset_share, 1)));
        CHECK(std::stod(f[4]) == doctest::Approx(round_to(row->result.uer, 1)));
        REQUIRE(row->result.wer);
        CHECK(std::stod(f[5]) == doctest::Approx(round_to(*row->result.wer, 1)));
      }
    }
    CHECK(perf == run.report.conditions.size());
    CHECK(subset == run.report.conditions.size());
  }

  TEST_CASE("render formats") {
    EvaluationReport report;
    ConditionRow row;
    row.result.name = "m [prompt]";
    row.result.counts = {3, 1, 4, 2};
    row.result.precision = 75.0;
    row.result.recall = 60.0;
    row.result.f1 = 66.66666;
    row.result.mcc = 0.1666;
    row.result.subset_share = 40.0;
    row.result.uer = 25.0;
    row.models = {"m"};
    report.conditions.push_back(row);

    const auto text = render_tables(report, ReportFormat::kText);
    CHECK(text.find("Performance of reliability selectors") != std::string::npos);
    CHECK(text.find("Selected subsets with error rates") != std::string::npos);
    CHECK(text.find("66.7") != std::string::npos);
    CHECK(text.find("0.17") != std::string::npos);
    CHECK(text.find("40.0%") != std::string::npos);
    CHECK(text.find('-') != std::string::npos);

    const auto md = render_tables(report, ReportFormat::kMarkdown);
    CHECK(md.find("| m [prompt] |") != std::string::npos);

    const auto csv = render_tables(report, ReportFormat::kCsv);
    std::istringstream in(csv);
    std::string line;
    bool saw_dash = false;
    while (std::getline(in, line)) {
      const auto f = csv_fields(line);
      if (f.size() == 6 && f[0] == "subset") saw_dash = f[5] == "-";
    }
    CHECK(saw_dash);

    CHECK_THROWS_AS(render_tables(EvaluationReport{}, ReportFormat::kText), std::invalid_argument);
    CHECK_THROWS_AS(parse_report_format("pdf"), std::invalid_argument);
    CHECK(parse_report_format("md") == ReportFormat::kMarkdown);
  }

  TEST_CASE("report json round trip") {
    const auto c = synth::generate_corpus(two_model_spec(200, true));
    const auto run = run_on(c.manifest, {});
    const auto j = report_to_json(run.report);
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(report_to_json(back).dump() == j.dump());
    for (auto fmt : {ReportFormat::kText, ReportFormat::kCsv, ReportFormat::kMarkdown}) {
      CHECK(render_tables(back, fmt) == render_tables(run.report, fmt));
    }
  }

  TEST_CASE("config json round trip and errors") {
    RunConfig cfg;
    cfg.manifest = "/data/m.jsonl";
    cfg.models = {"x", "y"};
    cfg.selectors = {SelectorKind::kLlm};
    cfg.normalization.space_repair_min_run = 4;
    cfg.gateway.backend = "http";
    cfg.gateway.http.base_url = "http://localhost:9";
    cfg.gateway.http.extra_body = {{"reasoning_effort", "low"}};
    cfg.gateway.cassette = "/data/c.jsonl";
    cfg.gateway.cassette_mode = llm::CassetteMode::kReplay;
    cfg.punctuation_hooks["x"] = "cat";
    cfg.workers = 2;
    cfg.report_formats = {ReportFormat::kCsv, ReportFormat::kMarkdown};
    const auto j = config_to_json(cfg);
    const auto back = config_from_json(nlohmann::json::parse(j.dump()));
    CHECK(config_to_json(back).dump() == j.dump());

    CHECK_THROWS(config_from_json(nlohmann::json{{"bogus", 1}}));
    CHECK_THROWS(config_from_json(nlohmann::json{{"selectors", {"vote"}}}));
    const auto rel = config_from_json(nlohmann::json{{"manifest", "m.jsonl"}}, "/base");
    CHECK(rel.manifest == std::filesystem::path("/base/m.jsonl"));
  }

  TEST_CASE("model and selector errors") {
    const auto c = synth::generate_corpus(two_model_spec(20, true));
    RunConfig cfg;
    cfg.models = {"a", "zzz"};
    CHECK_THROWS_AS(run_on(c.manifest, cfg), std::invalid_argument);
    cfg.models = {"a"};
    cfg.selectors = {SelectorKind::kAgreementPrompt};
    CHECK_THROWS_AS(run_on(c.manifest, cfg), std::invalid_argument);
    cfg.selectors = {};
    CHECK(run_on(c.manifest, cfg).report.conditions.size() == 2);
  }

  TEST_CASE("recordings are segmented, hooked and scored") {
    const Manifest m = recording_manifest();
    RunConfig cfg;
    cfg.selectors = {SelectorKind::kLlm, SelectorKind::kAgreementLlm};
    cfg.punctuation_hooks["b"] = "sed 's/mat /mat. /'";
    llm::HeuristicBackend backend({"the", "cat", "sat", "on", "mat", "dog", "ran", "home"});
    llm::Cassette cassette;
    const auto run = evaluate_manifest(m, cfg, &backend, cassette);
    REQUIRE(run.report.conditions.size() == 3);

    const auto& a = row_named(run.report, "a [LLM-classification]");
    CHECK(a.material == MaterialKind::kDialogue);
    CHECK(a.result.counts == ConfusionCounts{2, 0, 0, 0});
    const auto& b = row_named(run.report, "b [LLM-classification]");
    CHECK(b.result.counts == ConfusionCounts{1, 0, 1, 0});
    REQUIRE(b.result.wer);
    CHECK(*b.result.wer == 0.0);
    const auto& ag = row_named(run.report, "Agreement a and b [LLM-classification]");
    CHECK(ag.result.counts == ConfusionCounts{1, 0, 0, 1});
    CHECK(ag.result.subset_share == doctest::Approx(50.0));

    cfg.punctuation_hooks["b"] = "exit 3";
    try {
      (void)evaluate_manifest(m, cfg, &backend, cassette);
      FAIL("hook failure was ignored");
    } catch (const HookError& e) {
      CHECK(std::string(e.what()).find("rec1") != std::string::npos);
    }
  }

  TEST_CASE("run_evaluation writes outputs") {
    test::TempDir dir("eval");
    const auto c = synth::generate_corpus(two_model_spec(150, true));
    save_manifest(dir / "m.jsonl", c.manifest);
    RunConfig cfg;
    cfg.manifest = dir / "m.jsonl";
    cfg.output_dir = dir / "out";
    cfg.report_formats = {ReportFormat::kText, ReportFormat::kCsv, ReportFormat::kMarkdown};
    const auto run = run_evaluation(cfg);
    for (const char* f : {"report.json", "predictions.jsonl", "tables.txt", "tables.csv", "tables.md"}) {
      CHECK(std::filesystem::exists(dir / "out" / f));
    }
    std::istringstream preds(test::slurp(dir / "out" / "predictions.jsonl"));
    std::size_t lines = 0;
    std::string line;
    while (std::getline(preds, line)) ++lines;
    CHECK(lines == run.predictions.size());
    const auto report = report_from_json(nlohmann::json::parse(test::slurp(dir / "out" / "report.json")));
    CHECK(report_to_json(report).dump() == report_to_json(run.report).dump());

    cfg.gateway.cassette_mode = llm::CassetteMode::kReplay;
    CHECK_THROWS(run_evaluation(cfg));
  }
}
