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

// uttsel: command-line front end for corpus evaluation.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "uttsel/evaluate.hpp"
#include "uttsel/json_io.hpp"
#include "uttsel/synth.hpp"
#include "uttsel/unicode.hpp"

namespace {

using namespace uttsel;

constexpr int kExitError = 1;
constexpr int kExitUnparseable = 3;

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  const std::filesystem::path p(path);
  return config_from_json(read_json_file(p), p.parent_path());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct EvaluateArgs {
  std::string manifest, config, selectors, models, cassette, cassette_mode, out, backend;
  std::vector<std::string> formats;
  std::size_t workers = 0;
  bool show_config = false;
};

RunConfig merge(const EvaluateArgs& a) {
  RunConfig cfg = load_config(a.config);
  if (!a.manifest.empty()) cfg.manifest = a.manifest;
  if (!a.selectors.empty()) {
    cfg.selectors.clear();
    for (const auto& s : split_list(a.selectors)) cfg.selectors.push_back(parse_selector(s));
  }
  if (!a.models.empty()) cfg.models = split_list(a.models);
  if (!a.cassette.empty()) cfg.gateway.cassette = a.cassette;
  if (!a.cassette_mode.empty()) cfg.gateway.cassette_mode = llm::parse_cassette_mode(a.cassette_mode);
  if (!a.backend.empty()) cfg.gateway.backend = a.backend;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (!a.formats.empty()) {
    cfg.report_formats.clear();
    for (const auto& f : a.formats) cfg.report_formats.push_back(parse_report_format(f));
  }
  if (a.workers > 0) cfg.workers = a.workers;
  return cfg;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const RunConfig cfg = merge(a);
  if (a.show_config) {
    std::cout << config_to_json(cfg).dump(2) << "\n";
    return 0;
  }
  if (cfg.manifest.empty()) throw std::invalid_argument("no manifest given (use --manifest or the config file)");
  const EvaluationRun run = run_evaluation(cfg);
  if (!cfg.output_dir) std::cout << render_tables(run.report, cfg.report_formats.front());
  if (run.report.unparseable_verdicts > 0) {
    spdlog::error("{} classifier verdict(s) were unparseable and counted as negative", run.report.unparseable_verdicts);
    return kExitUnparseable;
  }
  return 0;
}

struct SegmentArgs {
  std::string manifest, text, config, model, punctuation;
};

int cmd_segment(const SegmentArgs& a) {
  const RunConfig cfg = load_config(a.config);
  const std::u32string punct = a.punctuation.empty() ? cfg.punctuation_set : unicode::decode(a.punctuation);
  if (!a.text.empty()) {
    for (const auto& piece : segment_transcript(a.text, punct)) {
      nlohmann::ordered_json j;
      j["text"] = piece;
      j["normalized"] = normalize(piece, cfg.normalization);
      std::cout << j.dump() << "\n";
    }
    return 0;
  }
  if (a.manifest.empty()) throw std::invalid_argument("segment needs --manifest or --text");
  const Manifest m = load_manifest(a.manifest);
  for (const auto& rec : m.recordings) {
    for (const auto& [model, transcript] : rec.asr_outputs) {
      if (!a.model.empty() && model != a.model) continue;
      std::string text = transcript;
      if (auto hook = cfg.punctuation_hooks.find(model); hook != cfg.punctuation_hooks.end()) {
        text = run_punctuation_hook(hook->second, text, cfg.hook_timeout);
      }
      const auto sd = segment_dialogue(rec.id, model, text, rec.reference, punct, cfg.normalization);
      for (const auto& seg : sd.segments) {
        nlohmann::ordered_json j;
        j["id"] = seg.id;
        j["recording"] = rec.id;
        j["model"] = model;
        j["text"] = seg.raw_text;
        j["normalized"] = join_tokens(seg.tokens);
        j["correct"] = seg.correct;
        j["errors"] = seg.alignment.errors();
        std::cout << j.dump() << "\n";
      }
    }
  }
  return 0;
}

struct SynthArgs {
  std::string spec, manifest, truth;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
};

int cmd_synth(const SynthArgs& a) {
  synth::SynthSpec spec = synth::spec_from_json(read_json_file(a.spec));
  if (a.seed) spec.seed = *a.seed;
  if (a.n) spec.n_utterances = *a.n;
  const auto corpus = synth::generate_corpus(spec);
  save_manifest(a.manifest, corpus.manifest);
  synth::save_truth_table(a.truth, corpus.truth);
  spdlog::info("wrote {} utterances to {} and {} truth entries to {}", corpus.manifest.utterances.size(), a.manifest,
               corpus.truth.size(), a.truth);
  return 0;
}

int cmd_report(const std::string& path, const std::string& format) {
  const EvaluationReport report = report_from_json(read_json_file(path));
  std::cout << render_tables(report, parse_report_format(format));
  return 0;
}

int cmd_validate(const std::string& path) {
  Manifest m;
  try {
    m = load_manifest(path, {.check_invariants = false});
  } catch (const ManifestError& e) {
    std::cout << path << ": " << e.what() << "\n";
    return kExitError;
  }
  const auto issues = validate_manifest(m);
  for (const auto& issue : issues) std::cout << path << ": " << issue.record_id << ": " << issue.description << "\n";
  if (!issues.empty()) return kExitError;
  std::cout << path << ": ok (" << m.utterances.size() << " utterances, " << m.recordings.size() << " recordings)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("uttsel"));
  spdlog::set_pattern("%^[%l]%$ %v");

  CLI::App app{"Select reliable ASR utterances and score the selection"};
  app.require_subcommand(0, 1);
  bool show_config = false;
  std::string log_level = "info";
  app.add_flag("--show-config", show_config, "Print the default configuration and exit");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Run every selector condition on a manifest");
  evaluate->add_option("--manifest", ev.manifest, "JSONL manifest");
  evaluate->add_option("--config", ev.config, "JSON run configuration");
  evaluate->add_option("--selectors", ev.selectors, "Comma list: prompt, llm, agreement_prompt, agreement_llm");
  evaluate->add_option("--models", ev.models, "Comma list of model names");
  evaluate->add_option("--cassette", ev.cassette, "Classifier cassette (JSONL)");
  evaluate->add_option("--cassette-mode", ev.cassette_mode, "record, replay or passthrough");
  evaluate->add_option("--backend", ev.backend, "Classifier backend: stub or http");
  evaluate->add_option("--out", ev.out, "Output directory");
  evaluate->add_option("--format", ev.formats, "Table format(s): text, csv, markdown");
  evaluate->add_option("--workers", ev.workers, "Worker threads");
  evaluate->add_flag("--show-config", ev.show_config, "Print the effective configuration and exit");

  SegmentArgs sg;
  auto* segment = app.add_subcommand("segment", "Split recording transcripts into utterances");
  auto* seg_source = segment->add_option_group("source");
  seg_source->add_option("--manifest", sg.manifest, "Manifest with recordings");
  seg_source->add_option("--text", sg.text, "A single transcript");
  seg_source->require_option(1);
  segment->add_option("--config", sg.config, "JSON run configuration");
  segment->add_option("--model", sg.model, "Only this model");
  segment->add_option("--punctuation", sg.punctuation, "Characters that end a segment");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic manifest and truth table");
  synth_cmd->add_option("--spec", sy.spec, "Synthesis spec (JSON)")->required();
  synth_cmd->add_option("--manifest", sy.manifest, "Output manifest")->required();
  synth_cmd->add_option("--truth", sy.truth, "Output truth table")->required();
  synth_cmd->add_option("--seed", sy.seed, "Override the spec seed");
  synth_cmd->add_option("--n", sy.n, "Override the utterance count");

  std::string report_path, report_format = "text";
  auto* report = app.add_subcommand("report", "Render tables from a report.json");
  report->add_option("report", report_path, "report.json")->required();
  report->add_option("--format", report_format, "text, csv or markdown")->capture_default_str();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a manifest");
  validate->add_option("manifest", validate_path, "JSONL manifest")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (show_config && !evaluate->parsed()) {
      std::cout << config_to_json(RunConfig{}).dump(2) << "\n";
      return 0;
    }
    if (evaluate->parsed()) {
      ev.show_config = ev.show_config || show_config;
      return cmd_evaluate(ev);
    }
    if (segment->parsed()) return cmd_segment(sg);
    if (synth_cmd->parsed()) return cmd_synth(sy);
    if (report->parsed()) return cmd_report(report_path, report_format);
    if (validate->parsed()) return cmd_validate(validate_path);
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
}
