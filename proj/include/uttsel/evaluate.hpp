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

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uttsel/classify.hpp"
#include "uttsel/corpus.hpp"
#include "uttsel/llmgate.hpp"
#include "uttsel/metrics.hpp"
#include "uttsel/segment.hpp"

namespace uttsel {

enum class ReportFormat { kText, kCsv, kMarkdown };

ReportFormat parse_report_format(std::string_view text);
std::string_view to_string(ReportFormat format);

struct GatewayConfig {
  /// "stub" (offline heuristic) or "http" (chat-completion endpoint).
  std::string backend = "stub";
  std::optional<std::filesystem::path> lexicon;
  std::optional<std::filesystem::path> template_dir;
  llm::ChatCompletionConfig http;
  llm::BatchOptions batch;
  std::optional<std::filesystem::path> cassette;
  llm::CassetteMode cassette_mode = llm::CassetteMode::kPassthrough;
};

struct RunConfig {
  std::filesystem::path manifest;
  /// Empty means every model present in all records, in name order.
  std::vector<std::string> models;
  /// Empty means all four selectors.
  std::vector<SelectorKind> selectors;
  NormalizationConfig normalization;
  std::u32string punctuation_set{kDefaultSegmentPunctuation};
  GatewayConfig gateway;
  /// Model name -> shell command that punctuates a transcript.
  std::map<std::string, std::string> punctuation_hooks;
  std::chrono::milliseconds hook_timeout{30000};
  std::size_t workers = 4;
  std::optional<std::filesystem::path> output_dir;
  std::vector<ReportFormat> report_formats{ReportFormat::kText};
};

/// Reads a JSON config. Relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Whole-dataset statistics for one model (the 100% rows).
struct BaselineRow {
  std::string name;
  MaterialKind material = MaterialKind::kRead;
  std::string model;
  std::size_t n = 0;
  double uer = 0.0;
  std::optional<double> wer;
};

struct ConditionRow {
  ConditionResult result;
  MaterialKind material = MaterialKind::kRead;
  SelectorKind selector = SelectorKind::kPrompt;
  std::vector<std::string> models;
};

struct EvaluationReport {
  std::vector<BaselineRow> baselines;
  std::vector<ConditionRow> conditions;
  std::size_t unparseable_verdicts = 0;
  std::map<std::string, std::string> metadata;
};

struct PredictionRecord {
  std::string condition;
  Prediction prediction;
  bool reliable = false;
};

struct EvaluationRun {
  EvaluationReport report;
  std::vector<PredictionRecord> predictions;
};

/// "<model> [prompt]", "<model> [LLM-classification]",
/// "Agreement <a> and <b> [...]".
std::string condition_name(SelectorKind selector, const std::vector<std::string>& models);

/// Builds the classifier backend named by the gateway config.
std::unique_ptr<llm::Backend> make_backend(const GatewayConfig& cfg);

/// Runs every requested condition on an in-memory manifest. `backend` may be
/// null when no LLM selector runs or the cassette replays.
EvaluationRun evaluate_manifest(const Manifest& manifest, const RunConfig& cfg, llm::Backend* backend,
                                llm::Cassette& cassette);

/// Loads and validates the manifest, sets up the gateway, evaluates, and
/// writes report.json, predictions.jsonl and the rendered tables when
/// `output_dir` is set.
EvaluationRun run_evaluation(const RunConfig& cfg);

void write_outputs(const EvaluationRun& run, const std::filesystem::path& dir,
                   const std::vector<ReportFormat>& formats);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);
nlohmann::ordered_json prediction_to_json(const PredictionRecord& p);

/// Two tables, performance (P/R/F1/MCC) and subset (share/UER/WER), grouped
/// read then dialogue. Throws std::invalid_argument on an empty report.
std::string render_tables(const EvaluationReport& report, ReportFormat format);

}  // namespace uttsel
