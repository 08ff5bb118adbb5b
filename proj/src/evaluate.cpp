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

#include "uttsel/evaluate.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "uttsel/json_io.hpp"
#include "uttsel/unicode.hpp"

namespace uttsel {
namespace {

using ordered_json = nlohmann::ordered_json;

// One evaluable unit for one model: a pre-segmented utterance or a segment of
// a long recording.
struct Unit {
  std::string id;
  std::string language;
  std::string sentence;
  Tokens tokens;
  GroundTruth truth;
  std::optional<AlignmentResult> alignment;
  const UtteranceRecord* record = nullptr;
};

struct MaterialUnits {
  // Per model; the first `n_records` units of every model line up by record.
  std::map<std::string, std::vector<Unit>> per_model;
  std::size_t n_records = 0;
  // Per model, the segmented recordings whose units follow the records.
  std::map<std::string, std::vector<SegmentedDialogue>> recordings;

  bool empty() const { return per_model.empty() || per_model.begin()->second.empty(); }
};

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string verdict_key(const std::string& language, const std::string& sentence) {
  return language + '\n' + sentence;
}

std::vector<std::string> resolve_models(const Manifest& m, const RunConfig& cfg) {
  std::vector<std::string> models = cfg.models;
  if (models.empty()) {
    std::optional<std::set<std::string>> common;
    auto intersect = [&](const ModelOutputs& outputs) {
      std::set<std::string> names;
      for (const auto& [name, _] : outputs) {
        if (!common || common->contains(name)) names.insert(name);
      }
      common = std::move(names);
    };
    for (const auto& r : m.utterances) intersect(r.asr_outputs);
    for (const auto& r : m.recordings) intersect(r.asr_outputs);
    if (common) models.assign(common->begin(), common->end());
    if (models.empty()) throw std::invalid_argument("no model is present in every record");
  }
  std::set<std::string> unique(models.begin(), models.end());
  if (unique.size() != models.size()) throw std::invalid_argument("duplicate model in the model list");
  for (const auto& model : models) {
    for (const auto& r : m.utterances) {
      if (!r.asr_outputs.contains(model)) {
        throw std::invalid_argument("record \"" + r.id + "\" has no output for model \"" + model + "\"");
      }
    }
    for (const auto& r : m.recordings) {
      if (!r.asr_outputs.contains(model)) {
        throw std::invalid_argument("recording \"" + r.id + "\" has no output for model \"" + model + "\"");
      }
    }
  }
  return models;
}

std::vector<SelectorKind> resolve_selectors(const RunConfig& cfg, std::size_t n_models) {
  std::set<SelectorKind> requested(cfg.selectors.begin(), cfg.selectors.end());
  if (cfg.selectors.empty()) {
    requested = {SelectorKind::kPrompt, SelectorKind::kLlm};
    if (n_models == 2) requested.insert({SelectorKind::kAgreementPrompt, SelectorKind::kAgreementLlm});
  }
  for (auto s : requested) {
    if (is_agreement(s) && n_models != 2) {
      throw std::invalid_argument("selector " + std::string(to_string(s)) + " needs exactly two models, got " +
                                  std::to_string(n_models));
    }
  }
  // Canonical order keeps reports stable regardless of how selectors were listed.
  std::vector<SelectorKind> out;
  for (auto s : {SelectorKind::kPrompt, SelectorKind::kAgreementPrompt, SelectorKind::kLlm,
                 SelectorKind::kAgreementLlm}) {
    if (requested.contains(s)) out.push_back(s);
  }
  return out;
}

MaterialUnits record_units(const std::vector<const UtteranceRecord*>& records,
                           const std::vector<std::string>& models, const RunConfig& cfg) {
  MaterialUnits out;
  out.n_records = records.size();
  for (const auto& model : models) {
    auto& units = out.per_model[model];
    units.resize(records.size());
    parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
      const UtteranceRecord& r = *records[i];
      const std::string& ao = r.asr_outputs.at(model);
      Unit& u = units[i];
      u.id = r.id;
      u.language = r.language;
      u.sentence = normalize(ao, cfg.normalization);
      u.tokens = normalize_tokens(ao, cfg.normalization);
      u.truth = ground_truth_label(r, model, cfg.normalization);
      if (r.reference) u.alignment = align_words(normalize_reference_tokens(*r.reference, cfg.normalization), u.tokens);
      u.record = &r;
    });
  }
  return out;
}

void add_recording_units(MaterialUnits& out, const std::vector<DialogueRecording>& recordings,
                         const std::vector<std::string>& models, const RunConfig& cfg) {
  for (const auto& model : models) {
    std::vector<SegmentedDialogue> segmented(recordings.size());
    auto hook = cfg.punctuation_hooks.find(model);
    parallel_for(recordings.size(), cfg.workers, [&](std::size_t i) {
      const DialogueRecording& rec = recordings[i];
      std::string transcript = rec.asr_outputs.at(model);
      if (hook != cfg.punctuation_hooks.end()) {
        try {
          transcript = run_punctuation_hook(hook->second, transcript, cfg.hook_timeout);
        } catch (const HookError& e) {
          throw HookError("recording \"" + rec.id + "\", model \"" + model + "\": " + e.what());
        }
      }
      segmented[i] = segment_dialogue(rec.id, model, transcript, rec.reference, cfg.punctuation_set,
                                      cfg.normalization);
    });
    auto& units = out.per_model[model];
    for (std::size_t i = 0; i < recordings.size(); ++i) {
      for (const auto& seg : segmented[i].segments) {
        Unit u;
        u.id = seg.id;
        u.language = recordings[i].language;
        u.sentence = normalize(seg.raw_text, cfg.normalization);
        u.tokens = seg.tokens;
        u.truth = {seg.id, model, seg.correct, TruthSource::kReferenceMatch};
        u.alignment = seg.alignment;
        units.push_back(std::move(u));
      }
    }
    out.recordings[model] = std::move(segmented);
  }
}

ConditionResult score(std::string name, const std::vector<Prediction>& preds, const std::vector<GroundTruth>& truths,
                      const std::vector<const Unit*>& units) {
  ConditionResult r;
  r.name = std::move(name);
  r.counts = confusion(preds, truths);
  const auto prf = precision_recall_f1(r.counts);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.mcc = mcc(r.counts);
  std::unordered_set<std::string> selected;
  std::vector<AlignmentResult> alignments;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!preds[i].positive) continue;
    selected.insert(preds[i].utterance_id);
    if (units[i]->alignment) alignments.push_back(*units[i]->alignment);
  }
  r.subset_share = subset_share(selected.size(), preds.size());
  r.uer = uer(selected, truths).percent;
  if (!alignments.empty()) r.wer = corpus_wer(alignments).percent;
  return r;
}

std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Table {
  std::vector<std::string> header;
  // A row with a single cell is a section heading.
  std::vector<std::vector<std::string>> rows;
};

std::string display_width_pad(const std::string& s, std::size_t width, bool left) {
  const std::size_t len = unicode::decode(s).size();
  if (len >= width) return s;
  const std::string pad(width - len, ' ');
  return left ? s + pad : pad + s;
}

std::string render_text(const std::string& title, const Table& t) {
  std::vector<std::size_t> widths(t.header.size(), 0);
  auto grow = [&](const std::vector<std::string>& row) {
    if (row.size() != t.header.size()) return;
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], unicode::decode(row[c]).size());
  };
  grow(t.header);
  for (const auto& row : t.rows) grow(row);
  std::string out = title + "\n";
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) s += "  ";
      s += display_width_pad(row[c], widths[c], c == 0);
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out += s + "\n";
  };
  line(t.header);
  for (const auto& row : t.rows) {
    if (row.size() == 1) {
      out += row[0] + "\n";
    } else {
      line(row);
    }
  }
  return out;
}

std::string render_markdown(const std::string& title, const Table& t) {
  std::string out = "**" + title + "**\n\n|";
  for (const auto& h : t.header) out += " " + h + " |";
  out += "\n|";
  for (std::size_t c = 0; c < t.header.size(); ++c) out += c == 0 ? " :--- |" : " ---: |";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "|";
    if (row.size() == 1) {
      out += " *" + row[0] + "* |";
      for (std::size_t c = 1; c < t.header.size(); ++c) out += " |";
    } else {
      for (const auto& cell : row) out += " " + cell + " |";
    }
    out += "\n";
  }
  return out;
}

std::string material_title(MaterialKind m) { return m == MaterialKind::kRead ? "Read material" : "Dialogue material"; }

std::string optional_cell(const std::optional<double>& v) { return v ? format_fixed(*v, 1) : "-"; }

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::kText;
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  throw std::invalid_argument("unknown report format \"" + std::string(text) + "\"");
}

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::kText: return "text";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kMarkdown: break;
  }
  return "markdown";
}

std::string condition_name(SelectorKind selector, const std::vector<std::string>& models) {
  const std::string tag = selector_material(selector) == MaterialKind::kRead ? "[prompt]" : "[LLM-classification]";
  if (is_agreement(selector)) {
    if (models.size() != 2) throw std::invalid_argument("agreement condition needs two models");
    return "Agreement " + models[0] + " and " + models[1] + " " + tag;
  }
  if (models.size() != 1) throw std::invalid_argument("single-model condition needs one model");
  return models[0] + " " + tag;
}

std::unique_ptr<llm::Backend> make_backend(const GatewayConfig& cfg) {
  if (cfg.backend == "stub") {
    return std::make_unique<llm::HeuristicBackend>(cfg.lexicon ? llm::load_lexicon(*cfg.lexicon) : llm::Lexicon{});
  }
  if (cfg.backend == "http") return std::make_unique<llm::ChatCompletionBackend>(cfg.http);
  throw std::invalid_argument("unknown gateway backend \"" + cfg.backend + "\"");
}

EvaluationRun evaluate_manifest(const Manifest& manifest, const RunConfig& cfg, llm::Backend* backend,
                                llm::Cassette& cassette) {
  cfg.normalization.check();
  const auto models = resolve_models(manifest, cfg);
  const auto selectors = resolve_selectors(cfg, models.size());

  std::vector<const UtteranceRecord*> read_records;
  std::vector<const UtteranceRecord*> dialogue_records;
  for (const auto& r : manifest.utterances) {
    (r.material == MaterialKind::kRead ? read_records : dialogue_records).push_back(&r);
  }
  auto wants = [&](MaterialKind m) {
    return std::any_of(selectors.begin(), selectors.end(), [&](SelectorKind s) { return selector_material(s) == m; });
  };

  MaterialUnits read;
  MaterialUnits dialogue;
  if (wants(MaterialKind::kRead) && !read_records.empty()) read = record_units(read_records, models, cfg);
  if (wants(MaterialKind::kDialogue) && (!dialogue_records.empty() || !manifest.recordings.empty())) {
    dialogue = record_units(dialogue_records, models, cfg);
    add_recording_units(dialogue, manifest.recordings, models, cfg);
  }

  EvaluationRun run;
  run.report.metadata = manifest.metadata;

  std::unordered_map<std::string, llm::Verdict> verdicts;
  const bool needs_llm = std::any_of(selectors.begin(), selectors.end(), [](SelectorKind s) {
    return s == SelectorKind::kLlm || s == SelectorKind::kAgreementLlm;
  });
  if (needs_llm && !dialogue.empty()) {
    std::map<std::string, llm::BatchItem> unique;
    for (const auto& [model, units] : dialogue.per_model) {
      for (const auto& u : units) {
        if (!u.sentence.empty()) unique.emplace(verdict_key(u.language, u.sentence), llm::BatchItem{u.sentence, u.language});
      }
    }
    std::vector<llm::BatchItem> items;
    for (auto& [_, item] : unique) items.push_back(item);
    llm::PromptTemplates templates;
    if (cfg.gateway.template_dir) templates.load_directory(*cfg.gateway.template_dir);
    const auto results = llm::classify_batch(items, backend, cassette, cfg.gateway.batch, templates);
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (results[i].kind == llm::VerdictKind::kUnparseable) {
        ++run.report.unparseable_verdicts;
        spdlog::warn("unparseable classifier verdict for \"{}\": \"{}\"", items[i].sentence, results[i].raw_response);
      }
      verdicts.emplace(verdict_key(items[i].language, items[i].sentence), results[i]);
    }
  }

  auto base_positive = [&](SelectorKind selector, const std::string& model, const Unit& u) {
    if (selector_material(selector) == MaterialKind::kRead) return select_by_prompt(*u.record, model, cfg.normalization);
    if (u.sentence.empty()) return false;
    return verdicts.at(verdict_key(u.language, u.sentence)).positive();
  };

  auto emit = [&](SelectorKind selector, const std::vector<std::string>& cond_models, const std::string& pred_model,
                  MaterialKind material, const std::vector<const Unit*>& units, const std::vector<bool>& positive) {
    const std::string name = condition_name(selector, cond_models);
    std::vector<Prediction> preds;
    std::vector<GroundTruth> truths;
    for (std::size_t i = 0; i < units.size(); ++i) {
      preds.push_back({units[i]->id, selector, pred_model, positive[i]});
      truths.push_back(units[i]->truth);
      run.predictions.push_back({name, preds.back(), units[i]->truth.reliable});
    }
    run.report.conditions.push_back({score(name, preds, truths, units), material, selector, cond_models});
  };

  for (const MaterialKind material : {MaterialKind::kRead, MaterialKind::kDialogue}) {
    const MaterialUnits& mu = material == MaterialKind::kRead ? read : dialogue;
    if (mu.empty()) continue;
    bool any = false;
    for (const SelectorKind selector : selectors) {
      if (selector_material(selector) != material) continue;
      any = true;
      if (!is_agreement(selector)) {
        for (const auto& model : models) {
          const auto& units = mu.per_model.at(model);
          std::vector<const Unit*> ptrs;
          std::vector<bool> positive;
          for (const auto& u : units) {
            ptrs.push_back(&u);
            positive.push_back(base_positive(selector, model, u));
          }
          emit(selector, {model}, model, material, ptrs, positive);
        }
        continue;
      }
      const SelectorKind base = material == MaterialKind::kRead ? SelectorKind::kPrompt : SelectorKind::kLlm;
      const std::string& a = models[0];
      const std::string& b = models[1];
      const auto& units_a = mu.per_model.at(a);
      const auto& units_b = mu.per_model.at(b);
      std::vector<const Unit*> ptrs;
      std::vector<bool> positive;
      for (std::size_t i = 0; i < mu.n_records; ++i) {
        const UtteranceRecord& r = *units_a[i].record;
        const ModelOutputs outputs{{a, r.asr_outputs.at(a)}, {b, r.asr_outputs.at(b)}};
        const std::map<std::string, bool> verdict{{a, base_positive(base, a, units_a[i])},
                                                   {b, base_positive(base, b, units_b[i])}};
        ptrs.push_back(&units_a[i]);
        positive.push_back(select_by_agreement(outputs, verdict, cfg.normalization));
      }
      // Recording segments: the first model's segments are the units; a
      // segment is positive when it is matched to an identical segment of the
      // second model and both are classified positive.
      if (auto it = mu.recordings.find(a); it != mu.recordings.end()) {
        const auto& recs_a = it->second;
        const auto& recs_b = mu.recordings.at(b);
        std::size_t offset_a = mu.n_records;
        std::size_t offset_b = mu.n_records;
        for (std::size_t r = 0; r < recs_a.size(); ++r) {
          std::map<std::size_t, std::size_t> partner;
          for (const auto& [ia, ib] : match_across_models(recs_a[r], recs_b[r])) partner.emplace(ia, ib);
          for (std::size_t s = 0; s < recs_a[r].segments.size(); ++s) {
            const Unit& ua = units_a[offset_a + s];
            bool pos = false;
            if (auto p = partner.find(s); p != partner.end()) {
              pos = base_positive(base, a, ua) && base_positive(base, b, units_b[offset_b + p->second]);
            }
            ptrs.push_back(&ua);
            positive.push_back(pos);
          }
          offset_a += recs_a[r].segments.size();
          offset_b += recs_b[r].segments.size();
        }
      }
      emit(selector, {a, b}, a + "+" + b, material, ptrs, positive);
    }
    if (!any) continue;
    for (const auto& model : models) {
      const auto& units = mu.per_model.at(model);
      BaselineRow row{model, material, model, units.size(), 0.0, std::nullopt};
      std::unordered_set<std::string> all;
      std::vector<GroundTruth> truths;
      std::vector<AlignmentResult> alignments;
      for (const auto& u : units) {
        all.insert(u.id);
        truths.push_back(u.truth);
        if (u.alignment) alignments.push_back(*u.alignment);
      }
      row.uer = uer(all, truths).percent;
      if (!alignments.empty()) row.wer = corpus_wer(alignments).percent;
      run.report.baselines.push_back(std::move(row));
    }
  }
  return run;
}

EvaluationRun run_evaluation(const RunConfig& cfg) {
  const Manifest manifest = load_manifest(cfg.manifest);
  if (auto issues = validate_manifest(manifest); !issues.empty()) {
    throw ManifestError(0, "manifest invalid: record \"" + issues[0].record_id + "\": " + issues[0].description);
  }
  std::unique_ptr<llm::Cassette> cassette;
  if (cfg.gateway.cassette) {
    cassette = llm::Cassette::open(*cfg.gateway.cassette, cfg.gateway.cassette_mode);
  } else if (cfg.gateway.cassette_mode != llm::CassetteMode::kPassthrough) {
    throw std::invalid_argument("cassette mode " + std::string(llm::to_string(cfg.gateway.cassette_mode)) +
                                " needs a cassette path");
  } else {
    cassette = std::make_unique<llm::Cassette>();
  }
  std::unique_ptr<llm::Backend> backend;
  if (cassette->mode() != llm::CassetteMode::kReplay) backend = make_backend(cfg.gateway);

  EvaluationRun run = evaluate_manifest(manifest, cfg, backend.get(), *cassette);
  if (cfg.output_dir) write_outputs(run, *cfg.output_dir, cfg.report_formats);
  return run;
}

void write_outputs(const EvaluationRun& run, const std::filesystem::path& dir,
                   const std::vector<ReportFormat>& formats) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  };
  write("report.json", report_to_json(run.report).dump(2) + "\n");
  std::string dump;
  for (const auto& p : run.predictions) dump += prediction_to_json(p).dump() + "\n";
  write("predictions.jsonl", dump);
  for (const auto format : formats) {
    const char* ext = format == ReportFormat::kText ? "tables.txt" : format == ReportFormat::kCsv ? "tables.csv" : "tables.md";
    write(ext, render_tables(run.report, format));
  }
}

ordered_json prediction_to_json(const PredictionRecord& p) {
  ordered_json j;
  j["condition"] = p.condition;
  j["id"] = p.prediction.utterance_id;
  j["selector"] = std::string(to_string(p.prediction.selector));
  j["model"] = p.prediction.model;
  j["positive"] = p.prediction.positive;
  j["reliable"] = p.reliable;
  return j;
}

ordered_json report_to_json(const EvaluationReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); };
  ordered_json j;
  j["metadata"] = ordered_json::object();
  for (const auto& [k, v] : report.metadata) j["metadata"][k] = v;
  j["unparseable_verdicts"] = report.unparseable_verdicts;
  j["baselines"] = ordered_json::array();
  for (const auto& b : report.baselines) {
    ordered_json row;
    row["name"] = b.name;
    row["material"] = std::string(to_string(b.material));
    row["model"] = b.model;
    row["n"] = b.n;
    row["uer"] = b.uer;
    row["wer"] = opt(b.wer);
    j["baselines"].push_back(std::move(row));
  }
  j["conditions"] = ordered_json::array();
  for (const auto& c : report.conditions) {
    ordered_json row;
    row["name"] = c.result.name;
    row["material"] = std::string(to_string(c.material));
    row["selector"] = std::string(to_string(c.selector));
    row["models"] = c.models;
    row["counts"] = {{"tp", c.result.counts.tp}, {"fp", c.result.counts.fp}, {"tn", c.result.counts.tn},
                     {"fn", c.result.counts.fn}};
    row["precision"] = c.result.precision;
    row["recall"] = c.result.recall;
    row["f1"] = c.result.f1;
    row["mcc"] = c.result.mcc;
    row["subset_share"] = c.result.subset_share;
    row["uer"] = c.result.uer;
    row["wer"] = opt(c.result.wer);
    j["conditions"].push_back(std::move(row));
  }
  return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  auto opt = [](const nlohmann::json& v) { return v.is_null() ? std::optional<double>() : v.get<double>(); };
  EvaluationReport r;
  const auto metadata = j.value("metadata", nlohmann::json::object());
  for (const auto& [k, v] : metadata.items()) r.metadata[k] = v.get<std::string>();
  r.unparseable_verdicts = j.value("unparseable_verdicts", std::size_t{0});
  for (const auto& b : j.at("baselines")) {
    r.baselines.push_back({b.at("name").get<std::string>(), parse_material(b.at("material").get<std::string>()),
                           b.at("model").get<std::string>(), b.at("n").get<std::size_t>(), b.at("uer").get<double>(),
                           opt(b.at("wer"))});
  }
  for (const auto& c : j.at("conditions")) {
    ConditionRow row;
    row.result.name = c.at("name").get<std::string>();
    row.material = parse_material(c.at("material").get<std::string>());
    row.selector = parse_selector(c.at("selector").get<std::string>());
    row.models = c.at("models").get<std::vector<std::string>>();
    const auto& counts = c.at("counts");
    row.result.counts = {counts.at("tp").get<std::uint64_t>(), counts.at("fp").get<std::uint64_t>(),
                         counts.at("tn").get<std::uint64_t>(), counts.at("fn").get<std::uint64_t>()};
    row.result.precision = c.at("precision").get<double>();
    row.result.recall = c.at("recall").get<double>();
    row.result.f1 = c.at("f1").get<double>();
    row.result.mcc = c.at("mcc").get<double>();
    row.result.subset_share = c.at("subset_share").get<double>();
    row.result.uer = c.at("uer").get<double>();
    row.result.wer = opt(c.at("wer"));
    r.conditions.push_back(std::move(row));
  }
  return r;
}

std::string render_tables(const EvaluationReport& report, ReportFormat format) {
  if (report.conditions.empty() && report.baselines.empty()) {
    throw std::invalid_argument("cannot render an empty report");
  }
  const bool csv = format == ReportFormat::kCsv;
  Table perf{csv ? std::vector<std::string>{"table", "material", "condition", "P", "R", "F1", "MCC"}
                 : std::vector<std::string>{"Condition", "P", "R", "F1", "MCC"},
             {}};
  Table subset{csv ? std::vector<std::string>{"table", "material", "condition", "of_dataset", "UER", "WER"}
                   : std::vector<std::string>{"Condition", "of Dataset", "UER", "WER"},
               {}};

  for (const MaterialKind material : {MaterialKind::kRead, MaterialKind::kDialogue}) {
    std::vector<const ConditionRow*> conds;
    for (const auto& c : report.conditions) {
      if (c.material == material) conds.push_back(&c);
    }
    std::vector<const BaselineRow*> bases;
    for (const auto& b : report.baselines) {
      if (b.material == material) bases.push_back(&b);
    }
    if (conds.empty() && bases.empty()) continue;
    const std::string mat(to_string(material));
    const std::string indent = format == ReportFormat::kText ? "  " : "";

    if (!conds.empty()) {
      if (!csv) perf.rows.push_back({material_title(material)});
      for (const auto* c : conds) {
        std::vector<std::string> cells{format_fixed(c->result.precision, 1), format_fixed(c->result.recall, 1),
                                       format_fixed(c->result.f1, 1), format_fixed(c->result.mcc, 2)};
        if (csv) {
          cells.insert(cells.begin(), {"performance", mat, c->result.name});
        } else {
          cells.insert(cells.begin(), indent + c->result.name);
        }
        perf.rows.push_back(std::move(cells));
      }
    }

    if (!csv) subset.rows.push_back({material_title(material)});
    auto subset_row = [&](const std::string& name, double share, double uer, const std::optional<double>& wer) {
      std::vector<std::string> cells{format_fixed(share, 1) + (csv ? "" : "%"), format_fixed(uer, 1), optional_cell(wer)};
      if (csv) {
        cells.insert(cells.begin(), {"subset", mat, name});
      } else {
        cells.insert(cells.begin(), indent + name);
      }
      subset.rows.push_back(std::move(cells));
    };
    std::set<const ConditionRow*> done;
    for (const auto* b : bases) {
      subset_row(b->name, 100.0, b->uer, b->wer);
      for (const auto* c : conds) {
        if (c->models.size() == 1 && c->models[0] == b->model) {
          subset_row(c->result.name, c->result.subset_share, c->result.uer, c->result.wer);
          done.insert(c);
        }
      }
    }
    for (const auto* c : conds) {
      if (!done.contains(c)) subset_row(c->result.name, c->result.subset_share, c->result.uer, c->result.wer);
    }
  }

  switch (format) {
    case ReportFormat::kText:
      return render_text("Performance of reliability selectors", perf) + "\n" +
             render_text("Selected subsets with error rates", subset);
    case ReportFormat::kMarkdown:
      return render_markdown("Performance of reliability selectors", perf) + "\n" +
             render_markdown("Selected subsets with error rates", subset);
    case ReportFormat::kCsv: {
      std::string out;
      for (const Table* t : {&perf, &subset}) {
        if (t == &subset) out += "\n";
        for (const auto* row : {&t->header}) {
          for (std::size_t c = 0; c < row->size(); ++c) out += (c ? "," : "") + csv_field((*row)[c]);
          out += "\n";
        }
        for (const auto& row : t->rows) {
          for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_field(row[c]);
          out += "\n";
        }
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown report format");
}

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j,
                      {"manifest", "models", "selectors", "normalization", "punctuation_set", "gateway",
                       "punctuation_hooks", "hook_timeout_ms", "workers", "output_dir", "report_formats"},
                      "config");
  auto path = [&](const nlohmann::json& v) {
    std::filesystem::path p = v.get<std::string>();
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  RunConfig cfg;
  if (auto it = j.find("manifest"); it != j.end() && !it->is_null()) cfg.manifest = path(*it);
  cfg.models = j.value("models", cfg.models);
  for (const auto& s : j.value("selectors", std::vector<std::string>{})) cfg.selectors.push_back(parse_selector(s));
  if (auto it = j.find("normalization"); it != j.end()) cfg.normalization = normalization_from_json(*it);
  if (auto it = j.find("punctuation_set"); it != j.end()) cfg.punctuation_set = unicode::decode(it->get<std::string>());
  if (auto it = j.find("gateway"); it != j.end()) {
    const auto& g = *it;
    reject_unknown_keys(g,
                        {"backend", "lexicon", "template_dir", "http", "max_in_flight", "max_attempts",
                         "initial_backoff_ms", "cassette", "cassette_mode"},
                        "gateway");
    cfg.gateway.backend = g.value("backend", cfg.gateway.backend);
    if (auto l = g.find("lexicon"); l != g.end() && !l->is_null()) cfg.gateway.lexicon = path(*l);
    if (auto t = g.find("template_dir"); t != g.end() && !t->is_null()) cfg.gateway.template_dir = path(*t);
    if (auto h = g.find("http"); h != g.end()) {
      reject_unknown_keys(*h, {"base_url", "model", "api_key_env", "temperature", "extra_body", "timeout_s"},
                          "gateway.http");
      auto& http = cfg.gateway.http;
      http.base_url = h->value("base_url", http.base_url);
      http.model = h->value("model", http.model);
      http.api_key_env = h->value("api_key_env", http.api_key_env);
      if (auto t = h->find("temperature"); t != h->end()) {
        http.temperature = t->is_null() ? std::nullopt : std::optional<double>(t->get<double>());
      }
      if (auto e = h->find("extra_body"); e != h->end()) http.extra_body = *e;
      http.timeout = std::chrono::seconds(h->value("timeout_s", static_cast<long>(http.timeout.count())));
    }
    cfg.gateway.batch.max_in_flight = g.value("max_in_flight", cfg.gateway.batch.max_in_flight);
    cfg.gateway.batch.max_attempts = g.value("max_attempts", cfg.gateway.batch.max_attempts);
    cfg.gateway.batch.initial_backoff =
        std::chrono::milliseconds(g.value("initial_backoff_ms", static_cast<long>(cfg.gateway.batch.initial_backoff.count())));
    if (auto c = g.find("cassette"); c != g.end() && !c->is_null()) cfg.gateway.cassette = path(*c);
    if (auto m = g.find("cassette_mode"); m != g.end()) cfg.gateway.cassette_mode = llm::parse_cassette_mode(m->get<std::string>());
  }
  cfg.punctuation_hooks = j.value("punctuation_hooks", cfg.punctuation_hooks);
  cfg.hook_timeout = std::chrono::milliseconds(j.value("hook_timeout_ms", static_cast<long>(cfg.hook_timeout.count())));
  cfg.workers = j.value("workers", cfg.workers);
  if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (auto it = j.find("output_dir"); it != j.end() && !it->is_null()) cfg.output_dir = path(*it);
  if (auto it = j.find("report_formats"); it != j.end()) {
    cfg.report_formats.clear();
    for (const auto& f : *it) cfg.report_formats.push_back(parse_report_format(f.get<std::string>()));
  }
  return cfg;
}

ordered_json config_to_json(const RunConfig& cfg) {
  auto opt_path = [](const std::optional<std::filesystem::path>& p) { return p ? ordered_json(p->string()) : ordered_json(); };
  ordered_json j;
  j["manifest"] = cfg.manifest.empty() ? ordered_json() : ordered_json(cfg.manifest.string());
  j["models"] = cfg.models;
  j["selectors"] = ordered_json::array();
  for (auto s : cfg.selectors) j["selectors"].push_back(std::string(to_string(s)));
  j["normalization"] = normalization_to_json(cfg.normalization);
  j["punctuation_set"] = unicode::encode(cfg.punctuation_set);
  ordered_json g;
  g["backend"] = cfg.gateway.backend;
  g["lexicon"] = opt_path(cfg.gateway.lexicon);
  g["template_dir"] = opt_path(cfg.gateway.template_dir);
  g["http"] = {{"base_url", cfg.gateway.http.base_url},
               {"model", cfg.gateway.http.model},
               {"api_key_env", cfg.gateway.http.api_key_env},
               {"temperature", cfg.gateway.http.temperature ? ordered_json(*cfg.gateway.http.temperature) : ordered_json()},
               {"extra_body", ordered_json::parse(cfg.gateway.http.extra_body.dump())},
               {"timeout_s", cfg.gateway.http.timeout.count()}};
  g["max_in_flight"] = cfg.gateway.batch.max_in_flight;
  g["max_attempts"] = cfg.gateway.batch.max_attempts;
  g["initial_backoff_ms"] = cfg.gateway.batch.initial_backoff.count();
  g["cassette"] = opt_path(cfg.gateway.cassette);
  g["cassette_mode"] = std::string(llm::to_string(cfg.gateway.cassette_mode));
  j["gateway"] = std::move(g);
  j["punctuation_hooks"] = cfg.punctuation_hooks;
  j["hook_timeout_ms"] = cfg.hook_timeout.count();
  j["workers"] = cfg.workers;
  j["output_dir"] = opt_path(cfg.output_dir);
  j["report_formats"] = ordered_json::array();
  for (auto f : cfg.report_formats) j["report_formats"].push_back(std::string(to_string(f)));
  return j;
}

}  // namespace uttsel
