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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "uttsel/evaluate.hpp"
#include "uttsel/json_io.hpp"
#include "uttsel/synth.hpp"
#include "uttsel/unicode.hpp"

namespace py = pybind11;
using namespace uttsel;

namespace {

// JSON crosses the boundary as text; the Python wrapper decodes it.
RunConfig config_from_text(const std::string& text, const std::string& base_dir) {
  return config_from_json(nlohmann::json::parse(text), base_dir);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reliable ASR utterance selection and scoring";

  py::class_<NormalizationConfig>(m, "NormalizationConfig")
      .def(py::init<>())
      .def_readwrite("lowercase", &NormalizationConfig::lowercase)
      .def_property(
          "strip_punctuation",
          [](const NormalizationConfig& c) -> std::optional<std::string> {
            if (!c.strip_punctuation) return std::nullopt;
            return unicode::encode(*c.strip_punctuation);
          },
          [](NormalizationConfig& c, const std::optional<std::string>& s) {
            c.strip_punctuation = s ? std::optional<std::u32string>(unicode::decode(*s)) : std::nullopt;
          })
      .def_readwrite("collapse_whitespace", &NormalizationConfig::collapse_whitespace)
      .def_readwrite("hallucination_repeat_ngram_max", &NormalizationConfig::hallucination_repeat_ngram_max)
      .def_readwrite("hallucination_repeat_threshold", &NormalizationConfig::hallucination_repeat_threshold)
      .def_readwrite("space_repair_enabled", &NormalizationConfig::space_repair_enabled)
      .def_readwrite("space_repair_min_run", &NormalizationConfig::space_repair_min_run)
      .def("to_json", [](const NormalizationConfig& c) { return normalization_to_json(c).dump(); })
      .def_static("from_json",
                  [](const std::string& text) { return normalization_from_json(nlohmann::json::parse(text)); });

  m.def("normalize", &normalize, py::arg("text"), py::arg("cfg") = NormalizationConfig{});
  m.def("normalize_tokens", &normalize_tokens, py::arg("text"), py::arg("cfg") = NormalizationConfig{});
  m.def("normalize_reference", &normalize_reference, py::arg("text"), py::arg("cfg") = NormalizationConfig{});
  m.def("collapse_hallucinated_repeats", &collapse_hallucinated_repeats, py::arg("tokens"), py::arg("n_max") = 3,
        py::arg("k") = 3);
  m.def("repair_spurious_spaces", &repair_spurious_spaces, py::arg("tokens"), py::arg("min_run") = 3);

  py::class_<AlignmentResult>(m, "AlignmentResult")
      .def_readonly("hits", &AlignmentResult::hits)
      .def_readonly("substitutions", &AlignmentResult::substitutions)
      .def_readonly("deletions", &AlignmentResult::deletions)
      .def_readonly("insertions", &AlignmentResult::insertions)
      .def_property_readonly("errors", &AlignmentResult::errors)
      .def_property_readonly("ref_length", &AlignmentResult::ref_length)
      .def_property_readonly("hyp_length", &AlignmentResult::hyp_length)
      .def("__repr__", [](const AlignmentResult& a) {
        return "AlignmentResult(H=" + std::to_string(a.hits) + ", S=" + std::to_string(a.substitutions) +
               ", D=" + std::to_string(a.deletions) + ", I=" + std::to_string(a.insertions) + ")";
      });
  m.def("align_words", &align_words, py::arg("ref"), py::arg("hyp"));
  m.def("wer", &wer, py::arg("alignment"), py::arg("ref_len"));
  m.def("utterance_correct", &utterance_correct, py::arg("ref"), py::arg("hyp"),
        py::arg("cfg") = NormalizationConfig{});

  m.def(
      "segment_transcript",
      [](const std::string& text, const std::string& punctuation) {
        return segment_transcript(text, unicode::decode(punctuation));
      },
      py::arg("text"), py::arg("punctuation") = ",.");
  m.def("label_segments", &label_segments, py::arg("segments"), py::arg("reference"));

  py::class_<ConfusionCounts>(m, "ConfusionCounts")
      .def(py::init([](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
             return ConfusionCounts{tp, fp, tn, fn};
           }),
           py::arg("tp") = 0, py::arg("fp") = 0, py::arg("tn") = 0, py::arg("fn") = 0)
      .def_readwrite("tp", &ConfusionCounts::tp)
      .def_readwrite("fp", &ConfusionCounts::fp)
      .def_readwrite("tn", &ConfusionCounts::tn)
      .def_readwrite("fn", &ConfusionCounts::fn);
  m.def("precision_recall_f1", [](const ConfusionCounts& c) {
    const auto r = precision_recall_f1(c);
    return py::make_tuple(r.precision, r.recall, r.f1);
  });
  m.def("f1_from", &f1_from, py::arg("precision"), py::arg("recall"));
  m.def("mcc", &mcc);
  m.def("uer_from_precision", &uer_from_precision);

  m.def("build_prompt", &llm::build_prompt, py::arg("sentence"), py::arg("language") = "en");
  m.def("request_hash", &llm::request_hash);
  m.def("parse_verdict", [](const std::string& raw) { return std::string(llm::to_string(llm::parse_verdict(raw).kind)); });
  m.def(
      "heuristic_classify",
      [](const std::string& sentence, const std::vector<std::string>& lexicon) {
        return llm::heuristic_classify(sentence, llm::Lexicon(lexicon.begin(), lexicon.end())).raw_response;
      },
      py::arg("sentence"), py::arg("lexicon") = std::vector<std::string>{});

  m.def("validate_manifest", [](const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& issue : validate_manifest(load_manifest(path, {.check_invariants = false}))) {
      out.emplace_back(issue.record_id, issue.description);
    }
    return out;
  });

  m.def(
      "_synth",
      [](const std::string& spec_json, const std::filesystem::path& manifest, const std::filesystem::path& truth) {
        const auto corpus = synth::generate_corpus(synth::spec_from_json(nlohmann::json::parse(spec_json)));
        save_manifest(manifest, corpus.manifest);
        synth::save_truth_table(truth, corpus.truth);
        return corpus.manifest.utterances.size();
      },
      py::arg("spec_json"), py::arg("manifest"), py::arg("truth"));

  m.def(
      "_evaluate",
      [](const std::string& config_json, const std::string& base_dir) {
        const RunConfig cfg = config_from_text(config_json, base_dir);
        EvaluationRun run;
        {
          py::gil_scoped_release release;
          run = run_evaluation(cfg);
        }
        return py::make_tuple(report_to_json(run.report).dump(), run.predictions.size());
      },
      py::arg("config_json"), py::arg("base_dir") = "");
  m.def(
      "_render_tables",
      [](const std::string& report_json, const std::string& format) {
        return render_tables(report_from_json(nlohmann::json::parse(report_json)), parse_report_format(format));
      },
      py::arg("report_json"), py::arg("format") = "text");
  m.def("_default_config", [] { return config_to_json(RunConfig{}).dump(); });

  py::register_exception<ManifestError>(m, "ManifestError", PyExc_ValueError);
  py::register_exception<llm::CassetteMiss>(m, "CassetteMiss", PyExc_LookupError);
  py::register_exception<HookError>(m, "HookError", PyExc_RuntimeError);
}
