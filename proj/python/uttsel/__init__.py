# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Reliable ASR utterance selection and scoring."""

import json
import os

from ._core import (  # noqa: F401
    AlignmentResult,
    CassetteMiss,
    ConfusionCounts,
    HookError,
    ManifestError,
    NormalizationConfig,
    align_words,
    build_prompt,
    collapse_hallucinated_repeats,
    f1_from,
    heuristic_classify,
    label_segments,
    mcc,
    normalize,
    normalize_reference,
    normalize_tokens,
    parse_verdict,
    precision_recall_f1,
    repair_spurious_spaces,
    request_hash,
    segment_transcript,
    uer_from_precision,
    utterance_correct,
    validate_manifest,
    wer,
)
from . import _core

__all__ = [name for name in dir(_core) if not name.startswith("_")] + [
    "default_config",
    "evaluate",
    "generate_corpus",
    "render_tables",
]


def default_config():
    return json.loads(_core._default_config())


def evaluate(config, base_dir=""):
    """Runs an evaluation. `config` is a dict or a path to a JSON file.

    Returns the report as a dict. Outputs are written when the config names an
    output_dir.
    """
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
        base_dir = base_dir or os.path.dirname(path)
    report, _ = _core._evaluate(json.dumps(config), os.fspath(base_dir))
    return json.loads(report)


def generate_corpus(spec, manifest, truth):
    """Writes a synthetic manifest and truth table; returns the utterance count."""
    return _core._synth(json.dumps(spec), os.fspath(manifest), os.fspath(truth))


def render_tables(report, fmt="text"):
    return _core._render_tables(json.dumps(report), fmt)
