#!/usr/bin/env python3
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
"""Regenerates src/unicode_tables.inc from Python's unicodedata."""

import sys
import unicodedata

MAX_CP = 0x110000


def ranges(pred):
    out, start = [], None
    for cp in range(MAX_CP):
        hit = pred(cp)
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, MAX_CP - 1))
    return out


def simple_lower(cp):
    if 0xD800 <= cp <= 0xDFFF:
        return cp
    low = chr(cp).lower()
    if len(low) == 1:
        return ord(low)
    # Only U+0130 has a multi-codepoint full mapping; its simple mapping is 'i'.
    assert cp == 0x130, hex(cp)
    return 0x69


def emit_ranges(name, rs, f):
    f.write(f"constexpr CodepointRange {name}[] = {{\n")
    for lo, hi in rs:
        f.write(f"    {{0x{lo:04X}, 0x{hi:04X}}},\n")
    f.write("};\n\n")


def main(path):
    lower = [(cp, simple_lower(cp)) for cp in range(MAX_CP) if simple_lower(cp) != cp]
    for cp, lo in lower:
        assert simple_lower(lo) == lo, hex(cp)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"// Generated by tools/gen_unicode_tables.py (Unicode {unicodedata.unidata_version}). Do not edit.\n\n")
        emit_ranges("kPunctuation", ranges(lambda c: unicodedata.category(chr(c)).startswith("P")), f)
        emit_ranges("kLetters", ranges(lambda c: unicodedata.category(chr(c)).startswith("L")), f)
        f.write("constexpr LowerMapping kLowercase[] = {\n")
        for cp, lo in lower:
            f.write(f"    {{0x{cp:04X}, 0x{lo:04X}}},\n")
        f.write("};\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/unicode_tables.inc")
