#!/usr/bin/env python3
"""Writes data/tokenizer/text_clean.json: character tables used by the text
cleaner ahead of BPE (HTML entities, fullwidth map, ligatures, control
characters, Python whitespace, windows-1252 C1 map)."""
import html
import html.entities
import json
import sys
import unicodedata
from pathlib import Path


def main():
    html5 = html.entities.html5
    # Uppercase-folded entity names that are decoded in addition to the
    # case-sensitive semicolon forms.
    strict = {}
    for name, char in html5.items():
        if name.endswith(";"):
            strict["&" + name] = char
            if name == name.lower():
                up = "&" + name.upper()
                if html.unescape(up) == up:
                    strict[up] = char.upper()

    width = {0x3000: " "}
    for i in range(0xFF01, 0xFFF0):
        alt = unicodedata.normalize("NFKC", chr(i))
        if alt != chr(i):
            width[i] = alt

    ligatures = {
        0x0132: "IJ", 0x0133: "ij", 0x0149: "\u02bcn",
        0x01F1: "DZ", 0x01F2: "Dz", 0x01F3: "dz",
        0x01C4: "D\u017d", 0x01C5: "D\u017e", 0x01C6: "d\u017e",
        0x01C7: "LJ", 0x01C8: "Lj", 0x01C9: "lj",
        0x01CA: "NJ", 0x01CB: "Nj", 0x01CC: "nj",
        0xFB00: "ff", 0xFB01: "fi", 0xFB02: "fl", 0xFB03: "ffi",
        0xFB04: "ffl", 0xFB05: "\u017ft", 0xFB06: "st",
    }
    control = (
        list(range(0x00, 0x09)) + [0x0B] + list(range(0x0E, 0x20)) + [0x7F]
        + list(range(0x206A, 0x2070)) + [0xFEFF] + list(range(0xFFF9, 0xFFFD))
    )
    c1 = {}
    for b in range(0x80, 0xA0):
        try:
            c1[b] = bytes([b]).decode("cp1252")
        except UnicodeDecodeError:
            c1[b] = chr(b)
    invalid_charrefs = {int(k): v for k, v in html._invalid_charrefs.items()}
    invalid_codepoints = sorted(html._invalid_codepoints)
    whitespace = [c for c in range(0x110000) if chr(c).isspace()]

    doc = {
        "html5": html5,
        "strict_entities": strict,
        "width_map": {str(k): v for k, v in sorted(width.items())},
        "ligatures": {str(k): v for k, v in sorted(ligatures.items())},
        "control_chars": control,
        "c1_map": {str(k): v for k, v in c1.items()},
        "invalid_charrefs": {str(k): v for k, v in sorted(invalid_charrefs.items())},
        "invalid_codepoints": invalid_codepoints,
        "whitespace": whitespace,
        "unicode_version": unicodedata.unidata_version,
    }
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "tokenizer" / "text_clean.json"
    out.write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
