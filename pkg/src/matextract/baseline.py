"""Proximity-linking baseline over externally supplied NER spans.

A rule-based splitter cuts a passage into sentences, then every host span
is linked to every dopant span that co-occurs in the same sentence. The
NER spans come from a file (reimplementing the upstream NER model is out
of scope); the baseline's contribution is the linking rule.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Sequence

from .records import DopingRecord

_TERMINATORS = ".!?"
_BOUNDARY = re.compile(r"[.!?](\s+)[A-Z0-9]")


def default_abbreviations() -> frozenset[str]:
    text = (
        resources.files("matextract.data")
        .joinpath("splitter_abbreviations.txt")
        .read_text(encoding="utf-8")
    )
    out = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.add(line)
    return frozenset(out)


_DEFAULT_ABBREVIATIONS = default_abbreviations()


def split_sentences(
    text: str, abbreviations: Optional[Iterable[str]] = None
) -> list[tuple[str, tuple[int, int]]]:
    """Partition text into (sentence, [start, end)) ranges that tile it.

    A boundary is a terminator followed by whitespace and an uppercase or
    digit start, unless the token ending at the terminator is a known
    abbreviation. Inter-sentence whitespace belongs to the following range
    so concatenating all slices reproduces the input.
    """
    if not text:
        return []
    abbrevs = (
        _DEFAULT_ABBREVIATIONS if abbreviations is None else frozenset(abbreviations)
    )
    cuts = [0]
    pos = 0
    while True:
        m = _BOUNDARY.search(text, pos)
        if not m:
            break
        term = m.start()
        # token containing the terminator, e.g. "al." in "et al."
        tok_start = term
        while tok_start > 0 and not text[tok_start - 1].isspace():
            tok_start -= 1
        token = text[tok_start : term + 1].lstrip("([{\"'")
        pos = term + 1
        if token in abbrevs:
            continue
        cuts.append(term + 1)
    cuts.append(len(text))
    out = []
    for start, end in zip(cuts, cuts[1:]):
        if start < end:
            out.append((text[start:end], (start, end)))
    return out


@dataclass(frozen=True)
class NerSpan:
    """One externally extracted entity span, offsets into the passage."""

    text: str
    field: str  # "host" or "dopant"
    char_start: int
    char_end: int

    def __post_init__(self) -> None:
        if self.field not in ("host", "dopant"):
            raise ValueError(f"span field must be host or dopant, got {self.field!r}")
        if not (0 <= self.char_start < self.char_end):
            raise ValueError("invalid span offsets")


def load_ner_spans(path) -> list[NerSpan]:
    """JSON-lines spans: {text, field, char_start, char_end} per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(NerSpan(**json.loads(line)))
    return out


def validate_spans(passage: str, spans: Sequence[NerSpan]) -> None:
    for s in spans:
        if passage[s.char_start : s.char_end] != s.text:
            raise ValueError(
                f"span text {s.text!r} does not equal passage slice "
                f"[{s.char_start}:{s.char_end}]"
            )
    for field in ("host", "dopant"):
        ordered = sorted(
            (s for s in spans if s.field == field), key=lambda s: s.char_start
        )
        for a, b in zip(ordered, ordered[1:]):
            if b.char_start < a.char_end:
                raise ValueError(
                    f"overlapping {field} spans at {a.char_start} and {b.char_start}"
                )


def proximity_link(
    spans: Sequence[NerSpan],
    sentences: Sequence[tuple[str, tuple[int, int]]],
) -> DopingRecord:
    """All-pairs host-dopant linking within each sentence.

    Spans aggregate in passage order regardless of input order. A span
    that fits no sentence range indicates a splitter/spans mismatch and
    is an error.
    """

    def sentence_of(span: NerSpan) -> int:
        for i, (_, (lo, hi)) in enumerate(sentences):
            if lo <= span.char_start and span.char_end <= hi:
                return i
        raise ValueError(f"span {span.text!r} lies outside every sentence range")

    ordered = sorted(spans, key=lambda s: (s.char_start, s.char_end))
    hosts = [s for s in ordered if s.field == "host"]
    dopants = [s for s in ordered if s.field == "dopant"]
    host_sentence = [sentence_of(s) for s in hosts]
    dopant_sentence = [sentence_of(s) for s in dopants]
    links = {
        (h, d)
        for h in range(len(hosts))
        for d in range(len(dopants))
        if host_sentence[h] == dopant_sentence[d]
    }
    return DopingRecord(
        hosts=[s.text for s in hosts],
        dopants=[s.text for s in dopants],
        links=links,
    )
