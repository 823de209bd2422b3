"""Dataset construction: keyword filters, fine-tune files, deterministic splits.

Abstract corpora arrive as JSON lines {id, title, abstract}. Keyword
matching is plain substring containment; the shipped configs reproduce the
three tasks' keyword lists and can be swapped for custom ones. Fine-tune
files are JSON lines of wrapped prompt/completion pairs and build
byte-identically from the same inputs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from . import codec
from .records import PromptCompletionPair, SchemaId


@dataclass(frozen=True)
class KeywordConfig:
    include: tuple[str, ...]
    exclude: tuple[str, ...] = ()
    case_sensitive: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "include", tuple(self.include))
        object.__setattr__(self, "exclude", tuple(self.exclude))
        if not self.include:
            raise ValueError("include patterns must be non-empty")

    def matches(self, text: str) -> bool:
        if not self.case_sensitive:
            text = text.lower()
            include = [p.lower() for p in self.include]
            exclude = [p.lower() for p in self.exclude]
        else:
            include, exclude = list(self.include), list(self.exclude)
        if any(p in text for p in exclude):
            return False
        return any(p in text for p in include)

    @classmethod
    def from_file(cls, path) -> "KeywordConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    @classmethod
    def builtin(cls, task: str) -> "KeywordConfig":
        """Shipped configs: 'doping', 'general', or 'mof'."""
        text = (
            resources.files("matextract.data")
            .joinpath(f"{task}_keywords.json")
            .read_text(encoding="utf-8")
        )
        return cls(**json.loads(text))


@dataclass(frozen=True)
class AbstractRecord:
    id: str
    title: str
    abstract: str


def load_abstracts(path) -> list[AbstractRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out.append(
                    AbstractRecord(
                        id=str(obj["id"]),
                        title=obj.get("title", ""),
                        abstract=obj["abstract"],
                    )
                )
    return out


def save_abstracts(abstracts: Sequence[AbstractRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in abstracts:
            fh.write(
                json.dumps(
                    {"id": a.id, "title": a.title, "abstract": a.abstract},
                    ensure_ascii=False,
                )
                + "\n"
            )


def filter_abstracts(
    abstracts: Sequence[AbstractRecord], cfg: KeywordConfig
) -> list[AbstractRecord]:
    """Keep abstracts matching >=1 include and 0 exclude patterns, stable order."""
    return [a for a in abstracts if cfg.matches(a.abstract)]


def doping_relevant(sentence: str, cfg: Optional[KeywordConfig] = None) -> bool:
    """Sentence-level relevance: same keyword patterns as abstract filtering."""
    if cfg is None:
        cfg = KeywordConfig.builtin("doping")
    return cfg.matches(sentence)


def build_finetune_file(pairs: Sequence[PromptCompletionPair], path) -> int:
    """JSON-lines fine-tune file of wrapped samples; returns the line count.

    Every completion must decode under its schema; the completion field
    carries one leading space (completion-API tokenization convention).
    """
    lines = []
    for i, pair in enumerate(pairs):
        out = codec.decode(pair.schema, pair.completion)
        if not out.parsable:
            raise ValueError(
                f"sample {i}: completion does not decode under "
                f"{pair.schema.value}: {out.error}"
            )
        wrapped = codec.wrap(pair)
        lines.append(
            json.dumps(
                {
                    "prompt": wrapped.prompt_wire,
                    "completion": " " + wrapped.completion_wire,
                },
                ensure_ascii=False,
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)


def load_pairs(path) -> list[PromptCompletionPair]:
    """Read prompt/completion pairs from a JSON file (list of objects)."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        PromptCompletionPair(
            prompt=obj["prompt"],
            completion=obj["completion"],
            schema=SchemaId(obj["schema"]),
            split=obj.get("split", "train"),
        )
        for obj in payload
    ]


def save_pairs(pairs: Sequence[PromptCompletionPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            [
                {
                    "prompt": p.prompt,
                    "completion": p.completion,
                    "schema": p.schema.value,
                    "split": p.split,
                }
                for p in pairs
            ],
            fh,
            ensure_ascii=False,
            indent=2,
        )
        fh.write("\n")


@dataclass(frozen=True)
class SplitConfig:
    seed: int
    test_fraction: float

    def __post_init__(self) -> None:
        if not (0.0 < self.test_fraction < 1.0):
            raise ValueError("test_fraction must be in (0, 1)")


def split_dataset(
    pairs: Sequence[PromptCompletionPair], cfg: SplitConfig
) -> tuple[list[PromptCompletionPair], list[PromptCompletionPair]]:
    """Seeded random partition; same seed, same split. Input order preserved
    within each side. Splits leaving either side empty are rejected."""
    if len(pairs) < 2:
        raise ValueError("need at least 2 pairs to split")
    n_test = round(len(pairs) * cfg.test_fraction)
    if n_test == 0 or n_test == len(pairs):
        raise ValueError(
            f"degenerate split: {len(pairs)} pairs at test_fraction {cfg.test_fraction}"
        )
    rng = random.Random(cfg.seed)
    indices = list(range(len(pairs)))
    rng.shuffle(indices)
    test_idx = set(indices[:n_test])
    train = [p for i, p in enumerate(pairs) if i not in test_idx]
    test = [p for i, p in enumerate(pairs) if i in test_idx]
    return train, test
