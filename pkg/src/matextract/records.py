"""Canonical in-memory data model shared by codecs, scoring, and pipelines.

Three record families cover the extraction tasks: sentence-level doping
records (hosts, dopants, host-dopant links, plus NER-only results and
modifiers), abstract-level general-materials records, and abstract-level
MOF records. All types are immutable value objects; lists become tuples
and link sets become frozensets at construction, so records are safe to
share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Iterable, Union


class RecordError(ValueError):
    """A record or entity violates a construction invariant."""


class FieldLabel(str, Enum):
    HOST = "host"
    DOPANT = "dopant"
    RESULT = "result"
    MODIFIER = "modifier"
    NAME = "name"
    FORMULA = "formula"
    ACRONYM = "acronym"
    DESCRIPTION = "description"
    STRUCTURE_OR_PHASE = "structure_or_phase"
    APPLICATIONS = "applications"
    MOF_FORMULA = "mof_formula"
    GUEST_SPECIES = "guest_species"


#: Fields whose values carry chemical compositions; any stoichiometry they
#: contain must be reproduced exactly for word-match credit.
FORMULA_FIELDS = frozenset(
    {FieldLabel.HOST, FieldLabel.DOPANT, FieldLabel.FORMULA, FieldLabel.MOF_FORMULA}
)


class SchemaId(str, Enum):
    """Completion schema a model is trained to emit."""

    DOPING_JSON = "doping-json"
    DOPING_ENG = "doping-eng"
    DOPING_EXTRA_ENG = "doping-extra-eng"
    GENERAL_JSON = "general-json"
    MOF_JSON = "mof-json"

    @property
    def is_doping(self) -> bool:
        return self in (
            SchemaId.DOPING_JSON,
            SchemaId.DOPING_ENG,
            SchemaId.DOPING_EXTRA_ENG,
        )


def _check_entity_text(text: str) -> str:
    if not isinstance(text, str) or not text:
        raise RecordError("entity text must be a non-empty string")
    if "\n" in text or "\r" in text:
        raise RecordError(f"entity text contains a newline: {text!r}")
    return text


@dataclass(frozen=True)
class Entity:
    """One extracted surface form tagged with its schema field."""

    text: str
    field: FieldLabel

    def __post_init__(self) -> None:
        _check_entity_text(self.text)
        object.__setattr__(self, "field", FieldLabel(self.field))

    def words(self) -> set[str]:
        return entity_words(self)


def _coerce_entities(values: Iterable, label: FieldLabel) -> tuple[Entity, ...]:
    out = []
    for v in values:
        if isinstance(v, Entity):
            if v.field != label:
                raise RecordError(f"expected {label.value} entity, got {v.field.value}")
            out.append(v)
        else:
            out.append(Entity(v, label))
    return tuple(out)


@dataclass(frozen=True)
class DopingRecord:
    """Hosts, dopants, their pairwise links, and NER-only extras.

    Links are (host index, dopant index) pairs so duplicate surface forms
    stay distinguishable. ``results`` and ``modifiers`` carry no links.
    """

    hosts: tuple[Entity, ...] = ()
    dopants: tuple[Entity, ...] = ()
    links: frozenset[tuple[int, int]] = frozenset()
    results: tuple[Entity, ...] = ()
    modifiers: tuple[Entity, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "hosts", _coerce_entities(self.hosts, FieldLabel.HOST))
        object.__setattr__(
            self, "dopants", _coerce_entities(self.dopants, FieldLabel.DOPANT)
        )
        object.__setattr__(
            self, "results", _coerce_entities(self.results, FieldLabel.RESULT)
        )
        object.__setattr__(
            self, "modifiers", _coerce_entities(self.modifiers, FieldLabel.MODIFIER)
        )
        links = frozenset((int(h), int(d)) for h, d in self.links)
        for h, d in links:
            if not (0 <= h < len(self.hosts)):
                raise RecordError(f"link host index {h} out of range")
            if not (0 <= d < len(self.dopants)):
                raise RecordError(f"link dopant index {d} out of range")
        object.__setattr__(self, "links", links)

    @property
    def is_empty(self) -> bool:
        return not (self.hosts or self.dopants or self.results or self.modifiers)

    def linked_dopants(self, host_index: int) -> tuple[int, ...]:
        return tuple(sorted(d for h, d in self.links if h == host_index))

    def unlinked_hosts(self) -> tuple[int, ...]:
        linked = {h for h, _ in self.links}
        return tuple(i for i in range(len(self.hosts)) if i not in linked)

    def unlinked_dopants(self) -> tuple[int, ...]:
        linked = {d for _, d in self.links}
        return tuple(i for i in range(len(self.dopants)) if i not in linked)

    def entities(self) -> tuple[Entity, ...]:
        return self.hosts + self.dopants + self.results + self.modifiers


def _coerce_str_tuple(values: Iterable[str], what: str) -> tuple[str, ...]:
    out = []
    for v in values:
        if not isinstance(v, str) or not v:
            raise RecordError(f"{what} items must be non-empty strings")
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class MaterialRecord:
    """One material entry of the general-materials schema.

    ``name``/``formula``/``acronym`` are scalar strings ("" when absent);
    the remaining fields are lists. A record must be rooted in a name or
    formula, otherwise no information about the material may be kept.
    """

    name: str = ""
    formula: str = ""
    acronym: str = ""
    description: tuple[str, ...] = ()
    structure_or_phase: tuple[str, ...] = ()
    applications: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for attr in ("name", "formula", "acronym"):
            v = getattr(self, attr)
            if not isinstance(v, str):
                raise RecordError(f"{attr} must be a string")
        if not self.name and not self.formula:
            raise RecordError("material entry has no root entity (name or formula)")
        for attr in ("description", "structure_or_phase", "applications"):
            object.__setattr__(
                self, attr, _coerce_str_tuple(getattr(self, attr), attr)
            )

    @property
    def root(self) -> str:
        """Graph/scoring root: formula wins when both are present."""
        return self.formula or self.name

    def entities(self) -> tuple[Entity, ...]:
        out = []
        for attr, label in (
            (self.name, FieldLabel.NAME),
            (self.formula, FieldLabel.FORMULA),
            (self.acronym, FieldLabel.ACRONYM),
        ):
            if attr:
                out.append(Entity(attr, label))
        for items, label in (
            (self.description, FieldLabel.DESCRIPTION),
            (self.structure_or_phase, FieldLabel.STRUCTURE_OR_PHASE),
            (self.applications, FieldLabel.APPLICATIONS),
        ):
            out.extend(Entity(t, label) for t in items)
        return tuple(out)


@dataclass(frozen=True)
class MofRecord:
    """One MOF entry: name and/or formula root, guests, applications, descriptors."""

    name: str = ""
    mof_formula: str = ""
    guest_species: tuple[str, ...] = ()
    applications: tuple[str, ...] = ()
    description: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for attr in ("name", "mof_formula"):
            if not isinstance(getattr(self, attr), str):
                raise RecordError(f"{attr} must be a string")
        if not self.name and not self.mof_formula:
            raise RecordError("MOF entry has no root entity (name or mof_formula)")
        for attr in ("guest_species", "applications", "description"):
            object.__setattr__(
                self, attr, _coerce_str_tuple(getattr(self, attr), attr)
            )

    @property
    def root(self) -> str:
        return self.mof_formula or self.name

    def entities(self) -> tuple[Entity, ...]:
        out = []
        if self.name:
            out.append(Entity(self.name, FieldLabel.NAME))
        if self.mof_formula:
            out.append(Entity(self.mof_formula, FieldLabel.MOF_FORMULA))
        for items, label in (
            (self.guest_species, FieldLabel.GUEST_SPECIES),
            (self.applications, FieldLabel.APPLICATIONS),
            (self.description, FieldLabel.DESCRIPTION),
        ):
            out.extend(Entity(t, label) for t in items)
        return tuple(out)


@dataclass(frozen=True)
class PromptCompletionPair:
    """One training or evaluation sample on the completion wire."""

    prompt: str
    completion: str
    schema: SchemaId
    split: str = "train"

    def __post_init__(self) -> None:
        if not self.prompt:
            raise RecordError("prompt must be non-empty")
        object.__setattr__(self, "schema", SchemaId(self.schema))
        if self.split not in ("train", "test"):
            raise RecordError(f"split must be 'train' or 'test', got {self.split!r}")


def entity_words(e: Union[Entity, str]) -> set[str]:
    """Set of whitespace-delimited words of an entity's text.

    Case-sensitive, no normalization; repeated words collapse (set
    semantics).
    """
    text = e.text if isinstance(e, Entity) else e
    return set(text.split())


def is_formula_field(f: FieldLabel) -> bool:
    """True for the four fields whose compositions must match exactly."""
    return FieldLabel(f) in FORMULA_FIELDS


# Stoichiometry recognizer grammar: element-symbol groups (capital plus
# optional lowercase) each with an optional numeric/algebraic subscript;
# parenthesized groups may nest. Conservative by design: it gates the
# formula-exactness scoring rule, it is not a chemistry parser.
_NUM = r"\d+(?:\.\d+)?"
_VAR = r"[xyz]"
_TERM = rf"(?:{_NUM}{_VAR}?|{_VAR})"
_SUBSCRIPT = re.compile(rf"{_TERM}(?:[+\-−]{_TERM})*")
_ELEMENT = re.compile(r"[A-Z][a-z]?")


def _match_group_seq(word: str, pos: int, depth: int = 0) -> int:
    """Longest parse of one-or-more element/paren groups from ``pos``; -1 if none."""
    count = 0
    while pos < len(word):
        if word[pos] == "(":
            inner = _match_group_seq(word, pos + 1, depth + 1)
            if inner < 0 or inner >= len(word) or word[inner] != ")":
                break
            pos = inner + 1
        else:
            m = _ELEMENT.match(word, pos)
            if not m:
                break
            pos = m.end()
        sub = _SUBSCRIPT.match(word, pos)
        if sub:
            pos = sub.end()
        count += 1
    return pos if count else -1


def contains_stoichiometry(word: str) -> bool:
    """True iff a single whitespace-free token parses as a chemical composition."""
    if not word or any(c.isspace() for c in word):
        return False
    return _match_group_seq(word, 0) == len(word)


def stoichiometry_words(e: Union[Entity, str]) -> set[str]:
    """The subset of an entity's words that parse as stoichiometries."""
    return {w for w in entity_words(e) if contains_stoichiometry(w)}
