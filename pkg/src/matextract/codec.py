"""Bidirectional conversion between records and completion-string schemas.

Encoders are deterministic (fixed key order, compact JSON, canonical list
phrasing) so exact-match accuracy is well defined. Decoders are strict:
parsability is a measured quantity, so they return a :class:`ParseOutcome`
instead of raising, and they reject anything the encoders could not have
produced (modulo JSON whitespace and the documented "and"/comma list
variants of the English schema). There is no repair or tolerance beyond
that; a tolerant parser would corrupt the parsability metric.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Generic, Optional, Sequence, TypeVar, Union

from .records import (
    DopingRecord,
    MaterialRecord,
    MofRecord,
    PromptCompletionPair,
    RecordError,
    SchemaId,
)

#: Fine-tuning start token; terminates every prompt.
PROMPT_SEPARATOR = "\n\n\n###\n\n\n"
#: Fine-tuning stop token; terminates every completion.
STOP_TOKEN = "\n\n\nEND\n\n\n"

GENERAL_KEYS = (
    "name",
    "formula",
    "acronym",
    "description",
    "structure_or_phase",
    "applications",
)
GENERAL_SCALARS = ("name", "formula", "acronym")
MOF_KEYS = ("name", "mof_formula", "guest_species", "applications", "description")
MOF_SCALARS = ("name", "mof_formula")

T = TypeVar("T")


@dataclass(frozen=True)
class ParseError:
    position: str
    reason: str

    def __str__(self) -> str:
        return f"{self.position}: {self.reason}"


@dataclass(frozen=True)
class ParseOutcome(Generic[T]):
    """Result of decoding one completion; never raised, always returned."""

    parsable: bool
    record: Optional[T] = None
    error: Optional[ParseError] = None
    truncated: bool = False

    def __post_init__(self) -> None:
        assert self.parsable == (self.record is not None)

    @classmethod
    def ok(cls, record: T, truncated: bool = False) -> "ParseOutcome[T]":
        return cls(parsable=True, record=record, truncated=truncated)

    @classmethod
    def fail(
        cls, position: str, reason: str, truncated: bool = False
    ) -> "ParseOutcome[T]":
        return cls(
            parsable=False,
            error=ParseError(position, reason),
            truncated=truncated,
        )


@dataclass(frozen=True)
class WrappedSample:
    prompt_wire: str
    completion_wire: str


def wrap(pair: PromptCompletionPair) -> WrappedSample:
    """Attach the fine-tuning start/stop tokens to a sample."""
    return WrappedSample(
        prompt_wire=pair.prompt + PROMPT_SEPARATOR,
        completion_wire=pair.completion + STOP_TOKEN,
    )


def wrap_prompt(prompt: str) -> str:
    return prompt + PROMPT_SEPARATOR


@dataclass(frozen=True)
class UnwrappedCompletion:
    text: str
    truncated: bool


def unwrap_completion(raw: str) -> UnwrappedCompletion:
    """Strip the stop token and at most one leading space.

    A completion without the stop token was cut off before the model could
    finish; it is flagged truncated and returned whole.
    """
    idx = raw.find(STOP_TOKEN)
    if idx < 0:
        body, truncated = raw, True
    else:
        body, truncated = raw[:idx], False
    if body.startswith(" "):
        body = body[1:]
    return UnwrappedCompletion(text=body, truncated=truncated)


# --- Doping-JSON -----------------------------------------------------------


def encode_doping_json(r: DopingRecord) -> str:
    """hosts/dopants as h0../d0.. key maps plus a hosts2dopants relation map.

    results/modifiers are not part of this schema and are ignored.
    """
    hosts = {f"h{i}": e.text for i, e in enumerate(r.hosts)}
    dopants = {f"d{i}": e.text for i, e in enumerate(r.dopants)}
    links = {
        f"h{i}": [f"d{d}" for d in r.linked_dopants(i)] for i in range(len(r.hosts))
    }
    return json.dumps(
        {"hosts": hosts, "dopants": dopants, "hosts2dopants": links},
        ensure_ascii=False,
        separators=(",", ":"),
    )


def _strict_json_loads(s: str):
    def no_duplicates(pairs):
        keys = [k for k, _ in pairs]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate object key")
        return dict(pairs)

    return json.loads(s, object_pairs_hook=no_duplicates)


_INDEX_KEY = re.compile(r"([hd])(0|[1-9]\d*)")


def _decode_index_map(obj, prefix: str, what: str) -> list[str]:
    """h0../d0.. map -> ordered list of entity texts; raises ValueError."""
    if not isinstance(obj, dict):
        raise ValueError(f"{what} must be an object")
    texts: dict[int, str] = {}
    for key, value in obj.items():
        m = _INDEX_KEY.fullmatch(key)
        if not m or m.group(1) != prefix:
            raise ValueError(f"bad {what} key {key!r}")
        if not isinstance(value, str):
            raise ValueError(f"{what} value for {key!r} must be a string")
        texts[int(m.group(2))] = value
    if sorted(texts) != list(range(len(texts))):
        raise ValueError(f"{what} keys must be consecutive from {prefix}0")
    return [texts[i] for i in range(len(texts))]


def decode_doping_json(s: str) -> ParseOutcome[DopingRecord]:
    try:
        root = _strict_json_loads(s)
    except ValueError as exc:
        return ParseOutcome.fail("json", str(exc))
    if not isinstance(root, dict):
        return ParseOutcome.fail("root", "must be a JSON object")
    if set(root) != {"hosts", "dopants", "hosts2dopants"}:
        return ParseOutcome.fail("root", f"unexpected key set {sorted(root)}")
    try:
        hosts = _decode_index_map(root["hosts"], "h", "hosts")
        dopants = _decode_index_map(root["dopants"], "d", "dopants")
    except ValueError as exc:
        return ParseOutcome.fail("root", str(exc))
    rel = root["hosts2dopants"]
    if not isinstance(rel, dict):
        return ParseOutcome.fail("hosts2dopants", "must be an object")
    if set(rel) != {f"h{i}" for i in range(len(hosts))}:
        return ParseOutcome.fail(
            "hosts2dopants", "key set must equal the host key set"
        )
    links = set()
    for hkey, dkeys in rel.items():
        h = int(hkey[1:])
        if not isinstance(dkeys, list):
            return ParseOutcome.fail(hkey, "link value must be a list")
        seen = []
        for dkey in dkeys:
            m = _INDEX_KEY.fullmatch(dkey) if isinstance(dkey, str) else None
            if not m or m.group(1) != "d" or int(m.group(2)) >= len(dopants):
                return ParseOutcome.fail(hkey, f"dangling dopant key {dkey!r}")
            seen.append(int(m.group(2)))
        if seen != sorted(set(seen)):
            return ParseOutcome.fail(hkey, "dopant keys must be sorted and unique")
        links.update((h, d) for d in seen)
    try:
        record = DopingRecord(hosts=hosts, dopants=dopants, links=links)
    except RecordError as exc:
        return ParseOutcome.fail("record", str(exc))
    return ParseOutcome.ok(record)


# --- Doping-ENG ------------------------------------------------------------

NO_INFO_LINE = "There is no doping information."

_QUOTED = r"'([^'\n]+)'"
_LIST_ITEM = r"'[^'\n]+'"
# comma-separated quoted items with an optional (oxford-)comma "and" finale
_LIST = rf"{_LIST_ITEM}(?:, {_LIST_ITEM})*(?:,? and {_LIST_ITEM})?"

_HOST_WITH_DOPANTS = re.compile(rf"The host {_QUOTED} was doped with ({_LIST})\.")
_LONE_DOPANT = re.compile(rf"{_QUOTED} is a dopant\.")
_LONE_HOST = re.compile(rf"The host {_QUOTED} was doped\.")
_RESULT = re.compile(rf"{_QUOTED} is a possible doped result formula\.")
_MODIFIERS = re.compile(rf"Modifiers of the doping are ({_LIST})\.")
_LIST_SPLIT = re.compile(rf"'([^'\n]+)'")


def _check_eng_entity(text: str) -> str:
    if "'" in text:
        raise RecordError(f"ENG-schema entity contains an apostrophe: {text!r}")
    return text


def _eng_join(texts: Sequence[str]) -> str:
    quoted = [f"'{_check_eng_entity(t)}'" for t in texts]
    if len(quoted) == 1:
        return quoted[0]
    if len(quoted) == 2:
        return f"{quoted[0]} and {quoted[1]}"
    return ", ".join(quoted[:-1]) + f", and {quoted[-1]}"


def encode_doping_eng(r: DopingRecord, extra: bool = False) -> str:
    """Quasi-natural-language paradigm lines, newline separated.

    Paradigm order: linked hosts, lone dopants, lone hosts, then (with
    ``extra``) results and one modifiers line. A record with nothing to
    say yields the single no-information line.
    """
    lines: list[str] = []
    for i, host in enumerate(r.hosts):
        dopants = r.linked_dopants(i)
        if dopants:
            joined = _eng_join([r.dopants[d].text for d in dopants])
            lines.append(
                f"The host '{_check_eng_entity(host.text)}' was doped with {joined}."
            )
    for d in r.unlinked_dopants():
        lines.append(f"'{_check_eng_entity(r.dopants[d].text)}' is a dopant.")
    for h in r.unlinked_hosts():
        lines.append(f"The host '{_check_eng_entity(r.hosts[h].text)}' was doped.")
    if extra:
        for res in r.results:
            lines.append(
                f"'{_check_eng_entity(res.text)}' is a possible doped result formula."
            )
        if r.modifiers:
            joined = ", ".join(
                f"'{_check_eng_entity(m.text)}'" for m in r.modifiers
            )
            lines.append(f"Modifiers of the doping are {joined}.")
    if not lines:
        return NO_INFO_LINE
    return "\n".join(lines)


def decode_doping_eng(s: str) -> ParseOutcome[DopingRecord]:
    """Anchored whole-line match of each paradigm; any stray line fails.

    The decoder accepts the union grammar (base and extra paradigms), so
    Doping-ENG and DopingExtra-ENG completions both decode through here.
    """
    hosts: list[str] = []
    dopants: list[str] = []
    links: set[tuple[int, int]] = set()
    results: list[str] = []
    modifiers: list[str] = []
    dopant_index: dict[str, int] = {}  # host-line dopants dedupe by surface text

    lines = [ln for ln in s.split("\n") if ln != ""]
    saw_no_info = False
    for lineno, line in enumerate(lines, start=1):
        where = f"line {lineno}"
        if line == NO_INFO_LINE:
            saw_no_info = True
            continue
        m = _HOST_WITH_DOPANTS.fullmatch(line)
        if m:
            h = len(hosts)
            hosts.append(m.group(1))
            for text in _LIST_SPLIT.findall(m.group(2)):
                if text not in dopant_index:
                    dopant_index[text] = len(dopants)
                    dopants.append(text)
                links.add((h, dopant_index[text]))
            continue
        m = _LONE_DOPANT.fullmatch(line)
        if m:
            dopants.append(m.group(1))
            continue
        m = _LONE_HOST.fullmatch(line)
        if m:
            hosts.append(m.group(1))
            continue
        m = _RESULT.fullmatch(line)
        if m:
            results.append(m.group(1))
            continue
        m = _MODIFIERS.fullmatch(line)
        if m:
            modifiers.extend(_LIST_SPLIT.findall(m.group(1)))
            continue
        return ParseOutcome.fail(where, "no paradigm match")
    if saw_no_info and (hosts or dopants or results or modifiers or len(lines) > 1):
        return ParseOutcome.fail(
            "line 1", "no-information line must stand alone"
        )
    if not lines:
        return ParseOutcome.fail("line 1", "empty completion")
    try:
        record = DopingRecord(
            hosts=hosts,
            dopants=dopants,
            links=links,
            results=results,
            modifiers=modifiers,
        )
    except RecordError as exc:
        return ParseOutcome.fail("record", str(exc))
    return ParseOutcome.ok(record)


# --- General/MOF JSON ------------------------------------------------------


def _schema_keys(schema: SchemaId) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if schema is SchemaId.GENERAL_JSON:
        return GENERAL_KEYS, GENERAL_SCALARS
    if schema is SchemaId.MOF_JSON:
        return MOF_KEYS, MOF_SCALARS
    raise ValueError(f"{schema} is not a JSON-records schema")


def encode_json_records(
    schema: SchemaId,
    rs: Sequence[Union[MaterialRecord, MofRecord]],
) -> str:
    """Compact JSON array of fixed-shape entries in source order.

    Every entry carries all schema keys: scalars as strings ("" when
    absent), list fields as arrays.
    """
    keys, scalars = _schema_keys(SchemaId(schema))
    entries = []
    for r in rs:
        entry = {}
        for key in keys:
            value = getattr(r, key)
            entry[key] = value if key in scalars else list(value)
        entries.append(entry)
    return json.dumps(entries, ensure_ascii=False, separators=(",", ":"))


def decode_json_records(
    schema: SchemaId, s: str
) -> ParseOutcome[tuple[Union[MaterialRecord, MofRecord], ...]]:
    keys, scalars = _schema_keys(SchemaId(schema))
    cls = MaterialRecord if SchemaId(schema) is SchemaId.GENERAL_JSON else MofRecord
    try:
        root = _strict_json_loads(s)
    except ValueError as exc:
        return ParseOutcome.fail("json", str(exc))
    if not isinstance(root, list):
        return ParseOutcome.fail("root", "must be a JSON array")
    records = []
    for i, entry in enumerate(root):
        where = f"entry {i}"
        if not isinstance(entry, dict):
            return ParseOutcome.fail(where, "must be an object")
        unknown = set(entry) - set(keys)
        if unknown:
            return ParseOutcome.fail(where, f"unknown key {sorted(unknown)[0]!r}")
        kwargs = {}
        for key in keys:
            value = entry.get(key)
            if key in scalars:
                if value is None:
                    value = ""
                if not isinstance(value, str):
                    return ParseOutcome.fail(where, f"{key} must be a string")
            else:
                if value is None:
                    value = []
                if not isinstance(value, list) or not all(
                    isinstance(v, str) for v in value
                ):
                    return ParseOutcome.fail(where, f"{key} must be a list")
            kwargs[key] = value
        root_keys = ("name", "formula") if cls is MaterialRecord else ("name", "mof_formula")
        if not kwargs[root_keys[0]] and not kwargs[root_keys[1]]:
            return ParseOutcome.fail(where, "no root entity")
        try:
            records.append(cls(**kwargs))
        except RecordError as exc:
            return ParseOutcome.fail(where, str(exc))
    return ParseOutcome.ok(tuple(records))


# --- Schema dispatch -------------------------------------------------------


def encode(schema: SchemaId, payload) -> str:
    """Encode a DopingRecord or a sequence of entries under ``schema``."""
    schema = SchemaId(schema)
    if schema is SchemaId.DOPING_JSON:
        return encode_doping_json(payload)
    if schema is SchemaId.DOPING_ENG:
        return encode_doping_eng(payload, extra=False)
    if schema is SchemaId.DOPING_EXTRA_ENG:
        return encode_doping_eng(payload, extra=True)
    return encode_json_records(schema, payload)


def decode(schema: SchemaId, s: str) -> ParseOutcome:
    """Decode one completion body under ``schema``; never raises."""
    schema = SchemaId(schema)
    if schema is SchemaId.DOPING_JSON:
        return decode_doping_json(s)
    if schema in (SchemaId.DOPING_ENG, SchemaId.DOPING_EXTRA_ENG):
        return decode_doping_eng(s)
    return decode_json_records(schema, s)
