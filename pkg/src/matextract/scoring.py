"""Evaluation suite: sequence metrics, word-level triplet scoring, manual scores.

Two levels of evaluation. Sequence reconstruction treats completions as
opaque strings (exact match, Jaro/Jaro-Winkler similarity, parsability).
Information extraction scores word-level entity and relation triplets with
a strict composition rule: a predicted formula-type entity earns zero
credit unless it reproduces every stoichiometry-bearing word of its true
counterpart exactly.

Corpus aggregation is micro (single pooled TP/FP/FN). Entity and relation
alignment within a sample is greedy by word/triplet overlap; the alignment
ties are broken by source order, so all scores are deterministic.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from . import codec
from .records import (
    DopingRecord,
    Entity,
    FieldLabel,
    MaterialRecord,
    MofRecord,
    SchemaId,
    entity_words,
    is_formula_field,
    stoichiometry_words,
)

Sample = Union[DopingRecord, Sequence[Union[MaterialRecord, MofRecord]]]

#: Published scores of fine-tuned 175B-parameter commercial models on the
#: three tasks. They document the scale of results these metrics measure;
#: reproducing them requires commercial-API fine-tuning and is out of reach
#: of the test suite, which instead verifies the metrics themselves.
REFERENCE_RESULTS = {
    "doping-eng/exact-match": 0.597,
    "doping-json/exact-match": 0.649,
    "doping-extra-eng/exact-match": 0.584,
    "mof-json/exact-match": 0.125,
    "general-json/exact-match": 0.256,
    "doping-eng/host-dopant-f1": 0.783,
    "doping-json/host-dopant-f1": 0.719,
    "doping-extra-eng/host-dopant-f1": 0.849,
    "matbert-proximity/host-dopant-precision": 0.441,
    "matbert-proximity/host-dopant-recall": 0.714,
    "matbert-proximity/host-dopant-f1": 0.545,
    "matbert-proximity/host-ner-f1": 0.67,
    "general-json/manual-formula-f1": 0.943,
    "annotation/seconds-per-abstract-unassisted": 100.0,
    "annotation/seconds-per-abstract-assisted": 40.0,
}


# --- Sequence-level metrics --------------------------------------------------


def exact_match_accuracy(pairs: Sequence[tuple[str, str]]) -> float:
    """Mean Kronecker delta between true and predicted completion strings."""
    if not pairs:
        raise ValueError("exact_match_accuracy of an empty dataset")
    return sum(1 for t, p in pairs if t == p) / len(pairs)


def jaro(a: str, b: str) -> float:
    """Equal-weight Jaro similarity; 0 when no characters match.

    Matches within the standard window floor(max(|a|,|b|)/2) - 1;
    transpositions are half the out-of-order matches.
    """
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    b_taken = [False] * lb
    a_matched = []
    b_match_pos = []
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not b_taken[j] and b[j] == ch:
                b_taken[j] = True
                a_matched.append(ch)
                b_match_pos.append(j)
                break
    m = len(a_matched)
    if m == 0:
        return 0.0
    b_matched = [b[j] for j in sorted(b_match_pos)]
    mismatches = sum(1 for x, y in zip(a_matched, b_matched) if x != y)
    t = mismatches // 2
    return (m / la + m / lb + (m - t) / m) / 3.0


def jaro_winkler(
    a: str, b: str, prefix_scale: float = 0.1, max_prefix: int = 4
) -> float:
    """Jaro boosted by shared prefix: phi + l * p * (1 - phi)."""
    phi = jaro(a, b)
    prefix = 0
    for x, y in zip(a, b):
        if x != y or prefix >= max_prefix:
            break
        prefix += 1
    return phi + prefix * prefix_scale * (1.0 - phi)


def parsability_rate(schema: SchemaId, completions: Sequence[str]) -> float:
    """Fraction of completion bodies that decode under the schema."""
    if not completions:
        raise ValueError("parsability_rate of an empty dataset")
    ok = sum(1 for s in completions if codec.decode(schema, s).parsable)
    return ok / len(completions)


def completion_entity_count(schema: SchemaId, completion: str) -> int:
    """Number of entities in a decoded completion (dataset error if unparsable)."""
    out = codec.decode(schema, completion)
    if not out.parsable:
        raise ValueError(f"unparsable completion: {out.error}")
    if isinstance(out.record, DopingRecord):
        return len(out.record.entities())
    return sum(len(r.entities()) for r in out.record)


@dataclass(frozen=True)
class BinReport:
    lo: int
    hi: Optional[int]  # inclusive; None for the open-ended last bin
    n: int
    exact_match_accuracy: float
    mean_similarity: float
    parsability_rate: float

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "n": self.n,
            "exact_match_accuracy": self.exact_match_accuracy,
            "mean_similarity": self.mean_similarity,
            "parsability_rate": self.parsability_rate,
        }


@dataclass(frozen=True)
class SequenceReport:
    n: int
    exact_match_accuracy: float
    mean_similarity: float
    parsability_rate: float
    per_bin: tuple[BinReport, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "exact_match_accuracy": self.exact_match_accuracy,
            "mean_similarity": self.mean_similarity,
            "parsability_rate": self.parsability_rate,
            "per_bin": [b.to_dict() for b in self.per_bin],
        }


def sequence_report(
    schema: SchemaId,
    pairs: Sequence[tuple[str, str]],
    bin_edges: Optional[Sequence[int]] = None,
) -> SequenceReport:
    """All three sequence metrics, optionally binned by true entity count.

    ``bin_edges`` are ascending lower bounds; bin i covers
    [edges[i], edges[i+1]) and the last bin is open-ended. Every sample's
    entity count must fall at or above the first edge.
    """
    if not pairs:
        raise ValueError("sequence_report of an empty dataset")
    rows = []
    for t, p in pairs:
        rows.append(
            (
                completion_entity_count(schema, t),
                1.0 if t == p else 0.0,
                jaro_winkler(t, p),
                1.0 if codec.decode(schema, p).parsable else 0.0,
            )
        )

    def summarize(subset):
        n = len(subset)
        return (
            sum(r[1] for r in subset) / n,
            sum(r[2] for r in subset) / n,
            sum(r[3] for r in subset) / n,
        )

    overall = summarize(rows)
    bins: list[BinReport] = []
    if bin_edges is not None:
        edges = list(bin_edges)
        if not edges or any(a >= b for a, b in zip(edges, edges[1:])):
            raise ValueError("bin_edges must be strictly increasing")
        low = min(r[0] for r in rows)
        if low < edges[0]:
            raise ValueError(f"entity count {low} below the first bin edge")
        for i, lo in enumerate(edges):
            hi = edges[i + 1] - 1 if i + 1 < len(edges) else None
            subset = [
                r for r in rows if r[0] >= lo and (hi is None or r[0] <= hi)
            ]
            if not subset:
                bins.append(BinReport(lo, hi, 0, 0.0, 0.0, 0.0))
                continue
            em, sim, par = summarize(subset)
            bins.append(BinReport(lo, hi, len(subset), em, sim, par))
    return SequenceReport(
        n=len(rows),
        exact_match_accuracy=overall[0],
        mean_similarity=overall[1],
        parsability_rate=overall[2],
        per_bin=tuple(bins),
    )


# --- Word-level entity and relation scoring ----------------------------------


@dataclass(frozen=True)
class PRF:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


class Triplet(NamedTuple):
    word_a: str
    word_b: str
    relation: str


@dataclass(frozen=True)
class RelationSpec:
    """One scored relation: a root field paired with another field."""

    root_field: FieldLabel
    other_field: FieldLabel
    label: str


DOPING_RELATIONS = (RelationSpec(FieldLabel.HOST, FieldLabel.DOPANT, "host-dopant"),)

GENERAL_RELATIONS = (
    RelationSpec(FieldLabel.FORMULA, FieldLabel.NAME, "formula-name"),
    RelationSpec(FieldLabel.FORMULA, FieldLabel.ACRONYM, "formula-acronym"),
    RelationSpec(FieldLabel.FORMULA, FieldLabel.APPLICATIONS, "formula-application"),
    RelationSpec(
        FieldLabel.FORMULA, FieldLabel.STRUCTURE_OR_PHASE, "formula-structure"
    ),
    RelationSpec(FieldLabel.FORMULA, FieldLabel.DESCRIPTION, "formula-description"),
)

#: Default MOF relations are rooted at the MOF name; the formula-rooted
#: variant is available for the alternative reading of the task.
MOF_RELATIONS = (
    RelationSpec(FieldLabel.NAME, FieldLabel.MOF_FORMULA, "name-formula"),
    RelationSpec(FieldLabel.NAME, FieldLabel.APPLICATIONS, "name-application"),
    RelationSpec(FieldLabel.NAME, FieldLabel.GUEST_SPECIES, "name-guest_species"),
    RelationSpec(FieldLabel.NAME, FieldLabel.DESCRIPTION, "name-description"),
)

MOF_RELATIONS_FORMULA_ROOT = (
    RelationSpec(FieldLabel.MOF_FORMULA, FieldLabel.NAME, "formula-name"),
    RelationSpec(FieldLabel.MOF_FORMULA, FieldLabel.APPLICATIONS, "formula-application"),
    RelationSpec(
        FieldLabel.MOF_FORMULA, FieldLabel.GUEST_SPECIES, "formula-guest_species"
    ),
    RelationSpec(FieldLabel.MOF_FORMULA, FieldLabel.DESCRIPTION, "formula-description"),
)

DEFAULT_RELATIONS = {
    SchemaId.DOPING_JSON: DOPING_RELATIONS,
    SchemaId.DOPING_ENG: DOPING_RELATIONS,
    SchemaId.DOPING_EXTRA_ENG: DOPING_RELATIONS,
    SchemaId.GENERAL_JSON: GENERAL_RELATIONS,
    SchemaId.MOF_JSON: MOF_RELATIONS,
}


def _entry_field_values(entry, field: FieldLabel) -> list[str]:
    value = getattr(entry, field.value, None)
    if value is None:
        return []
    if isinstance(value, str):
        return [value] if value else []
    return list(value)


def related_pairs(sample: Sample, spec: RelationSpec) -> list[tuple[Entity, Entity]]:
    """Related (root, other) entity pairs of one sample, in source order."""
    pairs: list[tuple[Entity, Entity]] = []
    if isinstance(sample, DopingRecord):
        if spec.root_field is not FieldLabel.HOST:
            raise ValueError("doping samples only support the host-dopant relation")
        for h, d in sorted(sample.links):
            pairs.append((sample.hosts[h], sample.dopants[d]))
        return pairs
    for entry in sample:
        roots = _entry_field_values(entry, spec.root_field)
        if not roots:
            continue
        others = _entry_field_values(entry, spec.other_field)
        for root in roots:
            for other in others:
                pairs.append(
                    (Entity(root, spec.root_field), Entity(other, spec.other_field))
                )
    return pairs


def _pair_triplets(pair: tuple[Entity, Entity], label: str) -> set[Triplet]:
    return {
        Triplet(wa, wb, label)
        for wa in entity_words(pair[0])
        for wb in entity_words(pair[1])
    }


def triplets(sample: Sample, spec: RelationSpec) -> set[Triplet]:
    """Word-pair cross product over every related entity pair of the sample."""
    out: set[Triplet] = set()
    for pair in related_pairs(sample, spec):
        out |= _pair_triplets(pair, spec.label)
    return out


def _greedy_match(
    n_true: int, n_pred: int, overlap
) -> list[tuple[int, int]]:
    """Greedy one-to-one matching by descending overlap; ties by source order."""
    candidates = []
    for ti in range(n_true):
        for pi in range(n_pred):
            ov = overlap(ti, pi)
            if ov > 0:
                candidates.append((-ov, ti, pi))
    candidates.sort()
    used_t: set[int] = set()
    used_p: set[int] = set()
    matches = []
    for _, ti, pi in candidates:
        if ti in used_t or pi in used_p:
            continue
        used_t.add(ti)
        used_p.add(pi)
        matches.append((ti, pi))
    return matches


def _formula_covered(true_e: Entity, pred_e: Entity) -> bool:
    """Every stoichiometry word of the true entity appears verbatim in the prediction."""
    return stoichiometry_words(true_e) <= entity_words(pred_e)


def entity_prf(
    true_entities: Sequence[Entity],
    pred_entities: Sequence[Entity],
    field: FieldLabel,
) -> PRF:
    """Word-level NER counts for one sample's entities of one field.

    Entities are greedily paired by word overlap. A paired prediction that
    misses any stoichiometry word of a formula-type true entity scores no
    true positives: all true words become false negatives and only its
    novel words count as false positives.
    """
    field = FieldLabel(field)
    for e in list(true_entities) + list(pred_entities):
        if e.field != field:
            raise ValueError(f"entity {e.text!r} is {e.field.value}, not {field.value}")
    t_words = [entity_words(e) for e in true_entities]
    p_words = [entity_words(e) for e in pred_entities]
    matches = _greedy_match(
        len(true_entities),
        len(pred_entities),
        lambda ti, pi: len(t_words[ti] & p_words[pi]),
    )
    tp = fp = fn = 0
    matched_t = set()
    matched_p = set()
    for ti, pi in matches:
        matched_t.add(ti)
        matched_p.add(pi)
        tw, pw = t_words[ti], p_words[pi]
        if is_formula_field(field) and not _formula_covered(
            true_entities[ti], pred_entities[pi]
        ):
            fn += len(tw)
            fp += len(pw - tw)
        else:
            tp += len(tw & pw)
            fn += len(tw - pw)
            fp += len(pw - tw)
    for ti in range(len(true_entities)):
        if ti not in matched_t:
            fn += len(t_words[ti])
    for pi in range(len(pred_entities)):
        if pi not in matched_p:
            fp += len(p_words[pi])
    return PRF(tp, fp, fn)


def sample_field_entities(sample: Sample, field: FieldLabel) -> list[Entity]:
    """All entities of one field in a sample, in source order."""
    field = FieldLabel(field)
    if isinstance(sample, DopingRecord):
        by_field = {
            FieldLabel.HOST: sample.hosts,
            FieldLabel.DOPANT: sample.dopants,
            FieldLabel.RESULT: sample.results,
            FieldLabel.MODIFIER: sample.modifiers,
        }
        if field not in by_field:
            raise ValueError(f"doping records have no {field.value} field")
        return list(by_field[field])
    out = []
    for entry in sample:
        out.extend(Entity(t, field) for t in _entry_field_values(entry, field))
    return out


def ner_prf(
    true_records: Sequence[Sample],
    pred_records: Sequence[Sample],
    field: FieldLabel,
) -> PRF:
    """Micro-averaged entity_prf over aligned sample lists."""
    if len(true_records) != len(pred_records):
        raise ValueError("aligned sample lists have different lengths")
    total = PRF(0, 0, 0)
    for t, p in zip(true_records, pred_records):
        total = total + entity_prf(
            sample_field_entities(t, field), sample_field_entities(p, field), field
        )
    return total


def _nerre_sample_counts(
    true_sample: Sample, pred_sample: Sample, spec: RelationSpec
) -> PRF:
    true_pairs = related_pairs(true_sample, spec)
    pred_pairs = related_pairs(pred_sample, spec)
    t_trips = [_pair_triplets(p, spec.label) for p in true_pairs]
    p_trips = [_pair_triplets(p, spec.label) for p in pred_pairs]
    all_true: set[Triplet] = set().union(*t_trips) if t_trips else set()
    all_pred: set[Triplet] = set().union(*p_trips) if p_trips else set()

    matches = _greedy_match(
        len(true_pairs),
        len(pred_pairs),
        lambda ti, pi: len(t_trips[ti] & p_trips[pi]),
    )
    voided: set[int] = set()
    for ti, pi in matches:
        for side, side_field in ((0, spec.root_field), (1, spec.other_field)):
            if is_formula_field(side_field) and not _formula_covered(
                true_pairs[ti][side], pred_pairs[pi][side]
            ):
                voided.add(pi)
                break
    eligible: set[Triplet] = set()
    for pi, trips in enumerate(p_trips):
        if pi not in voided:
            eligible |= trips
    tp_set = all_true & eligible
    return PRF(
        tp=len(tp_set),
        fp=len(all_pred - tp_set),
        fn=len(all_true - eligible),
    )


def nerre_prf(
    true_records: Sequence[Sample],
    pred_records: Sequence[Sample],
    relation_spec: Union[RelationSpec, Sequence[RelationSpec]],
) -> dict[str, PRF]:
    """Micro-averaged word-triplet relation scores per relation label.

    A predicted entity pair whose formula-type side fails the composition
    rule against its aligned true pair has all of its triplets voided; they
    count as false positives, never true positives.
    """
    if len(true_records) != len(pred_records):
        raise ValueError("aligned sample lists have different lengths")
    specs = (
        [relation_spec] if isinstance(relation_spec, RelationSpec) else list(relation_spec)
    )
    out: dict[str, PRF] = {}
    for spec in specs:
        total = PRF(0, 0, 0)
        for t, p in zip(true_records, pred_records):
            total = total + _nerre_sample_counts(t, p, spec)
        out[spec.label] = total
    return out


# --- Manual (domain-expert) adjudication -------------------------------------


@dataclass(frozen=True)
class AdjudicatedEntity:
    """One extracted entity judged by the expert: TP or FP."""

    entity: str
    field: FieldLabel
    root: str
    verdict: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", FieldLabel(self.field))
        if self.verdict not in ("TP", "FP"):
            raise ValueError(
                f"verdict must be 'TP' or 'FP', got {self.verdict!r} (incomplete adjudication)"
            )


@dataclass(frozen=True)
class MissedEntity:
    """A gold entity the model failed to extract (counts as FN)."""

    entity: str
    field: FieldLabel
    root: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", FieldLabel(self.field))


@dataclass(frozen=True)
class Adjudication:
    extracted: tuple[AdjudicatedEntity, ...]
    missed: tuple[MissedEntity, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "extracted", tuple(self.extracted))
        object.__setattr__(self, "missed", tuple(self.missed))


def manual_prf(adjudications: Iterable[Adjudication]) -> dict[FieldLabel, PRF]:
    """Per-field PRF from expert verdicts; missed gold entities are FNs."""
    counts: dict[FieldLabel, list[int]] = {}
    for adj in adjudications:
        for e in adj.extracted:
            c = counts.setdefault(e.field, [0, 0, 0])
            if e.verdict == "TP":
                c[0] += 1
            else:
                c[1] += 1
        for e in adj.missed:
            counts.setdefault(e.field, [0, 0, 0])[2] += 1
    return {f: PRF(tp, fp, fn) for f, (tp, fp, fn) in counts.items()}


def save_adjudications(adjudications: Sequence[Adjudication], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for adj in adjudications:
            fh.write(
                json.dumps(
                    {
                        "extracted": [
                            {
                                "entity": e.entity,
                                "field": e.field.value,
                                "root": e.root,
                                "verdict": e.verdict,
                            }
                            for e in adj.extracted
                        ],
                        "missed": [
                            {"entity": e.entity, "field": e.field.value, "root": e.root}
                            for e in adj.missed
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_adjudications(path) -> list[Adjudication]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(
                Adjudication(
                    extracted=tuple(
                        AdjudicatedEntity(**e) for e in obj.get("extracted", [])
                    ),
                    missed=tuple(MissedEntity(**e) for e in obj.get("missed", [])),
                )
            )
    return out


def timing_summary(values: Sequence[float]) -> dict:
    """Mean/median helper used by timing reports."""
    if not values:
        raise ValueError("no values")
    return {
        "n": len(values),
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
    }
