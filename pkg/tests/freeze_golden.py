"""Compute and freeze golden-fixture scores into tests/data/golden_scores.json.

Relation and NER values come from the independent brute-force oracle
(oracle_scoring), not from matextract.scoring; the test suite then requires
the library to reproduce them to 1e-12. The binned sequence report is
generated once from the library and frozen to catch regressions.

Run: python3 tests/freeze_golden.py
"""

import json
from pathlib import Path

import oracle_scoring as oracle
from golden_fixtures import GOLDEN
from matextract import codec
from matextract.records import DopingRecord, SchemaId
from matextract.scoring import sequence_report

RELATIONS = {
    "doping": [("host", "dopant", "host-dopant")],
    "general": [
        ("formula", "name", "formula-name"),
        ("formula", "acronym", "formula-acronym"),
        ("formula", "applications", "formula-application"),
        ("formula", "structure_or_phase", "formula-structure"),
        ("formula", "description", "formula-description"),
    ],
    "mof": [
        ("name", "mof_formula", "name-formula"),
        ("name", "applications", "name-application"),
        ("name", "guest_species", "name-guest_species"),
        ("name", "description", "name-description"),
    ],
}

NER_FIELDS = {
    "doping": ["host", "dopant", "result", "modifier"],
    "general": [
        "name",
        "formula",
        "acronym",
        "description",
        "structure_or_phase",
        "applications",
    ],
    "mof": ["name", "mof_formula", "guest_species", "applications", "description"],
}

FORMULA_FIELDS = oracle.FORMULA_FIELDS


def sample_pairs(sample, root_field, other_field):
    """Related (root, other) text pairs via direct record-field access."""
    if isinstance(sample, DopingRecord):
        return [
            (sample.hosts[h].text, sample.dopants[d].text)
            for h, d in sorted(sample.links)
        ]
    pairs = []
    for entry in sample:
        root = getattr(entry, root_field)
        if not root:
            continue
        other = getattr(entry, other_field)
        values = [other] if isinstance(other, str) else list(other)
        for v in values:
            if v:
                pairs.append((root, v))
    return pairs


def sample_texts(sample, field):
    if isinstance(sample, DopingRecord):
        attr = {"host": "hosts", "dopant": "dopants", "result": "results", "modifier": "modifiers"}
        return [e.text for e in getattr(sample, attr[field])]
    texts = []
    for entry in sample:
        value = getattr(entry, field)
        if isinstance(value, str):
            if value:
                texts.append(value)
        else:
            texts.extend(value)
    return texts


def counts_dict(tp, fp, fn):
    p, r, f1 = oracle.prf(tp, fp, fn)
    return {"tp": tp, "fp": fp, "fn": fn, "precision": p, "recall": r, "f1": f1}


def main():
    out = {"relations": {}, "ner": {}}
    for task, fixture in GOLDEN.items():
        out["relations"][task] = {}
        for root_field, other_field, label in RELATIONS[task]:
            tp = fp = fn = 0
            for true_sample, pred_sample in fixture:
                dtp, dfp, dfn = oracle.nerre_counts(
                    sample_pairs(true_sample, root_field, other_field),
                    sample_pairs(pred_sample, root_field, other_field),
                    label,
                    root_field in FORMULA_FIELDS,
                    other_field in FORMULA_FIELDS,
                )
                tp, fp, fn = tp + dtp, fp + dfp, fn + dfn
            out["relations"][task][label] = counts_dict(tp, fp, fn)
        out["ner"][task] = {}
        for field in NER_FIELDS[task]:
            tp = fp = fn = 0
            for true_sample, pred_sample in fixture:
                dtp, dfp, dfn = oracle.entity_counts(
                    sample_texts(true_sample, field),
                    sample_texts(pred_sample, field),
                    field,
                )
                tp, fp, fn = tp + dtp, fp + dfp, fn + dfn
            out["ner"][task][field] = counts_dict(tp, fp, fn)

    # frozen binned sequence report over doping-json encodings of the fixture;
    # two predictions truncated mid-string to exercise the parsability path
    pairs = []
    for i, (true_sample, pred_sample) in enumerate(GOLDEN["doping"]):
        t = codec.encode(SchemaId.DOPING_JSON, true_sample)
        p = codec.encode(SchemaId.DOPING_JSON, pred_sample)
        if i in (4, 12):
            p = p[: len(p) // 2]
        pairs.append((t, p))
    report = sequence_report(SchemaId.DOPING_JSON, pairs, bin_edges=[0, 2, 4])
    out["sequence_binned"] = {"edges": [0, 2, 4], "report": report.to_dict()}

    path = Path(__file__).parent / "data" / "golden_scores.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
