"""From raw abstracts to a fine-tune file.

Keyword-filter a corpus, check sentence relevance, build the JSON-lines
fine-tune file (wrapped prompts, completions with the leading space), and
split deterministically. The learning-curve planner assigns the epoch
schedule for intermediate-model experiments.
"""

import tempfile
from pathlib import Path

from matextract import codec, corpus, llm
from matextract.records import DopingRecord, PromptCompletionPair, SchemaId

abstracts = [
    corpus.AbstractRecord("a1", "TCO films", "ZnO was doped with Al for TCO use."),
    corpus.AbstractRecord("a2", "Neuro", "Dopamine sensing with carbon electrodes."),
    corpus.AbstractRecord("a3", "Thermo", "p-type SnSe crystals show high ZT."),
    corpus.AbstractRecord("a4", "Cells", "Microfluidic sorting of T cells."),
]

cfg = corpus.KeywordConfig.builtin("doping")
kept = corpus.filter_abstracts(abstracts, cfg)
print("kept abstracts:", [a.id for a in kept])

print("\nsentence relevance:")
for s in ("SnSe was doped with Na.", "The XRD pattern was measured."):
    print(f"  {s!r} -> {corpus.doping_relevant(s)}")

pairs = []
for i, text in enumerate(["ZnO was doped with Al.", "SnSe was doped with Na."]):
    r = DopingRecord(
        hosts=[text.split()[0]], dopants=[text.split()[-1].rstrip(".")], links={(0, 0)}
    )
    pairs.append(
        PromptCompletionPair(text, codec.encode(SchemaId.DOPING_ENG, r), SchemaId.DOPING_ENG)
    )

with tempfile.TemporaryDirectory() as td:
    ft = Path(td) / "finetune.jsonl"
    n = corpus.build_finetune_file(pairs, ft)
    print(f"\nwrote {n} fine-tune lines; first line:")
    print(" ", ft.read_text().splitlines()[0][:120], "…")

train, test = corpus.split_dataset(
    pairs * 5, corpus.SplitConfig(seed=0, test_fraction=0.1)
)
print(f"\nsplit: {len(train)} train / {len(test)} test (seeded, reproducible)")

print("\nlearning-curve plan:")
for job in llm.learning_curve_plan([1, 8, 32, 64, 128, 256]):
    print(f"  n={job['n']:>3} -> {job['epochs']} epochs (seed {job['seed']})")

print("\nfine-tune defaults per schema:")
for schema in SchemaId:
    print(f"  {schema.value}: {llm.default_finetune_config(schema).to_dict()}")
