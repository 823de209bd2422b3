"""Decoded records become per-passage hierarchical knowledge graphs.

Doping: host -> dopant edges labeled doped_with; results/modifiers hang
off the document node. General/MOF: one material node per entry rooted at
the formula (name when no formula) with entity-field children. Exports are
node-link JSON and byte-deterministic.
"""

import tempfile
from pathlib import Path

from matextract import kgraph
from matextract.records import DopingRecord, MaterialRecord

record = DopingRecord(
    hosts=["ZnO nanoparticles", "ZnS"],
    dopants=["Sm"],
    links={(0, 0), (1, 0)},
    modifiers=["oxidation state of +3", "5 at.%"],
)
g = kgraph.graph_from_doping(record, "passage-42")
print("== Doping graph ==")
for n in g.nodes:
    print(f"  node [{n.kind:9}] {n.label}")
for e in g.edges:
    print(f"  edge {e.src.split('/')[-1]!r} -{e.relation}-> {e.dst.split('/')[-1]!r}")
print("acyclic:", g.is_acyclic())

print("\n== Materials graph ==")
materials = [
    MaterialRecord(
        name="zinc oxide",
        formula="ZnO",
        structure_or_phase=["wurtzite"],
        applications=["varistor", "UV detector"],
    ),
    MaterialRecord(formula="SnO2", applications=["varistor"]),
]
g2 = kgraph.graph_from_records(materials, "abstract-7")
for e in g2.edges:
    print(f"  {e.src.split('/')[-1]!r} -{e.relation}-> {e.dst.split('/')[-1]!r}")
print("note: the shared 'varistor' value node is deduplicated per document")

with tempfile.TemporaryDirectory() as td:
    path = Path(td) / "graph.json"
    kgraph.export_graph(g2, path)
    print("\nexport round-trips:", kgraph.load_graph(path) == g2)
    print(path.read_text()[:300], "…")
