"""Decode parsed records into per-passage hierarchical knowledge graphs.

Doping records become flat value nodes (host -> dopant edges, NER-only
results/modifiers hanging off the document node). General/MOF entries
become material nodes rooted at the formula (name when no formula) whose
field values are entity-field child nodes. Value nodes are deduplicated
per document by (field, text); construction order is fixed, so the same
records always export byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

from .records import DopingRecord, MaterialRecord, MofRecord

DOCUMENT = "document"
MATERIAL = "material"
ENTITY_FIELD = "entity-field"
VALUE = "value"

_KINDS = (DOCUMENT, MATERIAL, ENTITY_FIELD, VALUE)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    label: str


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    relation: str


@dataclass(frozen=True)
class KnowledgeGraph:
    doc_id: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate node ids")
        known = set(ids)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise ValueError(f"edge endpoint missing: {e}")
        for n in self.nodes:
            if n.kind not in _KINDS:
                raise ValueError(f"unknown node kind {n.kind!r}")

    @property
    def document_node(self) -> Node:
        return next(n for n in self.nodes if n.kind == DOCUMENT)

    def to_node_link_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "kind": n.kind, "label": n.label} for n in self.nodes
            ],
            "edges": [
                {"src": e.src, "dst": e.dst, "relation": e.relation}
                for e in self.edges
            ],
        }

    @classmethod
    def from_node_link_dict(cls, doc_id: str, payload: dict) -> "KnowledgeGraph":
        return cls(
            doc_id=doc_id,
            nodes=tuple(Node(**n) for n in payload["nodes"]),
            edges=tuple(Edge(**e) for e in payload["edges"]),
        )

    def is_acyclic(self) -> bool:
        adjacency: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            adjacency[e.src].append(e.dst)
        WHITE, GREY, BLACK = 0, 1, 2
        color = {n: WHITE for n in adjacency}
        for start in adjacency:
            if color[start] != WHITE:
                continue
            stack = [(start, iter(adjacency[start]))]
            color[start] = GREY
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color[nxt] == GREY:
                        return False
                    if color[nxt] == WHITE:
                        color[nxt] = GREY
                        stack.append((nxt, iter(adjacency[nxt])))
                        advanced = True
                        break
                if not advanced:
                    color[node] = BLACK
                    stack.pop()
        return True


class _Builder:
    def __init__(self, doc_id: str):
        self.doc_id = str(doc_id)
        self.nodes: list[Node] = [Node(self.doc_id, DOCUMENT, self.doc_id)]
        self.edges: list[Edge] = []
        self._value_ids: dict[tuple[str, str], str] = {}
        self._edge_seen: set[Edge] = set()
        self._counter = 0

    def value_node(self, field: str, text: str, kind: str) -> str:
        key = (field, text)
        if key not in self._value_ids:
            node_id = f"{self.doc_id}/{field}/{text}"
            self._value_ids[key] = node_id
            self.nodes.append(Node(node_id, kind, text))
        return self._value_ids[key]

    def material_node(self, label: str) -> str:
        node_id = f"{self.doc_id}/material/{self._counter}"
        self._counter += 1
        self.nodes.append(Node(node_id, MATERIAL, label))
        self.edges.append(Edge(self.doc_id, node_id, "material"))
        return node_id

    def edge(self, src: str, dst: str, relation: str) -> None:
        e = Edge(src, dst, relation)
        if e not in self._edge_seen:  # dedup follows from value-node dedup
            self._edge_seen.add(e)
            self.edges.append(e)

    def build(self) -> KnowledgeGraph:
        return KnowledgeGraph(
            doc_id=self.doc_id, nodes=tuple(self.nodes), edges=tuple(self.edges)
        )


def graph_from_doping(r: DopingRecord, doc_id: str) -> KnowledgeGraph:
    """Host->dopant edges per link; results/modifiers attach to the document."""
    b = _Builder(doc_id)
    host_ids = [b.value_node("host", e.text, VALUE) for e in r.hosts]
    dopant_ids = [b.value_node("dopant", e.text, VALUE) for e in r.dopants]
    for h, d in sorted(r.links):
        b.edge(host_ids[h], dopant_ids[d], "doped_with")
    for e in r.results:
        b.edge(b.doc_id, b.value_node("result", e.text, VALUE), "result")
    for e in r.modifiers:
        b.edge(b.doc_id, b.value_node("modifier", e.text, VALUE), "modifier")
    return b.build()


def graph_from_records(
    rs: Sequence[Union[MaterialRecord, MofRecord]], doc_id: str
) -> KnowledgeGraph:
    """One material node per entry; field values are entity-field children."""
    b = _Builder(doc_id)
    for r in rs:
        mat = b.material_node(r.root)
        root_field = _root_field(r)
        for e in r.entities():
            if e.field.value == root_field and e.text == r.root:
                continue  # the root is the material node's own label
            child = b.value_node(e.field.value, e.text, ENTITY_FIELD)
            b.edge(mat, child, e.field.value)
    return b.build()


def _root_field(r: Union[MaterialRecord, MofRecord]) -> str:
    if isinstance(r, MaterialRecord):
        return "formula" if r.formula else "name"
    return "mof_formula" if r.mof_formula else "name"


def graph_from_sample(sample, doc_id: str) -> KnowledgeGraph:
    """Dispatch on decoded-sample shape (doping record vs entry list)."""
    if isinstance(sample, DopingRecord):
        return graph_from_doping(sample, doc_id)
    return graph_from_records(sample, doc_id)


def export_graph(g: KnowledgeGraph, path) -> None:
    """Write node-link JSON; loading the file reproduces the graph."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(g.to_node_link_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_graph(path, doc_id: str | None = None) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if doc_id is None:
        doc_id = next(
            n["id"] for n in payload["nodes"] if n["kind"] == DOCUMENT
        )
    return KnowledgeGraph.from_node_link_dict(doc_id, payload)
