"""Structured information extraction around black-box completion models.

Submodules: records (data model), codec (completion schemas), scoring
(evaluation suite), kgraph (knowledge-graph decoding), baseline
(proximity linking), corpus (dataset construction), llm (backends and
inference), annosvc (human-in-the-loop service), cli.
"""

from .records import (
    DopingRecord,
    Entity,
    FieldLabel,
    MaterialRecord,
    MofRecord,
    PromptCompletionPair,
    RecordError,
    SchemaId,
    contains_stoichiometry,
    entity_words,
    is_formula_field,
)

__version__ = "0.1.0"

__all__ = [
    "DopingRecord",
    "Entity",
    "FieldLabel",
    "MaterialRecord",
    "MofRecord",
    "PromptCompletionPair",
    "RecordError",
    "SchemaId",
    "contains_stoichiometry",
    "entity_words",
    "is_formula_field",
    "__version__",
]
