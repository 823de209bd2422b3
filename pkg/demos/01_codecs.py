"""Completion schemas: records to strings and back.

Five schemas cover three tasks. Doping extractions serialize either as a
small JSON graph (unique host/dopant keys plus a relation map) or as
quasi-natural English paradigm lines; general-materials and MOF
extractions serialize as fixed-shape JSON entry lists. Decoding is strict:
anything the encoders could not have produced is unparsable, and
parsability is a measurement, not an error.
"""

from matextract import codec
from matextract.records import DopingRecord, MaterialRecord, MofRecord, SchemaId

sentence_record = DopingRecord(
    hosts=["SnSe", "ZnO nanoparticles"],
    dopants=["Na", "Ag"],
    links={(0, 0), (0, 1), (1, 0)},
    results=["Na0.02Sn0.98Se"],
    modifiers=["n-type", "2 at.%"],
)

print("== Doping-JSON ==")
body = codec.encode(SchemaId.DOPING_JSON, sentence_record)
print(body)
print("round-trips:", codec.decode(SchemaId.DOPING_JSON, body).record == DopingRecord(
    hosts=["SnSe", "ZnO nanoparticles"],
    dopants=["Na", "Ag"],
    links={(0, 0), (0, 1), (1, 0)},
))  # results/modifiers are outside this schema

print("\n== DopingExtra-ENG ==")
body = codec.encode(SchemaId.DOPING_EXTRA_ENG, sentence_record)
print(body)
print("round-trips:", codec.decode(SchemaId.DOPING_EXTRA_ENG, body).record == sentence_record)

print("\n== Empty record ==")
print(repr(codec.encode(SchemaId.DOPING_ENG, DopingRecord())))

print("\n== General-JSON ==")
materials = [
    MaterialRecord(formula="LiCoO2", applications=["Li-ion battery", "cathode"]),
    MaterialRecord(name="zinc oxide", formula="ZnO", description=["nanoparticles"]),
]
body = codec.encode(SchemaId.GENERAL_JSON, materials)
print(body)

print("\n== MOF-JSON ==")
mofs = [MofRecord(name="LaBTB", applications=["luminescent", "VOC sensor"])]
print(codec.encode(SchemaId.MOF_JSON, mofs))

print("\n== Strictness ==")
for bad in (
    '{"hosts":{',  # truncated mid-string
    "The host 'SnSe' was dopped with 'Na'.",  # misspelled paradigm keyword
    '[{"formula":"ZnO","description":"nanoparticles"}]',  # wrong value kind
):
    schema = (
        SchemaId.DOPING_JSON
        if bad.startswith("{")
        else SchemaId.DOPING_ENG
        if bad.startswith("The")
        else SchemaId.GENERAL_JSON
    )
    out = codec.decode(schema, bad)
    print(f"  {bad[:46]!r:50} -> parsable={out.parsable}  ({out.error})")

print("\n== Fine-tuning wire format ==")
from matextract.records import PromptCompletionPair

pair = PromptCompletionPair("SnSe was doped with Na.", "[]", SchemaId.GENERAL_JSON)
wrapped = codec.wrap(pair)
print(repr(wrapped.prompt_wire))
print(repr(wrapped.completion_wire))
unwrapped = codec.unwrap_completion("[]\n\n\nEND\n\n\nmodel kept talking")
print("unwrap cuts at stop token:", repr(unwrapped.text), "truncated:", unwrapped.truncated)
