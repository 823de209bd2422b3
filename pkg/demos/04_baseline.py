"""The proximity baseline: sentence co-occurrence as a linking rule.

NER spans come from outside (a span file in production, literals here);
the baseline splits the passage into sentences and links every host to
every dopant sharing a sentence. Good recall, poor precision: not every
co-occurring pair is a real relation, which is exactly the failure mode
the learned models fix.
"""

from matextract import scoring
from matextract.baseline import NerSpan, proximity_link, split_sentences
from matextract.records import DopingRecord

passage = (
    "ZnO and TiO2 were studied, but only ZnO was doped with Al. "
    "See Fig. 2 for XRD at x = 0.5. "
    "SnSe was doped with Na."
)

print("== Sentence splitting ==")
sentences = split_sentences(passage)
for s, (lo, hi) in sentences:
    print(f"  [{lo:3}:{hi:3}] {s.strip()!r}")
print("note: 'Fig. 2' and the decimal '0.5' did not split")


def span(text, field, occurrence=0):
    start = -1
    for _ in range(occurrence + 1):
        start = passage.index(text, start + 1)
    return NerSpan(text, field, start, start + len(text))


spans = [
    span("ZnO", "host"),
    span("TiO2", "host"),
    span("ZnO", "host", occurrence=1),
    span("Al", "dopant"),
    span("SnSe", "host"),
    span("Na", "dopant"),
]

print("\n== Proximity linking ==")
pred = proximity_link(spans, sentences)
for h, d in sorted(pred.links):
    print(f"  {pred.hosts[h].text} -> {pred.dopants[d].text}")

gold = DopingRecord(
    hosts=["ZnO", "TiO2", "ZnO", "SnSe"],
    dopants=["Al", "Na"],
    links={(2, 0), (3, 1)},  # only the second ZnO mention and SnSe are doped
)
prf = scoring.nerre_prf([gold], [pred], scoring.DOPING_RELATIONS)["host-dopant"]
print(f"\nvs gold: P={prf.precision:.3f} R={prf.recall:.3f} F1={prf.f1:.3f}")
print("(recall is perfect, precision pays for the all-pairs rule)")
