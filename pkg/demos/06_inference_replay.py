"""Offline inference against a recorded completion store.

The replay backend maps sha256(wrapped prompt) to recorded completions, so
whole experiments re-run byte-identically without touching a live API. A
missing stop token marks a completion as cut off; the pipeline counts it
unparsable, feeding the parsability metric.
"""

from matextract import codec, llm
from matextract.records import MaterialRecord, SchemaId

backend = llm.ReplayBackend()

good_prompt = "LiCoO2 is a layered cathode material for Li-ion batteries."
good_body = codec.encode(
    SchemaId.GENERAL_JSON,
    [MaterialRecord(formula="LiCoO2", applications=["Li-ion battery", "cathode"])],
)
backend.record(codec.wrap_prompt(good_prompt), " " + good_body + codec.STOP_TOKEN)

cut_prompt = "An extremely long abstract that exhausted the token budget..."
backend.record(codec.wrap_prompt(cut_prompt), '[{"name":"","formula":"LiC')

for prompt in (good_prompt, cut_prompt):
    out = llm.extract_records(prompt, SchemaId.GENERAL_JSON, backend)
    print(f"prompt: {prompt[:50]!r}")
    print(f"  parsable={out.parsable} truncated={out.truncated}")
    if out.parsable:
        for rec in out.record:
            print(f"  -> {rec}")
    print()

print("unknown prompts fail loudly (stale recordings never pass silently):")
try:
    llm.extract_records("never recorded", SchemaId.GENERAL_JSON, backend)
except llm.UnknownPromptError as exc:
    print(" ", exc)

print("\nlive backends POST {model, prompt, max_tokens, temperature, stop}")
print("auth comes from an env var; errors are typed:",
      [c.__name__ for c in (llm.CompletionTimeout, llm.AuthError, llm.RateLimitError,
                            llm.TransportError, llm.HTTPStatusError)])
