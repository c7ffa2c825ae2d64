"""A complete question-answering run, fully offline.

The engine grows reasoning chains one community per iteration: each step
extracts a fresh subgraph around the chain's last community, detects bounded
communities, prunes coarsely by structure and finely through the gateway
(a selection plus a confirmation), then asks for a verdict over all chains.
The scripted gateway below picks the first option everywhere and answers on
the third reasoning call, so the run finishes at depth 2 without degrading.
"""

from pathlib import Path

from fasttog import Engine, EngineConfig, KnowledgeGraph, ScriptedGateway, trace_to_dot

DATA = Path(__file__).parent / "data" / "us_geo.tsv"

kg = KnowledgeGraph.ingest(DATA)
script = [
    "A",                          # initial header selection
    "Unknown",                    # initial verdict: keep going
    "A", "A",                     # depth 1: select + confirm
    "Unknown",                    # depth 1 verdict
    "A", "A",                     # depth 2: select + confirm
    "Answer: Humid Subtropical",  # depth 2 verdict
]
gateway = ScriptedGateway(script)
config = EngineConfig(width=1, max_depth=4, seed=7)
engine = Engine(kg, gateway, config)

question = "What is the climate of the state containing the Pennsylvania Convention Center?"
verdict, trace = engine.run(question, ["Pennsylvania Convention Center"])

print("question: ", question)
print("answer:   ", verdict.text)
print("depth:    ", trace.depth_reached, " degraded:", trace.degraded)
print("calls:    ", trace.ledger)

print("\nhow the chain grew:")
for event in trace.events:
    if event["event"] == "chain_grew":
        print(f"   depth {event['depth']}: + {{{', '.join(event['members'])}}}")

print("\nfirst lines of the JSONL trace (the whole run is replayable):")
for line in trace.to_jsonl().splitlines()[:4]:
    print("  ", line[:110])

dot = trace_to_dot(trace.events)
out = Path.cwd() / "exploration.dot"
out.write_text(dot, encoding="utf-8")
print(f"\nDOT rendering of the explored communities written to {out.name}")
print("   (render with: dot -Tpng exploration.dot -o exploration.png)")
