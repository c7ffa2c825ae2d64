"""Batch evaluation: exact-match accuracy, depth, and call accounting.

Each record gets a fresh scripted gateway so runs never interfere; engines
share the immutable graph. One record answers correctly at depth 2, one
answers wrongly, and one exhausts its depth budget and degrades to the
direct-answer baseline. Note the degraded run's call count: a width-1,
depth-2 run that never answers costs 2*1*2 + 2 + 2 = 8 retrieval calls plus
the one degrade call.
"""

from pathlib import Path

from fasttog import EngineConfig, KnowledgeGraph, QARecord, ScriptedGateway, evaluate

DATA = Path(__file__).parent / "data" / "us_geo.tsv"

kg = KnowledgeGraph.ingest(DATA)

records = [
    QARecord(
        id="climate",
        question="What is the climate of the state containing the Pennsylvania Convention Center?",
        gold_answers=("Humid Subtropical",),
        start_entities=("Pennsylvania Convention Center",),
    ),
    QARecord(
        id="wrong",
        question="Which river flows through Philadelphia?",
        gold_answers=("Delaware River",),
        start_entities=("Philadelphia",),
    ),
    QARecord(
        id="stubborn",
        question="Who founded the John C. Winston Company?",
        gold_answers=("John Clark Winston",),
        start_entities=("John C. Winston Company",),
    ),
]

answer_at_depth_2 = lambda text: [
    "A", "Unknown", "A", "A", "Unknown", "A", "A", f"Answer: {text}",
]
scripts = {
    "climate": answer_at_depth_2("Humid Subtropical"),
    "wrong": answer_at_depth_2("the Schuylkill, probably"),
    "stubborn": ["A", "Unknown", "A", "A", "Unknown", "A", "A", "Unknown", "Answer: no idea"],
}

report = evaluate(
    records,
    kg,
    EngineConfig(width=1, max_depth=2, seed=3),
    gateway_factory=lambda rec: ScriptedGateway(list(scripts[rec.id])),
)

print(report.to_table())
print("\nmachine-readable report:")
print(report.to_json())
