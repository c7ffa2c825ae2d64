"""Loading a knowledge graph and sampling hop-limited subgraphs.

The store keeps triples exactly as ingested (for verbalization) and a
structural view (undirected, parallel predicates collapsed) for all graph
math. Subgraph extraction walks out from a center node set and keeps a node
first seen at hop n with probability rho ** (n - 1), so hop-1 neighbors
always survive and deeper frontiers thin out exponentially.
"""

from pathlib import Path

from fasttog import KnowledgeGraph, SamplerConfig, extract_subgraph

DATA = Path(__file__).parent / "data" / "us_geo.tsv"

kg = KnowledgeGraph.ingest(DATA)
print(f"graph: {len(kg.nodes)} entities, {len(kg.triples)} triples")

print("\nneighbors of 'Philadelphia' (predicate, neighbor, direction):")
for entry in kg.neighbors("Philadelphia"):
    print("  ", entry)

center = "Pennsylvania Convention Center"

print(f"\nfull 2-hop ball around {center!r} (rho = 1.0 keeps everything):")
ball = extract_subgraph(kg, [center], SamplerConfig(rho=1.0, r_max=2, seed=0))
for node in sorted(ball.nodes):
    print(f"   hop {ball.hop_of[node]}  {node}")
print(f"   structural edges: {ball.m}")

print("\nsampled balls with rho = 0.5 (hop-2 nodes kept about half the time):")
for seed in range(3):
    g = extract_subgraph(kg, [center], SamplerConfig(rho=0.5, r_max=2, seed=seed))
    kept_hop2 = sorted(v for v, h in g.hop_of.items() if h == 2)
    print(f"   seed {seed}: {len(g.nodes)} nodes, hop-2 survivors {kept_hop2}")

print("\nsame seed, same ball, bit for bit:")
a = extract_subgraph(kg, [center], SamplerConfig(rho=0.5, r_max=2, seed=1))
b = extract_subgraph(kg, [center], SamplerConfig(rho=0.5, r_max=2, seed=1))
print("   identical:", a.nodes == b.nodes and a.hop_of == b.hop_of)
