"""Shared fixture builders and test doubles."""

from __future__ import annotations

import random
from collections import deque

import numpy as np

from fasttog import KnowledgeGraph, Subgraph, Triple
from fasttog.gateway import GenerationRequest, GenerationResponse, CallLedger


def bridged_triangles() -> KnowledgeGraph:
    """Two triangles a-b-c and d-e-f joined by the single edge c-d (m=7)."""
    edges = [
        ("a", "rel", "b"),
        ("b", "rel", "c"),
        ("a", "rel", "c"),
        ("d", "rel", "e"),
        ("e", "rel", "f"),
        ("d", "rel", "f"),
        ("c", "bridge", "d"),
    ]
    return KnowledgeGraph([Triple(*e) for e in edges])


def full_subgraph(kg: KnowledgeGraph) -> Subgraph:
    return Subgraph.from_full_graph(kg)


def random_graph(n: int, p: float, rng: random.Random) -> KnowledgeGraph:
    """Undirected G(n, p) rendered as triples; guaranteed at least one edge."""
    triples = []
    names = [f"n{i:02d}" for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                triples.append(Triple(names[i], "rel", names[j]))
    if not triples:
        triples.append(Triple(names[0], "rel", names[1 % n]))
    return KnowledgeGraph(triples)


def random_partition_sets(nodes, rng: random.Random) -> list[set]:
    order = sorted(nodes)
    rng.shuffle(order)
    blocks = []
    i = 0
    while i < len(order):
        size = rng.randint(1, max(1, len(order) // 2))
        blocks.append(set(order[i : i + size]))
        i += size
    return blocks


def eq1_direct(g: Subgraph, member_sets) -> float:
    """Independent oracle: the double-sum definition of modularity.

    Builds the dense adjacency matrix and evaluates
    sum_ij (A_ij - k_i k_j / 2m) over same-community pairs, divided by 2m.
    """
    nodes = sorted(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    A = np.zeros((n, n))
    for u, v in g.structural_edges():
        A[index[u], index[v]] = 1.0
        A[index[v], index[u]] = 1.0
    k = A.sum(axis=1)
    m = A.sum() / 2.0
    comm_of = {}
    for ci, block in enumerate(member_sets):
        for v in block:
            comm_of[v] = ci
    same = np.zeros((n, n), dtype=bool)
    for i, u in enumerate(nodes):
        for j, v in enumerate(nodes):
            same[i, j] = comm_of[u] == comm_of[v]
    return float(((A - np.outer(k, k) / (2 * m)) * same).sum() / (2 * m))


# -- synthetic knowledge graphs for engine runs --------------------------------


def clique_path(
    n_cliques: int = 6,
    clique_size: int = 4,
    seed: int = 0,
    prefix: str = "p",
) -> tuple[KnowledgeGraph, str, str]:
    """A chain of cliques with single bridge edges between consecutive ones.

    Returns (graph, start_label, target_label): the start sits in the first
    clique, the target in the last. Labels are seed-shuffled so detection
    tie-breaks vary across instances.
    """
    rng = random.Random(seed)
    total = n_cliques * clique_size
    names = [f"{prefix}{i:03d}" for i in range(total)]
    rng.shuffle(names)
    cliques = [
        names[c * clique_size : (c + 1) * clique_size] for c in range(n_cliques)
    ]
    triples = []
    for members in cliques:
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                triples.append(Triple(members[i], "rel", members[j]))
    for c in range(n_cliques - 1):
        triples.append(Triple(cliques[c][-1], "next", cliques[c + 1][0]))
    return KnowledgeGraph(triples), cliques[0][0], cliques[-1][-1]


def clique_spider(
    arms: int = 3,
    arm_len: int = 8,
    clique_size: int = 4,
    seed: int = 0,
) -> tuple[KnowledgeGraph, str]:
    """A hub node feeding ``arms`` disjoint clique chains.

    Rich enough that every chain finds a fresh candidate at every step, which
    the call-accounting worst case requires.
    """
    rng = random.Random(seed)
    triples = []
    hub = "hub"
    for a in range(arms):
        total = arm_len * clique_size
        names = [f"a{a}x{i:03d}" for i in range(total)]
        rng.shuffle(names)
        cliques = [
            names[c * clique_size : (c + 1) * clique_size] for c in range(arm_len)
        ]
        for members in cliques:
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    triples.append(Triple(members[i], "rel", members[j]))
        for c in range(arm_len - 1):
            triples.append(Triple(cliques[c][-1], "next", cliques[c + 1][0]))
        triples.append(Triple(hub, "arm", cliques[0][0]))
    return KnowledgeGraph(triples), hub


def gold_star(
    n_decoys: int = 7,
    seed: int = 0,
) -> tuple[KnowledgeGraph, str, str]:
    """A start node with one dense 4-clique neighbor and sparse decoy pairs.

    The target lives inside the clique, which scores far above every decoy,
    so score-ranked coarse pruning always keeps it while random pruning
    frequently drops it.
    """
    rng = random.Random(seed)
    start = "origin"
    gold = [f"gold{i}" for i in range(4)]
    target = gold[-1]
    triples = []
    for i in range(len(gold)):
        for j in range(i + 1, len(gold)):
            triples.append(Triple(gold[i], "rel", gold[j]))
    triples.append(Triple(start, "leads", gold[0]))
    for d in range(n_decoys):
        a, b = f"d{d}a", f"d{d}b"
        triples.append(Triple(start, "leads", a))
        triples.append(Triple(a, "rel", b))
    rng.shuffle(triples)
    return KnowledgeGraph(triples), start, target


# -- deterministic test gateways ------------------------------------------------


def never_answer_script(width: int, max_depth: int, degrade_replies=("degrade filler",)):
    """Reply sequence for a run that never answers and never stalls."""
    lines = [", ".join("ABCDEFGHIJ"[i] for i in range(width)), "Unknown"]
    for _ in range(max_depth):
        for _ in range(width):
            lines.extend(["A", "A"])  # select, then confirm
        lines.append("Unknown")
    lines.extend(degrade_replies)
    return lines


class OracleGateway:
    """Deterministic stand-in that walks toward a target entity.

    Pruning requests pick the option mentioning the entity closest to the
    target (confirming single options); reasoning requests answer when the
    target label appears in the prompt, else reply Unknown. Baseline requests
    return a planted wrong answer so degraded runs are visibly incorrect.
    """

    provider = "oracle"

    def __init__(self, kg: KnowledgeGraph, target: str):
        self.kg = kg
        self.target = target
        self.ledger = CallLedger()
        self._dist = self._distances(target)
        # longest labels first so substring hits are never partial-token
        self._labels = sorted(kg.nodes, key=len, reverse=True)

    def _distances(self, target: str) -> dict[str, int]:
        dist = {target: 0}
        queue = deque([target])
        while queue:
            u = queue.popleft()
            for v in self.kg.structural_neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def _best_distance(self, text: str) -> int:
        best = 10**9
        for label in self._labels:
            if label in text:
                best = min(best, self._dist.get(label, 10**9))
        return best

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        self.ledger.increment(req.tag)
        if req.tag == "pruning":
            options = req.prompt.option_texts
            if not options:
                reply = "A"
            else:
                scores = [self._best_distance(text) for text in options]
                reply = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"[scores.index(min(scores))]
            return GenerationResponse(reply, 0, self.provider, 0)
        if req.tag == "reasoning":
            if self.target in req.prompt.body:
                return GenerationResponse(f"Answer: {self.target}", 0, self.provider, 0)
            return GenerationResponse("Unknown", 0, self.provider, 0)
        return GenerationResponse("Answer: oracle-miss", 0, self.provider, 0)
