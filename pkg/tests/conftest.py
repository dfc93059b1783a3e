"""Shared fixtures and independent test oracles.

The oracles here are deliberately written from scratch against the textbook
definitions (path enumeration for d-separation, dense grids for the consensus
posterior, raw Bayes for small nets) so they never share code with the paths
they check.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

import numpy as np
import pytest

from riskdag.cpt import Cpt
from riskdag.graph import NodeKind, RiskDag, RiskNode


# -- random model generation ----------------------------------------------------


def make_random_dag(rng: random.Random, max_nodes: int = 8, max_states: int = 3) -> RiskDag:
    n = rng.randint(2, max_nodes)
    dag = RiskDag()
    ids = [f"n{i}" for i in range(n)]
    for nid in ids:
        k = rng.randint(2, max_states)
        dag = dag.add_node(
            RiskNode(nid, nid.upper(), NodeKind.EVENT, tuple(f"s{j}" for j in range(k)))
        )
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.35:
                dag = dag.add_edge(ids[i], ids[j])
    return dag


def random_cpts(dag: RiskDag, rng: random.Random) -> dict[str, Cpt]:
    cpts = {}
    for nid in dag.nodes:
        cpt = Cpt.for_node(dag, nid)
        for cfg in cpt.expected_configs():
            raw = [rng.random() + 1e-3 for _ in range(cpt.k)]
            total = sum(raw)
            vec = [v / total for v in raw]
            vec[-1] = 1.0 - sum(vec[:-1])
            cpt.set_row(cfg, vec)
        cpts[nid] = cpt
    return cpts


def make_random_model(rng: random.Random, max_nodes: int = 8, max_states: int = 3):
    dag = make_random_dag(rng, max_nodes, max_states)
    return dag, random_cpts(dag, rng)


# -- d-separation oracle: enumerate every simple path, apply blocking rules ------


def _oracle_descendants(dag: RiskDag, node: str) -> set[str]:
    out: set[str] = set()
    queue = deque(c for p, c in dag.edges if p == node)
    while queue:
        cur = queue.popleft()
        if cur in out:
            continue
        out.add(cur)
        queue.extend(c for p, c in dag.edges if p == cur)
    return out


def oracle_d_separated(dag: RiskDag, xs, ys, zs) -> bool:
    xs, ys, zs = set(xs), set(ys), set(zs)
    edges = set(dag.edges)
    neighbors: dict[str, set[str]] = {nid: set() for nid in dag.nodes}
    for p, c in edges:
        neighbors[p].add(c)
        neighbors[c].add(p)

    def path_active(path: list[str]) -> bool:
        for i in range(1, len(path) - 1):
            a, m, b = path[i - 1], path[i], path[i + 1]
            collider = (a, m) in edges and (b, m) in edges
            if collider:
                if m not in zs and not (_oracle_descendants(dag, m) & zs):
                    return False
            else:
                if m in zs:
                    return False
        return True

    def all_paths(start: str) -> bool:
        stack = [[start]]
        while stack:
            path = stack.pop()
            cur = path[-1]
            if cur in ys and len(path) > 1:
                if path_active(path):
                    return True
                continue
            for nxt in neighbors[cur]:
                if nxt not in path:
                    stack.append(path + [nxt])
        return False

    return not any(all_paths(x) for x in xs)


# -- tiny exact Bayes for hand-checkable nets -------------------------------------


def oracle_enumerate_posterior(dag: RiskDag, cpts, evidence, node: str) -> list[float]:
    ids = list(dag.nodes)
    cards = [dag.node(n).k for n in ids]
    pos = {n: i for i, n in enumerate(ids)}
    acc = [0.0] * dag.node(node).k
    z = 0.0
    for assignment in itertools.product(*(range(k) for k in cards)):
        if any(assignment[pos[n]] != s for n, s in evidence.items()):
            continue
        p = 1.0
        for n in ids:
            cfg = tuple(assignment[pos[q]] for q in cpts[n].parent_ids)
            p *= cpts[n].get_row(cfg).values[assignment[pos[n]]]
        z += p
        acc[assignment[pos[node]]] += p
    return [a / z for a in acc]


# -- dense-grid oracle for the consensus posterior --------------------------------


def oracle_consensus_mean(values, weights, p0, k_prior, kappa, points: int = 100_001) -> float:
    from scipy.special import betaln

    grid = np.linspace(1e-6, 1 - 1e-6, points)
    a0, b0 = p0 * k_prior, (1 - p0) * k_prior
    log_k = np.zeros_like(grid)
    if a0 > 0 and b0 > 0:
        log_k += (a0 - 1) * np.log(grid) + (b0 - 1) * np.log1p(-grid)
    a = kappa * grid
    b = kappa * (1 - grid)
    for y, w in zip(values, weights):
        yc = min(max(y, 1e-6), 1 - 1e-6)
        log_k += w * ((a - 1) * np.log(yc) + (b - 1) * np.log1p(-yc) - betaln(a, b))
    dens = np.exp(log_k - log_k.max())
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    z = trapezoid(dens, grid)
    return float(trapezoid(grid * dens / z, grid))


# -- fixtures ---------------------------------------------------------------------


@pytest.fixture
def chain_ab():
    """A -> B with P(A=t)=0.3, P(B=t|A=t)=0.9, P(B=t|A=f)=0.1."""
    dag = RiskDag()
    dag = dag.add_node(RiskNode("a", "A", NodeKind.CAUSE, ("f", "t")))
    dag = dag.add_node(RiskNode("b", "B", NodeKind.EVENT, ("f", "t")))
    dag = dag.add_edge("a", "b")
    cpt_a = Cpt.for_node(dag, "a")
    cpt_a.set_row((), (0.7, 0.3))
    cpt_b = Cpt.for_node(dag, "b")
    cpt_b.set_row((0,), (0.9, 0.1))
    cpt_b.set_row((1,), (0.1, 0.9))
    return dag, {"a": cpt_a, "b": cpt_b}


@pytest.fixture(scope="session")
def case_study():
    from riskdag.casestudy import case_study_model

    return case_study_model()
