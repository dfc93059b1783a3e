"""Exact discrete inference over the factorized joint.

``posterior`` runs variable elimination with a min-degree ordering;
``joint_brute_force`` enumerates the full joint as an independent oracle.
Zero-probability evidence is an explicit contradiction result, never a NaN
table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .cpt import Cpt, ROW_SUM_TOL
from .graph import RiskDag

BRUTE_FORCE_LIMIT = 10_000_000

# node id -> observed state index
EvidenceSet = Mapping[str, int]
# node id -> probability vector over its states
PosteriorTable = dict[str, tuple[float, ...]]


class InferenceError(Exception):
    pass


class IncompleteCptError(InferenceError):
    def __init__(self, nodes: list[str]):
        self.nodes = list(nodes)
        super().__init__(f"CPTs not runtime-ready for nodes: {self.nodes}")


class ContradictionError(InferenceError):
    """The evidence set has probability zero under the model."""

    def __init__(self, evidence: EvidenceSet):
        self.evidence = dict(evidence)
        super().__init__(f"evidence has zero probability: {self.evidence}")


class StateSpaceTooLargeError(InferenceError):
    pass


def _check_ready(dag: RiskDag, cpts: Mapping[str, Cpt]) -> None:
    bad = []
    for nid in dag.nodes:
        cpt = cpts.get(nid)
        if cpt is None or cpt.is_stale(dag) or not cpt.is_numerically_complete():
            bad.append(nid)
    if bad:
        raise IncompleteCptError(bad)


def _check_evidence(dag: RiskDag, evidence: EvidenceSet) -> dict[str, int]:
    out = {}
    for nid, idx in evidence.items():
        node = dag.node(nid)
        idx = int(idx)
        if not 0 <= idx < node.k:
            raise InferenceError(f"evidence state {idx} out of range for node {nid!r} (K={node.k})")
        out[nid] = idx
    return out


@dataclass
class _Factor:
    vars: tuple[str, ...]
    table: np.ndarray  # shape = cardinalities of vars, in order

    def reduce(self, var: str, idx: int) -> "_Factor":
        if var not in self.vars:
            return self
        axis = self.vars.index(var)
        return _Factor(
            self.vars[:axis] + self.vars[axis + 1:],
            np.take(self.table, idx, axis=axis),
        )

    def marginalize(self, var: str) -> "_Factor":
        axis = self.vars.index(var)
        return _Factor(self.vars[:axis] + self.vars[axis + 1:], self.table.sum(axis=axis))


def _multiply(a: _Factor, b: _Factor) -> _Factor:
    merged = a.vars + tuple(v for v in b.vars if v not in a.vars)
    a_shape = a.table.shape + (1,) * (len(merged) - len(a.vars))
    a_tab = a.table.reshape(a_shape)
    perm = [b.vars.index(v) if v in b.vars else None for v in merged]
    b_shape = tuple(b.table.shape[p] if p is not None else 1 for p in perm)
    b_axes = [p for p in perm if p is not None]
    b_tab = np.transpose(b.table, b_axes).reshape(b_shape)
    return _Factor(merged, a_tab * b_tab)


def _cpt_factor(dag: RiskDag, cpt: Cpt) -> _Factor:
    shape = cpt.parent_cards + (cpt.k,)
    table = np.empty(shape, dtype=float)
    for cfg, row in cpt.rows.items():
        table[cfg] = row.values
    return _Factor(cpt.parent_ids + (cpt.node_id,), table)


def _min_degree_order(factors: list[_Factor], keep: set[str]) -> list[str]:
    neighbors: dict[str, set[str]] = {}
    for f in factors:
        for v in f.vars:
            neighbors.setdefault(v, set()).update(f.vars)
    for v, ns in neighbors.items():
        ns.discard(v)
    order = []
    remaining = {v for v in neighbors if v not in keep}
    while remaining:
        var = min(remaining, key=lambda v: (len(neighbors[v] & (remaining | keep)), v))
        order.append(var)
        live = neighbors[var] & (remaining | keep)
        for u in live:
            neighbors[u].discard(var)
            neighbors[u].update(live - {u})
        remaining.discard(var)
    return order


def _eliminate(factors: list[_Factor], keep: set[str]) -> list[_Factor]:
    factors = list(factors)
    for var in _min_degree_order(factors, keep):
        related = [f for f in factors if var in f.vars]
        if not related:
            continue
        product = related[0]
        for f in related[1:]:
            product = _multiply(product, f)
        factors = [f for f in factors if var not in f.vars]
        factors.append(product.marginalize(var))
    return factors


def posterior(
    dag: RiskDag,
    cpts: Mapping[str, Cpt],
    evidence: EvidenceSet | None = None,
    query: Iterable[str] | None = None,
) -> PosteriorTable:
    """Exact marginals P(Q | evidence) for each query node (default: all)."""
    evidence = _check_evidence(dag, evidence or {})
    _check_ready(dag, cpts)
    query_ids = list(dag.nodes) if query is None else [dag.node(q).id for q in query]

    base = [_cpt_factor(dag, cpts[nid]) for nid in dag.nodes]
    reduced = []
    for f in base:
        for var, idx in evidence.items():
            f = f.reduce(var, idx)
        reduced.append(f)

    z = 1.0
    for f in _eliminate(reduced, set()):
        z *= float(f.table.sum()) if f.vars else float(f.table)
    if z <= 0.0:
        raise ContradictionError(evidence)

    out: PosteriorTable = {}
    for q in query_ids:
        node = dag.node(q)
        if q in evidence:
            vec = [0.0] * node.k
            vec[evidence[q]] = 1.0
            out[q] = tuple(vec)
            continue
        remaining = _eliminate(reduced, {q})
        acc = _Factor((), np.array(1.0))
        for f in remaining:
            acc = _multiply(acc, f)
        if acc.vars != (q,):  # every non-q var was eliminated, so this is structural
            raise InferenceError(f"elimination left unexpected scope {acc.vars}")
        total = float(acc.table.sum())
        if total <= 0.0:
            raise ContradictionError(evidence)
        out[q] = tuple(float(v) for v in acc.table / total)
    return out


def prior_marginals(dag: RiskDag, cpts: Mapping[str, Cpt]) -> PosteriorTable:
    return posterior(dag, cpts, {}, None)


def joint_brute_force(
    dag: RiskDag,
    cpts: Mapping[str, Cpt],
    evidence: EvidenceSet | None = None,
    query: Iterable[str] | None = None,
) -> PosteriorTable:
    """Full-joint enumeration oracle. Independent of the factor machinery:
    walks every assignment and multiplies CPT rows directly."""
    evidence = _check_evidence(dag, evidence or {})
    _check_ready(dag, cpts)
    node_ids = list(dag.nodes)
    cards = [dag.node(n).k for n in node_ids]
    if math.prod(cards) > BRUTE_FORCE_LIMIT:
        raise StateSpaceTooLargeError(f"joint size {math.prod(cards)} exceeds {BRUTE_FORCE_LIMIT}")
    query_ids = node_ids if query is None else [dag.node(q).id for q in query]

    pos = {n: i for i, n in enumerate(node_ids)}
    parent_pos = {n: [pos[p] for p in cpts[n].parent_ids] for n in node_ids}
    rows = {n: {cfg: row.values for cfg, row in cpts[n].rows.items()} for n in node_ids}
    ev_items = [(pos[n], idx) for n, idx in evidence.items()]

    z = 0.0
    acc = {q: [0.0] * dag.node(q).k for q in query_ids}
    for assignment in itertools.product(*(range(k) for k in cards)):
        if any(assignment[i] != idx for i, idx in ev_items):
            continue
        p = 1.0
        for n in node_ids:
            cfg = tuple(assignment[i] for i in parent_pos[n])
            p *= rows[n][cfg][assignment[pos[n]]]
            if p == 0.0:
                break
        if p == 0.0:
            continue
        z += p
        for q in query_ids:
            acc[q][assignment[pos[q]]] += p
    if z <= 0.0:
        raise ContradictionError(evidence)
    return {q: tuple(v / z for v in acc[q]) for q in query_ids}
