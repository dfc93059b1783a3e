"""Graph-causal queries: d-separation, active trails, adjustment sets,
do-interventions, and intervention ranking over activation nodes.

Observation and intervention stay strictly separated: do(X=x) cuts X's
incoming edges and pins its CPT, so downstream effects reflect setting the
state rather than learning it.
"""

from __future__ import annotations

import itertools
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .bowtie import ModelWarning
from .cpt import Cpt
from .graph import RiskDag
from .inference import EvidenceSet, posterior

BACKDOOR_CANDIDATE_CAP = 20


class CausalError(Exception):
    pass


class CandidateSpaceError(CausalError):
    """Backdoor enumeration refused: candidate set beyond the brute-force cap."""


def _as_ids(dag: RiskDag, refs: Iterable[str] | str) -> set[str]:
    if isinstance(refs, str):
        refs = [refs]
    return {dag.node(r).id for r in refs}


def d_separated(
    dag: RiskDag,
    x: Iterable[str] | str,
    y: Iterable[str] | str,
    z: Iterable[str] | str = (),
) -> bool:
    """True iff every trail between X and Y is blocked given Z.

    Reachability formulation: walk (node, direction) states, letting trails
    pass through unobserved chains/forks and through colliders whose
    descendants meet Z.
    """
    xs, ys, zs = _as_ids(dag, x), _as_ids(dag, y), _as_ids(dag, z)
    if xs & ys or xs & zs or ys & zs:
        raise CausalError("X, Y, Z must be disjoint")

    z_closure = set(zs)
    queue = deque(zs)
    while queue:
        cur = queue.popleft()
        for p in dag.parents(cur):
            if p not in z_closure:
                z_closure.add(p)
                queue.append(p)

    # direction "up" = arrived from a child (moving against edges),
    # "down" = arrived from a parent.
    visited: set[tuple[str, str]] = set()
    frontier: deque[tuple[str, str]] = deque((node, "up") for node in xs)
    while frontier:
        node, direction = frontier.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in zs and node in ys:
            return False
        if direction == "up" and node not in zs:
            for p in dag.parents(node):
                frontier.append((p, "up"))
            for c in dag.children(node):
                frontier.append((c, "down"))
        elif direction == "down":
            if node not in zs:
                for c in dag.children(node):
                    frontier.append((c, "down"))
            if node in z_closure:
                for p in dag.parents(node):
                    frontier.append((p, "up"))
    return True


def _trail_active(dag: RiskDag, trail: list[str], zs: set[str]) -> bool:
    """Apply the chain/fork/collider blocking rules along one simple trail."""
    for i in range(1, len(trail) - 1):
        prev, mid, nxt = trail[i - 1], trail[i], trail[i + 1]
        into_left = mid in dag.children(prev)   # prev -> mid
        into_right = mid in dag.children(nxt)   # nxt -> mid
        if into_left and into_right:  # collider
            if mid not in zs and not (dag.descendants(mid) & zs):
                return False
        else:  # chain or fork
            if mid in zs:
                return False
    return True


def d_connected_trails(
    dag: RiskDag,
    x: Iterable[str] | str,
    y: Iterable[str] | str,
    z: Iterable[str] | str = (),
) -> list[list[str]]:
    """All active simple trails between X and Y given Z, shortest first then
    lexicographic. Empty exactly when d-separated."""
    xs, ys, zs = _as_ids(dag, x), _as_ids(dag, y), _as_ids(dag, z)
    if xs & ys:
        raise CausalError("X and Y must be disjoint")

    neighbors: dict[str, list[str]] = {
        nid: sorted(set(dag.parents(nid)) | set(dag.children(nid))) for nid in dag.nodes
    }
    trails: list[list[str]] = []

    def walk(path: list[str]) -> None:
        cur = path[-1]
        if cur in ys and len(path) > 1:
            if _trail_active(dag, path, zs):
                trails.append(list(path))
            return  # simple trails end at the first Y hit
        for nxt in neighbors[cur]:
            if nxt not in path:
                path.append(nxt)
                walk(path)
                path.pop()

    for start in sorted(xs):
        walk([start])
    trails.sort(key=lambda t: (len(t), t))
    return trails


def _strip_outgoing(dag: RiskDag, nodes: Iterable[str]) -> RiskDag:
    g = dag
    for nid in nodes:
        for c in dag.children(nid):
            g = g.remove_edge(nid, c)
    return g


def is_backdoor_set(dag: RiskDag, x: str, y: str, z: Iterable[str]) -> bool:
    """Backdoor criterion: Z holds no descendant of X and blocks every
    back-path in the graph with X's outgoing edges removed."""
    x, y = dag.node(x).id, dag.node(y).id
    zs = _as_ids(dag, z)
    if x in zs or y in zs:
        return False
    if zs & dag.descendants(x):
        return False
    return d_separated(_strip_outgoing(dag, [x]), x, y, zs)


def backdoor_sets(
    dag: RiskDag,
    x: str,
    y: str,
    mode: str = "minimal",
) -> list[tuple[str, ...]]:
    """Brute-force enumeration of backdoor adjustment sets (desk scale)."""
    if mode not in ("minimal", "all"):
        raise CausalError(f"mode must be 'minimal' or 'all', got {mode!r}")
    x, y = dag.node(x).id, dag.node(y).id
    if x == y:
        raise CausalError("exposure and outcome must differ")
    candidates = sorted(set(dag.nodes) - {x, y} - dag.descendants(x))
    if len(candidates) > BACKDOOR_CANDIDATE_CAP:
        raise CandidateSpaceError(
            f"{len(candidates)} candidates exceed the enumeration cap of {BACKDOOR_CANDIDATE_CAP}"
        )
    valid: list[tuple[str, ...]] = []
    minimal: list[tuple[str, ...]] = []
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            if not is_backdoor_set(dag, x, y, combo):
                continue
            combo_set = set(combo)
            if not any(set(v) < combo_set for v in valid):
                minimal.append(combo)
            valid.append(combo)
    return minimal if mode == "minimal" else valid


def frontdoor_check(dag: RiskDag, x: str, y: str, m: Iterable[str]) -> bool:
    """Frontdoor criterion for mediator set M between X and Y."""
    x, y = dag.node(x).id, dag.node(y).id
    ms = _as_ids(dag, m)
    if x in ms or y in ms:
        raise CausalError("mediator set must exclude X and Y")
    if not ms:
        return False

    # (1) M intercepts every directed X -> Y path.
    g = dag
    for nid in ms:
        g = g.remove_node(nid)
    if g.has_directed_path(x, y):
        return False
    # (2) no unblocked backdoor path X -> M: strip X's out-edges, need X d-sep M.
    if not d_separated(_strip_outgoing(dag, [x]), x, ms, ()):
        return False
    # (3) every backdoor path M -> Y is blocked by X: strip M's out-edges.
    if not d_separated(_strip_outgoing(dag, ms), ms, y, {x}):
        return False
    return True


@dataclass(frozen=True)
class IndependenceStatement:
    node: str
    independent_of: tuple[str, ...]
    given: tuple[str, ...]

    def __str__(self) -> str:
        others = ", ".join(self.independent_of) if self.independent_of else "{}"
        given = ", ".join(self.given) if self.given else "{}"
        return f"({self.node} ⟂ {others} | {given})"


def local_independencies(dag: RiskDag, node: str) -> IndependenceStatement:
    """(node is independent of its non-descendants given its parents)."""
    nid = dag.node(node).id
    parents = dag.parents(nid)
    others = sorted(set(dag.nodes) - {nid} - dag.descendants(nid) - set(parents))
    return IndependenceStatement(nid, tuple(others), parents)


# -- interventions -------------------------------------------------------------


# node id -> forced state index
Intervention = Mapping[str, int]


def do_transform(
    dag: RiskDag,
    cpts: Mapping[str, Cpt],
    intervention: Intervention,
) -> tuple[RiskDag, dict[str, Cpt]]:
    """Cut incoming edges of each do-target and pin its CPT to the forced state."""
    new_dag = dag
    new_cpts = dict(cpts)
    for nid, state in intervention.items():
        node = dag.node(nid)
        state = int(state)
        if not 0 <= state < node.k:
            raise CausalError(f"do-state {state} out of range for node {nid!r} (K={node.k})")
        if not node.activation:
            warnings.warn(
                f"do-intervention on non-activation node {nid!r}", ModelWarning, stacklevel=2
            )
        for p in list(new_dag.parents(nid)):
            new_dag = new_dag.remove_edge(p, nid)
        pinned = Cpt(nid, (), (), node.k)
        vec = [0.0] * node.k
        vec[state] = 1.0
        pinned.set_row((), vec)
        new_cpts[nid] = pinned
    return new_dag, new_cpts


def interventional_posterior(
    dag: RiskDag,
    cpts: Mapping[str, Cpt],
    evidence: EvidenceSet,
    intervention: Intervention,
    target: str,
    state: int,
) -> float:
    """P(target=state | do(intervention), evidence) on the mutilated model."""
    target = dag.node(target).id
    overlap = set(evidence) & set(intervention)
    if overlap:
        raise CausalError(f"evidence and intervention overlap on {sorted(overlap)}")
    node = dag.node(target)
    state = int(state)
    if not 0 <= state < node.k:
        raise CausalError(f"target state {state} out of range for {target!r} (K={node.k})")
    cut_dag, cut_cpts = do_transform(dag, cpts, intervention)
    table = posterior(cut_dag, cut_cpts, evidence, [target])
    return table[target][state]


@dataclass(frozen=True)
class RankEntry:
    node_id: str
    state_index: int
    result: float
    delta: float


@dataclass(frozen=True)
class InterventionRanking:
    baseline: float
    entries: tuple[RankEntry, ...]


def rank_interventions(
    dag: RiskDag,
    cpts: Mapping[str, Cpt],
    evidence: EvidenceSet,
    target: str,
    state: int,
    candidates: Iterable[str] | None = None,
) -> InterventionRanking:
    """Try do(candidate=s) for every state of every candidate, ranked by the
    resulting target probability (ascending: best harm reduction first).

    Evidence on the intervened node is dropped for that candidate: setting a
    state supersedes having observed it.
    """
    target = dag.node(target).id
    if candidates is None:
        cand_ids = sorted(nid for nid, n in dag.nodes.items() if n.activation)
    else:
        cand_ids = sorted(_as_ids(dag, candidates))
    baseline = interventional_posterior(dag, cpts, evidence, {}, target, state)
    entries: list[RankEntry] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModelWarning)
        for cand in cand_ids:
            ev = {k: v for k, v in evidence.items() if k != cand}
            for s in range(dag.node(cand).k):
                result = interventional_posterior(dag, cpts, ev, {cand: s}, target, state)
                entries.append(RankEntry(cand, s, result, result - baseline))
    entries.sort(key=lambda e: (e.result, e.node_id, e.state_index))
    return InterventionRanking(baseline, tuple(entries))
