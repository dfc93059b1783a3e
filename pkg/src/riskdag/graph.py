"""Typed DAG model of a risk network.

Nodes carry discrete state spaces, a kind (cause, barrier, gate, ...), an
activation flag marking legitimate intervention targets, and optional runtime
integration descriptors (evidence sources, notify targets). The graph value is
immutable: every mutation returns a new ``RiskDag``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping

PARENT_SOFT_LIMIT = 5


class GraphError(Exception):
    """Structural violation (duplicate id, unknown node, bad states...)."""


class CycleError(GraphError):
    """Raised when an edit would close a directed cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("edge would create cycle: " + " -> ".join(self.cycle))


class UnknownNodeError(GraphError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"unknown node: {node_id!r}")


class NodeKind(str, Enum):
    CAUSE = "cause"
    CONTEXT = "context"
    GATE_AND = "gate-and"
    GATE_OR = "gate-or"
    TOP_EVENT = "top-event"
    BARRIER = "barrier"
    EVENT = "event"
    CONSEQUENCE = "consequence"

    @property
    def is_gate(self) -> bool:
        return self in (NodeKind.GATE_AND, NodeKind.GATE_OR)


SAFE_STATE = "safe"


@dataclass(frozen=True)
class Endpoint:
    """Evidence-source descriptor: where runtime state for a node comes from."""

    url: str
    mode: str = "push"  # "poll" or "push"

    def __post_init__(self):
        if self.mode not in ("poll", "push"):
            raise ValueError(f"endpoint mode must be poll or push, got {self.mode!r}")


@dataclass(frozen=True)
class NotifyTarget:
    """Outbound notification hook; fires when the node's posterior moves."""

    url: str
    threshold: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("notify threshold must be in (0, 1]")


@dataclass(frozen=True)
class RiskNode:
    id: str
    name: str
    kind: NodeKind
    states: tuple[str, ...]
    activation: bool = False
    evidence_source: Endpoint | None = None
    notify_targets: tuple[NotifyTarget, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "notify_targets", tuple(self.notify_targets))
        if len(self.states) < 2:
            raise GraphError(f"node {self.id!r} needs at least 2 states")
        if any(not s for s in self.states):
            raise GraphError(f"node {self.id!r} has an empty state label")
        if len(set(self.states)) != len(self.states):
            raise GraphError(f"node {self.id!r} has duplicate state labels")

    @property
    def k(self) -> int:
        return len(self.states)

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise GraphError(
                f"node {self.id!r} has no state {label!r} (states: {list(self.states)})"
            ) from None


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    nodes: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()
    warnings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        """No error findings; the structure is runtime-ready."""
        return not self.findings


class RiskDag:
    """Immutable DAG of ``RiskNode``s with explicit, persisted parent order.

    Parent order defines CPT row enumeration and question ids, so it is part
    of the model, not an implementation detail.
    """

    __slots__ = ("_nodes", "_parents")

    def __init__(
        self,
        nodes: Mapping[str, RiskNode] | None = None,
        parents: Mapping[str, tuple[str, ...]] | None = None,
    ):
        self._nodes: dict[str, RiskNode] = dict(nodes or {})
        self._parents: dict[str, tuple[str, ...]] = {
            nid: tuple(parents.get(nid, ())) if parents else () for nid in self._nodes
        }

    # -- read surface ------------------------------------------------------

    @property
    def nodes(self) -> Mapping[str, RiskNode]:
        return MappingProxyType(self._nodes)

    def node(self, node_id: str) -> RiskNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RiskDag):
            return NotImplemented
        return self._nodes == other._nodes and self._parents == other._parents

    def parents(self, node_id: str) -> tuple[str, ...]:
        self.node(node_id)
        return self._parents[node_id]

    def children(self, node_id: str) -> tuple[str, ...]:
        self.node(node_id)
        return tuple(c for c in self._nodes if node_id in self._parents[c])

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(
            (p, c) for c in self._nodes for p in self._parents[c]
        )

    def resolve(self, ref: str) -> str:
        """Resolve a node reference by id, falling back to unique name."""
        if ref in self._nodes:
            return ref
        hits = [nid for nid, n in self._nodes.items() if n.name == ref]
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise GraphError(f"node name {ref!r} is ambiguous: {hits}")
        raise UnknownNodeError(ref)

    # -- mutation (returns new graphs) --------------------------------------

    def _copy(self) -> "RiskDag":
        g = RiskDag.__new__(RiskDag)
        g._nodes = dict(self._nodes)
        g._parents = dict(self._parents)
        return g

    def add_node(self, node: RiskNode) -> "RiskDag":
        if node.id in self._nodes:
            raise GraphError(f"duplicate node id: {node.id!r}")
        if node.kind is NodeKind.CONSEQUENCE and SAFE_STATE not in node.states:
            raise GraphError(
                f"consequence node {node.id!r} must carry the {SAFE_STATE!r} state"
            )
        g = self._copy()
        g._nodes[node.id] = node
        g._parents[node.id] = ()
        return g

    def replace_node(self, node: RiskNode) -> "RiskDag":
        """Swap a node's payload (name, states, flags) keeping its edges."""
        self.node(node.id)
        g = self._copy()
        g._nodes[node.id] = node
        return g

    def rename(self, node_id: str, name: str) -> "RiskDag":
        return self.replace_node(replace(self.node(node_id), name=name))

    def set_states(self, node_id: str, states: Iterable[str]) -> "RiskDag":
        """Replace a node's state list.

        Dropping "safe" from a consequence node is permitted here; validate()
        reports it, matching the interactive edit-then-check workflow.
        """
        return self.replace_node(replace(self.node(node_id), states=tuple(states)))

    def set_activation(self, node_id: str, flag: bool) -> "RiskDag":
        return self.replace_node(replace(self.node(node_id), activation=flag))

    def add_edge(self, parent: str, child: str) -> "RiskDag":
        self.node(parent)
        self.node(child)
        if parent == child:
            raise CycleError([parent, parent])
        if parent in self._parents[child]:
            raise GraphError(f"duplicate edge {parent!r} -> {child!r}")
        path = self._directed_path(child, parent)
        if path is not None:
            raise CycleError(path + [child])
        g = self._copy()
        g._parents[child] = self._parents[child] + (parent,)
        return g

    def remove_edge(self, parent: str, child: str) -> "RiskDag":
        self.node(parent)
        self.node(child)
        if parent not in self._parents[child]:
            raise GraphError(f"no edge {parent!r} -> {child!r}")
        g = self._copy()
        g._parents[child] = tuple(p for p in self._parents[child] if p != parent)
        return g

    def remove_node(self, node_id: str) -> "RiskDag":
        self.node(node_id)
        g = self._copy()
        del g._nodes[node_id]
        del g._parents[node_id]
        for c, ps in list(g._parents.items()):
            if node_id in ps:
                g._parents[c] = tuple(p for p in ps if p != node_id)
        return g

    def has_directed_path(self, src: str, dst: str) -> bool:
        return self._directed_path(self.node(src).id, self.node(dst).id) is not None

    def _directed_path(self, src: str, dst: str) -> list[str] | None:
        """Shortest directed path src -> dst, or None."""
        if src == dst:
            return [src]
        prev: dict[str, str] = {}
        queue = deque([src])
        seen = {src}
        while queue:
            cur = queue.popleft()
            for nxt in self.children(cur):
                if nxt in seen:
                    continue
                prev[nxt] = cur
                if nxt == dst:
                    path = [dst]
                    while path[-1] != src:
                        path.append(prev[path[-1]])
                    return path[::-1]
                seen.add(nxt)
                queue.append(nxt)
        return None

    # -- structure queries ---------------------------------------------------

    def topological_order(self) -> list[str]:
        """Deterministic topological order (ready nodes taken in id order)."""
        indeg = {nid: len(ps) for nid, ps in self._parents.items()}
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        order: list[str] = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            changed = False
            for c in self.children(nid):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    changed = True
            if changed:
                ready.sort()
        if len(order) != len(self._nodes):
            leftover = [n for n in self._nodes if n not in set(order)]
            raise CycleError(self._find_cycle(leftover) or leftover[:1] * 2)
        return order

    def _find_cycle(self, within: list[str]) -> list[str] | None:
        pool = set(within)
        visited: set[str] = set()
        path: list[str] = []
        on_path: set[str] = set()

        def dfs(u: str) -> list[str] | None:
            visited.add(u)
            path.append(u)
            on_path.add(u)
            for v in sorted(c for c in self.children(u) if c in pool):
                if v in on_path:
                    return path[path.index(v):] + [v]
                if v not in visited:
                    found = dfs(v)
                    if found:
                        return found
            path.pop()
            on_path.discard(u)
            return None

        for start in within:
            if start not in visited:
                found = dfs(start)
                if found:
                    return found
        return None

    def ancestors(self, node_id: str) -> set[str]:
        self.node(node_id)
        out: set[str] = set()
        queue = deque(self._parents[node_id])
        while queue:
            cur = queue.popleft()
            if cur in out:
                continue
            out.add(cur)
            queue.extend(self._parents[cur])
        return out

    def descendants(self, node_id: str) -> set[str]:
        self.node(node_id)
        out: set[str] = set()
        queue = deque(self.children(node_id))
        while queue:
            cur = queue.popleft()
            if cur in out:
                continue
            out.add(cur)
            queue.extend(self.children(cur))
        return out

    def extract_subgraph(self, ids: Iterable[str]) -> "RiskDag":
        """Induced subgraph plus boundary parents.

        Every requested node keeps its full ordered parent list so its CPT
        stays well-defined; boundary parents come along as roots.
        """
        wanted = [self.node(i).id for i in ids]
        keep: list[str] = []
        for nid in wanted:
            if nid not in keep:
                keep.append(nid)
            for p in self._parents[nid]:
                if p not in keep:
                    keep.append(p)
        keep_set = set(keep)
        wanted_set = set(wanted)
        nodes = {nid: self._nodes[nid] for nid in self._nodes if nid in keep_set}
        parents = {}
        for nid in nodes:
            if nid in wanted_set:
                parents[nid] = self._parents[nid]
            else:
                parents[nid] = tuple(p for p in self._parents[nid] if p in wanted_set)
        return RiskDag(nodes, parents)

    # -- validation -----------------------------------------------------------

    def validate(self) -> ValidationReport:
        findings: list[Finding] = []
        warnings: list[Finding] = []

        for nid, ps in self._parents.items():
            for p in ps:
                if p not in self._nodes:
                    findings.append(
                        Finding("dangling-edge", f"edge {p!r} -> {nid!r} references a missing node", (p, nid))
                    )
            if len(ps) > PARENT_SOFT_LIMIT:
                warnings.append(
                    Finding(
                        "parent-count",
                        f"node {nid!r} has {len(ps)} parents; CPT rows grow exponentially",
                        (nid,),
                    )
                )

        for nid, node in self._nodes.items():
            if node.k < 2:
                findings.append(Finding("too-few-states", f"node {nid!r} has fewer than 2 states", (nid,)))
            if node.kind is NodeKind.CONSEQUENCE and SAFE_STATE not in node.states:
                findings.append(
                    Finding("missing-safe", f"consequence node {nid!r} lacks the {SAFE_STATE!r} state", (nid,))
                )

        remaining = dict(self._parents)
        indeg = {nid: sum(1 for p in ps if p in self._nodes) for nid, ps in remaining.items()}
        queue = deque(nid for nid, d in indeg.items() if d == 0)
        seen = 0
        while queue:
            cur = queue.popleft()
            seen += 1
            for c in self.children(cur):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if seen != len(self._nodes):
            leftover = [nid for nid, d in indeg.items() if d > 0]
            pool = list(leftover)
            while pool:
                cyc = self._find_cycle(pool)
                if not cyc:
                    break
                findings.append(
                    Finding("cycle", "cycle: " + " -> ".join(cyc), tuple(dict.fromkeys(cyc)))
                )
                pool = [n for n in pool if n not in set(cyc)]

        return ValidationReport(tuple(findings), tuple(warnings))


def validate(dag: RiskDag) -> ValidationReport:
    return dag.validate()
