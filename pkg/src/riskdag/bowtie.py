"""Bowtie artifact -> runtime DAG.

Threats, gates, barriers, escalation events, and consequence end states map
onto typed DAG nodes; the consequence node gains an explicit "safe" state at
index 0 so normal operation is a first-class outcome. Gate nodes receive
deterministic CPTs, everything else a uniform unelicited placeholder.
"""

from __future__ import annotations

import itertools
import re
import warnings
from dataclasses import dataclass

from .cpt import Cpt, CptError
from .graph import NodeKind, RiskDag, RiskNode, SAFE_STATE


class BowtieError(Exception):
    """Malformed Bowtie artifact."""


class ModelWarning(UserWarning):
    """Non-fatal modeling smell (e.g. activation flag on a cause node)."""


@dataclass(frozen=True)
class Gate:
    name: str
    kind: str  # "AND" | "OR"
    inputs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.kind not in ("AND", "OR"):
            raise BowtieError(f"gate {self.name!r} kind must be AND or OR, got {self.kind!r}")
        if not self.inputs:
            raise BowtieError(f"gate {self.name!r} has no inputs")


@dataclass(frozen=True)
class PreventiveBarrier:
    name: str
    # Threat paths this barrier guards; wiring lands on the top event either
    # way (gates are deterministic, so the inhibiting edge cannot enter them).
    guards: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "guards", tuple(self.guards))


@dataclass(frozen=True)
class MitigativeBarrier:
    name: str
    # Escalation events this barrier guards; empty = the consequence stage.
    guards: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "guards", tuple(self.guards))


@dataclass(frozen=True)
class EscalationEvent:
    name: str
    states: tuple[str, ...] = ("false", "true")

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))


@dataclass(frozen=True)
class BowtieModel:
    top_event: str
    threats: tuple[str, ...] = ()
    gates: tuple[Gate, ...] = ()
    preventive_barriers: tuple[PreventiveBarrier, ...] = ()
    escalation_events: tuple[EscalationEvent, ...] = ()
    mitigative_barriers: tuple[MitigativeBarrier, ...] = ()
    consequences: tuple[str, ...] = ()

    def __post_init__(self):
        for f in ("threats", "gates", "preventive_barriers", "escalation_events",
                  "mitigative_barriers", "consequences"):
            object.__setattr__(self, f, tuple(getattr(self, f)))


@dataclass(frozen=True)
class TransformReport:
    node_count: int
    edge_count: int
    mappings: tuple[tuple[str, str], ...]  # (bowtie element, dag node id)
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class TransformResult:
    dag: RiskDag
    cpts: dict[str, Cpt]
    report: TransformReport

    def __iter__(self):
        # unpacks as the (dag, report) pair; cpts stay on the named field
        return iter((self.dag, self.report))


BINARY = ("false", "true")
BARRIER_STATES = ("works", "fails")
CONSEQUENCE_NODE_NAME = "Consequences"


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    if not slug:
        raise BowtieError(f"element name {name!r} produces an empty id")
    return slug


def _validate(bowtie: BowtieModel) -> None:
    if not bowtie.top_event:
        raise BowtieError("a bowtie needs exactly one top event")
    if not bowtie.consequences:
        raise BowtieError("a bowtie needs at least one consequence end state")
    if len(set(bowtie.consequences)) != len(bowtie.consequences):
        raise BowtieError("consequence names must be unique")
    if SAFE_STATE in bowtie.consequences:
        raise BowtieError(f"{SAFE_STATE!r} is reserved for the injected normal state")

    names = (
        [bowtie.top_event]
        + list(bowtie.threats)
        + [g.name for g in bowtie.gates]
        + [b.name for b in bowtie.preventive_barriers]
        + [e.name for e in bowtie.escalation_events]
        + [b.name for b in bowtie.mitigative_barriers]
    )
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise BowtieError(f"duplicate element names: {sorted(dupes)}")
    slugs = [slugify(n) for n in names] + [slugify(CONSEQUENCE_NODE_NAME)]
    slug_dupes = {s for s in slugs if slugs.count(s) > 1}
    if slug_dupes:
        raise BowtieError(f"element names collide after id derivation: {sorted(slug_dupes)}")

    declared = set(bowtie.threats) | {g.name for g in bowtie.gates}
    for g in bowtie.gates:
        for inp in g.inputs:
            if inp not in declared:
                raise BowtieError(f"gate {g.name!r} input {inp!r} is not a declared threat or gate")
        if g.name in g.inputs:
            raise BowtieError(f"gate {g.name!r} feeds itself")

    escalation_names = {e.name for e in bowtie.escalation_events}
    for b in bowtie.mitigative_barriers:
        for guard in b.guards:
            if guard not in escalation_names:
                raise BowtieError(
                    f"mitigative barrier {b.name!r} guards unknown escalation event {guard!r}"
                )
    threat_names = set(bowtie.threats)
    for b in bowtie.preventive_barriers:
        for guard in b.guards:
            if guard not in threat_names:
                raise BowtieError(f"preventive barrier {b.name!r} guards unknown threat {guard!r}")


def synthesize_gate_cpt(
    kind: str | NodeKind,
    parent_count: int,
    node_id: str = "gate",
    parent_ids: tuple[str, ...] | None = None,
) -> Cpt:
    """Deterministic 0/1 CPT for an AND/OR gate over binary parents."""
    if isinstance(kind, NodeKind):
        kind = {"gate-and": "AND", "gate-or": "OR"}.get(kind.value, kind.value)
    if kind not in ("AND", "OR"):
        raise CptError(f"gate kind must be AND or OR, got {kind!r}")
    if parent_count < 1:
        raise CptError("a gate needs at least one parent")
    parents = parent_ids if parent_ids is not None else tuple(f"in{i}" for i in range(parent_count))
    cpt = Cpt(node_id, parents, (2,) * parent_count, 2)
    combine = all if kind == "AND" else any
    for cfg in itertools.product((0, 1), repeat=parent_count):
        fires = combine(bool(s) for s in cfg)
        cpt.set_row(cfg, (0.0, 1.0) if fires else (1.0, 0.0))
    return cpt


def gate_cpt_for(dag: RiskDag, node_id: str) -> Cpt:
    node = dag.node(node_id)
    if not node.kind.is_gate:
        raise CptError(f"node {node_id!r} is not a gate")
    parents = dag.parents(node_id)
    for p in parents:
        if dag.node(p).k != 2:
            raise CptError(f"gate {node_id!r} parent {p!r} is not binary")
    kind = "AND" if node.kind is NodeKind.GATE_AND else "OR"
    return synthesize_gate_cpt(kind, len(parents), node_id, parents)


def mark_activation(dag: RiskDag, node_id: str, flag: bool) -> RiskDag:
    """Toggle the intervention-capable marker. Orthogonal to evidence_source:
    a node may be both observed and settable."""
    node = dag.node(node_id)
    if flag and node.kind is not NodeKind.BARRIER:
        warnings.warn(
            f"activation flag on {node.kind.value} node {node_id!r} is unusual",
            ModelWarning,
            stacklevel=2,
        )
    return dag.set_activation(node_id, flag)


def transform(bowtie: BowtieModel) -> TransformResult:
    """Build the runtime DAG, gate CPTs, and uniform placeholders."""
    _validate(bowtie)
    report_warnings: list[str] = []
    mappings: list[tuple[str, str]] = []
    dag = RiskDag()

    ids: dict[str, str] = {}

    def put(element: str, name: str, kind: NodeKind, states: tuple[str, ...], activation=False):
        nonlocal dag
        nid = slugify(name)
        dag = dag.add_node(RiskNode(nid, name, kind, states, activation=activation))
        ids[name] = nid
        mappings.append((element, nid))
        return nid

    for t in bowtie.threats:
        put(f"threat:{t}", t, NodeKind.CAUSE, BINARY)
    for g in bowtie.gates:
        kind = NodeKind.GATE_AND if g.kind == "AND" else NodeKind.GATE_OR
        put(f"gate:{g.name}", g.name, kind, BINARY)
    for b in bowtie.preventive_barriers:
        put(f"preventive-barrier:{b.name}", b.name, NodeKind.BARRIER, BARRIER_STATES, activation=True)
    top_id = put(f"top-event:{bowtie.top_event}", bowtie.top_event, NodeKind.TOP_EVENT, BINARY)
    for e in bowtie.escalation_events:
        put(f"escalation-event:{e.name}", e.name, NodeKind.EVENT, e.states)
    for b in bowtie.mitigative_barriers:
        put(f"mitigative-barrier:{b.name}", b.name, NodeKind.BARRIER, BARRIER_STATES, activation=True)
    consequence_id = put(
        "consequences:" + "|".join(bowtie.consequences),
        CONSEQUENCE_NODE_NAME,
        NodeKind.CONSEQUENCE,
        (SAFE_STATE,) + bowtie.consequences,
    )

    gated: set[str] = set()
    for g in bowtie.gates:
        gated.update(g.inputs)
    try:
        for g in bowtie.gates:
            for inp in g.inputs:
                dag = dag.add_edge(ids[inp], ids[g.name])
        for t in bowtie.threats:
            if t not in gated:
                dag = dag.add_edge(ids[t], top_id)
        for g in bowtie.gates:
            if g.name not in gated:
                dag = dag.add_edge(ids[g.name], top_id)
        for b in bowtie.preventive_barriers:
            dag = dag.add_edge(ids[b.name], top_id)
            if b.guards:
                report_warnings.append(
                    f"preventive barrier {b.name!r} guards {list(b.guards)}; wired to the top event"
                )

        chain_prev = top_id
        for e in bowtie.escalation_events:
            dag = dag.add_edge(chain_prev, ids[e.name])
            chain_prev = ids[e.name]
        dag = dag.add_edge(chain_prev, consequence_id)

        for b in bowtie.mitigative_barriers:
            if b.guards:
                for guard in b.guards:
                    dag = dag.add_edge(ids[b.name], ids[guard])
                if len(b.guards) > 1:
                    report_warnings.append(
                        f"mitigative barrier {b.name!r} guards multiple events: {list(b.guards)}"
                    )
            else:
                dag = dag.add_edge(ids[b.name], consequence_id)
    except Exception as exc:  # cycle among gates etc.
        raise BowtieError(f"bowtie wiring failed: {exc}") from exc

    cpts: dict[str, Cpt] = {}
    for nid, node in dag.nodes.items():
        if node.kind.is_gate:
            cpts[nid] = gate_cpt_for(dag, nid)
        else:
            cpt = Cpt.for_node(dag, nid)
            cpt.fill_placeholders()
            cpts[nid] = cpt

    report = TransformReport(
        node_count=len(dag),
        edge_count=len(dag.edges),
        mappings=tuple(mappings),
        warnings=tuple(report_warnings),
    )
    return TransformResult(dag, cpts, report)
