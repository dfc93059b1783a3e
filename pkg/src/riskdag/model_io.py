"""Canonical XML persistence for the full model document.

Deterministic output (topological-then-id node order, sorted CPT rows,
17-significant-digit decimal probabilities) so exports are byte-stable and
round trips are bit-exact. Schema documented in docs/xml-schema.md.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from xml.dom import minidom

from .bowtie import (
    BowtieModel,
    EscalationEvent,
    Gate,
    MitigativeBarrier,
    PreventiveBarrier,
)
from .cpt import Cpt, CptRow, RowStatus
from .estimators import EstimatorConfig, QuestionOverride
from .graph import CycleError, Endpoint, NodeKind, NotifyTarget, RiskDag, RiskNode
from .questions import Answer, AnswerLedger, format_timestamp, parse_timestamp

SCHEMA_VERSION = "1"
FILE_EXTENSION = ".riskdag.xml"
MEDIA_TYPE = "application/vnd.riskdag+xml"


class ModelIOError(Exception):
    pass


@dataclass
class ModelDocument:
    dag: RiskDag = field(default_factory=RiskDag)
    cpts: dict[str, Cpt] = field(default_factory=dict)
    config: EstimatorConfig = field(default_factory=EstimatorConfig)
    overrides: dict[str, QuestionOverride] = field(default_factory=dict)
    answers: AnswerLedger = field(default_factory=AnswerLedger)
    bowtie: BowtieModel | None = None
    ui_positions: dict[str, tuple[float, float]] = field(default_factory=dict)
    version: str = SCHEMA_VERSION


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _node_order(dag: RiskDag) -> list[str]:
    try:
        return dag.topological_order()
    except CycleError:
        # cyclic drafts still export (they carry findings)
        return sorted(dag.nodes)


def _bowtie_xml(bowtie: BowtieModel, root: ET.Element) -> None:
    el = ET.SubElement(root, "bowtie")
    ET.SubElement(el, "top-event", name=bowtie.top_event)
    for t in bowtie.threats:
        ET.SubElement(el, "threat", name=t)
    for g in bowtie.gates:
        gate = ET.SubElement(el, "gate", name=g.name, kind=g.kind)
        for inp in g.inputs:
            ET.SubElement(gate, "input", name=inp)
    for b in bowtie.preventive_barriers:
        bar = ET.SubElement(el, "preventive-barrier", name=b.name)
        for guard in b.guards:
            ET.SubElement(bar, "guards", name=guard)
    for e in bowtie.escalation_events:
        ev = ET.SubElement(el, "escalation-event", name=e.name)
        for s in e.states:
            ET.SubElement(ev, "state").text = s
    for b in bowtie.mitigative_barriers:
        bar = ET.SubElement(el, "mitigative-barrier", name=b.name)
        for guard in b.guards:
            ET.SubElement(bar, "guards", name=guard)
    for c in bowtie.consequences:
        ET.SubElement(el, "consequence", name=c)


def export_xml(document: ModelDocument) -> bytes:
    root = ET.Element("risk-model", version=document.version)
    if document.bowtie is not None:
        _bowtie_xml(document.bowtie, root)

    order = _node_order(document.dag)
    dag_el = ET.SubElement(root, "dag")
    for nid in order:
        node = document.dag.nodes[nid]
        node_el = ET.SubElement(
            dag_el,
            "node",
            id=node.id,
            name=node.name,
            kind=node.kind.value,
            activation="true" if node.activation else "false",
        )
        for s in node.states:
            ET.SubElement(node_el, "state").text = s
        if node.evidence_source is not None:
            ET.SubElement(
                node_el, "evidence-source", url=node.evidence_source.url, mode=node.evidence_source.mode
            )
        for t in node.notify_targets:
            ET.SubElement(node_el, "notify-target", url=t.url, threshold=_fmt(t.threshold))
    for nid in order:
        for idx, parent in enumerate(document.dag.parents(nid)):
            ET.SubElement(dag_el, "edge", parent=parent, child=nid, order=str(idx))

    cpts_el = ET.SubElement(root, "cpts")
    for nid in sorted(document.cpts):
        cpt = document.cpts[nid]
        cpt_el = ET.SubElement(
            cpts_el,
            "cpt",
            node=cpt.node_id,
            parents=",".join(cpt.parent_ids),
            cards=",".join(str(c) for c in cpt.parent_cards),
            k=str(cpt.k),
        )
        for cfg in sorted(cpt.rows):
            row = cpt.rows[cfg]
            row_el = ET.SubElement(
                cpt_el,
                "row",
                config=",".join(str(i) for i in cfg),
                status=row.status.value,
            )
            if row.values is not None:
                for v in row.values:
                    ET.SubElement(row_el, "p").text = _fmt(v)

    capture_el = ET.SubElement(root, "capture")
    cfg_attrs = {
        "estimator": document.config.estimator,
        "p0": _fmt(document.config.p0),
        "k-prior": _fmt(document.config.k_prior),
        "kappa": _fmt(document.config.kappa),
    }
    if document.config.half_life is not None:
        cfg_attrs["half-life"] = _fmt(document.config.half_life)
    ET.SubElement(capture_el, "config", **cfg_attrs)
    for qid in sorted(document.overrides):
        ov = document.overrides[qid]
        attrs = {"question": qid}
        if ov.prior is not None:
            attrs["p0"] = _fmt(ov.prior[0])
            attrs["k-prior"] = _fmt(ov.prior[1])
        if ov.kappa is not None:
            attrs["kappa"] = _fmt(ov.kappa)
        if ov.half_life is not None:
            attrs["half-life"] = _fmt(ov.half_life)
        ET.SubElement(capture_el, "override", **attrs)
    answers_el = ET.SubElement(capture_el, "answers")
    for a in document.answers:
        ET.SubElement(
            answers_el,
            "answer",
            question=a.question_id,
            value=_fmt(a.value),
            timestamp=format_timestamp(a.timestamp),
            respondent=a.respondent,
            origin=a.origin,
        )

    if document.ui_positions:
        ui_el = ET.SubElement(root, "ui")
        for nid in sorted(document.ui_positions):
            x, y = document.ui_positions[nid]
            ET.SubElement(ui_el, "position", node=nid, x=_fmt(x), y=_fmt(y))

    pretty = minidom.parseString(ET.tostring(root, encoding="unicode")).toprettyxml(
        indent="  ", encoding="utf-8"
    )
    return pretty


def _attr(el: ET.Element, name: str, context: str) -> str:
    value = el.get(name)
    if value is None:
        raise ModelIOError(f"element <{el.tag}> in {context} lacks attribute {name!r}")
    return value


def _parse_probability(text: str, context: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ModelIOError(f"probability {text!r} in {context} is not a number") from None
    if not 0.0 <= value <= 1.0:
        raise ModelIOError(f"probability {text!r} in {context} is out of range [0, 1]")
    return value


def _import_bowtie(el: ET.Element) -> BowtieModel:
    top = el.find("top-event")
    if top is None:
        raise ModelIOError("bowtie section lacks a <top-event>")
    return BowtieModel(
        top_event=_attr(top, "name", "bowtie"),
        threats=tuple(_attr(t, "name", "bowtie") for t in el.findall("threat")),
        gates=tuple(
            Gate(
                _attr(g, "name", "bowtie gate"),
                _attr(g, "kind", "bowtie gate"),
                tuple(_attr(i, "name", "gate input") for i in g.findall("input")),
            )
            for g in el.findall("gate")
        ),
        preventive_barriers=tuple(
            PreventiveBarrier(
                _attr(b, "name", "preventive barrier"),
                tuple(_attr(g, "name", "barrier guard") for g in b.findall("guards")),
            )
            for b in el.findall("preventive-barrier")
        ),
        escalation_events=tuple(
            EscalationEvent(
                _attr(e, "name", "escalation event"),
                tuple(s.text or "" for s in e.findall("state")) or ("false", "true"),
            )
            for e in el.findall("escalation-event")
        ),
        mitigative_barriers=tuple(
            MitigativeBarrier(
                _attr(b, "name", "mitigative barrier"),
                tuple(_attr(g, "name", "barrier guard") for g in b.findall("guards")),
            )
            for b in el.findall("mitigative-barrier")
        ),
        consequences=tuple(_attr(c, "name", "consequence") for c in el.findall("consequence")),
    )


def import_xml(data: bytes | str) -> ModelDocument:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ModelIOError(f"malformed XML: {exc}") from exc
    if root.tag != "risk-model":
        raise ModelIOError(f"expected <risk-model> root, got <{root.tag}>")
    version = root.get("version")
    if version != SCHEMA_VERSION:
        raise ModelIOError(f"unsupported schema version {version!r}; this build reads version {SCHEMA_VERSION!r}")

    bowtie_el = root.find("bowtie")
    bowtie = _import_bowtie(bowtie_el) if bowtie_el is not None else None

    nodes: dict[str, RiskNode] = {}
    parents: dict[str, list[tuple[int, str]]] = {}
    dag_el = root.find("dag")
    if dag_el is not None:
        for node_el in dag_el.findall("node"):
            nid = _attr(node_el, "id", "dag node")
            context = f"node {nid!r}"
            try:
                kind = NodeKind(_attr(node_el, "kind", context))
            except ValueError:
                raise ModelIOError(f"{context}: unknown kind {node_el.get('kind')!r}") from None
            source_el = node_el.find("evidence-source")
            source = (
                Endpoint(_attr(source_el, "url", context), source_el.get("mode", "push"))
                if source_el is not None
                else None
            )
            targets = tuple(
                NotifyTarget(
                    _attr(t, "url", context),
                    float(t.get("threshold", "0.1")),
                )
                for t in node_el.findall("notify-target")
            )
            if nid in nodes:
                raise ModelIOError(f"duplicate node id {nid!r} in dag section")
            nodes[nid] = RiskNode(
                id=nid,
                name=_attr(node_el, "name", context),
                kind=kind,
                states=tuple(s.text or "" for s in node_el.findall("state")),
                activation=_attr(node_el, "activation", context) == "true",
                evidence_source=source,
                notify_targets=targets,
            )
            parents[nid] = []
        for edge_el in dag_el.findall("edge"):
            parent = _attr(edge_el, "parent", "edge")
            child = _attr(edge_el, "child", "edge")
            order = int(_attr(edge_el, "order", "edge"))
            if child not in parents:
                raise ModelIOError(f"edge references unknown child {child!r}")
            if parent not in nodes:
                raise ModelIOError(f"edge references unknown parent {parent!r}")
            parents[child].append((order, parent))
    dag = RiskDag(nodes, {nid: tuple(p for _, p in sorted(ps)) for nid, ps in parents.items()})

    cpts: dict[str, Cpt] = {}
    cpts_el = root.find("cpts")
    if cpts_el is not None:
        for cpt_el in cpts_el.findall("cpt"):
            nid = _attr(cpt_el, "node", "cpt")
            context = f"cpt of node {nid!r}"
            parents_attr = _attr(cpt_el, "parents", context)
            cards_attr = _attr(cpt_el, "cards", context)
            parent_ids = tuple(p for p in parents_attr.split(",") if p)
            cards = tuple(int(c) for c in cards_attr.split(",") if c)
            cpt = Cpt(nid, parent_ids, cards, int(_attr(cpt_el, "k", context)))
            for row_el in cpt_el.findall("row"):
                cfg_attr = _attr(row_el, "config", context)
                cfg = tuple(int(i) for i in cfg_attr.split(",") if i != "")
                row_context = f"{context} row [{cfg_attr}]"
                try:
                    status = RowStatus(_attr(row_el, "status", row_context))
                except ValueError:
                    raise ModelIOError(f"{row_context}: unknown status {row_el.get('status')!r}") from None
                probs = [
                    _parse_probability(p.text or "", row_context) for p in row_el.findall("p")
                ]
                cpt.restore_row(cfg, CptRow(tuple(probs) if probs else None, status))
            cpts[nid] = cpt

    config = EstimatorConfig()
    overrides: dict[str, QuestionOverride] = {}
    answers = AnswerLedger()
    capture_el = root.find("capture")
    if capture_el is not None:
        cfg_el = capture_el.find("config")
        if cfg_el is not None:
            half_life = cfg_el.get("half-life")
            config = EstimatorConfig(
                estimator=cfg_el.get("estimator", "equal-average"),
                p0=float(cfg_el.get("p0", "0.5")),
                k_prior=float(cfg_el.get("k-prior", "0")),
                kappa=float(cfg_el.get("kappa", "8")),
                half_life=float(half_life) if half_life is not None else None,
            )
        for ov_el in capture_el.findall("override"):
            qid = _attr(ov_el, "question", "override")
            p0, k_prior = ov_el.get("p0"), ov_el.get("k-prior")
            if (p0 is None) != (k_prior is None):
                raise ModelIOError(f"override for {qid!r} must set p0 and k-prior together")
            kappa = ov_el.get("kappa")
            half_life = ov_el.get("half-life")
            overrides[qid] = QuestionOverride(
                prior=(float(p0), float(k_prior)) if p0 is not None else None,
                kappa=float(kappa) if kappa is not None else None,
                half_life=float(half_life) if half_life is not None else None,
            )
        answers_el = capture_el.find("answers")
        if answers_el is not None:
            for a_el in answers_el.findall("answer"):
                context = f"answer for {a_el.get('question')!r}"
                answers.append(
                    Answer(
                        question_id=_attr(a_el, "question", "answer"),
                        value=_parse_probability(_attr(a_el, "value", context), context),
                        timestamp=parse_timestamp(_attr(a_el, "timestamp", context)),
                        respondent=a_el.get("respondent", ""),
                        origin=a_el.get("origin", "manual"),
                    )
                )

    ui_positions: dict[str, tuple[float, float]] = {}
    ui_el = root.find("ui")
    if ui_el is not None:
        for pos_el in ui_el.findall("position"):
            ui_positions[_attr(pos_el, "node", "ui position")] = (
                float(_attr(pos_el, "x", "ui position")),
                float(_attr(pos_el, "y", "ui position")),
            )

    return ModelDocument(
        dag=dag,
        cpts=cpts,
        config=config,
        overrides=overrides,
        answers=answers,
        bowtie=bowtie,
        ui_positions=ui_positions,
        version=version,
    )
