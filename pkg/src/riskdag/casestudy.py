"""Bundled instant-payments gateway example.

A payments front end degrades under load after a faulty change; queue
saturation, latency, and retry behavior escalate toward an outcome node with
an explicit safe state. Ships as both a Bowtie artifact (for the transform)
and a fully parameterized runtime model (for inference, capture, and causal
demos), plus the two illustrative elicitation rounds.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from .bowtie import (
    BowtieModel,
    EscalationEvent,
    Gate,
    MitigativeBarrier,
    PreventiveBarrier,
)
from .cpt import Cpt
from .estimators import EstimatorConfig, QuestionOverride
from .graph import Endpoint, NodeKind, NotifyTarget, RiskDag, RiskNode
from .model_io import ModelDocument
from .questions import Answer, AnswerLedger, question_id

# Ranking shape under escalated evidence: each consequence-stage barrier
# multiplies the remaining severity when it works. Isolation caps blast
# radius hardest; shedding still helps; a late rollback only trims.
# Retry-storm state order is (none, sustained, local): "sustained" is asked
# explicitly during elicitation, so it cannot sit in the derived last slot.
SEVERITY_BY_STORM = {0: 0.03, 1: 1.00, 2: 0.40}  # none / sustained / local
SHEDDING_FACTOR = 0.55
ISOLATION_FACTOR = 0.40
ROLLBACK_FACTOR = 0.92
BENIGN_ROW = (0.97, 0.02, 0.008, 0.002)
WORST_ROW = (0.02, 0.18, 0.45, 0.35)

ROLLBACK_ANSWERS = (0.78, 0.81, 0.79, 0.84)
RETRY_STORM_ANSWERS = (0.20, 0.35, 0.62, 0.78)


def case_study_bowtie() -> BowtieModel:
    """The workshop-level Bowtie: 4 threats, 4 preventive barriers, 4
    escalation events, 5 mitigative barriers, 3 adverse end states."""
    return BowtieModel(
        top_event="Service Degradation Under Load",
        threats=(
            "Faulty Production Change",
            "Routing Misconfiguration",
            "Insufficient Rollout Validation",
            "Peak Operational Load",
        ),
        gates=(
            Gate("Change Hazard", "OR", ("Faulty Production Change", "Routing Misconfiguration")),
        ),
        preventive_barriers=(
            PreventiveBarrier("Config Routing Validation"),
            PreventiveBarrier("Pre-Deployment Tests"),
            PreventiveBarrier("Change Approval"),
            PreventiveBarrier("Canary Release"),
        ),
        escalation_events=(
            EscalationEvent("High Latency Phase"),
            EscalationEvent("Retry Storm Phase"),
            EscalationEvent("Partial Unavailability"),
            EscalationEvent("Complete Unavailability"),
        ),
        mitigative_barriers=(
            MitigativeBarrier("Automatic Rollback Measure", guards=("High Latency Phase",)),
            MitigativeBarrier("Traffic Shedding Measure", guards=("Retry Storm Phase",)),
            MitigativeBarrier("Queue Protection Measure", guards=("Partial Unavailability",)),
            MitigativeBarrier("Regional Isolation Measure", guards=("Complete Unavailability",)),
            MitigativeBarrier("Manual Failover"),
        ),
        consequences=("degraded service", "partial outage", "transaction loss"),
    )


def _binary(id_, name, kind, p_true, **kw) -> tuple[RiskNode, tuple[float, float]]:
    return RiskNode(id_, name, kind, ("false", "true"), **kw), (1.0 - p_true, p_true)


def _degradation_p(fc: int, rm: int, pl: int, vg: int, cr: int) -> float:
    """Noisy-OR style: causes push, load amplifies, working barriers damp."""
    damp = (0.35 if vg == 0 else 1.0) * (0.45 if cr == 0 else 1.0)
    amp = 1.25 if pl else 1.0
    s_fc = min(0.99, 0.80 * amp * damp) if fc else 0.0
    s_rm = min(0.99, 0.60 * amp * damp) if rm else 0.0
    s_pl = 0.15 if pl else 0.0
    return 1.0 - (1.0 - 0.01) * (1.0 - s_fc) * (1.0 - s_rm) * (1.0 - s_pl)


def _consequence_row(storm: int, shed: int, isolate: int, rollback: int) -> tuple[float, ...]:
    v = SEVERITY_BY_STORM[storm]
    v *= SHEDDING_FACTOR if shed == 0 else 1.0
    v *= ISOLATION_FACTOR if isolate == 0 else 1.0
    v *= ROLLBACK_FACTOR if rollback == 0 else 1.0
    return tuple((1.0 - v) * b + v * w for b, w in zip(BENIGN_ROW, WORST_ROW))


def case_study_dag() -> RiskDag:
    dag = RiskDag()
    barrier = NodeKind.BARRIER
    works_fails = ("works", "fails")

    dag = dag.add_node(RiskNode("faulty-change", "Faulty Change", NodeKind.CAUSE, ("false", "true")))
    dag = dag.add_node(
        RiskNode("routing-misconfiguration", "Routing Misconfiguration", NodeKind.CAUSE, ("false", "true"))
    )
    dag = dag.add_node(
        RiskNode(
            "peak-load-window",
            "Peak Load Window",
            NodeKind.CONTEXT,
            ("false", "true"),
            evidence_source=Endpoint("http://telemetry.local/load-window", "poll"),
        )
    )
    dag = dag.add_node(
        RiskNode("observability-degraded", "Observability Degraded", NodeKind.CONTEXT, ("false", "true"))
    )
    dag = dag.add_node(RiskNode("validation-gate", "Validation Gate", barrier, works_fails, activation=True))
    dag = dag.add_node(RiskNode("canary-rollout", "Canary Rollout", barrier, works_fails, activation=True))
    dag = dag.add_node(
        RiskNode("service-degradation", "Service Degradation", NodeKind.TOP_EVENT, ("false", "true"))
    )
    dag = dag.add_node(RiskNode("queue-protection", "Queue Protection", barrier, works_fails, activation=True))
    dag = dag.add_node(
        RiskNode(
            "queue-saturation",
            "Queue Saturation",
            NodeKind.EVENT,
            ("normal", "elevated", "critical"),
            evidence_source=Endpoint("http://telemetry.local/queues", "push"),
        )
    )
    dag = dag.add_node(
        RiskNode(
            "high-latency",
            "High Latency",
            NodeKind.EVENT,
            ("false", "true"),
            evidence_source=Endpoint("http://telemetry.local/latency", "push"),
        )
    )
    dag = dag.add_node(RiskNode("traffic-shedding", "Traffic Shedding", barrier, works_fails, activation=True))
    dag = dag.add_node(
        RiskNode("retry-storm", "Retry Storm", NodeKind.EVENT, ("none", "sustained", "local"))
    )
    dag = dag.add_node(
        RiskNode("automatic-rollback", "Automatic Rollback", barrier, works_fails, activation=True)
    )
    dag = dag.add_node(
        RiskNode("regional-isolation", "Regional Isolation", barrier, works_fails, activation=True)
    )
    dag = dag.add_node(
        RiskNode(
            "consequences",
            "Payment Service Outcome",
            NodeKind.CONSEQUENCE,
            ("safe", "degraded service", "partial outage", "transaction loss"),
            notify_targets=(NotifyTarget("http://ops.local/risk-webhook", 0.1),),
        )
    )

    for parent in ("faulty-change", "routing-misconfiguration", "peak-load-window",
                   "validation-gate", "canary-rollout"):
        dag = dag.add_edge(parent, "service-degradation")
    for parent in ("service-degradation", "peak-load-window", "queue-protection"):
        dag = dag.add_edge(parent, "queue-saturation")
    dag = dag.add_edge("queue-saturation", "high-latency")
    dag = dag.add_edge("observability-degraded", "traffic-shedding")
    for parent in ("high-latency", "traffic-shedding"):
        dag = dag.add_edge(parent, "retry-storm")
    for parent in ("faulty-change", "peak-load-window"):
        dag = dag.add_edge(parent, "automatic-rollback")
    for parent in ("retry-storm", "traffic-shedding", "regional-isolation", "automatic-rollback"):
        dag = dag.add_edge(parent, "consequences")
    return dag


def case_study_cpts(dag: RiskDag) -> dict[str, Cpt]:
    cpts: dict[str, Cpt] = {nid: Cpt.for_node(dag, nid) for nid in dag.nodes}

    roots = {
        "faulty-change": (0.95, 0.05),
        "routing-misconfiguration": (0.97, 0.03),
        "peak-load-window": (0.70, 0.30),
        "observability-degraded": (0.90, 0.10),
        "validation-gate": (0.90, 0.10),
        "canary-rollout": (0.85, 0.15),
        "queue-protection": (0.80, 0.20),
        "regional-isolation": (0.75, 0.25),
    }
    for nid, row in roots.items():
        cpts[nid].set_row((), row)

    sd = cpts["service-degradation"]
    for cfg in sd.expected_configs():
        fc, rm, pl, vg, cr = cfg
        p = _degradation_p(fc, rm, pl, vg, cr)
        sd.set_row(cfg, (1.0 - p, p))

    qs = cpts["queue-saturation"]
    qs_rows = {
        (0, 0, 0): (0.97, 0.025, 0.005),
        (0, 0, 1): (0.93, 0.060, 0.010),
        (0, 1, 0): (0.90, 0.085, 0.015),
        (0, 1, 1): (0.80, 0.160, 0.040),
        (1, 0, 0): (0.55, 0.350, 0.100),
        (1, 0, 1): (0.35, 0.400, 0.250),
        (1, 1, 0): (0.30, 0.450, 0.250),
        (1, 1, 1): (0.10, 0.350, 0.550),
    }
    for cfg, row in qs_rows.items():
        qs.set_row(cfg, row)

    hl = cpts["high-latency"]
    hl.set_row((0,), (0.95, 0.05))
    hl.set_row((1,), (0.45, 0.55))
    hl.set_row((2,), (0.08, 0.92))

    ts = cpts["traffic-shedding"]
    ts.set_row((0,), (0.82, 0.18))
    ts.set_row((1,), (0.55, 0.45))

    rs = cpts["retry-storm"]  # states (none, sustained, local)
    rs.set_row((0, 0), (0.97, 0.005, 0.025))
    rs.set_row((0, 1), (0.90, 0.020, 0.080))
    rs.set_row((1, 0), (0.45, 0.200, 0.350))
    rs.set_row((1, 1), (0.15, 0.4875, 0.3625))  # matches the bundled elicitation round

    ar = cpts["automatic-rollback"]
    ar.set_row((0, 0), (0.90, 0.10))
    ar.set_row((0, 1), (0.85, 0.15))
    ar.set_row((1, 0), (0.88, 0.12))
    ar.set_row((1, 1), (0.805, 0.195))  # equal average of the rollback round

    cons = cpts["consequences"]
    for cfg in cons.expected_configs():
        cons.set_row(cfg, _consequence_row(*cfg))

    return cpts


def rollback_question_id() -> str:
    # P(Automatic Rollback=works | Faulty Change=true, Peak Load Window=true)
    return question_id("automatic-rollback", 0, (1, 1))


def retry_storm_question_id() -> str:
    # P(Retry Storm=sustained | High Latency=true, Traffic Shedding=fails)
    return question_id("retry-storm", 1, (1, 1))


def case_study_ledger() -> AnswerLedger:
    ledger = AnswerLedger()
    base = datetime(2026, 1, 15, 9, 0, 0, tzinfo=timezone.utc)
    for i, value in enumerate(ROLLBACK_ANSWERS):
        ledger.append(
            Answer(rollback_question_id(), value, base + timedelta(minutes=5 * i), f"deploy-{i + 1}")
        )
    for i, value in enumerate(RETRY_STORM_ANSWERS):
        ledger.append(
            Answer(retry_storm_question_id(), value, base + timedelta(minutes=7 * i), f"sre-{i + 1}")
        )
    # the sibling asked state of the retry-storm row, so a re-materialization
    # reproduces the stored CPT row exactly ("local" is the derived remainder)
    ledger.append(Answer(question_id("retry-storm", 0, (1, 1)), 0.15, base + timedelta(hours=1), "sre-1"))
    return ledger


def case_study_model() -> ModelDocument:
    dag = case_study_dag()
    return ModelDocument(
        dag=dag,
        cpts=case_study_cpts(dag),
        config=EstimatorConfig(estimator="equal-average", p0=0.5, k_prior=0.0, kappa=8.0),
        overrides={
            # cautious base rate for the worst-row safe question, per the
            # sparse-data prior workflow
            question_id("consequences", 0, (2, 1, 1, 1)): QuestionOverride(prior=(0.05, 4.0)),
        },
        answers=case_study_ledger(),
        bowtie=case_study_bowtie(),
        ui_positions={},
    )


# Evidence for the three operational situation cuts, by state label.
SITUATION_CUTS: dict[int, dict[str, str]] = {
    1: {
        "peak-load-window": "true",
        "queue-saturation": "normal",
        "high-latency": "false",
        "automatic-rollback": "works",
    },
    2: {
        "faulty-change": "true",
        "queue-saturation": "elevated",
        "high-latency": "true",
    },
    3: {
        "queue-saturation": "critical",
        "retry-storm": "sustained",
        "regional-isolation": "fails",
        "automatic-rollback": "fails",
    },
}

MITIGATIVE_BARRIERS = ("automatic-rollback", "regional-isolation", "traffic-shedding")


def cut_evidence(cut: int) -> dict[str, int]:
    dag = case_study_dag()
    return {nid: dag.node(nid).state_index(label) for nid, label in SITUATION_CUTS[cut].items()}
