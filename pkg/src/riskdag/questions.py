"""Structure-derived questionnaires and the expert answer ledger.

One question per CPT cell, except the last state of every row: normalization
fixes it, so only the first K-1 states are asked. Question ids hash the
structural coordinates (node, target state, parent configuration) and survive
renames.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Iterable, Iterator, Mapping

from .cpt import Cpt, ParentConfig, enumerate_rows
from .graph import RiskDag


class CaptureError(Exception):
    pass


class StaleCptError(CaptureError):
    """CPT snapshot no longer matches the graph; regenerate before asking."""


QUICK_SET_SCALE: dict[str, float] = {
    "None": 0.0,
    "Very low": 0.05,
    "Low": 0.2,
    "Medium": 0.5,
    "High": 0.8,
    "Very high": 0.95,
    "Evidence": 1.0,
}

ANSWER_ORIGINS = ("manual", "quick-set")


def quick_set(label: str) -> float:
    try:
        return QUICK_SET_SCALE[label]
    except KeyError:
        raise CaptureError(
            f"unknown quick-set label {label!r}; expected one of {list(QUICK_SET_SCALE)}"
        ) from None


def question_id(node_id: str, state_index: int, config: ParentConfig) -> str:
    payload = f"{node_id}|s{int(state_index)}|{','.join(str(int(i)) for i in config)}"
    return "q" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Question:
    id: str
    node_id: str
    state_index: int  # target state, never the last one
    config: ParentConfig
    prior_override: tuple[float, float] | None = None  # (p0, k_prior)
    kappa_override: float | None = None
    half_life_override: float | None = None


def generate_questions(
    dag: RiskDag,
    cpts: Mapping[str, Cpt] | None = None,
    scope: Iterable[str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> list[Question]:
    """One question per (row, target state) for every in-scope non-gate node.

    Gate CPTs are deterministic and never asked. Raises StaleCptError when a
    provided CPT snapshots an outdated parent order.
    """
    node_ids = list(dag.nodes) if scope is None else [dag.node(n).id for n in scope]
    questions: list[Question] = []
    for nid in node_ids:
        node = dag.node(nid)
        if node.kind.is_gate:
            continue
        if cpts is not None and nid in cpts and cpts[nid].is_stale(dag):
            raise StaleCptError(f"CPT of {nid!r} is stale; refresh it before generating questions")
        for cfg in enumerate_rows(dag, nid):
            for s in range(node.k - 1):
                qid = question_id(nid, s, cfg)
                ov = overrides.get(qid) if overrides else None
                questions.append(
                    Question(
                        id=qid,
                        node_id=nid,
                        state_index=s,
                        config=cfg,
                        prior_override=getattr(ov, "prior", None) if ov else None,
                        kappa_override=getattr(ov, "kappa", None) if ov else None,
                        half_life_override=getattr(ov, "half_life", None) if ov else None,
                    )
                )
    return questions


def render_question_text(question: Question, dag: RiskDag) -> str:
    """Conditional phrasing over current display names; ids stay structural."""
    node = dag.node(question.node_id)
    if not 0 <= question.state_index < node.k - 1:
        raise CaptureError(f"question targets state {question.state_index}, node has K={node.k}")
    target = node.states[question.state_index]
    parents = dag.parents(question.node_id)
    if len(parents) != len(question.config):
        raise StaleCptError(f"question {question.id} no longer matches the parents of {question.node_id!r}")
    if not parents:
        return f"What is the probability that {node.name}={target}, given no preconditions?"
    pairs = []
    for pid, idx in zip(parents, question.config):
        parent = dag.node(pid)
        if not 0 <= idx < parent.k:
            raise StaleCptError(f"question {question.id} references state {idx} of {pid!r} (K={parent.k})")
        pairs.append(f"{parent.name}={parent.states[idx]}")
    if len(pairs) == 1:
        given = pairs[0]
    else:
        given = ", ".join(pairs[:-1]) + (", and " if len(pairs) > 2 else " and ") + pairs[-1]
    return f"What is the probability that {node.name}={target}, given that {given}?"


def question_record(question: Question, dag: RiskDag) -> dict:
    """JSON-ready description used by the questionnaire export and the API."""
    node = dag.node(question.node_id)
    parents = dag.parents(question.node_id)
    return {
        "id": question.id,
        "node": question.node_id,
        "node_name": node.name,
        "target_state": node.states[question.state_index],
        "target_state_index": question.state_index,
        "conditions": [
            {"node": pid, "node_name": dag.node(pid).name, "state": dag.node(pid).states[idx]}
            for pid, idx in zip(parents, question.config)
        ],
        "text": render_question_text(question, dag),
    }


# -- answers ------------------------------------------------------------------


def _normalize_timestamp(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class Answer:
    question_id: str
    value: float
    timestamp: datetime
    respondent: str = ""
    origin: str = "manual"

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise CaptureError(f"answer value {self.value!r} outside [0, 1]")
        if self.origin not in ANSWER_ORIGINS:
            raise CaptureError(f"answer origin must be one of {ANSWER_ORIGINS}, got {self.origin!r}")
        object.__setattr__(self, "timestamp", _normalize_timestamp(self.timestamp))
        object.__setattr__(self, "value", float(self.value))


class AnswerLedger:
    """Append-only store of expert judgments, chronological per question."""

    def __init__(self, answers: Iterable[Answer] = ()):
        self._all: list[Answer] = []
        self._by_question: dict[str, list[Answer]] = {}
        for a in answers:
            self.append(a)

    def append(self, answer: Answer) -> None:
        bucket = self._by_question.setdefault(answer.question_id, [])
        if bucket and answer.timestamp < bucket[-1].timestamp:
            raise CaptureError(
                f"answer for {answer.question_id} at {answer.timestamp.isoformat()} is older than "
                f"the last recorded one ({bucket[-1].timestamp.isoformat()})"
            )
        bucket.append(answer)
        self._all.append(answer)

    def for_question(self, question_id: str) -> tuple[Answer, ...]:
        return tuple(self._by_question.get(question_id, ()))

    def question_ids(self) -> list[str]:
        return list(self._by_question)

    def __iter__(self) -> Iterator[Answer]:
        return iter(self._all)

    def __len__(self) -> int:
        return len(self._all)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnswerLedger):
            return NotImplemented
        return self._all == other._all

    def copy(self) -> "AnswerLedger":
        return AnswerLedger(self._all)


ANSWER_CSV_FIELDS = ("question_id", "value", "timestamp", "respondent", "origin")


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


def export_answers_csv(ledger: AnswerLedger) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(ANSWER_CSV_FIELDS)
    for a in ledger:
        writer.writerow([a.question_id, repr(a.value), format_timestamp(a.timestamp), a.respondent, a.origin])
    return buf.getvalue()


def import_answers_csv(text: str, into: AnswerLedger | None = None) -> AnswerLedger:
    ledger = into if into is not None else AnswerLedger()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != list(ANSWER_CSV_FIELDS):
        raise CaptureError(f"answer table must start with header {','.join(ANSWER_CSV_FIELDS)}")
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(ANSWER_CSV_FIELDS):
            raise CaptureError(f"line {lineno}: expected {len(ANSWER_CSV_FIELDS)} fields, got {len(row)}")
        qid, value, ts, respondent, origin = row
        try:
            ledger.append(Answer(qid, float(value), parse_timestamp(ts), respondent, origin))
        except (ValueError, CaptureError) as exc:
            raise CaptureError(f"line {lineno}: {exc}") from exc
    return ledger
