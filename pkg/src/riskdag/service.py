"""HTTP surface for the engine: model CRUD and XML exchange, structural and
CPT editing, tokenized questionnaire capture, estimates and materialization,
evidence with outbound notifications, posterior and causal queries.

Single writer per model: mutations replace the document snapshot under a
lock, reads always see a consistent snapshot. Every numeric response comes
from a direct engine call on that snapshot.
"""

from __future__ import annotations

import logging
import secrets
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx
from fastapi import BackgroundTasks, Body, FastAPI, HTTPException, Query, Response

from . import causal
from .bowtie import transform
from .cpt import Cpt, CptError, RowSumError, complete_last_state, validate_cpts
from .estimators import (
    ESTIMATORS,
    EstimatorConfig,
    materialize_cpts,
    summarize_question,
)
from .graph import GraphError, CycleError, NodeKind, RiskDag, RiskNode, UnknownNodeError
from .inference import ContradictionError, IncompleteCptError, posterior
from .model_io import (
    FILE_EXTENSION,
    MEDIA_TYPE,
    ModelDocument,
    ModelIOError,
    export_xml,
    import_xml,
)
from .questions import (
    Answer,
    CaptureError,
    Question,
    generate_questions,
    import_answers_csv,
    export_answers_csv,
    question_record,
    quick_set,
)

log = logging.getLogger("riskdag.service")

NOTIFY_RETRIES = 3
NOTIFY_BACKOFF = 0.05  # seconds, doubled per attempt

Poster = Callable[[str, dict], None]


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    persist_dir: str | None = None
    token_ttl: float = 7 * 24 * 3600.0  # seconds
    static_dir: str | None = None  # built webui assets, served under /ui


def load_service_config(path: str | None = None, env: Mapping[str, str] | None = None) -> ServiceConfig:
    """Config file (JSON) overridden by RISKDAG_* environment variables."""
    import json
    import os

    values: dict[str, Any] = {}
    if path:
        values.update(json.loads(Path(path).read_text()))
    env = env if env is not None else os.environ
    if "RISKDAG_HOST" in env:
        values["host"] = env["RISKDAG_HOST"]
    if "RISKDAG_PORT" in env:
        values["port"] = int(env["RISKDAG_PORT"])
    if "RISKDAG_PERSIST_DIR" in env:
        values["persist_dir"] = env["RISKDAG_PERSIST_DIR"]
    if "RISKDAG_TOKEN_TTL" in env:
        values["token_ttl"] = float(env["RISKDAG_TOKEN_TTL"])
    if "RISKDAG_STATIC_DIR" in env:
        values["static_dir"] = env["RISKDAG_STATIC_DIR"]
    known = {"host", "port", "persist_dir", "token_ttl", "static_dir"}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown service config keys: {sorted(unknown)}")
    return ServiceConfig(**values)


@dataclass(frozen=True)
class CaptureToken:
    token: str
    model_id: str
    scope: frozenset[str]
    expires_at: datetime
    issued_to: str = ""


@dataclass(frozen=True)
class DispatchRecord:
    node_id: str
    url: str
    delivered: bool
    attempts: int
    argmax_changed: bool
    max_shift: float


@dataclass
class ModelState:
    document: ModelDocument
    evidence: dict[str, int] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    dispatch_log: list[DispatchRecord] = field(default_factory=list)


def default_poster(url: str, payload: dict) -> None:
    httpx.post(url, json=payload, timeout=5.0)


def dispatch_notifications(
    document: ModelDocument,
    old: Mapping[str, tuple[float, ...]],
    new: Mapping[str, tuple[float, ...]],
    poster: Poster = default_poster,
) -> list[DispatchRecord]:
    """One POST per notify target whose node moved: argmax state changed or
    the max-state probability shifted by at least the target threshold.
    Failures are logged and retried with bounded backoff, never raised."""
    records: list[DispatchRecord] = []
    when = datetime.now(timezone.utc).isoformat()
    for nid, node in document.dag.nodes.items():
        if not node.notify_targets or nid not in old or nid not in new:
            continue
        old_vec, new_vec = old[nid], new[nid]
        argmax_changed = max(range(len(old_vec)), key=old_vec.__getitem__) != max(
            range(len(new_vec)), key=new_vec.__getitem__
        )
        max_shift = abs(max(new_vec) - max(old_vec))
        seen: set[str] = set()
        for target in sorted(node.notify_targets, key=lambda t: t.url):
            if target.url in seen:  # duplicates collapse to one dispatch
                continue
            seen.add(target.url)
            if not argmax_changed and max_shift < target.threshold:
                continue
            payload = {
                "node": nid,
                "states": list(node.states),
                "old": list(old_vec),
                "new": list(new_vec),
                "timestamp": when,
            }
            delivered = False
            attempts = 0
            for attempt in range(NOTIFY_RETRIES):
                attempts = attempt + 1
                try:
                    poster(target.url, payload)
                    delivered = True
                    break
                except Exception as exc:
                    log.warning("notify %s attempt %d failed: %s", target.url, attempts, exc)
                    if attempt + 1 < NOTIFY_RETRIES:
                        time.sleep(NOTIFY_BACKOFF * (2**attempt))
            records.append(DispatchRecord(nid, target.url, delivered, attempts, argmax_changed, max_shift))
    return records


class ModelStore:
    def __init__(self, persist_dir: str | None = None):
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self.models: dict[str, ModelState] = {}
        self.tokens: dict[str, CaptureToken] = {}
        self._lock = threading.Lock()
        if self.persist_dir:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
            for file in sorted(self.persist_dir.glob(f"*{FILE_EXTENSION}")):
                model_id = file.name[: -len(FILE_EXTENSION)]
                try:
                    self.models[model_id] = ModelState(import_xml(file.read_bytes()))
                except ModelIOError as exc:
                    log.error("skipping unreadable model file %s: %s", file, exc)

    def create(self, document: ModelDocument, model_id: str | None = None) -> str:
        with self._lock:
            mid = model_id or uuid.uuid4().hex[:12]
            if mid in self.models:
                raise KeyError(f"model {mid!r} already exists")
            self.models[mid] = ModelState(document)
        self.save(mid)
        return mid

    def get(self, model_id: str) -> ModelState:
        try:
            return self.models[model_id]
        except KeyError:
            raise HTTPException(404, f"unknown model {model_id!r}") from None

    def delete(self, model_id: str) -> None:
        with self._lock:
            self.models.pop(model_id, None)
        if self.persist_dir:
            (self.persist_dir / f"{model_id}{FILE_EXTENSION}").unlink(missing_ok=True)

    def save(self, model_id: str) -> None:
        if not self.persist_dir:
            return
        state = self.models.get(model_id)
        if state is not None:
            (self.persist_dir / f"{model_id}{FILE_EXTENSION}").write_bytes(export_xml(state.document))

    def issue_token(
        self, model_id: str, scope: frozenset[str], ttl: float, issued_to: str = ""
    ) -> CaptureToken:
        token = CaptureToken(
            token=secrets.token_hex(16),  # 128 bits
            model_id=model_id,
            scope=scope,
            expires_at=datetime.now(timezone.utc) + timedelta(seconds=ttl),
            issued_to=issued_to,
        )
        with self._lock:
            self.tokens[token.token] = token
        return token

    def resolve_token(self, token: str) -> CaptureToken:
        record = self.tokens.get(token)
        if record is None:
            raise HTTPException(401, "unknown capture token")
        if record.expires_at <= datetime.now(timezone.utc):
            raise HTTPException(401, "capture token expired")
        return record


def _resolve_state(node: RiskNode, ref: Any) -> int:
    if isinstance(ref, bool):
        raise HTTPException(422, f"state reference for {node.id!r} must be a label or index")
    if isinstance(ref, int):
        if not 0 <= ref < node.k:
            raise HTTPException(422, f"state index {ref} out of range for node {node.id!r}")
        return ref
    try:
        return node.state_index(str(ref))
    except GraphError as exc:
        raise HTTPException(422, str(exc)) from None


def _resolve_node(dag: RiskDag, ref: str) -> str:
    try:
        return dag.resolve(ref)
    except UnknownNodeError:
        raise HTTPException(404, f"unknown node {ref!r}") from None
    except GraphError as exc:
        raise HTTPException(422, str(exc)) from None


def _posterior_or_http(document: ModelDocument, evidence: Mapping[str, int], query=None):
    try:
        return posterior(document.dag, document.cpts, evidence, query)
    except ContradictionError as exc:
        raise HTTPException(409, f"contradictory evidence: {exc.evidence}") from None
    except IncompleteCptError as exc:
        raise HTTPException(422, f"CPTs not runtime-ready for nodes: {exc.nodes}") from None


def _split_csv(value: str | None) -> list[str]:
    return [v for v in (value or "").split(",") for v in [v.strip()] if v]


def _node_payload(dag: RiskDag, nid: str) -> dict:
    node = dag.nodes[nid]
    return {
        "id": node.id,
        "name": node.name,
        "kind": node.kind.value,
        "states": list(node.states),
        "activation": node.activation,
        "parents": list(dag.parents(nid)),
        "evidence_source": (
            {"url": node.evidence_source.url, "mode": node.evidence_source.mode}
            if node.evidence_source
            else None
        ),
        "notify_targets": [{"url": t.url, "threshold": t.threshold} for t in node.notify_targets],
    }


def _questions_for(document: ModelDocument, scope: list[str] | None) -> list[Question]:
    return generate_questions(document.dag, document.cpts, scope, document.overrides)


def create_app(
    config: ServiceConfig | None = None,
    store: ModelStore | None = None,
    poster: Poster = default_poster,
) -> FastAPI:
    config = config or ServiceConfig()
    store = store if store is not None else ModelStore(config.persist_dir)
    app = FastAPI(title="riskdag", version="0.1.0")
    app.state.store = store
    app.state.config = config

    if config.static_dir and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    # -- models ---------------------------------------------------------------

    @app.post("/models", status_code=201)
    def create_model(body: dict = Body(default={})):
        model_id = body.get("id")
        try:
            mid = store.create(ModelDocument(), model_id)
        except KeyError as exc:
            raise HTTPException(409, str(exc)) from None
        return {"id": mid}

    @app.get("/models")
    def list_models():
        return [
            {"id": mid, "nodes": len(state.document.dag), "edges": len(state.document.dag.edges)}
            for mid, state in sorted(store.models.items())
        ]

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        state = store.get(model_id)
        doc = state.document
        return {
            "id": model_id,
            "nodes": [_node_payload(doc.dag, nid) for nid in doc.dag.nodes],
            "edges": [{"parent": p, "child": c} for p, c in doc.dag.edges],
            "evidence": dict(state.evidence),
            "config": {
                "estimator": doc.config.estimator,
                "p0": doc.config.p0,
                "k_prior": doc.config.k_prior,
                "kappa": doc.config.kappa,
                "half_life": doc.config.half_life,
            },
            "has_bowtie": doc.bowtie is not None,
            "ui_positions": {nid: list(xy) for nid, xy in doc.ui_positions.items()},
        }

    @app.put("/models/{model_id}/ui-positions")
    def set_ui_positions(model_id: str, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            positions = {}
            for ref, xy in body.items():
                nid = _resolve_node(doc.dag, ref)
                if not isinstance(xy, (list, tuple)) or len(xy) != 2:
                    raise HTTPException(422, f"position for {nid!r} must be [x, y]")
                positions[nid] = (float(xy[0]), float(xy[1]))
            state.document = replace(doc, ui_positions=positions)
            store.save(model_id)
            return {"count": len(positions)}

    @app.delete("/models/{model_id}", status_code=204)
    def delete_model(model_id: str):
        store.get(model_id)
        store.delete(model_id)
        return Response(status_code=204)

    @app.post("/models/import", status_code=201)
    def import_model(body: bytes = Body(...)):
        try:
            document = import_xml(body)
        except ModelIOError as exc:
            raise HTTPException(422, str(exc)) from None
        return {"id": store.create(document)}

    @app.get("/models/{model_id}/xml")
    def export_model(model_id: str):
        state = store.get(model_id)
        return Response(export_xml(state.document), media_type=MEDIA_TYPE)

    @app.put("/models/{model_id}/xml")
    def replace_model(model_id: str, body: bytes = Body(...)):
        state = store.get(model_id)
        try:
            document = import_xml(body)
        except ModelIOError as exc:
            raise HTTPException(422, str(exc)) from None
        with state.lock:
            state.document = document
            state.evidence = {}
            store.save(model_id)
        return {"id": model_id}

    @app.post("/models/{model_id}/transform")
    def transform_model(model_id: str):
        state = store.get(model_id)
        with state.lock:
            if state.document.bowtie is None:
                raise HTTPException(422, "model has no bowtie section to transform")
            result = transform(state.document.bowtie)
            state.document = replace(state.document, dag=result.dag, cpts=result.cpts)
            state.evidence = {}
            store.save(model_id)
            return {
                "nodes": result.report.node_count,
                "edges": result.report.edge_count,
                "mappings": [{"element": e, "node": n} for e, n in result.report.mappings],
                "warnings": list(result.report.warnings),
            }

    # -- structure editing ------------------------------------------------------

    @app.post("/models/{model_id}/nodes", status_code=201)
    def add_node(model_id: str, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            try:
                node = RiskNode(
                    id=body.get("id") or uuid.uuid4().hex[:8],
                    name=body["name"],
                    kind=NodeKind(body.get("kind", "event")),
                    states=tuple(body.get("states", ("false", "true"))),
                    activation=bool(body.get("activation", False)),
                )
                dag = doc.dag.add_node(node)
            except (KeyError, ValueError, GraphError) as exc:
                raise HTTPException(422, str(exc)) from None
            cpts = dict(doc.cpts)
            cpt = Cpt.for_node(dag, node.id)
            cpt.fill_placeholders()
            cpts[node.id] = cpt
            state.document = replace(doc, dag=dag, cpts=cpts)
            store.save(model_id)
            return _node_payload(dag, node.id)

    @app.patch("/models/{model_id}/nodes/{node_ref}")
    def edit_node(model_id: str, node_ref: str, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            nid = _resolve_node(doc.dag, node_ref)
            dag = doc.dag
            try:
                if "name" in body:
                    dag = dag.rename(nid, body["name"])
                if "states" in body:
                    dag = dag.set_states(nid, tuple(body["states"]))
                if "activation" in body:
                    dag = dag.set_activation(nid, bool(body["activation"]))
            except GraphError as exc:
                raise HTTPException(422, str(exc)) from None
            state.document = replace(doc, dag=dag)
            store.save(model_id)
            report = dag.validate()
            return {
                "node": _node_payload(dag, nid),
                "findings": [{"code": f.code, "message": f.message} for f in report.findings],
            }

    @app.delete("/models/{model_id}/nodes/{node_ref}", status_code=204)
    def delete_node(model_id: str, node_ref: str):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            nid = _resolve_node(doc.dag, node_ref)
            dag = doc.dag.remove_node(nid)
            cpts = {k: v for k, v in doc.cpts.items() if k != nid}
            state.evidence.pop(nid, None)
            state.document = replace(doc, dag=dag, cpts=cpts)
            store.save(model_id)
        return Response(status_code=204)

    @app.post("/models/{model_id}/edges", status_code=201)
    def add_edge(model_id: str, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            parent = _resolve_node(doc.dag, body.get("parent", ""))
            child = _resolve_node(doc.dag, body.get("child", ""))
            try:
                dag = doc.dag.add_edge(parent, child)
            except CycleError as exc:
                raise HTTPException(422, {"error": "cycle", "cycle": exc.cycle}) from None
            except GraphError as exc:
                raise HTTPException(422, str(exc)) from None
            state.document = replace(doc, dag=dag)
            store.save(model_id)
            return {"parent": parent, "child": child}

    @app.delete("/models/{model_id}/edges", status_code=204)
    def delete_edge(model_id: str, parent: str, child: str):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            p = _resolve_node(doc.dag, parent)
            c = _resolve_node(doc.dag, child)
            try:
                dag = doc.dag.remove_edge(p, c)
            except GraphError as exc:
                raise HTTPException(422, str(exc)) from None
            state.document = replace(doc, dag=dag)
            store.save(model_id)
        return Response(status_code=204)

    # -- CPTs -------------------------------------------------------------------

    @app.get("/models/{model_id}/cpts/{node_ref}")
    def get_cpt(model_id: str, node_ref: str):
        state = store.get(model_id)
        doc = state.document
        nid = _resolve_node(doc.dag, node_ref)
        cpt = doc.cpts.get(nid)
        if cpt is None:
            raise HTTPException(404, f"node {nid!r} has no CPT")
        node = doc.dag.nodes[nid]
        return {
            "node": nid,
            "states": list(node.states),
            "parents": list(cpt.parent_ids),
            "cards": list(cpt.parent_cards),
            "parent_states": [
                list(doc.dag.nodes[p].states) if p in doc.dag else [str(i) for i in range(card)]
                for p, card in zip(cpt.parent_ids, cpt.parent_cards)
            ],
            "k": cpt.k,
            "stale": cpt.is_stale(doc.dag),
            "deterministic": node.kind.is_gate,
            "rows": [
                {
                    "config": list(cfg),
                    "values": list(row.values) if row.values is not None else None,
                    "status": row.status.value,
                }
                for cfg, row in sorted(cpt.rows.items())
            ],
        }

    @app.put("/models/{model_id}/cpts/{node_ref}/rows")
    def set_cpt_row(model_id: str, node_ref: str, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            nid = _resolve_node(doc.dag, node_ref)
            node = doc.dag.nodes[nid]
            if node.kind.is_gate:
                raise HTTPException(422, f"gate node {nid!r} has a deterministic CPT")
            cpt = doc.cpts.get(nid)
            if cpt is None or cpt.is_stale(doc.dag):
                raise HTTPException(422, f"CPT of {nid!r} is missing or stale; refresh it first")
            config = tuple(int(i) for i in body.get("config", ()))
            probs = [float(v) for v in body.get("probabilities", ())]
            new_cpt = cpt.copy()
            try:
                if len(probs) == cpt.k - 1:
                    probs = list(complete_last_state(probs, cpt.k))
                new_cpt.set_row(config, probs)
            except RowSumError as exc:
                raise HTTPException(
                    422, {"error": "row-sum", "sum": exc.total, "message": str(exc)}
                ) from None
            except (CptError, ValueError) as exc:
                raise HTTPException(422, str(exc)) from None
            cpts = dict(doc.cpts)
            cpts[nid] = new_cpt
            state.document = replace(doc, cpts=cpts)
            store.save(model_id)
            row = new_cpt.get_row(config)
            return {"config": list(config), "values": list(row.values), "status": row.status.value}

    @app.post("/models/{model_id}/cpts/{node_ref}/refresh")
    def refresh_cpt(model_id: str, node_ref: str):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            nid = _resolve_node(doc.dag, node_ref)
            node = doc.dag.nodes[nid]
            if node.kind.is_gate:
                from .bowtie import gate_cpt_for

                cpt = gate_cpt_for(doc.dag, nid)
            else:
                cpt = Cpt.for_node(doc.dag, nid)
                cpt.fill_placeholders()
            cpts = dict(doc.cpts)
            cpts[nid] = cpt
            state.document = replace(doc, cpts=cpts)
            store.save(model_id)
            return {"node": nid, "rows": len(cpt.rows)}

    @app.get("/models/{model_id}/validate")
    def validate_model(model_id: str):
        state = store.get(model_id)
        doc = state.document
        structure = doc.dag.validate()
        tables = validate_cpts(doc.dag, doc.cpts)
        return {
            "findings": [
                {"code": f.code, "message": f.message, "nodes": list(f.nodes)}
                for f in structure.findings + tables.findings
            ],
            "warnings": [
                {"code": f.code, "message": f.message, "nodes": list(f.nodes)}
                for f in structure.warnings + tables.warnings
            ],
            "runtime_ready": structure.ok and tables.ok,
        }

    # -- questionnaires and capture ----------------------------------------------

    @app.get("/models/{model_id}/questions")
    def list_questions(model_id: str, scope: str | None = Query(default=None)):
        state = store.get(model_id)
        doc = state.document
        scope_ids = [_resolve_node(doc.dag, s) for s in _split_csv(scope)] or None
        try:
            questions = _questions_for(doc, scope_ids)
        except CaptureError as exc:
            raise HTTPException(422, str(exc)) from None
        return [question_record(q, doc.dag) for q in questions]

    @app.post("/models/{model_id}/capture-tokens", status_code=201)
    def issue_capture_token(model_id: str, body: dict = Body(...)):
        state = store.get(model_id)
        doc = state.document
        scope = frozenset(_resolve_node(doc.dag, s) for s in body.get("scope", ()))
        if not scope:
            raise HTTPException(422, "capture token needs a non-empty scope")
        ttl = float(body.get("ttl_seconds", config.token_ttl))
        token = store.issue_token(model_id, scope, ttl, body.get("issued_to", ""))
        return {
            "token": token.token,
            "model": model_id,
            "scope": sorted(token.scope),
            "expires_at": token.expires_at.isoformat(),
            "issued_to": token.issued_to,
        }

    @app.get("/capture/{token}")
    def capture_questions(token: str):
        record = store.resolve_token(token)
        state = store.get(record.model_id)
        doc = state.document
        scope = [nid for nid in record.scope if nid in doc.dag]
        questions = _questions_for(doc, sorted(scope))
        return {
            "model": record.model_id,
            "scope": sorted(scope),
            "expires_at": record.expires_at.isoformat(),
            "questions": [question_record(q, doc.dag) for q in questions],
        }

    @app.post("/capture/{token}/answers", status_code=201)
    def capture_submit(token: str, body: dict = Body(...)):
        record = store.resolve_token(token)
        state = store.get(record.model_id)
        with state.lock:
            doc = state.document
            qid = body.get("question_id", "")
            scoped = {q.id: q for q in _questions_for(doc, sorted(record.scope))}
            if qid not in scoped:
                raise HTTPException(
                    403, f"question {qid!r} is outside this token's scope {sorted(record.scope)}"
                )
            if "quick_set" in body:
                try:
                    value = quick_set(body["quick_set"])
                except CaptureError as exc:
                    raise HTTPException(422, str(exc)) from None
                origin = "quick-set"
            else:
                value = body.get("value")
                origin = "manual"
            try:
                answer = Answer(
                    question_id=qid,
                    value=float(value),
                    timestamp=datetime.now(timezone.utc),
                    respondent=str(body.get("respondent", record.issued_to)),
                    origin=origin,
                )
                doc.answers.append(answer)
            except (TypeError, ValueError, CaptureError) as exc:
                raise HTTPException(422, str(exc)) from None
            store.save(record.model_id)
            return {"question_id": qid, "value": answer.value, "n": len(doc.answers.for_question(qid))}

    @app.get("/models/{model_id}/answers")
    def export_answers(model_id: str):
        state = store.get(model_id)
        return Response(export_answers_csv(state.document.answers), media_type="text/csv")

    @app.post("/models/{model_id}/answers", status_code=201)
    def submit_answer(model_id: str, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            try:
                answer = Answer(
                    question_id=str(body["question_id"]),
                    value=float(body["value"]),
                    timestamp=datetime.now(timezone.utc),
                    respondent=str(body.get("respondent", "")),
                    origin=str(body.get("origin", "manual")),
                )
                doc.answers.append(answer)
            except (KeyError, TypeError, ValueError, CaptureError) as exc:
                raise HTTPException(422, str(exc)) from None
            store.save(model_id)
            return {"question_id": answer.question_id, "value": answer.value}

    @app.post("/models/{model_id}/answers/import", status_code=201)
    def import_answers(model_id: str, body: bytes = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            try:
                import_answers_csv(body.decode("utf-8"), into=doc.answers)
            except CaptureError as exc:
                raise HTTPException(422, str(exc)) from None
            store.save(model_id)
            return {"count": len(doc.answers)}

    @app.get("/models/{model_id}/estimates")
    def estimates(
        model_id: str,
        estimator: str | None = Query(default=None),
        scope: str | None = Query(default=None),
    ):
        state = store.get(model_id)
        doc = state.document
        cfg = doc.config
        if estimator is not None:
            if estimator not in ESTIMATORS:
                raise HTTPException(422, f"unknown estimator {estimator!r}; pick one of {list(ESTIMATORS)}")
            cfg = replace(cfg, estimator=estimator)
        scope_ids = [_resolve_node(doc.dag, s) for s in _split_csv(scope)] or None
        out = []
        for q in _questions_for(doc, scope_ids):
            summary = summarize_question(q, doc.answers.for_question(q.id), cfg)
            out.append(
                {
                    "question_id": q.id,
                    "node": q.node_id,
                    "text": question_record(q, doc.dag)["text"],
                    "n": summary.n,
                    "values": list(summary.values),
                    "estimates": dict(summary.estimates),
                    "location": summary.location,
                    "residuals": list(summary.residuals),
                    "sample_sd": summary.sample_sd,
                    "spread": list(summary.spread) if summary.spread else None,
                    "anchored_interval": list(summary.anchored_interval)
                    if summary.anchored_interval
                    else None,
                    "consensus_sd": summary.consensus_sd,
                    "consensus_interval": list(summary.consensus_interval)
                    if summary.consensus_interval
                    else None,
                }
            )
        return out

    @app.post("/models/{model_id}/materialize")
    def materialize(model_id: str, body: dict = Body(default={})):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            cfg = doc.config
            if "estimator" in body:
                if body["estimator"] not in ESTIMATORS:
                    raise HTTPException(422, f"unknown estimator {body['estimator']!r}")
                cfg = replace(cfg, estimator=body["estimator"])
            new_cpts, report = materialize_cpts(doc.dag, doc.cpts, doc.answers, cfg, doc.overrides)
            state.document = replace(doc, cpts=new_cpts)
            store.save(model_id)
            return {
                "filled": [{"node": n, "config": list(c)} for n, c in report.filled],
                "skipped": [
                    {"node": n, "config": list(c), "reason": r} for n, c, r in report.skipped
                ],
                "invalid": [{"node": n, "config": list(c), "sum": s} for n, c, s in report.invalid],
            }

    # -- evidence and posteriors ---------------------------------------------------

    def _notify_after_evidence(
        state: ModelState,
        model_id: str,
        old_evidence: dict[str, int],
        background: BackgroundTasks,
    ):
        doc = state.document
        watched = [nid for nid, n in doc.dag.nodes.items() if n.notify_targets]
        if not watched:
            return
        try:
            old = posterior(doc.dag, doc.cpts, old_evidence, watched)
            new = posterior(doc.dag, doc.cpts, state.evidence, watched)
        except (ContradictionError, IncompleteCptError):
            return

        def run():
            state.dispatch_log.extend(dispatch_notifications(doc, old, new, poster))

        background.add_task(run)

    @app.get("/models/{model_id}/evidence")
    def get_evidence(model_id: str):
        state = store.get(model_id)
        doc = state.document
        return {
            nid: {"index": idx, "state": doc.dag.nodes[nid].states[idx]}
            for nid, idx in state.evidence.items()
        }

    @app.put("/models/{model_id}/evidence")
    def set_evidence(model_id: str, background: BackgroundTasks, body: dict = Body(...)):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            old_evidence = dict(state.evidence)
            merged = dict(state.evidence)
            for ref, value in body.items():
                nid = _resolve_node(doc.dag, ref)
                merged[nid] = _resolve_state(doc.dag.nodes[nid], value)
            # reject contradictions before committing
            try:
                posterior(doc.dag, doc.cpts, merged, [])
            except ContradictionError as exc:
                raise HTTPException(409, f"contradictory evidence: {exc.evidence}") from None
            except IncompleteCptError:
                pass  # evidence on a structurally-editable model is fine
            state.evidence = merged
            committed = dict(merged)
            _notify_after_evidence(state, model_id, old_evidence, background)
        return {"evidence": committed}

    @app.delete("/models/{model_id}/evidence")
    def clear_evidence(model_id: str, background: BackgroundTasks):
        state = store.get(model_id)
        with state.lock:
            old_evidence = dict(state.evidence)
            state.evidence = {}
            _notify_after_evidence(state, model_id, old_evidence, background)
        return {"evidence": {}}

    @app.delete("/models/{model_id}/evidence/{node_ref}")
    def clear_evidence_node(model_id: str, node_ref: str, background: BackgroundTasks):
        state = store.get(model_id)
        with state.lock:
            doc = state.document
            nid = _resolve_node(doc.dag, node_ref)
            old_evidence = dict(state.evidence)
            state.evidence.pop(nid, None)
            _notify_after_evidence(state, model_id, old_evidence, background)
        return {"evidence": dict(state.evidence)}

    def _posterior_payload(doc: ModelDocument, table: Mapping[str, tuple[float, ...]]) -> dict:
        return {
            nid: {"states": list(doc.dag.nodes[nid].states), "probabilities": list(vec)}
            for nid, vec in table.items()
        }

    @app.get("/models/{model_id}/posterior")
    def get_posterior(model_id: str, nodes: str | None = Query(default=None)):
        state = store.get(model_id)
        doc = state.document
        query = [_resolve_node(doc.dag, n) for n in _split_csv(nodes)] or None
        table = _posterior_or_http(doc, state.evidence, query)
        return _posterior_payload(doc, table)

    @app.get("/models/{model_id}/nodes/{node_ref}/status")
    def node_status(model_id: str, node_ref: str):
        state = store.get(model_id)
        doc = state.document
        nid = _resolve_node(doc.dag, node_ref)
        table = _posterior_or_http(doc, state.evidence, [nid])
        node = doc.dag.nodes[nid]
        return {
            "node": nid,
            "name": node.name,
            "states": list(node.states),
            "probabilities": list(table[nid]),
            "observed": state.evidence.get(nid),
            "activation": node.activation,
        }

    @app.get("/models/{model_id}/notifications/log")
    def notification_log(model_id: str):
        state = store.get(model_id)
        return [
            {
                "node": r.node_id,
                "url": r.url,
                "delivered": r.delivered,
                "attempts": r.attempts,
                "argmax_changed": r.argmax_changed,
                "max_shift": r.max_shift,
            }
            for r in state.dispatch_log
        ]

    # -- causal -----------------------------------------------------------------

    @app.get("/models/{model_id}/causal/dsep")
    def causal_dsep(model_id: str, x: str, y: str, z: str | None = Query(default=None)):
        state = store.get(model_id)
        doc = state.document
        try:
            separated = causal.d_separated(
                doc.dag,
                [_resolve_node(doc.dag, n) for n in _split_csv(x)],
                [_resolve_node(doc.dag, n) for n in _split_csv(y)],
                [_resolve_node(doc.dag, n) for n in _split_csv(z)],
            )
        except causal.CausalError as exc:
            raise HTTPException(422, str(exc)) from None
        return {"separated": separated}

    @app.get("/models/{model_id}/causal/trails")
    def causal_trails(model_id: str, x: str, y: str, z: str | None = Query(default=None)):
        state = store.get(model_id)
        doc = state.document
        try:
            trails = causal.d_connected_trails(
                doc.dag,
                [_resolve_node(doc.dag, n) for n in _split_csv(x)],
                [_resolve_node(doc.dag, n) for n in _split_csv(y)],
                [_resolve_node(doc.dag, n) for n in _split_csv(z)],
            )
        except causal.CausalError as exc:
            raise HTTPException(422, str(exc)) from None
        return {"trails": trails}

    @app.get("/models/{model_id}/causal/backdoor")
    def causal_backdoor(model_id: str, x: str, y: str, mode: str = Query(default="minimal")):
        state = store.get(model_id)
        doc = state.document
        try:
            sets = causal.backdoor_sets(
                doc.dag, _resolve_node(doc.dag, x), _resolve_node(doc.dag, y), mode
            )
        except causal.CandidateSpaceError as exc:
            raise HTTPException(422, str(exc)) from None
        except causal.CausalError as exc:
            raise HTTPException(422, str(exc)) from None
        return {"mode": mode, "sets": [list(s) for s in sets]}

    @app.get("/models/{model_id}/causal/frontdoor")
    def causal_frontdoor(model_id: str, x: str, y: str, m: str):
        state = store.get(model_id)
        doc = state.document
        try:
            ok = causal.frontdoor_check(
                doc.dag,
                _resolve_node(doc.dag, x),
                _resolve_node(doc.dag, y),
                [_resolve_node(doc.dag, n) for n in _split_csv(m)],
            )
        except causal.CausalError as exc:
            raise HTTPException(422, str(exc)) from None
        return {"satisfied": ok}

    @app.get("/models/{model_id}/causal/independencies/{node_ref}")
    def causal_independencies(model_id: str, node_ref: str):
        state = store.get(model_id)
        doc = state.document
        stmt = causal.local_independencies(doc.dag, _resolve_node(doc.dag, node_ref))
        return {
            "node": stmt.node,
            "independent_of": list(stmt.independent_of),
            "given": list(stmt.given),
            "statement": str(stmt),
        }

    @app.post("/models/{model_id}/interventions/posterior")
    def intervention_posterior(model_id: str, body: dict = Body(...)):
        state = store.get(model_id)
        doc = state.document
        target = _resolve_node(doc.dag, body.get("target", ""))
        target_state = _resolve_state(doc.dag.nodes[target], body.get("state"))
        intervention = {}
        for ref, value in (body.get("intervention") or {}).items():
            nid = _resolve_node(doc.dag, ref)
            intervention[nid] = _resolve_state(doc.dag.nodes[nid], value)
        evidence = {k: v for k, v in state.evidence.items() if k not in intervention}
        try:
            import warnings as _warnings

            with _warnings.catch_warnings():
                _warnings.simplefilter("ignore")
                probability = causal.interventional_posterior(
                    doc.dag, doc.cpts, evidence, intervention, target, target_state
                )
        except ContradictionError as exc:
            raise HTTPException(409, f"contradictory evidence after mutilation: {exc.evidence}") from None
        except IncompleteCptError as exc:
            raise HTTPException(422, f"CPTs not runtime-ready for nodes: {exc.nodes}") from None
        except causal.CausalError as exc:
            raise HTTPException(422, str(exc)) from None
        return {"target": target, "state": target_state, "probability": probability}

    @app.get("/models/{model_id}/interventions/rank")
    def intervention_rank(
        model_id: str,
        target: str,
        state_label: str = Query(alias="state"),
        candidates: str | None = Query(default=None),
    ):
        model_state = store.get(model_id)
        doc = model_state.document
        target_id = _resolve_node(doc.dag, target)
        target_state = _resolve_state(doc.dag.nodes[target_id], state_label)
        cand_ids = [_resolve_node(doc.dag, c) for c in _split_csv(candidates)] or None
        try:
            ranking = causal.rank_interventions(
                doc.dag, doc.cpts, model_state.evidence, target_id, target_state, cand_ids
            )
        except ContradictionError as exc:
            raise HTTPException(409, f"contradictory evidence: {exc.evidence}") from None
        except IncompleteCptError as exc:
            raise HTTPException(422, f"CPTs not runtime-ready for nodes: {exc.nodes}") from None
        return {
            "target": target_id,
            "state": target_state,
            "baseline": ranking.baseline,
            "entries": [
                {
                    "node": e.node_id,
                    "state_index": e.state_index,
                    "state": doc.dag.nodes[e.node_id].states[e.state_index],
                    "result": e.result,
                    "delta": e.delta,
                }
                for e in ranking.entries
            ],
        }

    return app
