"""Command-line front end. Machine-readable JSON on stdout, diagnostics on
stderr; exit 0 on success, 1 on model/engine errors, 2 on usage errors."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import causal
from .bowtie import BowtieError, transform
from .casestudy import case_study_model
from .cpt import CptError, validate_cpts
from .estimators import ESTIMATORS, EstimatorError, materialize_cpts, summarize_question
from .graph import GraphError, RiskDag
from .inference import InferenceError, posterior
from .model_io import ModelDocument, ModelIOError, export_xml, import_xml
from .questions import (
    CaptureError,
    export_answers_csv,
    generate_questions,
    import_answers_csv,
    question_record,
)

ENGINE_ERRORS = (
    GraphError,
    CptError,
    CaptureError,
    EstimatorError,
    InferenceError,
    causal.CausalError,
    ModelIOError,
    BowtieError,
    OSError,
)


def _load(path: str) -> ModelDocument:
    return import_xml(Path(path).read_bytes())


def _write_model(document: ModelDocument, path: str | None) -> None:
    data = export_xml(document)
    if path:
        Path(path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _parse_assignments(dag: RiskDag, pairs: list[str], what: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for pair in pairs:
        if "=" not in pair:
            raise CaptureError(f"{what} must look like node=state, got {pair!r}")
        ref, label = pair.split("=", 1)
        nid = dag.resolve(ref.strip())
        node = dag.node(nid)
        label = label.strip()
        if label.isdigit() and label not in node.states:
            idx = int(label)
            if not 0 <= idx < node.k:
                raise GraphError(f"state index {idx} out of range for {nid!r}")
            out[nid] = idx
        else:
            out[nid] = node.state_index(label)
    return out


def _split(refs: str | None, dag: RiskDag) -> list[str]:
    return [dag.resolve(r.strip()) for r in (refs or "").split(",") if r.strip()]


def _vector_payload(dag: RiskDag, table) -> dict:
    return {
        nid: {"states": list(dag.node(nid).states), "probabilities": list(vec)}
        for nid, vec in table.items()
    }


def cmd_transform(args) -> int:
    document = _load(args.model)
    if document.bowtie is None:
        raise BowtieError("model file has no bowtie section to transform")
    result = transform(document.bowtie)
    out = ModelDocument(
        dag=result.dag,
        cpts=result.cpts,
        config=document.config,
        overrides=document.overrides,
        answers=document.answers,
        bowtie=document.bowtie,
    )
    _write_model(out, args.output)
    print(
        json.dumps(
            {
                "nodes": result.report.node_count,
                "edges": result.report.edge_count,
                "warnings": list(result.report.warnings),
            }
        ),
        file=sys.stderr,
    )
    return 0


def cmd_validate(args) -> int:
    document = _load(args.model)
    structure = document.dag.validate()
    tables = validate_cpts(document.dag, document.cpts)
    findings = [
        {"code": f.code, "message": f.message, "nodes": list(f.nodes)}
        for f in structure.findings + tables.findings
    ]
    warnings = [
        {"code": f.code, "message": f.message, "nodes": list(f.nodes)}
        for f in structure.warnings + tables.warnings
    ]
    _emit({"findings": findings, "warnings": warnings, "runtime_ready": not findings})
    return 0 if not findings else 1


def cmd_questions(args) -> int:
    document = _load(args.model)
    scope = _split(args.scope, document.dag) or None
    questions = generate_questions(document.dag, document.cpts, scope, document.overrides)
    records = [question_record(q, document.dag) for q in questions]
    if args.format == "text":
        for r in records:
            sys.stdout.write(f"[{r['id']}] {r['text']}\n")
    else:
        _emit(records)
    return 0


def cmd_answers(args) -> int:
    document = _load(args.model)
    if args.action == "export":
        sys.stdout.write(export_answers_csv(document.answers))
        return 0
    import_answers_csv(Path(args.answers).read_text(), into=document.answers)
    _write_model(document, args.output or args.model)
    print(f"ledger now holds {len(document.answers)} answers", file=sys.stderr)
    return 0


def cmd_estimate(args) -> int:
    document = _load(args.model)
    cfg = document.config
    if args.estimator:
        cfg = replace(cfg, estimator=args.estimator)
    scope = _split(args.scope, document.dag) or None
    questions = generate_questions(document.dag, document.cpts, scope, document.overrides)
    rows = []
    for q in questions:
        answers = document.answers.for_question(q.id)
        if args.question and q.id != args.question:
            continue
        if not answers and not args.all:
            continue
        s = summarize_question(q, answers, cfg)
        rows.append(
            {
                "question_id": q.id,
                "text": question_record(q, document.dag)["text"],
                "n": s.n,
                "values": list(s.values),
                "estimate": s.location,
                "estimates": dict(s.estimates),
                "sample_sd": s.sample_sd,
                "spread": list(s.spread) if s.spread else None,
                "anchored_interval": list(s.anchored_interval) if s.anchored_interval else None,
                "consensus_sd": s.consensus_sd,
                "consensus_interval": list(s.consensus_interval) if s.consensus_interval else None,
            }
        )
    _emit(rows)
    return 0


def cmd_materialize(args) -> int:
    document = _load(args.model)
    cfg = document.config
    if args.estimator:
        cfg = replace(cfg, estimator=args.estimator)
    new_cpts, report = materialize_cpts(
        document.dag, document.cpts, document.answers, cfg, document.overrides
    )
    out = replace(document, cpts=new_cpts)
    _write_model(out, args.output or args.model)
    _emit(
        {
            "filled": [{"node": n, "config": list(c)} for n, c in report.filled],
            "skipped": [{"node": n, "config": list(c), "reason": r} for n, c, r in report.skipped],
            "invalid": [{"node": n, "config": list(c), "sum": s} for n, c, s in report.invalid],
        }
    )
    return 0


def cmd_infer(args) -> int:
    document = _load(args.model)
    evidence = _parse_assignments(document.dag, args.evidence or [], "evidence")
    query = _split(args.nodes, document.dag) or None
    table = posterior(document.dag, document.cpts, evidence, query)
    _emit(_vector_payload(document.dag, table))
    return 0


def cmd_dsep(args) -> int:
    document = _load(args.model)
    dag = document.dag
    separated = causal.d_separated(dag, _split(args.x, dag), _split(args.y, dag), _split(args.z, dag))
    trails = causal.d_connected_trails(dag, _split(args.x, dag), _split(args.y, dag), _split(args.z, dag))
    _emit({"separated": separated, "active_trails": trails})
    return 0


def cmd_backdoor(args) -> int:
    document = _load(args.model)
    dag = document.dag
    sets = causal.backdoor_sets(dag, dag.resolve(args.x), dag.resolve(args.y), args.mode)
    _emit({"mode": args.mode, "sets": [list(s) for s in sets]})
    return 0


def cmd_frontdoor(args) -> int:
    document = _load(args.model)
    dag = document.dag
    ok = causal.frontdoor_check(dag, dag.resolve(args.x), dag.resolve(args.y), _split(args.m, dag))
    _emit({"satisfied": ok})
    return 0


def cmd_do(args) -> int:
    document = _load(args.model)
    dag = document.dag
    intervention = _parse_assignments(dag, args.set or [], "intervention")
    evidence = _parse_assignments(dag, args.evidence or [], "evidence")
    overlap = set(evidence) & set(intervention)
    if overlap:
        raise causal.CausalError(f"evidence and intervention overlap on {sorted(overlap)}")
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        cut_dag, cut_cpts = causal.do_transform(dag, document.cpts, intervention)
    query = _split(args.nodes, dag) or None
    table = posterior(cut_dag, cut_cpts, evidence, query)
    _emit(_vector_payload(dag, table))
    return 0


def cmd_rank(args) -> int:
    document = _load(args.model)
    dag = document.dag
    target = dag.resolve(args.target)
    node = dag.node(target)
    state = node.state_index(args.state) if args.state in node.states else int(args.state)
    evidence = _parse_assignments(dag, args.evidence or [], "evidence")
    candidates = _split(args.candidates, dag) or None
    ranking = causal.rank_interventions(dag, document.cpts, evidence, target, state, candidates)
    _emit(
        {
            "target": target,
            "state": state,
            "baseline": ranking.baseline,
            "entries": [
                {
                    "node": e.node_id,
                    "state": dag.node(e.node_id).states[e.state_index],
                    "result": e.result,
                    "delta": e.delta,
                }
                for e in ranking.entries
            ],
        }
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app, load_service_config

    cfg = load_service_config(args.config)
    if args.host:
        cfg = ServiceConfig(args.host, cfg.port, cfg.persist_dir, cfg.token_ttl)
    if args.port:
        cfg = ServiceConfig(cfg.host, args.port, cfg.persist_dir, cfg.token_ttl)
    if args.persist_dir:
        cfg = ServiceConfig(cfg.host, cfg.port, args.persist_dir, cfg.token_ttl)
    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
    return 0


def cmd_export(args) -> int:
    document = _load(args.model)
    _write_model(document, args.output)
    return 0


def cmd_import(args) -> int:
    document = _load(args.model)
    report = document.dag.validate()
    if report.findings:
        print(f"{len(report.findings)} validation findings carried along", file=sys.stderr)
    _write_model(document, args.output)
    return 0


def cmd_demo(args) -> int:
    _write_model(case_study_model(), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskdag",
        description="Bowtie-derived Bayesian risk models: transform, capture, infer, intervene.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def model_cmd(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("model", help="model XML file")
        p.set_defaults(func=func)
        return p

    p = model_cmd("transform", cmd_transform, "turn the bowtie section into a runtime DAG")
    p.add_argument("-o", "--output", help="output model file (default: stdout)")

    model_cmd("validate", cmd_validate, "structure and CPT findings; exit 1 when any")

    p = model_cmd("questions", cmd_questions, "emit the questionnaire")
    p.add_argument("--scope", help="comma list of node ids/names")
    p.add_argument("--format", choices=("json", "text"), default="json")

    p = sub.add_parser("answers", help="import or export the answer ledger")
    p.add_argument("action", choices=("import", "export"))
    p.add_argument("model", help="model XML file")
    p.add_argument("answers", nargs="?", help="CSV file (import)")
    p.add_argument("-o", "--output", help="output model file (import; default: in place)")
    p.set_defaults(func=cmd_answers)

    p = model_cmd("estimate", cmd_estimate, "per-question estimates and noise table")
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("--scope", help="comma list of node ids/names")
    p.add_argument("--question", help="limit to one question id")
    p.add_argument("--all", action="store_true", help="include unanswered questions")

    p = model_cmd("materialize", cmd_materialize, "fill CPT rows from the ledger")
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("-o", "--output", help="output model file (default: in place)")

    p = model_cmd("infer", cmd_infer, "posterior marginals under evidence")
    p.add_argument("--evidence", "-e", action="append", metavar="NODE=STATE")
    p.add_argument("--nodes", help="comma list of query nodes (default: all)")

    p = model_cmd("dsep", cmd_dsep, "d-separation and active trails")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", default="")

    p = model_cmd("backdoor", cmd_backdoor, "backdoor adjustment sets")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--mode", choices=("minimal", "all"), default="minimal")

    p = model_cmd("frontdoor", cmd_frontdoor, "frontdoor criterion check")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--m", required=True, help="comma list of mediator nodes")

    p = model_cmd("do", cmd_do, "posterior under do-interventions")
    p.add_argument("--set", "-s", action="append", metavar="NODE=STATE", required=True)
    p.add_argument("--evidence", "-e", action="append", metavar="NODE=STATE")
    p.add_argument("--nodes", help="comma list of query nodes")

    p = model_cmd("rank", cmd_rank, "rank single-node interventions for a target state")
    p.add_argument("--target", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--evidence", "-e", action="append", metavar="NODE=STATE")
    p.add_argument("--candidates", help="comma list (default: activation nodes)")

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--persist-dir")
    p.set_defaults(func=cmd_serve)

    p = model_cmd("export", cmd_export, "canonical XML to stdout or a file")
    p.add_argument("-o", "--output")

    p = model_cmd("import", cmd_import, "parse, validate, and re-emit canonical XML")
    p.add_argument("-o", "--output")

    p = sub.add_parser("demo", help="write the bundled instant-payments example model")
    p.add_argument("-o", "--output", help="output model file (default: stdout)")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ENGINE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
