import random
from datetime import datetime, timedelta, timezone

import pytest

from riskdag.cpt import Cpt
from riskdag.graph import NodeKind, RiskDag, RiskNode
from riskdag.questions import (
    Answer,
    AnswerLedger,
    CaptureError,
    QUICK_SET_SCALE,
    StaleCptError,
    export_answers_csv,
    generate_questions,
    import_answers_csv,
    question_id,
    quick_set,
    render_question_text,
)

T0 = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def build_node(states, parent_cards, kind=NodeKind.EVENT):
    dag = RiskDag()
    for i, card in enumerate(parent_cards):
        dag = dag.add_node(
            RiskNode(f"p{i}", f"P{i}", NodeKind.CAUSE, tuple(f"s{j}" for j in range(card)))
        )
    dag = dag.add_node(RiskNode("x", "X", kind, tuple(states)))
    for i in range(len(parent_cards)):
        dag = dag.add_edge(f"p{i}", "x")
    return dag


class TestGeneration:
    def test_binary_node_two_binary_parents(self):
        qs = generate_questions(build_node(("f", "t"), [2, 2]), scope=["x"])
        assert len(qs) == 4
        assert all(q.state_index == 0 for q in qs)

    def test_three_state_node_one_binary_parent(self):
        qs = generate_questions(build_node(("a", "b", "c"), [2]), scope=["x"])
        assert len(qs) == 4

    def test_case_style_consequence_count(self):
        dag = build_node(("safe", "degraded", "outage", "loss"), [2, 2, 2], NodeKind.CONSEQUENCE)
        qs = generate_questions(dag, scope=["x"])
        assert len(qs) == 8 * 3

    def test_count_formula_randomized(self):
        rng = random.Random(4)
        for _ in range(25):
            cards = [rng.randint(2, 4) for _ in range(rng.randint(0, 3))]
            k = rng.randint(2, 5)
            dag = build_node([f"s{i}" for i in range(k)], cards)
            qs = generate_questions(dag, scope=["x"])
            expected = (k - 1)
            for c in cards:
                expected *= c
            assert len(qs) == expected

    def test_last_state_never_asked(self):
        dag = build_node(("a", "b", "c"), [2])
        assert {q.state_index for q in generate_questions(dag, scope=["x"])} == {0, 1}

    def test_order_rows_then_state(self):
        dag = build_node(("a", "b", "c"), [2])
        qs = generate_questions(dag, scope=["x"])
        assert [(q.config, q.state_index) for q in qs] == [
            ((0,), 0), ((0,), 1), ((1,), 0), ((1,), 1)
        ]

    def test_gates_skipped(self):
        from riskdag.bowtie import BowtieModel, Gate, transform

        result = transform(
            BowtieModel(
                top_event="top", threats=("t1", "t2"),
                gates=(Gate("g", "OR", ("t1", "t2")),), consequences=("loss",),
            )
        )
        qs = generate_questions(result.dag, result.cpts)
        assert not [q for q in qs if q.node_id == result.dag.resolve("g")]

    def test_stale_cpt_rejected(self):
        dag = build_node(("f", "t"), [2])
        cpts = {"x": Cpt.for_node(dag, "x")}
        dag2 = dag.add_node(RiskNode("new", "N", NodeKind.CAUSE, ("f", "t"))).add_edge("new", "x")
        with pytest.raises(StaleCptError):
            generate_questions(dag2, cpts, scope=["x"])

    def test_ids_injective_and_stable(self):
        rng = random.Random(8)
        seen = {}
        for _ in range(50):
            cards = [rng.randint(2, 3) for _ in range(rng.randint(0, 3))]
            dag = build_node(["a", "b", "c"], cards)
            for q in generate_questions(dag, scope=["x"]):
                key = (q.node_id, q.state_index, q.config)
                if q.id in seen:
                    assert seen[q.id] == key
                seen[q.id] = key
        assert question_id("x", 0, (1, 2)) == question_id("x", 0, (1, 2))
        assert question_id("x", 0, (1, 2)) != question_id("x", 0, (2, 1))


class TestRendering:
    def test_paper_style_three_parents(self):
        # the modeler orders the elicited state first; "false" is derived
        dag = RiskDag()
        dag = dag.add_node(RiskNode("fc", "Faulty Change", NodeKind.CAUSE, ("false", "true")))
        dag = dag.add_node(RiskNode("plw", "Peak Load Window", NodeKind.CONTEXT, ("false", "true")))
        dag = dag.add_node(RiskNode("cr", "Canary Rollout", NodeKind.BARRIER, ("works", "fails")))
        dag = dag.add_node(RiskNode("sd", "Service Degradation", NodeKind.TOP_EVENT, ("true", "false")))
        for p in ("fc", "plw", "cr"):
            dag = dag.add_edge(p, "sd")
        (q,) = [
            q for q in generate_questions(dag, scope=["sd"])
            if q.config == (1, 1, 1) and q.state_index == 0
        ]
        assert render_question_text(q, dag) == (
            "What is the probability that Service Degradation=true, given that "
            "Faulty Change=true, Peak Load Window=true, and Canary Rollout=fails?"
        )

    def test_root_no_preconditions(self):
        dag = build_node(("f", "t"), [])
        (q,) = generate_questions(dag, scope=["x"])
        assert render_question_text(q, dag).endswith("given no preconditions?")

    def test_two_parents_use_plain_and(self):
        dag = build_node(("f", "t"), [2, 2])
        q = generate_questions(dag, scope=["x"])[0]
        text = render_question_text(q, dag)
        assert "P0=s0 and P1=s0" in text and ", and" not in text

    def test_rename_changes_text_not_id(self):
        dag = build_node(("f", "t"), [2])
        q = generate_questions(dag, scope=["x"])[0]
        before = render_question_text(q, dag)
        dag2 = dag.rename("x", "Latency Spike")
        q2 = generate_questions(dag2, scope=["x"])[0]
        assert q2.id == q.id
        assert "Latency Spike" in render_question_text(q2, dag2)
        assert before != render_question_text(q2, dag2)


class TestQuickSet:
    def test_declared_mapping(self):
        assert quick_set("Medium") == 0.5
        assert quick_set("None") == 0.0
        assert quick_set("Evidence") == 1.0
        assert QUICK_SET_SCALE == {
            "None": 0.0, "Very low": 0.05, "Low": 0.2, "Medium": 0.5,
            "High": 0.8, "Very high": 0.95, "Evidence": 1.0,
        }

    def test_unknown_label(self):
        with pytest.raises(CaptureError, match="quick-set"):
            quick_set("Mediumish")


class TestLedger:
    def test_append_and_lookup(self):
        ledger = AnswerLedger()
        ledger.append(Answer("q1", 0.4, T0, "alice"))
        ledger.append(Answer("q1", 0.6, T0 + timedelta(minutes=1), "bob"))
        ledger.append(Answer("q2", 0.1, T0))
        assert [a.value for a in ledger.for_question("q1")] == [0.4, 0.6]
        assert len(ledger) == 3

    def test_chronology_enforced_per_question(self):
        ledger = AnswerLedger()
        ledger.append(Answer("q1", 0.4, T0))
        with pytest.raises(CaptureError, match="older"):
            ledger.append(Answer("q1", 0.5, T0 - timedelta(seconds=1)))
        ledger.append(Answer("q2", 0.5, T0 - timedelta(days=1)))  # other questions free

    def test_value_range_and_origin(self):
        with pytest.raises(CaptureError):
            Answer("q", 1.2, T0)
        with pytest.raises(CaptureError):
            Answer("q", 0.5, T0, origin="psychic")

    def test_timestamps_normalized_to_utc_seconds(self):
        a = Answer("q", 0.5, datetime(2026, 3, 1, 13, 0, 0, 123456))
        assert a.timestamp.tzinfo == timezone.utc
        assert a.timestamp.microsecond == 0

    def test_csv_roundtrip(self):
        ledger = AnswerLedger()
        ledger.append(Answer("q1", 0.4, T0, "alice", "manual"))
        ledger.append(Answer("q2", 0.8, T0 + timedelta(seconds=90), "bob", "quick-set"))
        ledger.append(Answer("q1", 0.55, T0 + timedelta(hours=2), "carol"))
        text = export_answers_csv(ledger)
        again = import_answers_csv(text)
        assert again == ledger
        assert export_answers_csv(again) == text

    def test_csv_errors_carry_line_numbers(self):
        with pytest.raises(CaptureError, match="header"):
            import_answers_csv("nope\n")
        bad = "question_id,value,timestamp,respondent,origin\nq1,1.7,2026-01-01T00:00:00Z,a,manual\n"
        with pytest.raises(CaptureError, match="line 2"):
            import_answers_csv(bad)
