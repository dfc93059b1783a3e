import itertools

import pytest

from riskdag.bowtie import (
    BowtieError,
    BowtieModel,
    EscalationEvent,
    Gate,
    MitigativeBarrier,
    ModelWarning,
    PreventiveBarrier,
    mark_activation,
    synthesize_gate_cpt,
    transform,
)
from riskdag.casestudy import case_study_bowtie
from riskdag.cpt import CptError
from riskdag.graph import NodeKind, SAFE_STATE
from riskdag.model_io import ModelDocument, export_xml


def minimal_bowtie(**kw):
    defaults = dict(top_event="top", threats=("threat",), consequences=("loss",))
    defaults.update(kw)
    return BowtieModel(**defaults)


class TestTransform:
    def test_minimal_three_nodes(self):
        result = transform(minimal_bowtie())
        assert result.report.node_count == 3
        consequence = next(
            n for n in result.dag.nodes.values() if n.kind is NodeKind.CONSEQUENCE
        )
        assert consequence.states == ("safe", "loss")
        assert result.dag.validate().ok

    def test_safe_is_state_zero_and_count(self):
        result = transform(minimal_bowtie(consequences=("degraded", "outage", "loss")))
        consequence = next(
            n for n in result.dag.nodes.values() if n.kind is NodeKind.CONSEQUENCE
        )
        assert consequence.states[0] == SAFE_STATE
        assert len(consequence.states) == 4

    def test_and_gate_gets_deterministic_cpt(self):
        result = transform(
            minimal_bowtie(threats=("t1", "t2"), gates=(Gate("g", "AND", ("t1", "t2")),))
        )
        gate_id = result.dag.resolve("g")
        assert result.dag.node(gate_id).kind is NodeKind.GATE_AND
        cpt = result.cpts[gate_id]
        assert cpt.get_row((1, 1)).values == (0.0, 1.0)
        assert cpt.get_row((0, 1)).values == (1.0, 0.0)
        # gated threats feed the gate, not the top event
        assert result.dag.parents(result.dag.resolve("top")) == (gate_id,)

    def test_case_study_bowtie_consequence_states(self):
        result = transform(case_study_bowtie())
        consequence = next(
            n for n in result.dag.nodes.values() if n.kind is NodeKind.CONSEQUENCE
        )
        assert consequence.states == ("safe", "degraded service", "partial outage", "transaction loss")
        assert result.dag.validate().ok
        report = result.report
        assert report.node_count == len(result.dag)
        assert report.edge_count == len(result.dag.edges)
        # every bowtie element mapped
        assert len(report.mappings) == 4 + 1 + 4 + 1 + 4 + 5 + 1

    def test_barriers_are_activation_with_works_fails(self):
        result = transform(minimal_bowtie(preventive_barriers=(PreventiveBarrier("guard"),)))
        barrier = result.dag.node(result.dag.resolve("guard"))
        assert barrier.kind is NodeKind.BARRIER
        assert barrier.states == ("works", "fails")
        assert barrier.activation

    def test_escalation_chain_left_to_right(self):
        result = transform(
            minimal_bowtie(
                escalation_events=(EscalationEvent("e1"), EscalationEvent("e2")),
                mitigative_barriers=(MitigativeBarrier("m", guards=("e2",)),),
            )
        )
        dag = result.dag
        top, e1, e2, cons, m = (dag.resolve(x) for x in ("top", "e1", "e2", "consequences", "m"))
        assert (top, e1) in dag.edges
        assert (e1, e2) in dag.edges
        assert (e2, cons) in dag.edges
        assert (m, e2) in dag.edges

    def test_unattached_mitigative_barrier_guards_consequence(self):
        result = transform(minimal_bowtie(mitigative_barriers=(MitigativeBarrier("m"),)))
        dag = result.dag
        assert (dag.resolve("m"), dag.resolve("consequences")) in dag.edges

    def test_deterministic_output(self):
        b = case_study_bowtie()
        r1, r2 = transform(b), transform(b)
        assert r1.dag == r2.dag
        assert list(r1.dag.nodes) == list(r2.dag.nodes)
        assert export_xml(ModelDocument(dag=r1.dag, cpts=r1.cpts)) == export_xml(
            ModelDocument(dag=r2.dag, cpts=r2.cpts)
        )

    def test_transform_output_always_validates(self):
        variants = [
            minimal_bowtie(),
            minimal_bowtie(threats=("a", "b", "c")),
            minimal_bowtie(
                threats=("a", "b"),
                gates=(Gate("g1", "OR", ("a",)), Gate("g2", "AND", ("g1", "b"))),
                preventive_barriers=(PreventiveBarrier("pb"),),
                escalation_events=(EscalationEvent("e1", ("none", "some", "bad")),),
                mitigative_barriers=(MitigativeBarrier("mb", guards=("e1",)),),
                consequences=("c1", "c2"),
            ),
        ]
        for bowtie in variants:
            result = transform(bowtie)
            assert result.dag.validate().ok
            assert result.dag.topological_order()

    def test_malformed_bowties_rejected(self):
        with pytest.raises(BowtieError, match="consequence"):
            transform(BowtieModel(top_event="top", threats=("t",), consequences=()))
        with pytest.raises(BowtieError, match="unique"):
            transform(minimal_bowtie(consequences=("loss", "loss")))
        with pytest.raises(BowtieError, match="duplicate"):
            transform(minimal_bowtie(threats=("x", "x")))
        with pytest.raises(BowtieError, match="not a declared"):
            transform(minimal_bowtie(gates=(Gate("g", "AND", ("ghost",)),)))
        with pytest.raises(BowtieError, match="reserved"):
            transform(minimal_bowtie(consequences=("safe",)))


class TestGateCpt:
    def test_and_definition(self):
        cpt = synthesize_gate_cpt("AND", 2)
        assert cpt.get_row((1, 1)).values == (0.0, 1.0)
        assert cpt.get_row((1, 0)).values == (1.0, 0.0)

    def test_or_definition(self):
        cpt = synthesize_gate_cpt("OR", 2)
        assert cpt.get_row((0, 0)).values == (1.0, 0.0)
        assert cpt.get_row((0, 1)).values == (0.0, 1.0)

    def test_and_three_parents_single_true_row(self):
        cpt = synthesize_gate_cpt("AND", 3)
        rows = [cpt.get_row(cfg).values for cfg in itertools.product((0, 1), repeat=3)]
        assert len(rows) == 8
        assert sum(1 for r in rows if r == (0.0, 1.0)) == 1

    def test_exhaustive_up_to_six_parents(self):
        for n in range(1, 7):
            for kind, combine in (("AND", all), ("OR", any)):
                cpt = synthesize_gate_cpt(kind, n)
                for cfg in itertools.product((0, 1), repeat=n):
                    row = cpt.get_row(cfg).values
                    assert sum(row) == 1.0
                    assert set(row) <= {0.0, 1.0}
                    assert row[1] == (1.0 if combine(map(bool, cfg)) else 0.0)

    def test_bad_kind_and_count(self):
        with pytest.raises(CptError):
            synthesize_gate_cpt("XOR", 2)
        with pytest.raises(CptError):
            synthesize_gate_cpt("AND", 0)


class TestMarkActivation:
    def test_barrier_silent(self, recwarn):
        result = transform(minimal_bowtie(preventive_barriers=(PreventiveBarrier("guard"),)))
        dag = mark_activation(result.dag, result.dag.resolve("guard"), True)
        assert dag.node(result.dag.resolve("guard")).activation
        assert not [w for w in recwarn if issubclass(w.category, ModelWarning)]

    def test_cause_warns_but_applies(self):
        result = transform(minimal_bowtie())
        threat = result.dag.resolve("threat")
        with pytest.warns(ModelWarning, match="unusual"):
            dag = mark_activation(result.dag, threat, True)
        assert dag.node(threat).activation

    def test_unknown_node(self):
        result = transform(minimal_bowtie())
        with pytest.raises(Exception):
            mark_activation(result.dag, "ghost", True)

    def test_flag_independent_of_evidence_source(self):
        from riskdag.graph import Endpoint, RiskDag, RiskNode

        dag = RiskDag().add_node(
            RiskNode(
                "b", "B", NodeKind.BARRIER, ("works", "fails"),
                evidence_source=Endpoint("http://x/status", "poll"),
            )
        )
        dag = mark_activation(dag, "b", True)
        node = dag.node("b")
        assert node.activation and node.evidence_source is not None
