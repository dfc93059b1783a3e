import pytest

from riskdag.bowtie import transform
from riskdag.casestudy import (
    MITIGATIVE_BARRIERS,
    ROLLBACK_ANSWERS,
    RETRY_STORM_ANSWERS,
    case_study_bowtie,
    cut_evidence,
    retry_storm_question_id,
    rollback_question_id,
)
from riskdag.causal import rank_interventions
from riskdag.cpt import validate_cpts
from riskdag.estimators import materialize_cpts
from riskdag.inference import posterior
from riskdag.questions import generate_questions, render_question_text


class TestBundledModel:
    def test_structure_and_tables_clean(self, case_study):
        assert case_study.dag.validate().ok
        assert validate_cpts(case_study.dag, case_study.cpts).findings == ()

    def test_activation_nodes_are_the_barriers(self, case_study):
        activation = {nid for nid, n in case_study.dag.nodes.items() if n.activation}
        assert activation == {
            "validation-gate", "canary-rollout", "queue-protection",
            "traffic-shedding", "automatic-rollback", "regional-isolation",
        }

    def test_consequence_states(self, case_study):
        assert case_study.dag.node("consequences").states == (
            "safe", "degraded service", "partial outage", "transaction loss"
        )

    def test_safe_probability_strictly_decreases_across_cuts(self, case_study):
        safes = []
        for cut in (1, 2, 3):
            table = posterior(case_study.dag, case_study.cpts, cut_evidence(cut), ["consequences"])
            safes.append(table["consequences"][0])
        assert safes[0] > safes[1] > safes[2]

    def test_cut3_ranking_strict_and_helpful(self, case_study):
        evidence = cut_evidence(3)
        ranking = rank_interventions(
            case_study.dag, case_study.cpts, evidence, "consequences", 3, MITIGATIVE_BARRIERS
        )
        works_results = {
            e.node_id: e.result for e in ranking.entries
            if case_study.dag.node(e.node_id).states[e.state_index] == "works"
        }
        assert set(works_results) == set(MITIGATIVE_BARRIERS)
        assert all(r <= ranking.baseline for r in works_results.values())
        ordered = sorted(works_results.values())
        assert ordered[0] < ordered[1] < ordered[2] < ranking.baseline
        assert min(works_results, key=works_results.get) == "regional-isolation"

    def test_every_barrier_works_never_hurts_under_cut3(self, case_study):
        evidence = cut_evidence(3)
        barriers = [nid for nid, n in case_study.dag.nodes.items() if n.activation]
        ranking = rank_interventions(
            case_study.dag, case_study.cpts, evidence, "consequences", 3, barriers
        )
        for e in ranking.entries:
            if case_study.dag.node(e.node_id).states[e.state_index] == "works":
                assert e.result <= ranking.baseline + 1e-12


class TestBundledElicitation:
    def test_rollback_question_text(self, case_study):
        q = next(
            q for q in generate_questions(case_study.dag, scope=["automatic-rollback"])
            if q.id == rollback_question_id()
        )
        assert render_question_text(q, case_study.dag) == (
            "What is the probability that Automatic Rollback=works, given that "
            "Faulty Change=true and Peak Load Window=true?"
        )

    def test_retry_storm_question_text(self, case_study):
        q = next(
            q for q in generate_questions(case_study.dag, scope=["retry-storm"])
            if q.id == retry_storm_question_id()
        )
        assert render_question_text(q, case_study.dag) == (
            "What is the probability that Retry Storm=sustained, given that "
            "High Latency=true and Traffic Shedding=fails?"
        )

    def test_ledger_values(self, case_study):
        rollback = case_study.answers.for_question(rollback_question_id())
        assert tuple(a.value for a in rollback) == ROLLBACK_ANSWERS
        retry = case_study.answers.for_question(retry_storm_question_id())
        assert tuple(a.value for a in retry) == RETRY_STORM_ANSWERS

    def test_materialize_reproduces_stored_rows(self, case_study):
        cpts, report = materialize_cpts(
            case_study.dag, case_study.cpts, case_study.answers,
            case_study.config, case_study.overrides,
        )
        rollback_row = cpts["automatic-rollback"].get_row((1, 1))
        assert rollback_row.values == pytest.approx((0.805, 0.195), abs=1e-12)
        retry_row = cpts["retry-storm"].get_row((1, 1))
        assert retry_row.values == pytest.approx((0.15, 0.4875, 0.3625), abs=1e-12)
        assert not report.invalid


class TestBowtieFixture:
    def test_element_counts(self):
        bowtie = case_study_bowtie()
        assert len(bowtie.threats) == 4
        assert len(bowtie.preventive_barriers) == 4
        assert len(bowtie.escalation_events) == 4
        assert len(bowtie.mitigative_barriers) == 5
        assert len(bowtie.consequences) == 3

    def test_transform_produces_expected_consequence_node(self):
        result = transform(case_study_bowtie())
        consequence = next(
            n for n in result.dag.nodes.values() if n.kind.value == "consequence"
        )
        assert consequence.states == (
            "safe", "degraded service", "partial outage", "transaction loss"
        )
        assert result.dag.validate().ok
