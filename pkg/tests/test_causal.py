import random

import pytest

from riskdag.bowtie import ModelWarning
from riskdag.causal import (
    CandidateSpaceError,
    CausalError,
    backdoor_sets,
    d_connected_trails,
    d_separated,
    do_transform,
    frontdoor_check,
    interventional_posterior,
    is_backdoor_set,
    local_independencies,
    rank_interventions,
)
from riskdag.cpt import Cpt
from riskdag.graph import NodeKind, RiskDag, RiskNode
from riskdag.inference import posterior

from conftest import make_random_dag, make_random_model, oracle_d_separated


def dag_of(*edges, nodes=None, states=("f", "t")):
    ids = nodes or sorted({n for e in edges for n in e})
    dag = RiskDag()
    for nid in ids:
        dag = dag.add_node(RiskNode(nid, nid.upper(), NodeKind.EVENT, states))
    for p, c in edges:
        dag = dag.add_edge(p, c)
    return dag


class TestDSeparation:
    def test_chain_blocked_by_middle(self):
        dag = dag_of(("a", "b"), ("b", "c"))
        assert d_separated(dag, "a", "c", "b") is True
        assert d_separated(dag, "a", "c") is False

    def test_collider_textbook(self):
        dag = dag_of(("a", "c"), ("b", "c"))
        assert d_separated(dag, "a", "b") is True
        assert d_separated(dag, "a", "b", "c") is False

    def test_collider_descendant_opens(self):
        dag = dag_of(("a", "c"), ("b", "c"), ("c", "d"))
        assert d_separated(dag, "a", "b", "d") is False

    def test_overlapping_sets_rejected(self):
        dag = dag_of(("a", "b"))
        with pytest.raises(CausalError, match="disjoint"):
            d_separated(dag, "a", "a")

    def test_matches_path_enumeration_oracle(self):
        rng = random.Random(77)
        for _ in range(60):
            dag = make_random_dag(rng, max_nodes=10)
            ids = list(dag.nodes)
            if len(ids) < 2:
                continue
            x, y = rng.sample(ids, 2)
            rest = [n for n in ids if n not in (x, y)]
            z = rng.sample(rest, rng.randint(0, len(rest)))
            assert d_separated(dag, x, y, z) == oracle_d_separated(dag, {x}, {y}, set(z))


class TestTrails:
    def test_chain_single_trail(self):
        dag = dag_of(("a", "b"), ("b", "c"))
        assert d_connected_trails(dag, "a", "c") == [["a", "b", "c"]]
        assert d_connected_trails(dag, "a", "c", "b") == []

    def test_diamond_fork_active_collider_blocked(self):
        dag = dag_of(("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"))
        trails = d_connected_trails(dag, "b", "c")
        assert ["b", "a", "c"] in trails
        assert ["b", "d", "c"] not in trails
        trails_given_d = d_connected_trails(dag, "b", "c", "d")
        assert ["b", "d", "c"] in trails_given_d

    def test_ordering_by_length_then_lex(self):
        dag = dag_of(("a", "z"), ("z", "y"), ("a", "b"), ("b", "c"), ("c", "y"))
        trails = d_connected_trails(dag, "a", "y")
        assert trails == sorted(trails, key=lambda t: (len(t), t))

    def test_empty_iff_separated(self):
        rng = random.Random(13)
        for _ in range(40):
            dag = make_random_dag(rng, max_nodes=8)
            ids = list(dag.nodes)
            x, y = rng.sample(ids, 2)
            rest = [n for n in ids if n not in (x, y)]
            z = rng.sample(rest, rng.randint(0, len(rest)))
            assert (d_connected_trails(dag, x, y, z) == []) == d_separated(dag, x, y, z)


class TestBackdoor:
    def test_single_confounder(self):
        dag = dag_of(("z", "x"), ("z", "y"), ("x", "y"))
        assert backdoor_sets(dag, "x", "y", "minimal") == [("z",)]

    def test_no_backdoor_path_empty_set(self):
        dag = dag_of(("x", "y"))
        assert backdoor_sets(dag, "x", "y", "minimal") == [()]

    def test_all_mode_is_superset_of_minimal(self):
        dag = dag_of(("z", "x"), ("z", "y"), ("w", "z"), ("x", "y"))
        minimal = backdoor_sets(dag, "x", "y", "minimal")
        all_sets = backdoor_sets(dag, "x", "y", "all")
        assert set(minimal) <= set(all_sets)
        assert ("z",) in minimal
        assert ("w", "z") in all_sets

    def test_descendants_of_x_never_candidates(self):
        dag = dag_of(("z", "x"), ("z", "y"), ("x", "m"), ("m", "y"))
        for s in backdoor_sets(dag, "x", "y", "all"):
            assert "m" not in s

    def test_every_returned_set_passes_recheck_and_minimality(self):
        import itertools

        rng = random.Random(91)
        for _ in range(30):
            dag = make_random_dag(rng, max_nodes=7)
            ids = list(dag.nodes)
            x, y = rng.sample(ids, 2)
            try:
                minimal = backdoor_sets(dag, x, y, "minimal")
            except CandidateSpaceError:
                continue
            for z in minimal:
                assert is_backdoor_set(dag, x, y, z)
                # exhaustive subset check: no qualifying proper subset
                assert not any(
                    is_backdoor_set(dag, x, y, sub)
                    for r in range(len(z))
                    for sub in itertools.combinations(z, r)
                )

    def test_candidate_cap(self):
        dag = RiskDag()
        ids = [f"n{i:02d}" for i in range(24)]
        for nid in ids:
            dag = dag.add_node(RiskNode(nid, nid, NodeKind.EVENT, ("f", "t")))
        for nid in ids[2:]:
            dag = dag.add_edge(nid, ids[0])
            dag = dag.add_edge(nid, ids[1])
        with pytest.raises(CandidateSpaceError):
            backdoor_sets(dag, ids[0], ids[1], "all")


class TestFrontdoor:
    def classic(self):
        # u -> x, u -> y, x -> m, m -> y
        return dag_of(("u", "x"), ("u", "y"), ("x", "m"), ("m", "y"))

    def test_textbook_true(self):
        assert frontdoor_check(self.classic(), "x", "y", ["m"]) is True

    def test_empty_mediators_false(self):
        assert frontdoor_check(self.classic(), "x", "y", []) is False

    def test_mediator_off_path_false(self):
        dag = dag_of(("u", "x"), ("u", "y"), ("x", "m"), ("m", "y"), ("x", "y"))
        # direct x->y edge is not intercepted
        assert frontdoor_check(dag, "x", "y", ["m"]) is False

    def test_confounded_mediator_false(self):
        dag = dag_of(("u", "x"), ("u", "y"), ("x", "m"), ("m", "y"), ("w", "x"), ("w", "m"))
        assert frontdoor_check(dag, "x", "y", ["m"]) is False


class TestLocalIndependencies:
    def test_chain_tail(self):
        dag = dag_of(("a", "b"), ("b", "c"))
        stmt = local_independencies(dag, "c")
        assert stmt.independent_of == ("a",)
        assert stmt.given == ("b",)

    def test_isolated_root(self):
        dag = dag_of(("a", "b"), nodes=["a", "b", "lone"])
        stmt = local_independencies(dag, "lone")
        assert set(stmt.independent_of) == {"a", "b"}
        assert stmt.given == ()

    def test_every_statement_passes_dsep_on_random_dags(self):
        rng = random.Random(19)
        for _ in range(40):
            dag = make_random_dag(rng, max_nodes=8)
            for nid in dag.nodes:
                stmt = local_independencies(dag, nid)
                if stmt.independent_of:
                    assert d_separated(dag, [stmt.node], stmt.independent_of, stmt.given)


class TestDoTransform:
    @pytest.mark.filterwarnings("ignore::riskdag.bowtie.ModelWarning")
    def test_root_do_equals_observation(self, chain_ab):
        dag, cpts = chain_ab
        cut_dag, cut_cpts = do_transform(dag, cpts, {"a": 1})
        do_b = posterior(cut_dag, cut_cpts, {}, ["b"])["b"]
        see_b = posterior(dag, cpts, {"a": 1}, ["b"])["b"]
        assert do_b == pytest.approx(see_b, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::riskdag.bowtie.ModelWarning")
    def test_edges_cut_and_parents_untouched(self, chain_ab):
        dag, cpts = chain_ab
        cut_dag, cut_cpts = do_transform(dag, cpts, {"b": 0})
        assert cut_dag.parents("b") == ()
        assert cut_cpts["b"].get_row(()).values == (1.0, 0.0)
        assert posterior(cut_dag, cut_cpts, {}, ["a"])["a"] == pytest.approx((0.7, 0.3))
        assert cut_cpts["a"] is cpts["a"]

    def test_warning_on_non_activation_target(self, chain_ab):
        dag, cpts = chain_ab
        with pytest.warns(ModelWarning, match="non-activation"):
            do_transform(dag, cpts, {"b": 0})

    def test_bad_state_rejected(self, chain_ab):
        dag, cpts = chain_ab
        with pytest.raises(CausalError):
            do_transform(dag, cpts, {"b": 7})


def confounded_triangle():
    """z -> x, z -> y, x -> y with z strongly driving both."""
    dag = dag_of(("z", "x"), ("z", "y"), ("x", "y"))
    cpt_z = Cpt.for_node(dag, "z")
    cpt_z.set_row((), (0.4, 0.6))
    cpt_x = Cpt.for_node(dag, "x")
    cpt_x.set_row((0,), (0.9, 0.1))
    cpt_x.set_row((1,), (0.15, 0.85))
    cpt_y = Cpt.for_node(dag, "y")  # parents in edge order: z, x
    cpt_y.set_row((0, 0), (0.95, 0.05))
    cpt_y.set_row((0, 1), (0.7, 0.3))
    cpt_y.set_row((1, 0), (0.5, 0.5))
    cpt_y.set_row((1, 1), (0.1, 0.9))
    return dag, {"z": cpt_z, "x": cpt_x, "y": cpt_y}


class TestInterventionQueries:
    def test_do_differs_from_seeing_and_matches_adjustment(self):
        dag, cpts = confounded_triangle()
        see = posterior(dag, cpts, {"x": 1}, ["y"])["y"][1]
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelWarning)
            do = interventional_posterior(dag, cpts, {}, {"x": 1}, "y", 1)
        assert abs(do - see) > 1e-3
        # backdoor adjustment oracle: sum_z P(y|x,z) P(z)
        marg_z = posterior(dag, cpts, {}, ["z"])["z"]
        adjusted = sum(
            posterior(dag, cpts, {"x": 1, "z": zi}, ["y"])["y"][1] * marg_z[zi]
            for zi in (0, 1)
        )
        assert do == pytest.approx(adjusted, abs=1e-9)

    def test_empty_intervention_equals_posterior_exactly(self, chain_ab):
        dag, cpts = chain_ab
        got = interventional_posterior(dag, cpts, {"b": 1}, {}, "a", 1)
        want = posterior(dag, cpts, {"b": 1}, ["a"])["a"][1]
        assert got == want

    def test_overlap_between_evidence_and_do_rejected(self, chain_ab):
        dag, cpts = chain_ab
        with pytest.raises(CausalError, match="overlap"):
            interventional_posterior(dag, cpts, {"a": 0}, {"a": 1}, "b", 1)

    def test_deterministic_gate_follows_do(self):
        from riskdag.bowtie import synthesize_gate_cpt

        dag = dag_of(("a", "b"))
        dag = dag.add_node(RiskNode("g", "G", NodeKind.GATE_OR, ("f", "t")))
        dag = dag.add_edge("b", "g")
        cpt_a = Cpt.for_node(dag, "a")
        cpt_a.set_row((), (0.5, 0.5))
        cpt_b = Cpt.for_node(dag, "b")
        cpt_b.set_row((0,), (0.5, 0.5))
        cpt_b.set_row((1,), (0.5, 0.5))
        cpts = {"a": cpt_a, "b": cpt_b, "g": synthesize_gate_cpt("OR", 1, "g", ("b",))}
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelWarning)
            p = interventional_posterior(dag, cpts, {}, {"b": 1}, "g", 1)
        assert p == pytest.approx(1.0, abs=1e-12)


def barrier_blocks_everything():
    """barrier works -> harm impossible; gives result exactly 0 for do(works)."""
    dag = RiskDag()
    dag = dag.add_node(RiskNode("threat", "Threat", NodeKind.CAUSE, ("false", "true")))
    dag = dag.add_node(
        RiskNode("barrier", "Barrier", NodeKind.BARRIER, ("works", "fails"), activation=True)
    )
    dag = dag.add_node(
        RiskNode("decoy", "Decoy", NodeKind.BARRIER, ("works", "fails"), activation=True)
    )
    dag = dag.add_node(RiskNode("harm", "Harm", NodeKind.CONSEQUENCE, ("safe", "loss")))
    dag = dag.add_edge("threat", "harm")
    dag = dag.add_edge("barrier", "harm")
    cpt_t = Cpt.for_node(dag, "threat")
    cpt_t.set_row((), (0.3, 0.7))
    cpt_b = Cpt.for_node(dag, "barrier")
    cpt_b.set_row((), (0.5, 0.5))
    cpt_d = Cpt.for_node(dag, "decoy")
    cpt_d.set_row((), (0.5, 0.5))
    cpt_h = Cpt.for_node(dag, "harm")  # parents: threat, barrier
    cpt_h.set_row((0, 0), (1.0, 0.0))
    cpt_h.set_row((0, 1), (1.0, 0.0))
    cpt_h.set_row((1, 0), (1.0, 0.0))  # working barrier blocks the only path
    cpt_h.set_row((1, 1), (0.2, 0.8))
    return dag, {"threat": cpt_t, "barrier": cpt_b, "decoy": cpt_d, "harm": cpt_h}


class TestRanking:
    def test_blocking_barrier_ranks_first_with_zero(self):
        dag, cpts = barrier_blocks_everything()
        ranking = rank_interventions(dag, cpts, {}, "harm", 1)
        assert ranking.entries[0].node_id == "barrier"
        assert ranking.entries[0].state_index == 0
        assert ranking.entries[0].result == pytest.approx(0.0, abs=1e-12)
        assert ranking.entries[0].delta == pytest.approx(-ranking.baseline, abs=1e-12)

    def test_candidate_without_path_has_zero_delta(self):
        dag, cpts = barrier_blocks_everything()
        ranking = rank_interventions(dag, cpts, {}, "harm", 1, ["decoy"])
        assert all(e.delta == pytest.approx(0.0, abs=1e-12) for e in ranking.entries)

    def test_default_candidates_are_activation_nodes(self):
        dag, cpts = barrier_blocks_everything()
        ranking = rank_interventions(dag, cpts, {}, "harm", 1)
        assert {e.node_id for e in ranking.entries} == {"barrier", "decoy"}

    def test_order_invariant_under_candidate_order(self):
        dag, cpts = barrier_blocks_everything()
        a = rank_interventions(dag, cpts, {}, "harm", 1, ["decoy", "barrier"])
        b = rank_interventions(dag, cpts, {}, "harm", 1, ["barrier", "decoy"])
        assert a == b

    def test_evidence_on_candidate_is_superseded_by_do(self):
        dag, cpts = barrier_blocks_everything()
        ranking = rank_interventions(dag, cpts, {"barrier": 1}, "harm", 1, ["barrier"])
        works = next(e for e in ranking.entries if e.state_index == 0)
        assert works.result == pytest.approx(0.0, abs=1e-12)
        assert ranking.baseline > 0.5  # baseline keeps the fails observation

    def test_empty_candidates_baseline_only(self):
        dag, cpts = barrier_blocks_everything()
        ranking = rank_interventions(dag, cpts, {}, "harm", 1, [])
        assert ranking.entries == ()
        assert ranking.baseline == pytest.approx(
            posterior(dag, cpts, {}, ["harm"])["harm"][1]
        )

    def test_random_models_do_matches_brute_force_on_mutilated(self):
        from riskdag.inference import joint_brute_force

        rng = random.Random(123)
        import warnings

        for _ in range(15):
            dag, cpts = make_random_model(rng, max_nodes=6)
            ids = list(dag.nodes)
            target = ids[-1]
            cand = ids[0]
            if cand == target:
                continue
            state = rng.randrange(dag.node(cand).k)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ModelWarning)
                cut_dag, cut_cpts = do_transform(dag, cpts, {cand: state})
            ve = posterior(cut_dag, cut_cpts, {}, [target])[target]
            bf = joint_brute_force(cut_dag, cut_cpts, {}, [target])[target]
            assert ve == pytest.approx(bf, abs=1e-9)
