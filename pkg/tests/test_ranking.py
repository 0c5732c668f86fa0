import numpy as np
import pytest

from eventkg.evaluation import (EvaluationError, KnownTriples, build_report, candidate_mask,
                                evaluate, filtered_rank, make_link_removal_split, rank_triples,
                                score_all_candidates)
from eventkg.kg import KnowledgeGraph
from eventkg.models import ModelParams, init_params
from oracles import brute_force_ranks


def params_of(E, R):
    return ModelParams("transe", [], {"entity_emb": np.asarray(E, dtype=float),
                                      "relation_emb": np.asarray(R, dtype=float)})


def random_graph(rng, integer):
    n = int(rng.integers(2, 51))
    n_rel = int(rng.integers(1, 5))
    m = int(rng.integers(1, 3 * n))
    T = np.unique(np.stack([rng.integers(n, size=m), rng.integers(n_rel, size=m),
                            rng.integers(n, size=m)], axis=1), axis=0)
    d = int(rng.integers(1, 6))
    if integer:  # small integers: exact arithmetic and plenty of ties
        E, R = rng.integers(-2, 3, size=(n, d)), rng.integers(-2, 3, size=(n_rel, d))
    else:
        E, R = rng.normal(size=(n, d)), rng.normal(size=(n_rel, d))
    return n, n_rel, T, E, R


@pytest.mark.parametrize("norm", ["L1", "L2"])
def test_matches_brute_force_on_random_graphs(norm):
    rng = np.random.default_rng(123)
    for g in range(100):
        n, n_rel, T, E, R = random_graph(rng, integer=g % 2 == 0)
        test = T[rng.random(len(T)) < 0.5] if len(T) > 1 else T
        if len(test) == 0:
            test = T[:1]
        p = params_of(E, R)
        head, tail = rank_triples(p, test, KnownTriples(T), norm=norm)
        bh, bt = brute_force_ranks(E, R, test, T, norm)
        assert head.tolist() == bh, g
        assert tail.tolist() == bt, g


def test_class_constrained_matches_brute_force(default_world):
    kg = default_world.kg
    split = make_link_removal_split(kg, "hasSource", 0.05, seed=0)
    p = init_params("transe", kg.n_entities, kg.n_relations, [], 6, np.random.default_rng(0))
    test = split.test[:15]
    known = KnownTriples(kg.triples)
    head, tail = rank_triples(p, test, known, kg, "class-constrained")

    def cands(side, r):
        return np.flatnonzero(candidate_mask(kg, r, side, "class-constrained")).tolist()

    bh, bt = brute_force_ranks(p.entity_emb, p.relation_emb, test, kg.triples, "L1", cands)
    assert head.tolist() == bh and tail.tolist() == bt


def test_has_source_tail_candidates_are_equipment(default_world):
    kg = default_world.kg
    mask = candidate_mask(kg, kg.relation_id("hasSource"), "tail", "class-constrained")
    assert np.array_equal(np.flatnonzero(mask), kg.entities_of_class("Equipment"))
    head = candidate_mask(kg, kg.relation_id("hasSource"), "head", "class-constrained")
    assert np.array_equal(np.flatnonzero(head), kg.event_ids())
    assert candidate_mask(kg, 0, "tail", "all-entities") is None


def line_kg():
    # entities at 0, 1, 2 on a line; relation translates by +1
    kg = KnowledgeGraph(["a", "b", "c"], ["Other"] * 3, ["r"], np.array([[0, 0, 1]]))
    return kg, params_of([[0.0], [1.0], [2.0]], [[1.0]])


def test_hand_set_ordering():
    kg, p = line_kg()
    ids, scores = score_all_candidates(p, (0, 0, None))
    assert ids.tolist() == [1, 0, 2]  # 0 and 2 tie at distance 1: lower id first
    assert scores.tolist() == [0.0, 1.0, 1.0]
    assert filtered_rank((ids, scores), 1, []) == 1
    assert filtered_rank((ids, scores), 2, []) == 3
    assert filtered_rank((ids, scores), 2, [0]) == 2
    assert filtered_rank((ids, scores), 2, [0, 2]) == 2  # the true entity is never filtered


def test_perfect_embedding_ranks_first():
    kg, p = line_kg()
    head, tail = rank_triples(p, kg.triples, KnownTriples(kg.triples))
    assert head.tolist() == [1] and tail.tolist() == [1]


def test_filtered_never_exceeds_raw_and_stays_in_bounds():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n, n_rel, T, E, R = random_graph(rng, integer=False)
        p = params_of(E, R)
        fh, ft = rank_triples(p, T, KnownTriples(T))
        rh, rt = rank_triples(p, T, KnownTriples(np.zeros((0, 3), dtype=np.int64)))
        assert (fh <= rh).all() and (ft <= rt).all()
        assert fh.min() >= 1 and rh.max() <= n and rt.max() <= n


def test_report_mean_of_two_queries():
    kg = KnowledgeGraph(["a", "b"], ["Other"] * 2, ["r"], np.array([[0, 0, 1]]))
    rep = build_report(kg, kg.triples, np.array([3]), np.array([5]), "all-entities")
    assert rep.mean_rank == 4.0
    assert rep.rows["r"]["head"] == {"mean_rank": 3.0, "queries": 1}
    assert rep.rows["r"]["both"]["queries"] == 2
    lines = rep.to_csv().splitlines()
    assert lines[0] == "relation,side,mean_rank,queries"
    assert "ALL,both,4.0,2" in lines


def test_true_entity_outside_candidates_is_an_error():
    kg, p = line_kg()
    ids, scores = score_all_candidates(p, (0, 0, None))
    with pytest.raises(EvaluationError):
        filtered_rank((ids[:1], scores[:1]), 2, [])


def test_evaluate_records_policy(default_world):
    split = make_link_removal_split(default_world.kg, "hasSource", 0.25, seed=0)
    kg = split.kg
    p = init_params("transe", kg.n_entities, kg.n_relations, [], 4, np.random.default_rng(1))
    a = evaluate(p, split, "all-entities")
    c = evaluate(p, split, "class-constrained")
    assert a.policy == "all-entities" and c.policy == "class-constrained"
    assert c.mean_rank <= a.mean_rank
    assert set(a.rows) == {"ALL", "hasSource"}
    assert a.rows["ALL"]["both"]["queries"] == 2 * len(split.test)
