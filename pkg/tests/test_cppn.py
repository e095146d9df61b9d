import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lamarck import cppn
from lamarck.cppn import (
    INPUT_IDS,
    OUTPUT_IDS,
    CppnGenome,
    GenomeIntegrityError,
    MutationRates,
    crossover,
    mutate,
    validate,
)


def single_edge_genome():
    # input x -> brick output, identity everywhere
    return CppnGenome.build([(0, 4, 1.0)], output_activation="identity")


def test_zero_network_outputs_activation_of_zero():
    g = CppnGenome.build([(s, d, 0.0) for s in INPUT_IDS for d in OUTPUT_IDS], output_activation="sigmoid")
    assert g.evaluate((0.3, -2.0, 1.0, 4.0)) == (0.5,) * 5
    g = CppnGenome.build([(s, d, 0.0) for s in INPUT_IDS for d in OUTPUT_IDS], output_activation="gaussian")
    assert g.evaluate((7.0, 1.0, 1.0, 1.0)) == (1.0,) * 5


def test_single_edge_hand_trace():
    out = single_edge_genome().evaluate((0.7, 0.0, 0.0, 0.0))
    assert out == (0.7, 0.0, 0.0, 0.0, 0.0)


def test_hidden_node_chain_hand_trace():
    h = 1000
    g = CppnGenome.build(
        [(0, h, 2.0), (h, 5, -1.5), (3, 5, 0.5)],
        hidden=[(h, "tanh")],
        output_activation="identity",
    )
    x, d = 0.25, 2.0
    assert g.evaluate((x, 0, 0, d))[1] == pytest.approx(-1.5 * np.tanh(2.0 * x) + 0.5 * d, abs=1e-15)


def test_evaluate_deterministic():
    g = CppnGenome.random(np.random.default_rng(3))
    q = (1.0, -2.0, 0.0, 3.0)
    assert g.evaluate(q) == g.evaluate(q)


def test_cycle_rejected():
    h1, h2 = 100, 200
    with pytest.raises(GenomeIntegrityError):
        CppnGenome.build([(0, h1, 1.0), (h1, h2, 1.0), (h2, h1, 1.0), (h2, 4, 1.0)], hidden=[(h1, "tanh"), (h2, "tanh")])


def test_output_feeding_back_rejected():
    with pytest.raises(GenomeIntegrityError):
        CppnGenome.build([(4, 5, 1.0)])


def test_zero_rates_identity():
    g = CppnGenome.random(np.random.default_rng(0))
    assert mutate(g, np.random.default_rng(1), MutationRates.zero()) == g


def test_add_connection_on_saturated_graph_is_noop():
    # no hidden nodes: every legal edge is input -> output and all 20 exist
    g = CppnGenome.random(np.random.default_rng(0))
    rates = MutationRates(weight_perturb=0.0, add_connection=1.0, add_node=0.0, activation_swap=0.0)
    for seed in range(20):
        assert mutate(g, np.random.default_rng(seed), rates) == g


def test_add_node_splits_connection():
    g = CppnGenome.random(np.random.default_rng(0))
    rates = MutationRates(weight_perturb=0.0, add_connection=0.0, add_node=1.0, activation_swap=0.0)
    child = mutate(g, np.random.default_rng(5), rates)
    assert len(child.nodes) == len(g.nodes) + 1
    assert len(child.connections) == len(g.connections) + 2
    assert sum(not c.enabled for c in child.connections) == 1
    validate(child)


def test_structural_mutation_at_most_one_per_call():
    g = CppnGenome.random(np.random.default_rng(1))
    rates = MutationRates(weight_perturb=0.0, add_connection=0.5, add_node=0.5, activation_swap=0.0)
    rng = np.random.default_rng(2)
    for _ in range(200):
        child = mutate(g, rng, rates)
        assert len(child.connections) - len(g.connections) in (0, 1, 2)
        assert len(child.nodes) - len(g.nodes) in (0, 1)
        g = child


def test_thousand_mutations_keep_invariants():
    rng = np.random.default_rng(42)
    g = CppnGenome.random(rng)
    rates = MutationRates(add_connection=0.3, add_node=0.2, activation_swap=0.2)
    violations = 0
    for _ in range(1000):
        g = mutate(g, rng, rates)
        try:
            validate(g)
        except GenomeIntegrityError:
            violations += 1
        assert all(abs(c.weight) <= cppn.WEIGHT_LIMIT for c in g.connections)
    assert violations == 0
    assert any(n.role == "hidden" for n in g.nodes)


def test_self_crossover_identity():
    g = CppnGenome.random(np.random.default_rng(7))
    for fitter in "ab":
        assert crossover(g, g, fitter, np.random.default_rng(0)) == g


def test_disjoint_parents_inherit_fitter_connections():
    a = CppnGenome.build([(0, 4, 1.0), (1, 5, 1.0)])
    b = CppnGenome.build([(2, 6, 1.0), (3, 7, 1.0)])
    child = crossover(a, b, "a", np.random.default_rng(0))
    assert child.connections == a.connections


def test_crossover_genes_come_from_parents():
    rng = np.random.default_rng(11)
    rates = MutationRates(add_connection=0.3, add_node=0.2)
    for _ in range(1000):
        a = mutate(CppnGenome.random(rng), rng, rates)
        b = mutate(mutate(a, rng, rates), rng, rates) if rng.random() < 0.5 else CppnGenome.random(rng)
        child = crossover(a, b, "a" if rng.random() < 0.5 else "b", rng)
        parent_genes = set(a.connections) | set(b.connections)
        assert all(c in parent_genes for c in child.connections)
        innovations = {c.innovation for c in a.connections} | {c.innovation for c in b.connections}
        assert {c.innovation for c in child.connections} <= innovations
        validate(child)


def test_matching_genes_mix_both_parents():
    rng = np.random.default_rng(0)
    a, b = CppnGenome.random(rng), CppnGenome.random(rng)
    child = crossover(a, b, "a", rng)
    from_a = sum(c in a.connections for c in child.connections)
    assert 0 < from_a < len(child.connections)


def test_innovation_ids_shared_across_lineages():
    assert cppn.innovation_id(0, 4) == cppn.innovation_id(0, 4)
    assert cppn.innovation_id(0, 4) != cppn.innovation_id(4, 0)


def test_serialization_round_trip():
    rng = np.random.default_rng(3)
    g = CppnGenome.random(rng)
    for _ in range(30):
        g = mutate(g, rng, MutationRates(add_connection=0.3, add_node=0.3))
    assert CppnGenome.from_dict(g.to_dict()) == g


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), steps=st.integers(0, 40))
def test_feed_forward_after_any_variation_sequence(seed, steps):
    rng = np.random.default_rng(seed)
    g = CppnGenome.random(rng)
    rates = MutationRates(add_connection=0.4, add_node=0.3, activation_swap=0.2)
    for _ in range(steps):
        if rng.random() < 0.3:
            g = crossover(g, mutate(g, rng, rates), "a" if rng.random() < 0.5 else "b", rng)
        else:
            g = mutate(g, rng, rates)
    validate(g)
    assert all(np.isfinite(g.evaluate((1.0, -1.0, 0.0, 2.0))))
