import itertools
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrfpreempt.graph import Route, Topology, build_lattice
from mrfpreempt.model import (DecisionMatrix, PreemptionInstance, RouteFlow, cluster_hamiltonian,
                              consistency, extract_instance, feasible, fig1_instance,
                              global_decision, hamiltonian, hamiltonian_expanded,
                              local_flow_terms, local_hamiltonian, make_instance, objective,
                              vote_groups)
from mrfpreempt.traffic import Flow

from strategies import instance_and_decisions, instances

SAMPLE_VOTES = [1, 0, 1, 0, 1, 0, 1, 0]


def _all_decisions(inst):
    keys = sorted(inst.incidences())
    for bits in itertools.product((0, 1), repeat=len(keys)):
        yield dict(zip(keys, bits))


def _path_topology(n):
    return Topology.from_dict({"nodes": n, "edges": [[i, i + 1, 10.0] for i in range(n - 1)]})


# -- instance construction ------------------------------------------------------


def test_extract_fig1_configuration():
    t = _path_topology(5)
    paths = {1: (0, 1, 2, 3), 2: (3, 4), 3: (0, 1), 4: (1, 2), 5: (2, 3, 4)}
    flows = [Flow(k, 1, 1.0, Route(p)) for k, p in paths.items()]
    inst = extract_instance(t, flows, Route((0, 1, 2, 3, 4)), 1.0, 2)
    assert inst.L == 4
    assert {(f.k, f.lo, f.hi) for f in inst.flows} == {
        (1, 1, 3), (2, 4, 4), (3, 1, 1), (4, 2, 2), (5, 3, 4)}
    assert sorted(inst.incidences()) == [(1, 1), (1, 3), (2, 1), (2, 4), (3, 1), (3, 5),
                                         (4, 2), (4, 5)]


def test_extract_no_flows_on_route():
    t = build_lattice(3, 3)
    inst = extract_instance(t, [Flow(1, 1, 1.0, Route((6, 7, 8)))], Route((0, 1, 2)), 5.0, 2)
    assert inst.flows == ()
    assert inst.free_bw == (100.0, 100.0)


def test_extract_saturated_route_has_no_free_bandwidth():
    t = _path_topology(4)
    flows = [Flow(1, 1, 6.0, Route((0, 1, 2, 3))), Flow(2, 1, 4.0, Route((0, 1, 2, 3)))]
    inst = extract_instance(t, flows, Route((0, 1, 2, 3)), 5.0, 2)
    assert inst.free_bw == (0.0, 0.0, 0.0)


def test_extract_splits_disjoint_overlap():
    t = build_lattice(2, 4)
    detour = Flow(7, 1, 2.0, Route((0, 1, 5, 6, 2, 3)))
    inst = extract_instance(t, [detour], Route((0, 1, 2, 3)), 5.0, 2)
    assert [(f.lo, f.hi, f.origin) for f in inst.flows] == [(1, 1, 7), (3, 3, 7)]
    assert len({f.k for f in inst.flows}) == 2


def test_same_class_flows_count_as_load_only():
    t = _path_topology(3)
    flows = [Flow(1, 2, 30.0, Route((0, 1, 2))), Flow(2, 1, 1.0, Route((0, 1)))]
    t.capacity.update({e: 100.0 for e in t.edges})
    inst = extract_instance(t, flows, Route((0, 1, 2)), 5.0, 2)
    assert [f.k for f in inst.flows] == [1]
    assert inst.free_bw == (69.0, 70.0)


def test_instance_json_round_trip():
    inst = fig1_instance()
    back = PreemptionInstance.from_json(inst.to_json())
    assert back == inst
    assert back.alpha == inst.alpha and back.beta == inst.beta


def test_default_beta_is_twice_total_weight():
    inst = make_instance(2, [RouteFlow(1, 1, 3.0, 1, 2), RouteFlow(2, 1, 2.0, 2, 2)], 0.0,
                         4.0, 2)
    assert inst.beta == 2 * (3.0 + 2.0)


# -- objective and energies -----------------------------------------------------


def test_objective_vectors():
    inst = fig1_instance()
    assert objective(inst, {f.k: 0 for f in inst.flows}) == 0
    assert objective(inst, {1: 1, 2: 1, 3: 0, 4: 0, 5: 0}) == 2.0
    one = make_instance(1, [RouteFlow(1, 2, 5.0, 1, 1)], 0.0, 1.0, 3)
    assert objective(one, {1: 1}) == 10.0


def test_hamiltonian_vectors():
    inst = make_instance(4, [RouteFlow(1, 1, 1.0, 1, 4)], [5.0, 5.0, 5.0, 5.0], 3.0, 2)
    assert hamiltonian(inst, DecisionMatrix.zeros(inst)) == 0
    short = replace(inst, free_bw=(0.0, 0.0, 0.0, 5.0))
    assert hamiltonian(short, DecisionMatrix.zeros(short)) == 3 * short.beta


def test_hamiltonian_on_sample_realization():
    inst = fig1_instance()
    d = DecisionMatrix.from_sequence(inst, SAMPLE_VOTES)
    assert global_decision(inst, d) == {1: 1, 2: 1, 3: 0, 4: 0, 5: 0}
    assert hamiltonian(inst, d) == 2.0
    assert feasible(inst, d)
    assert all(consistency(inst, d).values())


def test_expanded_matches_on_fig1_exhaustively():
    inst = fig1_instance()
    for d in _all_decisions(inst):
        assert hamiltonian_expanded(inst, d) == pytest.approx(hamiltonian(inst, d), abs=1e-9)


def test_expanded_single_link_flow():
    inst = make_instance(1, [RouteFlow(1, 1, 2.5, 1, 1)], 10.0, 1.0, 2)
    assert hamiltonian_expanded(inst, {(1, 1): 1}) == 2.5


def test_expanded_three_link_flow_all_patterns():
    inst = make_instance(3, [RouteFlow(1, 1, 1.7, 1, 3)], 10.0, 1.0, 2)
    for d in _all_decisions(inst):
        assert hamiltonian_expanded(inst, d) == pytest.approx(hamiltonian(inst, d), abs=1e-12)


def test_expanded_refuses_long_spans():
    inst = make_instance(25, [RouteFlow(1, 1, 1.0, 1, 25)], 10.0, 1.0, 2)
    with pytest.raises(ValueError):
        hamiltonian_expanded(inst, DecisionMatrix.zeros(inst))


@given(instance_and_decisions(max_L=5, max_flows=5))
def test_expanded_equals_product_form(case):
    inst, d = case
    assert hamiltonian_expanded(inst, d) == pytest.approx(hamiltonian(inst, d), abs=1e-9)


@given(instances(max_L=5, max_flows=5), st.data())
def test_consistent_feasible_energy_is_objective(inst, data):
    chosen = data.draw(st.sets(st.sampled_from([f.k for f in inst.flows])) if inst.flows
                       else st.just(set()))
    d = DecisionMatrix.from_global(inst, chosen)
    if feasible(inst, d):
        assert hamiltonian(inst, d) == pytest.approx(objective(inst, global_decision(inst, d)))


@given(instance_and_decisions(max_L=4, max_flows=5))
def test_energy_invariant_under_relabel_and_reversal(case):
    inst, d = case
    L = inst.L
    n = len(inst.flows)
    relabel = {f.k: n + 1 - f.k for f in inst.flows}
    flipped = make_instance(
        L, [RouteFlow(relabel[f.k], f.cls, f.bandwidth, L + 1 - f.hi, L + 1 - f.lo)
            for f in inst.flows],
        list(reversed(inst.free_bw)), inst.c_new, inst.i_new, inst.alpha, inst.beta)
    d2 = {(L + 1 - i, relabel[k]): v for (i, k), v in d.items()}
    assert hamiltonian(flipped, d2) == pytest.approx(hamiltonian(inst, d))


@given(instance_and_decisions(max_L=4, max_flows=5), st.floats(1, 100))
def test_larger_beta_never_lowers_energy(case, extra):
    inst, d = case
    bigger = replace(inst, beta=inst.beta + extra)
    assert hamiltonian(bigger, d) >= hamiltonian(inst, d)


# -- local energies -------------------------------------------------------------


def test_local_three_link_flow_all_ones():
    inst = make_instance(3, [RouteFlow(1, 1, 1.0, 1, 3)], 10.0, 1.0, 2, {1: 1.0, 2: 2.0})
    ones = {(i, 1): 1 for i in (1, 2, 3)}
    first, second = local_flow_terms(inst, ones, 2)
    # each unordered pair counted once
    assert (first, second) == (3.0, 3.0)
    assert local_hamiltonian(inst, ones, 2) == 0.0
    assert hamiltonian(inst, ones) == 1.0


def test_local_zero_decisions_is_penalty_only():
    inst = fig1_instance()
    zero = DecisionMatrix.zeros(inst)
    assert local_hamiltonian(inst, zero, 2) == hamiltonian(inst, zero) == 4 * inst.beta


@given(instance_and_decisions(max_L=5, max_flows=5, max_span=2), st.integers(1, 6))
def test_local_exact_for_spans_up_to_two(case, n_d):
    inst, d = case
    assert local_hamiltonian(inst, d, n_d) == pytest.approx(hamiltonian(inst, d))


@pytest.mark.parametrize("votes,n_d,groups", [
    ([0, 0, 0], 1, 0), ([1, 0, 1], 1, 2), ([1, 0, 1], 2, 1), ([1, 1, 0, 0, 1], 2, 2),
    ([1, 1, 1, 1], 0, 4), ([1, 0, 0, 1, 0, 1], 3, 1)])
def test_vote_groups(votes, n_d, groups):
    assert vote_groups(votes, n_d) == groups


@given(instance_and_decisions(max_L=6, max_flows=5), st.integers(0, 1))
def test_cluster_matches_pairwise_up_to_one_hop(case, n_d):
    inst, d = case
    assert cluster_hamiltonian(inst, d, n_d) == pytest.approx(local_hamiltonian(inst, d, n_d))


@given(instance_and_decisions(max_L=6, max_flows=5), st.integers(0, 6))
def test_cluster_never_below_exact(case, n_d):
    inst, d = case
    assert cluster_hamiltonian(inst, d, n_d) >= hamiltonian(inst, d) - 1e-9


@given(st.integers(1, 5), st.data())
def test_short_flows_make_local_energy_exact(h, data):
    """Every span at most h: the local energy with neighbourhood h is the exact energy."""
    inst, d = data.draw(instance_and_decisions(max_L=6, max_flows=5, max_span=h))
    assert cluster_hamiltonian(inst, d, h) == pytest.approx(hamiltonian(inst, d))


def test_local_rejects_negative_neighbourhood():
    with pytest.raises(ValueError):
        local_hamiltonian(fig1_instance(), DecisionMatrix.zeros(fig1_instance()), -1)


# -- feasibility and consistency ------------------------------------------------


def test_feasible_vectors():
    inst = make_instance(2, [RouteFlow(1, 1, 1.0, 1, 2)], 5.0, 3.0, 2)
    assert feasible(inst, DecisionMatrix.zeros(inst))
    starved = make_instance(2, [RouteFlow(1, 1, 1.0, 1, 2)], 0.0, 3.0, 2)
    assert not feasible(starved, DecisionMatrix.zeros(starved))
    fig1 = fig1_instance()
    assert feasible(fig1, DecisionMatrix.from_global(fig1, [1, 2]))


def test_consistency_vectors():
    inst = make_instance(3, [RouteFlow(1, 1, 1.0, 1, 3)], 0.0, 1.0, 2)
    assert consistency(inst, DecisionMatrix.zeros(inst)) == {1: True}
    assert consistency(inst, {(1, 1): 1, (2, 1): 0, (3, 1): 1}) == {1: False}


def test_decision_sequence_length_checked():
    with pytest.raises(ValueError):
        DecisionMatrix.from_sequence(fig1_instance(), [0, 1])
