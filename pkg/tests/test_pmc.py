"""Chain compilation, exact reachability, and sensitivity-function extraction."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from bntune import (
    ONE,
    Constraint,
    Polynomial,
    compile_chain,
    compile_tailored,
    conditional_via_ratio,
    instantiate,
    net_from_tables,
    parametrize,
    reach_prob,
    sensitivity_function,
    to_dot,
)
from bntune.errors import BadOrder, EvidenceImpossible, NotWellFormed, TooLarge
from bntune.oracle import infer, joint_table
from conftest import build_covid_pbn, covid_posterior, edge_map, state_index

P = Polynomial.parameter("p")
Q = Polynomial.parameter("q")


@pytest.fixture
def tailored(covid_pbn, covid_constraint):
    return compile_tailored(covid_pbn, covid_constraint)


def test_plain_chain_shape(covid_pbn):
    pmc = compile_chain(covid_pbn)
    assert pmc.n_states == 13
    src = state_index(pmc, 2, (("COVID-19", "yes"), ("Symptoms", "yes")))
    dst = state_index(pmc, 3, (("COVID-19", "yes"), ("Antigen", "pos")))
    assert edge_map(pmc, src)[dst] == P


def test_tailored_chain_shape(tailored):
    pmc, spec = tailored
    assert pmc.n_states == 11
    assert spec.targets == frozenset({10})
    assert spec.direction == "<=" and spec.threshold == Fraction(9, 1000)
    target = pmc.states[10]
    assert target.level == 4 and target.hypothesis is True


def test_tailored_restart_edge(tailored):
    pmc, _ = tailored
    src = state_index(
        pmc, 2, (("COVID-19", "yes"), ("Symptoms", "yes")), hypothesis=False
    )
    # Choosing Antigen=neg violates the evidence, so that branch restarts.
    assert edge_map(pmc, src)[pmc.initial] == ONE - P


def test_leaves_are_absorbing(tailored):
    pmc, _ = tailored
    for i, label in enumerate(pmc.states):
        if label.level == 4:
            assert pmc.successors(i) == ((i, ONE),)


def test_rows_stay_symbolically_stochastic(covid_pbn, tailored):
    for pmc in (compile_chain(covid_pbn), tailored[0]):
        for i in range(pmc.n_states):
            total = Polynomial.constant(0)
            for _, poly in pmc.successors(i):
                total = total + poly
            assert total == ONE


def test_single_binary_node_chain():
    net = net_from_tables([("T", ("yes", "no"), ())], {"T": {(): ("0.3", "0.7")}})
    pbn = parametrize(net, [])
    pmc = compile_chain(pbn)
    assert pmc.n_states == 3
    weights = sorted(
        poly.constant_value() for _, poly in pmc.successors(pmc.initial)
    )
    assert weights == [Fraction(3, 10), Fraction(7, 10)]


def test_independent_nodes_forget_the_first():
    net = net_from_tables(
        [("A", ("a", "b"), ()), ("B", ("a", "b"), ())],
        {"A": {(): ("0.3", "0.7")}, "B": {(): ("0.2", "0.8")}},
    )
    pbn = parametrize(net, [])
    pmc = compile_chain(pbn)
    assert pmc.n_states == 5  # init + 2 A-states + 2 merged B-leaves
    # Leaf reach probabilities match the joint marginals of B.
    table = joint_table(net)
    for value in ("a", "b"):
        leaf = state_index(pmc, 2, (("B", value),))
        marginal = sum(p for key, p in table.items() if key[1] == value)
        assert reach_prob(pmc, {}, {leaf}) == pytest.approx(marginal, abs=1e-12)


def test_zero_entries_never_become_edges():
    net = net_from_tables(
        [("A", ("a", "b", "c"), ())], {"A": {(): ("0.6", "0.4", "0")}}
    )
    pmc = compile_chain(parametrize(net, []))
    assert pmc.n_states == 3  # the probability-0 leaf is never created


def test_evidence_on_root_restarts_from_initial(covid_pbn):
    constraint = Constraint(
        (("PCR", "pos"),), (("COVID-19", "yes"),), "<=", Fraction(1, 2)
    )
    pmc, spec = compile_tailored(covid_pbn, constraint)
    assert edge_map(pmc, pmc.initial)[pmc.initial] == Polynomial.constant(
        Fraction(19, 20)
    )
    got = reach_prob(pmc, covid_pbn.origin_instantiation(), spec.targets)
    want = infer(
        instantiate(covid_pbn, covid_pbn.origin_instantiation()),
        constraint.hypothesis,
        constraint.evidence,
    )
    assert got == pytest.approx(want, abs=1e-12)


def test_reach_of_initial_is_one(tailored):
    pmc, _ = tailored
    u0 = build_covid_pbn().origin_instantiation()
    assert reach_prob(pmc, u0, {pmc.initial}) == 1.0


def test_reach_at_origin(tailored, covid_pbn):
    pmc, spec = tailored
    got = reach_prob(pmc, covid_pbn.origin_instantiation(), spec.targets)
    assert got == pytest.approx(covid_posterior(0.72, 0.95), abs=1e-12)


def test_reach_matches_closed_form_pointwise(tailored):
    pmc, spec = tailored
    got = reach_prob(pmc, {"p": 0.92075, "q": 0.97475}, spec.targets)
    assert got == pytest.approx(covid_posterior(0.92075, 0.97475), abs=1e-10)


def test_reach_agrees_with_enumeration(tailored, covid_pbn, covid_constraint):
    pmc, spec = tailored
    rng = random.Random(7)
    for _ in range(100):
        u = {"p": rng.uniform(0.05, 0.95), "q": rng.uniform(0.05, 0.95)}
        got = reach_prob(pmc, u, spec.targets)
        want = infer(
            instantiate(covid_pbn, u),
            covid_constraint.hypothesis,
            covid_constraint.evidence,
        )
        assert got == pytest.approx(want, abs=1e-10)


def test_alternate_topological_order_preserves_the_conditional(
    covid_pbn, covid_constraint
):
    order = ("COVID-19", "PCR", "Symptoms", "Antigen")
    pmc, spec = compile_tailored(covid_pbn, covid_constraint, order=order)
    got = reach_prob(pmc, covid_pbn.origin_instantiation(), spec.targets)
    assert got == pytest.approx(covid_posterior(0.72, 0.95), abs=1e-12)


def test_forgetting_is_semantics_preserving(covid_pbn, covid_constraint):
    full, spec = compile_tailored(covid_pbn, covid_constraint, forget=False)
    lean, _ = compile_tailored(covid_pbn, covid_constraint)
    assert full.n_states > lean.n_states
    u0 = covid_pbn.origin_instantiation()
    got = reach_prob(full, u0, spec.targets)
    assert got == pytest.approx(covid_posterior(0.72, 0.95), abs=1e-12)


def test_non_topological_order_rejected(covid_pbn):
    with pytest.raises(BadOrder):
        compile_chain(covid_pbn, order=("Symptoms", "COVID-19", "Antigen", "PCR"))


def test_impossible_evidence_rejected():
    net = net_from_tables(
        [("A", ("a", "b"), ()), ("B", ("a", "b"), ("A",))],
        {"A": {(): ("1", "0")},
         "B": {("a",): ("0.5", "0.5"), ("b",): ("0.5", "0.5")}},
    )
    pbn = parametrize(net, [("B", ("a",), 0)])
    constraint = Constraint((("B", "a"),), (("A", "b"),), "<=", Fraction(1, 2))
    with pytest.raises(EvidenceImpossible):
        compile_tailored(pbn, constraint)


def test_structurally_unreachable_hypothesis_rejected():
    net = net_from_tables(
        [("A", ("a", "b"), ()), ("B", ("a", "b"), ("A",))],
        {"A": {(): ("0.5", "0.5")},
         "B": {("a",): ("1", "0"), ("b",): ("0", "1")}},
    )
    pbn = parametrize(net, [("A", (), 0)])
    constraint = Constraint((("B", "a"),), (("A", "b"),), "<=", Fraction(1, 2))
    with pytest.raises(NotWellFormed):
        compile_tailored(pbn, constraint)


def test_sensitivity_function_closed_form(tailored):
    pmc, spec = tailored
    fn = sensitivity_function(pmc, spec.targets)
    c = Polynomial.constant
    assert fn.numerator == c(361)
    assert fn.denominator == c(34900) * P * Q + c(8758) * Q + c(361)
    assert str(fn.denominator) == "34900*p*q + 8758*q + 361"


def test_sensitivity_function_evaluates_like_the_chain(tailored):
    pmc, spec = tailored
    fn = sensitivity_function(pmc, spec.targets)
    rng = random.Random(21)
    for _ in range(100):
        u = {"p": rng.uniform(0.01, 0.99), "q": rng.uniform(0.01, 0.99)}
        assert fn.evaluate(u) == pytest.approx(
            covid_posterior(u["p"], u["q"]), abs=1e-9
        )


def test_sensitivity_function_parameter_free():
    net = net_from_tables([("T", ("yes", "no"), ())], {"T": {(): ("0.3", "0.7")}})
    pbn = parametrize(net, [])
    pmc = compile_chain(pbn)
    leaf = state_index(pmc, 1, (("T", "yes"),))
    fn = sensitivity_function(pmc, {leaf})
    assert fn.evaluate({}) == pytest.approx(0.3, abs=1e-12)


def test_sensitivity_function_single_parameter(toy_pbn):
    pmc = compile_chain(toy_pbn)
    leaf = state_index(pmc, 1, (("T", "yes"),))
    fn = sensitivity_function(pmc, {leaf})
    assert fn.numerator == Polynomial.parameter("x")
    assert fn.denominator == ONE


def test_sensitivity_guard(tailored):
    pmc, spec = tailored
    with pytest.raises(TooLarge):
        sensitivity_function(pmc, spec.targets, guard=2)


def test_conditional_via_ratio(covid_pbn, covid_constraint):
    plain = compile_chain(covid_pbn)
    u0 = covid_pbn.origin_instantiation()
    got = conditional_via_ratio(plain, covid_constraint, u0)
    assert got == pytest.approx(covid_posterior(0.72, 0.95), abs=1e-12)
    rng = random.Random(3)
    for _ in range(20):
        u = {"p": rng.uniform(0.05, 0.95), "q": rng.uniform(0.05, 0.95)}
        want = infer(
            instantiate(covid_pbn, u),
            covid_constraint.hypothesis,
            covid_constraint.evidence,
        )
        assert conditional_via_ratio(plain, covid_constraint, u) == pytest.approx(
            want, abs=1e-10
        )


def test_conditional_via_ratio_empty_evidence(covid_pbn):
    plain = compile_chain(covid_pbn)
    constraint = Constraint((("PCR", "pos"),), (), "<=", Fraction(1, 2))
    got = conditional_via_ratio(plain, constraint, covid_pbn.origin_instantiation())
    want = infer(
        instantiate(covid_pbn, covid_pbn.origin_instantiation()),
        constraint.hypothesis,
    )
    assert got == pytest.approx(want, abs=1e-12)


def test_to_dot_renders_the_graph(tailored):
    pmc, spec = tailored
    dot = to_dot(pmc, spec.targets)
    assert dot.startswith("digraph")
    assert "doublecircle" in dot
    assert "COVID-19=yes, Symptoms=yes" in dot
    assert 'style=bold' in dot
    assert '[label="p"]' in dot
