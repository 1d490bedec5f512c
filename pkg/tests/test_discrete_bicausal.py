"""Exact stagewise transport on finite trees: values, plans, order checks."""

import itertools
import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awsde import (
    ConfigurationError,
    InstanceTooLargeError,
    antitone_first_plan,
    check_quasi_monotone,
    check_stochastic_monotone,
    exact_bicausal_value,
    knothe_rosenblatt,
    kr_suboptimal_pair,
    node,
    perturbed_start_pair,
    plan_cost,
    power_cost,
    process,
    process_from_json,
    process_to_json,
    processes_equal,
)
from awsde._instances import random_comonotone_pair, random_tree_process

SQ = power_cost(2)

# independently recomputed with a Hungarian-assignment recursion on equal atoms
FROZEN = {
    ("comonotone", 0, 1): 2.25, ("comonotone", 0, 2): 3.75,
    ("comonotone", 1, 1): 5.0, ("comonotone", 1, 2): 14.0,
    ("comonotone", 2, 1): 4.9375, ("comonotone", 2, 2): 14.3125,
    ("comonotone", 3, 1): 4.0, ("comonotone", 3, 2): 11.0,
    ("comonotone", 4, 1): 1.0, ("comonotone", 4, 2): 1.5,
    ("comonotone", 5, 1): 5.9375, ("comonotone", 5, 2): 25.8125,
    ("tree", 0, 1): 4.0625, ("tree", 0, 2): 14.4375,
    ("tree", 1, 1): 4.5, ("tree", 1, 2): 16.5,
    ("tree", 2, 1): 2.875, ("tree", 2, 2): 7.5,
    ("tree", 3, 1): 5.0, ("tree", 3, 2): 17.375,
    ("tree", 4, 1): 1.125, ("tree", 4, 2): 1.375,
    ("tree", 5, 1): 3.6875, ("tree", 5, 2): 9.6875,
}


def test_monotone_rearrangement_strictly_suboptimal():
    mu, nu = kr_suboptimal_pair()
    kr = plan_cost(knothe_rosenblatt(mu, nu), SQ)
    assert kr == Fraction(3)
    alt = plan_cost(antitone_first_plan(mu, nu), SQ)
    assert alt == Fraction(2)
    value, plan = exact_bicausal_value(mu, nu, SQ)
    assert value == Fraction(2)
    assert value < kr
    assert plan.certify_marginals(mu, nu) == {"x_marginal": True, "y_marginal": True}


@pytest.mark.parametrize("eps", [Fraction(1, 10), Fraction(1, 2)])
@pytest.mark.parametrize("p", [1, 2])
def test_forced_product_value(eps, p):
    mu, nu = perturbed_start_pair(eps)
    value, plan = exact_bicausal_value(mu, nu, power_cost(p))
    assert value == eps ** p + Fraction(2) ** (p - 1)
    assert plan.certify_marginals(mu, nu) == {"x_marginal": True, "y_marginal": True}


def test_forced_product_headline_number():
    mu, nu = perturbed_start_pair("1/10")
    value, _ = exact_bicausal_value(mu, nu, SQ)
    assert value == Fraction(201, 100)
    assert float(value) == 2.01


def test_identical_processes_cost_zero():
    rng = random.Random(4)
    mu = random_tree_process(rng, 2)
    assert plan_cost(knothe_rosenblatt(mu, mu), SQ) == 0
    value, _ = exact_bicausal_value(mu, mu, SQ)
    assert value == 0


def test_plan_cost_matches_path_enumeration():
    mu, nu = random_comonotone_pair(random.Random(7))
    plan = knothe_rosenblatt(mu, nu)

    def leaves(nodes, weight, prefix):
        for n in nodes:
            w = weight * n.mass
            path = prefix + [(n.x, n.y)]
            if n.children:
                yield from leaves(n.children, w, path)
            else:
                yield w, path

    total = Fraction(0)
    for w, path in leaves(plan.roots, Fraction(1), []):
        total += w * sum(abs(x - y) ** 2 for x, y in path)
    assert plan_cost(plan, SQ) == total


@pytest.mark.parametrize("p", [1, 2])
def test_comonotone_kr_is_optimal_frozen(p):
    for seed in range(6):
        mu, nu = random_comonotone_pair(random.Random(seed))
        cost = power_cost(p)
        value, _ = exact_bicausal_value(mu, nu, cost)
        kr = plan_cost(knothe_rosenblatt(mu, nu), cost)
        assert kr == value
        assert value == Fraction(FROZEN[("comonotone", seed, p)])


@pytest.mark.parametrize("p", [1, 2])
def test_exact_value_frozen_trees(p):
    for seed in range(6):
        rng = random.Random(1000 + seed)
        mu = random_tree_process(rng, 2)
        nu = random_tree_process(rng, 2)
        value, _ = exact_bicausal_value(mu, nu, power_cost(p))
        assert value == Fraction(FROZEN[("tree", seed, p)])


def _vertex_couplings(p, q):
    # extreme points of the transport polytope between <= 2-atom marginals
    if len(p) == 1:
        return [{(0, j): q[j] for j in range(len(q)) if q[j] > 0}]
    if len(q) == 1:
        return [{(i, 0): p[i] for i in range(len(p)) if p[i] > 0}]
    out = []
    for t in {min(p[0], q[0]), max(Fraction(0), p[0] - q[1])}:
        cells = {(0, 0): t, (0, 1): p[0] - t, (1, 0): q[0] - t, (1, 1): q[1] - p[0] + t}
        out.append({k: v for k, v in cells.items() if v > 0})
    return out


def _flat_plans(xs, ys, cost, stage):
    """Every stagewise vertex-product plan as (value,) -- no inner minimisation."""
    options = []
    for coup in _vertex_couplings([n.mass for n in xs], [n.mass for n in ys]):
        parts = []
        for (i, j), m in sorted(coup.items()):
            c = cost.evaluate(stage, xs[i].value, ys[j].value)
            if xs[i].children:
                subs = _flat_plans(xs[i].children, ys[j].children, cost, stage + 1)
            else:
                subs = [Fraction(0)]
            parts.append([m * (c + s) for s in subs])
        for combo in itertools.product(*parts):
            options.append(sum(combo, Fraction(0)))
    return options


def _random_binary_pair(rng):
    def grow(depth, stages):
        size = rng.randint(1, 2)
        values = sorted(rng.sample(range(-3, 4), size))
        masses = [Fraction(1)] if size == 1 else [Fraction(1, 2), Fraction(1, 2)]
        return [node(Fraction(v), m, grow(depth + 1, stages) if depth < stages else ())
                for v, m in zip(values, masses)]

    stages = rng.randint(1, 2)
    return process(stages, grow(1, stages)), process(stages, grow(1, stages))


def test_dp_agrees_with_flat_vertex_enumeration():
    # stagewise couplings optimise a linear objective, so some vertex-product
    # plan attains the optimum; enumerating all of them flat must match the
    # backward recursion exactly
    rng = random.Random(123)
    for _ in range(40):
        mu, nu = _random_binary_pair(rng)
        cost = power_cost(rng.choice((1, 2)))
        value, _ = exact_bicausal_value(mu, nu, cost)
        flat = min(_flat_plans(mu.roots, nu.roots, cost, 1))
        assert value == flat


def test_value_symmetric_in_arguments():
    for seed in range(4):
        rng = random.Random(50 + seed)
        mu = random_tree_process(rng, 2)
        nu = random_tree_process(rng, 2)
        a, _ = exact_bicausal_value(mu, nu, SQ)
        b, _ = exact_bicausal_value(nu, mu, SQ)
        assert a == b


def test_kr_marginals_certified_on_random_pairs():
    for seed in range(5):
        rng = random.Random(200 + seed)
        mu = random_tree_process(rng, 2)
        nu = random_tree_process(rng, 2)
        plan = knothe_rosenblatt(mu, nu)
        assert plan.certify_marginals(mu, nu) == {"x_marginal": True, "y_marginal": True}


def test_first_order_check_finds_crossing():
    mu, nu = kr_suboptimal_pair()
    report = check_stochastic_monotone(mu, order="first")
    assert report.verdict == "neither"
    half = Fraction(1, 2)
    assert report.witness_increasing == (1, -half, half, Fraction(0))
    assert report.witness_decreasing == (1, -half, half, Fraction(-2))
    # the kernels really do cross there: P(<= point) flips order
    assert check_stochastic_monotone(nu, order="first").verdict == "increasing"


def test_second_order_check_accepts_mean_preserving_spread():
    mu, _ = kr_suboptimal_pair()
    report = check_stochastic_monotone(mu, order="second")
    assert report.verdict == "increasing"
    assert report.witness_increasing is None


def test_identical_kernels_are_monotone_both_ways():
    half = Fraction(1, 2)
    kids = lambda: [node(0, half), node(1, half)]  # noqa: E731
    proc = process(2, [node(0, half, kids()), node(1, half, kids())])
    for order in ("first", "second"):
        assert check_stochastic_monotone(proc, order).verdict == "both"


def test_quasi_monotone_probe():
    grid = [Fraction(k, 2) for k in range(-4, 5)]
    assert check_quasi_monotone(SQ, grid, grid).holds
    flipped = power_cost(2)
    negated = flipped.__class__(evaluate=lambda k, x, y: -flipped.evaluate(k, x, y), p=2.0)
    report = check_quasi_monotone(negated, grid, grid)
    assert not report.holds
    k, x, xp, y, yp = report.witness
    assert x < xp and y < yp
    lhs = negated.evaluate(k, x, y) + negated.evaluate(k, xp, yp)
    rhs = negated.evaluate(k, x, yp) + negated.evaluate(k, xp, y)
    assert lhs > rhs


def test_quasi_monotone_fractional_power():
    rng = random.Random(9)
    cost = power_cost(1.5)
    for _ in range(20):
        xs = sorted(rng.uniform(-3, 3) for _ in range(4))
        ys = sorted(rng.uniform(-3, 3) for _ in range(4))
        xs = [Fraction(round(v * 16), 16) for v in xs]
        ys = [Fraction(round(v * 16), 16) for v in ys]
        assert check_quasi_monotone(cost, xs, ys).holds


def test_json_round_trip():
    for seed in range(4):
        proc = random_tree_process(random.Random(300 + seed), 2)
        text = process_to_json(proc)
        assert processes_equal(process_from_json(text), proc)
        doc = json.loads(text)
        assert all(isinstance(nd["value"], str) for nd in doc["nodes"])


def test_json_refuses_float_values():
    proc = process(1, [node(1, Fraction(1, 2)), node(2, Fraction(1, 2))])
    doc = json.loads(process_to_json(proc))
    doc["nodes"][0]["value"] = 0.5
    with pytest.raises(ConfigurationError):
        process_from_json(json.dumps(doc))


def test_float_inputs_refused_at_construction():
    with pytest.raises(ConfigurationError):
        node(0.5, Fraction(1))


def test_atom_cap_enforced():
    mu = process(1, [node(0, Fraction(1, 3)), node(1, Fraction(2, 3))])
    nu = process(1, [node(0, Fraction(1, 5)), node(1, Fraction(4, 5))])
    with pytest.raises(InstanceTooLargeError):
        exact_bicausal_value(mu, nu, SQ)


@st.composite
def _tiny_processes(draw):
    stages = draw(st.integers(min_value=1, max_value=2))
    values = st.integers(min_value=-3, max_value=3)

    def grow(depth):
        size = draw(st.integers(min_value=1, max_value=2))
        vals = sorted(draw(st.lists(values, min_size=size, max_size=size, unique=True)))
        mass = Fraction(1, size)
        return [node(Fraction(v), mass, grow(depth + 1) if depth < stages else ())
                for v in vals]

    return process(stages, grow(1))


@given(_tiny_processes(), _tiny_processes())
@settings(max_examples=40, deadline=None)
def test_value_nonnegative_and_diagonal_zero(mu, nu):
    if mu.stages != nu.stages:
        return
    value, plan = exact_bicausal_value(mu, nu, SQ)
    assert value >= 0
    assert plan.certify_marginals(mu, nu) == {"x_marginal": True, "y_marginal": True}
    diag, _ = exact_bicausal_value(mu, mu, SQ)
    assert diag == 0
