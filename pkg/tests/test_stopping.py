"""Optimal stopping values on finite trees and the robust stability bound."""

import math
import random
from fractions import Fraction

import pytest

from awsde import (
    AssumptionError,
    ConfigurationError,
    InstanceTooLargeError,
    PathPayoff,
    asian_payoff,
    builtin_payoff,
    coordinate_payoff,
    enumerate_stopping_value,
    negated_payoff,
    node,
    perturbed_start_pair,
    process,
    snell_value,
    stopping_stability_gap,
    verify_payoff_lipschitz,
)
from awsde._instances import random_stopping_instance, random_tree_process

SUP = coordinate_payoff("sup")


def test_martingale_sup_value_zero():
    _, nu = perturbed_start_pair(Fraction(1, 10))
    assert snell_value(nu, SUP) == 0


@pytest.mark.parametrize("eps, expected", [
    (Fraction(1, 10), Fraction(9, 20)),
    (Fraction(3, 10), Fraction(7, 20)),
])
def test_perturbed_start_sup_value(eps, expected):
    mu, _ = perturbed_start_pair(eps)
    value = snell_value(mu, SUP)
    assert value == expected
    assert value == (1 - eps) / 2


def test_constant_process_value_is_the_constant():
    proc = process(2, [node(3, Fraction(1), [node(3, Fraction(1))])])
    for objective in ("sup", "inf"):
        payoff = coordinate_payoff(objective)
        assert snell_value(proc, payoff) == 3
        assert enumerate_stopping_value(proc, payoff) == 3


def test_sup_is_negated_inf_of_negated_payoff():
    for seed in range(5):
        proc = random_tree_process(random.Random(seed), 2)
        for payoff in (SUP, asian_payoff(2, 2, step=Fraction(1, 2), objective="sup")):
            assert snell_value(proc, payoff) == -snell_value(proc, negated_payoff(payoff))


def test_snell_matches_exhaustive_rule_enumeration():
    for seed in range(6):
        proc = random_tree_process(random.Random(40 + seed), 2)
        try:
            for payoff in (SUP, coordinate_payoff("inf"),
                           asian_payoff(2, 1, step=Fraction(1, 4), objective="sup")):
                assert snell_value(proc, payoff) == enumerate_stopping_value(proc, payoff)
        except InstanceTooLargeError:
            continue


def test_snell_dominates_fixed_stage_rules():
    proc = random_tree_process(random.Random(17), 2)
    value = snell_value(proc, SUP)

    def fixed_stage(k):
        def rec(n, prefix, stage):
            prefix = prefix + (n.value,)
            if stage == k or not n.children:
                return SUP.evaluate(stage, prefix)
            return sum(c.mass * rec(c, prefix, stage + 1) for c in n.children)

        return sum(r.mass * rec(r, (), 1) for r in proc.roots)

    for k in (1, 2, 3):
        assert fixed_stage(k) <= value


def test_enumeration_cap():
    kids = [node(v, Fraction(1, 3)) for v in (-1, 0, 1)]
    roots = [node(v, Fraction(1, 3), kids) for v in (-1, 0, 1)]
    with pytest.raises(InstanceTooLargeError):
        enumerate_stopping_value(process(2, roots), SUP)


def test_stability_gap_identical_processes():
    mu = random_tree_process(random.Random(3), 2)
    lhs, rhs = stopping_stability_gap(mu, mu, SUP, 2)
    assert lhs == 0.0
    assert rhs == 0.0


def test_stability_gap_forced_product_pair():
    mu, nu = perturbed_start_pair(Fraction(1, 10))
    lhs, rhs = stopping_stability_gap(mu, nu, SUP, 2)
    assert lhs == pytest.approx(0.45, abs=1e-15)
    assert rhs == pytest.approx(math.sqrt(2.01), rel=1e-12)
    assert lhs <= rhs


def test_stability_bound_on_random_instances():
    for seed in range(20):
        rng = random.Random(500 + seed)
        mu, nu, payoff, p = random_stopping_instance(rng)
        lhs, rhs = stopping_stability_gap(mu, nu, payoff, p)
        assert lhs <= rhs + 1e-12


def test_wrong_lipschitz_declaration_is_falsified():
    cheat = PathPayoff(evaluate=lambda k, prefix: 5 * prefix[-1],
                       lipschitz_constant=1.0, objective="sup", name="cheat")
    mu, nu = perturbed_start_pair(Fraction(1, 2))
    with pytest.raises(AssumptionError):
        verify_payoff_lipschitz(cheat, (mu, nu), 2)
    with pytest.raises(AssumptionError):
        stopping_stability_gap(mu, nu, cheat, 2)


def test_asian_constant_formula():
    payoff = asian_payoff(3, 2.0)
    assert payoff.lipschitz_constant == pytest.approx(math.sqrt(3.0), rel=1e-15)
    scaled = asian_payoff(4, 2.0, step=0.5, f_lipschitz=2.0)
    assert scaled.lipschitz_constant == pytest.approx(2.0 * 0.5 * 4 ** 0.5, rel=1e-15)
    # p = 1 removes the Hoelder factor entirely
    assert asian_payoff(7, 1.0).lipschitz_constant == 1.0


def test_asian_payoff_exact_running_sum():
    payoff = asian_payoff(2, 2, step=Fraction(1, 2))
    assert payoff.evaluate(2, (Fraction(1), Fraction(3))) == Fraction(2)


def test_builtin_payoff_names():
    assert builtin_payoff("coordinate", objective="sup").name == "coordinate"
    assert builtin_payoff("asian", stages=2, p=2).name == "asian"
    with pytest.raises(ConfigurationError):
        builtin_payoff("lookback")


def test_payoff_validation():
    with pytest.raises(ConfigurationError):
        coordinate_payoff("max")
    with pytest.raises(ConfigurationError):
        PathPayoff(evaluate=lambda k, g: 0, lipschitz_constant=0.0, objective="sup")
    with pytest.raises(ConfigurationError):
        asian_payoff(0, 2)
