import random
from dataclasses import replace
from fractions import Fraction as F

import pytest

from helpers import bundled, random_tiny_dataset
from revealed_persuasion.axioms import (
    CONSISTENT,
    EXTENDED,
    STATE_DEP,
    TRANSPARENT,
    VARYING_PRIORS,
    VIOLATED,
    PriorMixingError,
    SenderRationalization,
    check,
    check_nbps,
    check_nias,
    check_single_menu,
    nbps_layout,
    rationalizer_failures,
    witness_failures,
)
from revealed_persuasion.dataset import Atom, MenuObservation, SdscDataset, World, sigma_from_signal
from revealed_persuasion.forward import SenderProblem, generate_dataset, random_problems

W2 = World(("w1", "w2"), ("a", "b"), {"a": (F(1), F(0)), "b": (F(0), F(1))})


def one_menu(atoms, prior, world=W2):
    menu = world.actions
    return SdscDataset(world, (MenuObservation(menu, prior, sigma_from_signal(atoms, prior, menu), "A"),))


@pytest.fixture
def interior_b():
    """b recommended strictly inside its region; a at certainty of w1."""
    prior = (F(3, 5), F(2, 5))
    return one_menu([Atom("a", (F(1), F(0)), F(7, 15)), Atom("b", (F(1, 4), F(3, 4)), F(8, 15))], prior)


def test_nias_failure_names_the_better_action():
    prior = (F(1, 2), F(1, 2))
    d = one_menu([Atom("a", (F(1, 4), F(3, 4)), F(1, 2)), Atom("b", (F(3, 4), F(1, 4)), F(1, 2))], prior)
    verdict = check_nias(d)
    assert verdict.outcome == VIOLATED
    assert any("'b' is better" in f for f in verdict.failures)
    assert check(d) == [verdict]


def test_prior_mixing_is_a_violation():
    world = World(("w1", "w2"), ("a", "b", "c"), {"a": (F(1), F(0)), "b": (F(0), F(1)), "c": (F(3, 5), F(3, 5))})
    prior = (F(1, 2), F(1, 2))
    d = one_menu(
        [Atom("c", prior, F(1, 2)), Atom("a", (F(1), F(0)), F(1, 4)), Atom("b", (F(0), F(1)), F(1, 4))], prior, world
    )
    assert check_nias(d).consistent
    with pytest.raises(PriorMixingError):
        nbps_layout(d)
    verdict = check_nbps(d)
    assert verdict.outcome == VIOLATED and verdict.witness.kind == "prior_mixing"
    assert witness_failures(d, verdict.witness) == []
    assert check_single_menu(d).outcome == VIOLATED


def test_uninformative_data_is_consistent():
    prior = (F(1, 2), F(1, 2))
    d = one_menu([Atom("a", prior, F(1))], prior)
    verdict = check_nbps(d)
    assert verdict.consistent and rationalizer_failures(d, verdict.rationalizer) == []


@pytest.mark.parametrize("name", ["four_action_violation", "three_menu_reshuffle"])
def test_violations_carry_replayable_witnesses(name):
    d = bundled(name)
    verdict = check_nbps(d)
    assert verdict.outcome == VIOLATED
    assert witness_failures(d, verdict.witness) == []
    assert verdict.witness.prior_menus


@pytest.mark.parametrize("name", ["four_action_optimal", "two_menu_pooling", "three_state_full_information"])
def test_consistent_data_carries_a_valid_rationalizer(name):
    d = bundled(name)
    verdict = check_nbps(d)
    assert verdict.consistent
    assert rationalizer_failures(d, verdict.rationalizer) == []


def test_tampered_rationalizer_is_caught():
    d = bundled("four_action_optimal")
    r = check_nbps(d).rationalizer
    u = dict(r.u)
    u["b"] = tuple(x + 1 for x in u["b"])
    assert rationalizer_failures(d, SenderRationalization(u, r.lambdas))
    assert rationalizer_failures(d, SenderRationalization(r.u, r.lambdas + r.lambdas))


def test_tampered_witness_is_caught():
    d = bundled("four_action_violation")
    w = check_nbps(d).witness
    m = w.menus[0]
    shifted = tuple((a, p, x * 2) for a, p, x in m.increased)
    assert witness_failures(d, replace(w, menus=(replace(m, increased=shifted),)))
    assert witness_failures(d, replace(w, menus=()))
    assert witness_failures(d, replace(w, menus=(replace(m, weight=F(0)),)))


def test_transparent_mode_uses_constant_utility():
    world = World(("w1", "w2", "w3"), ("a", "b", "c"),
                  {"a": (F(1), F(0), F(0)), "b": (F(0), F(1), F(0)), "c": (F(0), F(0), F(1))})
    u = {"a": (F(1),) * 3, "b": (F(0),) * 3, "c": (F(1, 2),) * 3}
    prior = (F(1, 5), F(2, 5), F(2, 5))
    d = generate_dataset([SenderProblem(world, u, ("a", "b", "c"), prior, "A")])
    verdict = check_nbps(d, TRANSPARENT)
    assert verdict.axiom == "SINBPS" and verdict.consistent
    for a, row in verdict.rationalizer.u.items():
        assert len(set(row)) == 1
    assert rationalizer_failures(d, verdict.rationalizer, transparent=True) == []
    # state-dependent taste for a is not transparent
    assert check_nbps(bundled("four_action_optimal"), TRANSPARENT).outcome == VIOLATED


def test_varying_priors():
    rng = random.Random(5)
    for _ in range(10):
        problems = random_problems(rng, n_menus=3, varying_priors=True)
        d = generate_dataset(problems)
        verdict = check(d, VARYING_PRIORS)
        assert [v.axiom for v in verdict] == ["UNIAS", "UNBPS"]
        assert verdict[-1].consistent
        if d.common_prior() is None:
            with pytest.raises(ValueError, match="different priors"):
                check_nbps(d, STATE_DEP)


def test_extended_mode_uses_excluded_posteriors(interior_b):
    d = interior_b
    assert check_nbps(d).consistent
    for point in [(F(0), F(1)), (F(1, 2), F(1, 2))]:
        exclude = {(0, "b"): [point]}
        verdict = check_nbps(d, EXTENDED, exclude)
        assert verdict.axiom == "NBPS_EXT" and verdict.outcome == VIOLATED
        assert witness_failures(d, verdict.witness, EXTENDED, exclude) == []
    exclude = {(0, "a"): [(F(1, 2), F(1, 2))]}
    verdict = check_nbps(d, EXTENDED, exclude)
    assert verdict.consistent
    assert rationalizer_failures(d, verdict.rationalizer, exclude=exclude) == []


def test_exclusions_need_extended_mode(interior_b):
    with pytest.raises(ValueError):
        check_nbps(interior_b, STATE_DEP, {(0, "b"): [(F(0), F(1))]})
    with pytest.raises(ValueError):
        check_nbps(interior_b, "bogus")


def test_single_menu_geometry_agrees_with_lp():
    rng = random.Random(11)
    for _ in range(40):
        problems = random_problems(rng, n_menus=1)
        d = generate_dataset(problems)
        assert check_single_menu(d).outcome == check_nbps(d).outcome == CONSISTENT
    outcomes = set()
    for _ in range(80):
        d = random_tiny_dataset(rng, 1, rng.randint(2, 4))
        outcome = check_nbps(d).outcome
        assert check_single_menu(d).outcome == outcome
        outcomes.add(outcome)
    assert outcomes == {CONSISTENT, VIOLATED}
    assert check_single_menu(bundled("four_action_violation")).outcome == VIOLATED
    with pytest.raises(ValueError):
        check_single_menu(bundled("three_menu_reshuffle"))
