import json
import random
from fractions import Fraction as F
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import bundled, data_path, lp_witness_on_grid, random_tiny_dataset
from revealed_persuasion.axioms import CONSISTENT, VIOLATED, check, check_nbps
from revealed_persuasion.dataset import DatasetFormatError, revealed_signal
from revealed_persuasion.forward import (
    INCONCLUSIVE,
    _compositions,
    _interval,
    brute_force_nbps,
    generate_dataset,
    load_problems,
    problems_from_dict,
    random_problems,
    solve,
)
from revealed_persuasion.rational import dot


def envelope_at(problem, points):
    """Best two-point split of the prior among ``points`` (binary states).

    A signal over two states needs at most two posteriors, so this is the
    concave envelope of the sender's payoff evaluated at the prior.
    """
    world, q0 = problem.world, problem.prior[1]

    def payoff(q):
        p = (1 - q, q)
        return max(dot(problem.u[a], p) for a in world.best_responses(problem.menu, p))

    best = payoff(q0)
    for lo in points:
        for hi in points:
            if lo < q0 < hi:
                w = (hi - q0) / (hi - lo)
                best = max(best, w * payoff(lo) + (1 - w) * payoff(hi))
    return best


def test_four_action_optimum():
    (problem,) = load_problems(data_path("four_action_problem"))
    sig = solve(problem)
    assert sig.benefit
    assert sum(a.mass for a in sig.atoms) == 1
    mean = tuple(sum(a.mass * a.posterior[k] for a in sig.atoms) for k in range(2))
    assert mean == problem.prior
    assert sig.value == sum(a.mass * dot(problem.u[a.action], a.posterior) for a in sig.atoms)
    assert generate_dataset([problem]) == bundled("four_action_optimal")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_value_matches_grid_envelope(seed):
    rng = random.Random(seed)
    for problem in random_problems(rng, n_states=2):
        sig = solve(problem, nontrivial=False)
        grid = [F(k, 60) for k in range(61)]
        assert envelope_at(problem, grid) <= sig.value
        v = problem.world.receiver_utility
        ends = {e for a in problem.menu if (s := _interval(v, problem.menu, a)) for e in s}
        assert envelope_at(problem, sorted(ends)) == sig.value


def test_no_benefit_means_no_information():
    for name in ("high_prior_problem", "low_prior_problem"):
        for problem in load_problems(data_path(name)):
            sig = solve(problem)
            if not sig.benefit:
                assert len(sig.atoms) == 1 and sig.atoms[0].posterior == problem.prior
                assert sig.atoms[0].action == problem.sender_best_at_prior()


def test_generated_data_is_consistent():
    rng = random.Random(2)
    for _ in range(15):
        d = generate_dataset(random_problems(rng))
        assert all(v.consistent for v in check(d))


def test_problem_file_errors():
    data = json.loads(data_path("four_action_problem").read_text())
    bad = json.loads(json.dumps(data))
    del bad["sender_utility"]["a"]
    with pytest.raises(DatasetFormatError, match="missing action"):
        problems_from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["problems"][0]["prior"] = {"w1": "1", "w2": "0"}
    with pytest.raises(DatasetFormatError, match="full-support"):
        problems_from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["problems"] = []
    with pytest.raises(DatasetFormatError, match="no problems"):
        problems_from_dict(bad)
    bad["problems"] = [{"menu": ["zz"], "prior": data["problems"][0]["prior"]}]
    with pytest.raises(DatasetFormatError, match="bad menu"):
        problems_from_dict(bad)


def test_generate_rejects_mixed_worlds():
    rng = random.Random(0)
    a = random_problems(rng, n_states=2)
    b = random_problems(rng, n_states=2)
    with pytest.raises(ValueError):
        generate_dataset(a + b)
    with pytest.raises(ValueError):
        generate_dataset([])


@pytest.mark.parametrize("k, d", [(1, 5), (2, 4), (3, 6), (4, 3)])
def test_composition_counts(k, d):
    arr = _compositions(k, d)
    assert len(arr) == comb(d + k, k)
    assert (arr.sum(axis=1) <= d).all() and (arr >= 0).all()
    assert len({tuple(r) for r in arr.tolist()}) == len(arr)


def test_brute_force_on_bundled_data():
    reshuffle = bundled("three_menu_reshuffle")
    assert brute_force_nbps(reshuffle, 16).outcome == VIOLATED
    # the known reshuffle needs sixteenths; the thirtieths grid cannot express it
    assert brute_force_nbps(reshuffle, 30).outcome == CONSISTENT
    assert brute_force_nbps(reshuffle, 16, max_free=1).outcome == INCONCLUSIVE
    assert brute_force_nbps(bundled("four_action_violation"), 30).outcome == VIOLATED
    assert brute_force_nbps(bundled("two_menu_pooling"), 30).outcome == CONSISTENT
    with pytest.raises(ValueError):
        brute_force_nbps(bundled("three_state_full_information"))


def test_brute_force_agrees_with_lp_on_tiny_data():
    rng = random.Random(8)
    seen = set()
    for _ in range(30):
        d = random_tiny_dataset(rng, rng.randint(1, 2), 3)
        lp = check_nbps(d).outcome
        grid = brute_force_nbps(d, 30)
        if grid.outcome == VIOLATED:
            assert lp == VIOLATED
        elif grid.outcome == CONSISTENT and lp == VIOLATED and check_nbps(d).witness.kind == "reallocation":
            assert not lp_witness_on_grid(d, 30)
        seen.add(lp)
    assert seen == {CONSISTENT, VIOLATED}


def test_generated_data_reveals_the_solved_signal():
    rng = random.Random(4)
    for _ in range(10):
        problems = random_problems(rng, n_states=3, n_menus=1)
        sig = solve(problems[0])
        d = generate_dataset(problems)
        assert {(a.action, a.posterior) for a in revealed_signal(d.observations[0]).atoms} == {
            (a.action, a.posterior) for a in sig.atoms
        }
