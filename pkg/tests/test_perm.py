import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_perm, grid_pattern_perm
from piu.dist import make_named_instance
from piu.hypothesis import ClassDescriptor, Interval1D, Threshold1D
from piu.metrics import mc_error
from piu.perm import (
    CERTIFIED,
    FAILED_FEASIBILITY,
    FAILED_OPTIMALITY,
    iterative_perm,
    perm_exact,
    required_count,
)

LE = ClassDescriptor("threshold1d", directions=("le",))
BOTH = ClassDescriptor("threshold1d")
IV = ClassDescriptor("interval1d")


def test_threshold_examples():
    P, U = [0.0, 1.0], [-2.0, 0.5, 2.0]
    s = perm_exact(P, U, 0.0, LE)
    assert s.hypothesis == Threshold1D("le", 1.0)
    assert s.objective == pytest.approx(2 / 3)
    s = perm_exact(P, U, 0.5, LE)
    assert s.hypothesis == Threshold1D("le", 0.0)
    assert s.objective == pytest.approx(1 / 3)


def test_empty_unlabeled_gives_zero():
    for cls in (LE, BOTH, IV):
        assert perm_exact([0.3, 0.1], [], 0.0, cls).objective == 0.0


def test_rho_one_is_always_feasible():
    s = perm_exact([0.3, 0.1], [0.0, 1.0], 1.0, IV)
    assert s.objective == 0.0 and s.feas_margin >= 0


def test_required_count_is_exact():
    assert required_count(10, 0.1) == 9
    assert required_count(3, 1 / 3) == 2
    assert required_count(4, 0.0) == 4
    assert required_count(4, 1.0) == 0


def test_unsupported_class():
    with pytest.raises(ValueError):
        perm_exact([0.0], [1.0], 0.0, ClassDescriptor("ptf", k=2))
    with pytest.raises(ValueError):
        perm_exact([], [1.0], 0.0, BOTH)


def _check(P, U, rho, cls, family, dirs):
    s = perm_exact(P, U, float(rho), cls)
    p = np.asarray(P, dtype=float)
    pc = int(np.count_nonzero(s.hypothesis.contains(p))) if p.size else 0
    assert pc >= required_count(len(P), float(rho))
    assert s.feas_margin >= 0
    truth = brute_perm(P, U, Fraction(rho), family, dirs)
    assert s.objective == truth


GRID = (0.0, 1.0, 2.0)


@pytest.mark.parametrize("family", ["threshold1d", "interval1d"])
def test_exhaustive_tiny_grid(family):
    cls = IV if family == "interval1d" else BOTH
    for n_total in range(1, 5):
        for n_pos in range(1, n_total + 1):
            for P in itertools.product(GRID, repeat=n_pos):
                for U in itertools.product(GRID, repeat=n_total - n_pos):
                    for rho in (Fraction(0), Fraction(1, 2), Fraction(1)):
                        _check(P, U, rho, cls, family, ("le", "ge"))


@settings(max_examples=300, deadline=None)
@given(
    P=st.lists(st.integers(-3, 3), min_size=1, max_size=6),
    U=st.lists(st.integers(-3, 3), max_size=6),
    rho=st.sampled_from([Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)]),
    family=st.sampled_from(["le", "ge", "both", "interval"]),
)
def test_matches_brute_force(P, U, rho, family):
    if family == "interval":
        _check(P, U, rho, IV, "interval1d", None)
    else:
        dirs = ("le", "ge") if family == "both" else (family,)
        _check(P, U, rho, ClassDescriptor("threshold1d", directions=dirs), "threshold1d", dirs)


def test_tie_break_prefers_smaller_cut():
    # both directions capture one unlabeled point; the smaller cut wins
    s = perm_exact([0.0, 1.0], [-2.0, 0.5, 2.0], 0.5, BOTH)
    assert s.hypothesis == Threshold1D("le", 0.0)


def test_iterative_perm_remark_instance():
    inst = make_named_instance("remark41-a")
    res = iterative_perm(inst.p_star, inst.d_imperfect, 0.1, 0.1, BOTH, 2000, seed=7)
    err, hw = mc_error(res.hypothesis, inst.h_star, inst.d_star, 100_000, seed=1)
    assert err <= 0.1
    assert len(res.removed) == 10
    assert all(a >= b for a, b in zip(res.removed, res.removed[1:]))
    assert res.report.self_check["removedNonIncreasing"]


def test_iterative_perm_degenerate_rounds_complete():
    inst = make_named_instance("gauss-interval")
    res = iterative_perm(inst.p_star, inst.d_imperfect, 0.25, 0.1, IV, 300, seed=3)
    # interval round 1 is already optimal; later rounds repeat the objective
    assert len(res.rounds) == 4
    assert res.removed[1:] == [0, 0, 0]
    assert len({r.u_count for r in res.rounds}) == 1


def test_certifier():
    P = [0.0, 1.0]
    U = [-2.0, 0.5, 2.0]
    h = perm_exact(P, U, 0.0, LE).hypothesis
    assert perm_exact(P, U, 0.0, LE).objective == pytest.approx(2 / 3)
    # at eps = 0.1 the reference tolerance 0.5 allows objective 1/3
    assert _cert(h, P, U, 0.0, 0.1) == FAILED_OPTIMALITY
    assert _cert(Threshold1D("le", 0.0), P, U, 0.0, 0.1) == FAILED_FEASIBILITY
    assert _cert(Threshold1D("le", 1.0), P, [-2.0, 2.0], 0.0, 0.01) == CERTIFIED
    covering = Threshold1D("le", math.inf)
    assert _cert(covering, P, U, 0.0, 0.0) == FAILED_OPTIMALITY
    with pytest.raises(ValueError):
        _cert(h, P, U, 0.2, 0.1)


def _cert(h, P, U, gamma, eps):
    from piu.perm import robust_perm_certify

    return robust_perm_certify(h, P, U, gamma, eps, LE)


def test_certifier_accepts_solution_when_tolerances_agree():
    # all positives share one coordinate, so every tolerance below 1 has the same optimum
    rng = np.random.default_rng(0)
    P = np.full(50, 0.25)
    U = rng.uniform(-2, 2, 200)
    h = perm_exact(P, U, 0.02, BOTH).hypothesis
    from piu.perm import robust_perm_certify

    assert robust_perm_certify(h, P, U, 0.02, 0.05, BOTH) == CERTIFIED



@settings(max_examples=200, deadline=None)
@given(
    P=st.lists(st.integers(0, 3), min_size=1, max_size=6),
    U=st.lists(st.integers(0, 3), max_size=6),
    rho=st.sampled_from([Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1)]),
    family=st.sampled_from(["threshold1d", "interval1d"]),
)
def test_grid_pattern_oracle_agrees_with_loop_oracle(P, U, rho, family):
    pc = np.bincount(P, minlength=4)[None, :]
    uc = np.bincount(U, minlength=4)[None, :]
    got = grid_pattern_perm(pc, uc, rho, family)[0]
    assert got == brute_perm(P, U, rho, family)
