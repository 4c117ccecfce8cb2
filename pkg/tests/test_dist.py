import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from piu.dist import (
    AttemptsExhausted,
    Corrupted,
    Empirical,
    Gaussian,
    Mixture,
    NAMED_INSTANCES,
    PIUInstance,
    Truncated,
    UniformBox,
    adversary,
    attempt_cap,
    corrupt_unlabeled,
    density,
    make_named_instance,
    mass,
    rate_from_kl,
    read_points_csv,
    rejection_draws,
    rejection_sample,
    sample,
    smoothness_from_chi_square,
    smoothness_from_renyi,
    spec_from_dict,
    weighted_mass,
    write_points_csv,
)
from piu.hypothesis import Interval1D, Threshold1D
from piu.metrics import HOEFFDING_95
from piu.seeding import rng


def test_sample_examples():
    X = sample(UniformBox([-1.0], [1.0]), 0, 1000)
    assert X.shape == (1000, 1) and X.min() >= -1 and X.max() <= 1
    assert abs(sample(Gaussian([0.0], [1.0]), 1, 100_000).mean()) < 0.02
    assert sample(Gaussian([0.0, 0.0], [1.0, 1.0]), 0, 0).shape == (0, 2)


def test_sample_is_pure():
    spec = Mixture([0.3, 0.7], (Gaussian([0.0], [1.0]), UniformBox([2.0], [3.0])))
    assert np.array_equal(sample(spec, 5, 100), sample(spec, 5, 100))
    assert not np.array_equal(sample(spec, 5, 100), sample(spec, 6, 100))


def test_mass_examples():
    g = Gaussian([0.0], [1.0])
    assert mass(g, Threshold1D("ge", 0.0)) == pytest.approx(0.5, abs=1e-12)
    assert mass(UniformBox([-2.0], [2.0]), Interval1D(0, 1)) == pytest.approx(0.25, abs=1e-12)
    assert mass(g, Interval1D(0, 1)) == pytest.approx(0.341345, abs=1e-4)


def test_mass_monte_carlo_fallback():
    from piu.hypothesis import Halfspace

    g = Gaussian([0.0, 0.0], [1.0, 1.0])
    assert mass(g, Halfspace([1.0, 0.0], 0.0), 100_000, 3) == pytest.approx(0.5, abs=0.01)


def test_mass_of_truncated_is_conditional():
    base = Gaussian([0.0], [1.0])
    t = Truncated(base, Threshold1D("ge", 0.0))
    want = (ndtr(1.0) - 0.5) / 0.5
    assert mass(t, Interval1D(-5, 1)) == pytest.approx(want, abs=1e-12)


def test_rejection_examples():
    g = rng(0)
    x = rejection_sample(UniformBox([-2.0], [2.0]), Threshold1D("ge", 0.0), 0.5, 1e-9, g)
    assert 0.0 <= x[0] <= 2.0
    with pytest.raises(AttemptsExhausted):
        rejection_sample(UniformBox([-2.0], [2.0]), Interval1D(5, 6), 0.5, 1e-3, g)


def test_rejection_attempts_geometric():
    _, attempts = rejection_draws(Gaussian([0.0], [1.0]), Threshold1D("ge", 0.0), 10_000, 0.1, 1e-9, rng(7))
    assert 1.9 <= attempts.mean() <= 2.1
    assert attempts.min() >= 1


def test_rejection_attempts_match_single_calls():
    # batching must not change the attempt accounting: every base draw is
    # charged to exactly one accepted point or to the trailing remainder
    _, attempts = rejection_draws(UniformBox([0.0], [1.0]), Interval1D(0.0, 0.25), 4000, 0.1, 1e-9, rng(3))
    assert attempts.mean() == pytest.approx(4.0, rel=0.06)


@settings(max_examples=20, deadline=None)
@given(lo=st.floats(-2.0, 1.0), width=st.floats(0.2, 2.0), seed=st.integers(0, 2**31))
def test_acceptance_rate_matches_mass(lo, width, seed):
    base = Gaussian([0.0], [1.0])
    region = Interval1D(lo, lo + width)
    m = mass(base, region)
    if m < 0.02:
        return
    _, attempts = rejection_draws(base, region, 10_000, m / 2, 1e-12, rng(seed))
    assert abs(1.0 / attempts.mean() - m) <= 4.0 / math.sqrt(10_000)


@settings(max_examples=30, deadline=None)
@given(cut=st.floats(-1.5, 1.5), seed=st.integers(0, 2**31))
def test_truncated_samples_lie_in_region(cut, seed):
    region = Threshold1D("ge", cut)
    X = sample(Truncated(Gaussian([0.0], [1.0]), region, mass_floor=0.05), seed, 500)
    assert region.contains(X).all()


def test_attempt_cap():
    assert attempt_cap(0.5, math.exp(-3)) == 6
    with pytest.raises(ValueError):
        attempt_cap(0.0, 0.1)


def test_chi_square_examples():
    assert smoothness_from_chi_square(0).sigma == 1.0 and smoothness_from_chi_square(0).q == 2.0
    assert smoothness_from_chi_square(3).sigma == pytest.approx(0.5, abs=1e-12)
    assert smoothness_from_chi_square(8).sigma == pytest.approx(1 / 3, abs=1e-12)


def test_renyi_examples():
    p = smoothness_from_renyi(2, 0.0)
    assert (p.sigma, p.q) == (1.0, 2.0)
    p = smoothness_from_renyi(2, math.log(4))
    assert p.sigma == pytest.approx(0.5, abs=1e-12) and p.q == 2.0
    p = smoothness_from_renyi(101, 1.0)
    assert p.q == pytest.approx(1.01, abs=1e-12)
    assert p.sigma == pytest.approx(0.3716, abs=1e-4)


@settings(max_examples=100)
@given(chi2=st.floats(0.0, 1e4))
def test_renyi_agrees_with_chi_square_at_order_two(chi2):
    a = smoothness_from_chi_square(chi2)
    b = smoothness_from_renyi(2.0, math.log1p(chi2))
    assert abs(a.sigma - b.sigma) <= 1e-12 and a.q == b.q


def test_kl_rate_examples():
    assert rate_from_kl(1.0)(1.0) == pytest.approx(math.exp(-3), abs=1e-12)
    assert rate_from_kl(0.5)(1.0) == pytest.approx(math.exp(-3), abs=1e-12)
    assert rate_from_kl(7.0)(1e12) == pytest.approx(1.0, abs=1e-9)


def test_named_instance_examples():
    a, b = make_named_instance("remark41-a"), make_named_instance("remark41-b")
    X = np.linspace(-3, 3, 601).reshape(-1, 1)
    # both targets restricted to their true distributions give P* = Unif[-1, 1]
    assert mass(a.p_star, Interval1D(-1, 1)) == pytest.approx(1.0)
    assert mass(b.p_star, Interval1D(-1, 1)) == pytest.approx(1.0)
    assert mass(a.p_star, Interval1D(-1, 0)) == pytest.approx(0.5)
    assert mass(b.p_star, Interval1D(-1, 0)) == pytest.approx(0.5)
    assert not np.array_equal(a.h_star.contains(X), b.h_star.contains(X))
    assert (a.params.sigma, a.params.q) == (0.75, 1.0)
    g = make_named_instance("gauss-interval")
    assert g.params.alpha == pytest.approx(0.682689, abs=1e-6)
    with pytest.raises(ValueError):
        make_named_instance("nope")


@pytest.mark.parametrize("name", NAMED_INSTANCES)
def test_named_instances_are_smooth(name):
    inst = make_named_instance(name)
    s, q = inst.params.sigma, inst.params.q
    n = 200_000
    Xs = np.sort(sample(inst.d_star, 11, n)[:, 0])
    Xd = np.sort(sample(inst.d_imperfect, 12, n)[:, 0])
    hw = HOEFFDING_95 / math.sqrt(n)
    g = rng(13)
    lo = g.uniform(-4, 11, 1000)
    hi = lo + g.exponential(1.0, 1000)
    ds = (np.searchsorted(Xs, hi, "right") - np.searchsorted(Xs, lo, "left")) / n
    dd = (np.searchsorted(Xd, hi, "right") - np.searchsorted(Xd, lo, "left")) / n
    assert np.all(ds <= dd ** (1.0 / q) / s + 3 * hw)


@pytest.mark.parametrize("name", NAMED_INSTANCES)
def test_named_instance_alpha_and_positives(name):
    inst = make_named_instance(name)
    P = sample(inst.p_star, 0, 2000)
    assert inst.h_star.contains(P).all()
    assert mass(inst.d_star, inst.h_star, 200_000, 1) == pytest.approx(inst.params.alpha, abs=0.01)


def test_instance_roundtrip():
    inst = make_named_instance("corrupted-list", gamma=0.25)
    back = PIUInstance.from_dict(inst.to_dict())
    assert back.to_dict() == inst.to_dict()
    assert np.array_equal(sample(back.d_imperfect, 4, 50), sample(inst.d_imperfect, 4, 50))


def test_corruption_examples():
    clean = Gaussian([0.0], [1.0])
    pm = adversary("pointmass", [10.0])
    X = sample(corrupt_unlabeled(clean, 0.5, pm), 0, 10_000)
    assert 0.47 <= np.mean(X[:, 0] == 10.0) <= 0.53
    assert np.all(sample(corrupt_unlabeled(clean, 0.0, pm), 0, 100) == 10.0)
    same = corrupt_unlabeled(clean, 1.0, pm)
    assert not np.any(sample(same, 0, 10_000) == 10.0)


def test_replay_adversary_draws_positives():
    inst = make_named_instance("gauss-interval")
    adv = adversary("replay-positives", positives=inst.p_star)
    X = sample(corrupt_unlabeled(inst.d_imperfect, 0.0, adv), 0, 1000)
    assert inst.h_star.contains(X).all()


def test_spec_roundtrip():
    specs = [
        Gaussian([0.0, 1.0], [1.0, 2.0]),
        UniformBox([-1.0], [3.0]),
        Mixture([0.5, 0.5], (Gaussian([0.0], [1.0]), UniformBox([0.0], [1.0]))),
        Empirical(np.array([[1.0], [2.0]])),
        Truncated(Gaussian([0.0], [1.0]), Interval1D(-1, 1)),
        Corrupted(Gaussian([0.0], [1.0]), 0.3, adversary("shifted-gaussian", [3.0])),
    ]
    for spec in specs:
        back = spec_from_dict(spec.to_dict())
        assert back.to_dict() == spec.to_dict()
        assert np.array_equal(sample(back, 9, 20), sample(spec, 9, 20))


def test_density_and_weighted_mass():
    g, u = Gaussian([0.0], [1.0]), UniformBox([-4.0], [4.0])
    assert density(g, [[0.0]])[0] == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert density(u, [[5.0]])[0] == 0.0
    est = weighted_mass(g, u, Interval1D(0, 1), 200_000, 2)
    assert est == pytest.approx(mass(g, Interval1D(0, 1)), abs=0.005)


def test_csv_roundtrip(tmp_path):
    X = np.array([[0.1, -1 / 3], [1e-300, 12345.678]])
    path = tmp_path / "pts.csv"
    write_points_csv(path, X)
    assert read_points_csv(path, 2).tobytes() == X.tobytes()
    assert b"\r" not in path.read_bytes()
    with pytest.raises(ValueError):
        read_points_csv(path, 3)
