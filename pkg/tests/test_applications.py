import numpy as np
import pytest

from piu.applications import (
    NOT_TRUNCATED,
    TRUNCATED,
    DetectConfig,
    ListInstance,
    detect_truncation,
    learn_from_positives_smooth,
    list_decode_learn,
    validation_size,
)
from piu.dist import Gaussian, Truncated, UniformBox, adversary, density, make_named_instance, sample
from piu.hypothesis import Threshold1D
from piu.iterative import IterativeConfig, iterative_constreg
from piu.metrics import mc_error
from piu.seeding import child_seed

SMALL = dict(n_cap=300, reps_cap=1, m_cap=10_000)
DETECT = dict(n_cap=200, reps_cap=1, zeta_floor=1e-8, m_cap=20_000)


def _base(**kw):
    return IterativeConfig(**{**dict(eps=0.1, delta=0.1, sigma=1, q=1, alpha=0.5, k=4), **SMALL, **kw})


def test_validation_size_formula():
    assert validation_size(0.1, 0.1, 3, 4.0, 10**9) == int(np.ceil(400 * (30 + np.log(10))))
    assert validation_size(0.01, 0.1, 100, 4.0, 5000) == 5000


def test_single_candidate_matches_iterative():
    inst = make_named_instance("gauss-interval")
    li = ListInstance(inst.p_star, [inst.d_imperfect], inst.params)
    res = list_decode_learn(li, 0.15, 0.1, 4, seed=3, base=_base(), val_cap=5000)
    cfg = _base(eps=0.15, alpha=inst.params.alpha)
    direct = iterative_constreg(inst.p_star, inst.d_imperfect, cfg, child_seed(3, 1, 0))
    assert res.results[0].hypothesis == direct.hypothesis
    assert res.admitted == [0]
    assert res.hypothesis == direct.hypothesis


def test_far_pointmass_candidate():
    inst = make_named_instance("gauss-interval")
    far = adversary("pointmass", [10.0])
    li = ListInstance(inst.p_star, [inst.d_imperfect, far], inst.params)
    res = list_decode_learn(li, 0.2, 0.1, 4, seed=1, base=_base(), val_cap=5000)
    assert 0 in res.admitted
    err, _ = mc_error(res.hypothesis, inst.h_star, inst.d_star, 100_000, 2)
    assert err <= 0.2


def test_duplicate_candidate_both_admitted():
    inst = make_named_instance("gauss-interval")
    li = ListInstance(inst.p_star, [inst.d_imperfect, inst.d_imperfect], inst.params)
    res = list_decode_learn(li, 0.2, 0.1, 4, seed=2, base=_base(), val_cap=5000)
    assert res.admitted == [0, 1]
    err, _ = mc_error(res.hypothesis, inst.h_star, inst.d_star, 100_000, 2)
    assert err <= 0.2


def test_failed_candidate_is_skipped():
    inst = make_named_instance("gauss-interval")
    wrong_dim = Gaussian([0.0, 0.0], [1.0, 1.0])
    li = ListInstance(inst.p_star, [inst.d_imperfect, wrong_dim], inst.params)
    res = list_decode_learn(li, 0.2, 0.1, 2, seed=0, base=_base(), val_cap=2000)
    assert res.fractions[1] is None and res.results[1] is None
    assert any("candidate 1" in w for w in res.warnings)


def test_empty_admission_falls_back(monkeypatch):
    import piu.applications as ap

    inst = make_named_instance("gauss-interval")
    li = ListInstance(inst.p_star, [inst.d_imperfect], inst.params)

    def broken(*a, **k):
        raise ap.LearnerAbort("forced")

    monkeypatch.setattr(ap, "iterative_constreg", broken)
    res = list_decode_learn(li, 0.2, 0.1, 2, seed=0, base=_base(), val_cap=1000)
    assert res.admitted == [] and res.hypothesis.contains(np.array([[100.0]])).all()
    assert any("all-ones" in w for w in res.warnings)


def test_detection_examples():
    Q = Gaussian([0.0], [1.0])
    cfg = DetectConfig(alpha=0.5, k=2, learner=DETECT)
    trunc = sample(Truncated(Q, Threshold1D("ge", 0.0)), 5, 5000)
    v = detect_truncation(trunc, Q, 0.3, cfg, seed=0)
    assert v.verdict == TRUNCATED and v.threshold == pytest.approx(0.85)
    v = detect_truncation(sample(Q, 6, 5000), Q, 0.3, cfg, seed=0)
    assert v.verdict == NOT_TRUNCATED
    out = v.to_dict()
    assert set(out) == {"verdict", "mass", "threshold", "regionSummary"}
    with pytest.raises(ValueError):
        detect_truncation(trunc, Q, 1.5, cfg)
    with pytest.raises(ValueError):
        detect_truncation(np.empty((0, 1)), Q, 0.3, cfg)


def test_detection_with_surrogate_reference():
    Q, R = Gaussian([0.0], [1.0]), UniformBox([-4.0], [4.0])
    sigma = 0.125 / float(density(Q, [[0.0]])[0])
    cfg = DetectConfig(alpha=0.5, sigma=sigma, k=2, target=Q, learner=DETECT)
    v = detect_truncation(sample(Q, 8, 5000), R, 0.3, cfg, seed=1)
    assert v.verdict == NOT_TRUNCATED
    v = detect_truncation(sample(Truncated(Q, Threshold1D("ge", 0.0)), 9, 5000), R, 0.3, cfg, seed=1)
    assert v.verdict == TRUNCATED


def test_detection_deterministic():
    Q = Gaussian([0.0], [1.0])
    cfg = DetectConfig(alpha=0.5, k=2, learner=DETECT)
    obs = sample(Q, 1, 2000)
    a = detect_truncation(obs, Q, 0.3, cfg, seed=4)
    b = detect_truncation(obs, Q, 0.3, cfg, seed=4)
    assert a.to_dict() == b.to_dict()


def test_smooth_positives_delegates():
    inst = make_named_instance("gauss-interval")
    cfg = _base(eps=0.3, alpha=inst.params.alpha, k=2)
    a = learn_from_positives_smooth(inst.p_star, inst.d_imperfect, cfg, seed=2)
    b = iterative_constreg(inst.p_star, inst.d_imperfect, cfg, seed=2)
    assert a.hypothesis == b.hypothesis


def test_smooth_positives_uniform_reference():
    inst = make_named_instance("gauss-interval")
    R = UniformBox([-3.0], [3.0])
    # N(0,1) vs Unif[-3,3]: density ratio at most 6 phi(0), so sigma = 1 / (6 phi(0))
    sigma = 1.0 / (6 * float(density(inst.d_star, [[0.0]])[0]))
    cfg = IterativeConfig(eps=0.15, delta=0.1, sigma=sigma, q=1, alpha=inst.params.alpha, k=4, **SMALL)
    res = learn_from_positives_smooth(inst.p_star, R, cfg, seed=0)
    err, _ = mc_error(res.hypothesis, inst.h_star, inst.d_star, 100_000, 3)
    assert err <= 0.15


def test_smooth_positives_reference_inside_target():
    # the reference sits on a sliver of H* carrying less than sqrt(rho) of
    # the positives, so the first PTF can drop it and the mass check breaks
    inst = make_named_instance("gauss-interval")
    R = UniformBox([0.95], [1.0])
    cfg = IterativeConfig(eps=0.2, delta=0.1, sigma=0.5, q=1, alpha=inst.params.alpha, k=2, **SMALL)
    res = learn_from_positives_smooth(inst.p_star, R, cfg, seed=0)
    assert res.break_reason is not None and "unlabeled mass" in res.break_reason
    assert res.report.break_reason == res.break_reason
