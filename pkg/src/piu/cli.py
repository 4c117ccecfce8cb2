"""Command-line front end: ``piu gen|learn|eval|detect|bench``.

Every command reads a flat JSON config (``--config``); ``--seed`` overrides
the config seed and ``--out`` names the output directory. Exit codes: 0 on
success, 1 on a config or input error, 2 when a learner aborts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .applications import DetectConfig, ListInstance, detect_truncation, list_decode_learn
from .constreg import ConstRegConfig, SolverFailure, boosted_constreg, l1_regression_baseline
from .dist import (
    NAMED_INSTANCES,
    AttemptsExhausted,
    Empirical,
    PIUInstance,
    make_named_instance,
    read_points_csv,
    sample,
    spec_from_dict,
    write_points_csv,
)
from .hypothesis import ClassDescriptor, Hypothesis, hypothesis_from_dict, vc_upper_bound
from .iterative import IterativeConfig, LearnerAbort, iterative_constreg
from .metrics import mc_error, sample_size
from .perm import PermInfeasible, iterative_perm
from .report import RunReport, _clean
from .seeding import child_seed

log = logging.getLogger("piu")

ALGORITHMS = ("alg1", "alg2", "alg3", "alg4", "l1reg-baseline", "detect")
BENCH_HEADER = ("instance", "algorithm", "eps", "n", "seed", "error", "halfwidth", "runtime_ms", "break_reason")
ABORTS = (LearnerAbort, SolverFailure, AttemptsExhausted, PermInfeasible)

_NUM = (int, float)
_LIST = (list,)
# key -> accepted JSON types
SCHEMA: dict[str, tuple] = {
    "instance": (str, dict),
    "instanceParams": (dict,),
    "instanceFile": (str,),
    "positivesFile": (str,),
    "unlabeledFile": (str,),
    "hypothesisFile": (str,),
    "samplesFile": (str,),
    "algorithm": (str,),
    "class": (str,),
    "eps": _NUM,
    "delta": _NUM,
    "k": (int,),
    "n": (int,),
    "m": (int,),
    "seed": (int,),
    "zeta": _NUM,
    "cN": _NUM,
    "cT": _NUM,
    "cZeta": _NUM,
    "cM": _NUM,
    "c": _NUM,
    "nCap": (int,),
    "repsCap": (int,),
    "mCap": (int,),
    "zetaFloor": _NUM,
    "maxIterations": (int,),
    "evalM": (int,),
    "reference": (dict,),
    "target": (dict,),
    "beta": _NUM,
    "alpha": _NUM,
    "sigma": _NUM,
    "q": _NUM,
    "mcBudget": (int,),
    "candidates": _LIST,
    "instances": _LIST,
    "algorithms": _LIST,
    "epsList": _LIST,
    "nList": _LIST,
    "seeds": _LIST,
}


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict) -> dict:
    """Reject unknown keys and wrongly typed values."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key, val in cfg.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        types = SCHEMA[key]
        if isinstance(val, bool) or not isinstance(val, types):
            names = "/".join(t.__name__ for t in types)
            raise ConfigError(f"config key {key!r} must be {names}, got {type(val).__name__}")
    alg = cfg.get("algorithm")
    if alg is not None and alg not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
    for alg in cfg.get("algorithms", []):
        if alg not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
    return cfg


def load_config(path: str | None, seed: int | None) -> dict:
    cfg = {}
    if path is not None:
        with open(path) as f:
            try:
                cfg = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e
    validate_config(cfg)
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def _write_json(path: Path, obj) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(json.dumps(_clean(obj), indent=2) + "\n")


def _read_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


# -- instances ----------------------------------------------------------------


def resolve_instance(cfg: dict) -> PIUInstance:
    if "instanceFile" in cfg:
        return PIUInstance.from_dict(_read_json(cfg["instanceFile"]))
    inst = cfg.get("instance")
    if inst is None:
        raise ConfigError("need 'instance' or 'instanceFile'")
    if isinstance(inst, dict):
        return PIUInstance.from_dict(inst)
    if inst not in NAMED_INSTANCES:
        raise ConfigError(f"unknown instance {inst!r}; choose from {', '.join(NAMED_INSTANCES)}")
    return make_named_instance(inst, **cfg.get("instanceParams", {}))


def _streams(cfg: dict, inst: PIUInstance):
    """Positive and unlabeled samplers: the instance itself, or uniform
    resampling from the CSV files when they are given."""
    P, U = inst.p_star, inst.d_imperfect
    if "positivesFile" in cfg:
        P = Empirical(read_points_csv(cfg["positivesFile"], inst.dim))
    if "unlabeledFile" in cfg:
        U = Empirical(read_points_csv(cfg["unlabeledFile"], inst.dim))
    return P, U


# -- learners -----------------------------------------------------------------


@dataclass
class LearnOutput:
    hypothesis: Hypothesis
    report: RunReport


def _iterative_config(cfg: dict, inst: PIUInstance) -> IterativeConfig:
    p = inst.params
    extra = {}
    for key, name in (("cZeta", "cZeta"), ("cM", "cM"), ("cN", "cN"), ("cT", "cT"),
                      ("mCap", "m_cap"), ("repsCap", "reps_cap"), ("zetaFloor", "zeta_floor"),
                      ("maxIterations", "max_iterations")):
        if key in cfg:
            extra[name] = cfg[key]
    n_cap = cfg.get("nCap", cfg.get("n"))
    if n_cap is not None:
        extra["n_cap"] = n_cap
    return IterativeConfig(
        eps=cfg.get("eps", 0.1), delta=cfg.get("delta", 0.1), sigma=p.sigma, q=p.q,
        alpha=p.alpha if p.alpha is not None else 1.0, k=cfg.get("k", 2), **extra,
    )


def _run_alg1(cfg, inst, seed):
    P, U = _streams(cfg, inst)
    cls = ClassDescriptor(cfg.get("class", "interval1d"), d=inst.dim)
    eps, delta = cfg.get("eps", 0.1), cfg.get("delta", 0.1)
    n = cfg.get("n")
    if n is None:
        p = inst.params
        n = sample_size("piu-general", eps, p.sigma, p.q, vc_upper_bound(cls), delta, cfg.get("c", 4.0))
    res = iterative_perm(P, U, eps, delta, cls, n, seed)
    return LearnOutput(res.hypothesis, res.report)


def _run_alg2(cfg, inst, seed):
    P, U = _streams(cfg, inst)
    res = iterative_constreg(P, U, _iterative_config(cfg, inst), seed)
    return LearnOutput(res.hypothesis, res.report)


def _run_alg3(cfg, inst, seed):
    P, U = _streams(cfg, inst)
    it = _iterative_config(cfg, inst)
    creg = ConstRegConfig(
        zeta=cfg.get("zeta", it.zeta), delta=it.delta, sigma=it.sigma, q=it.q, alpha=it.alpha,
        k=it.k, cN=it.cN, cT=it.cT, n_cap=it.n_cap, reps_cap=it.reps_cap,
    )
    res = boosted_constreg(P, U, creg, seed)
    return LearnOutput(res.hypothesis, res.report)


def _run_alg4(cfg, inst, seed):
    P, U = _streams(cfg, inst)
    cands = [spec_from_dict(c) for c in cfg["candidates"]] if "candidates" in cfg else [U]
    base = _iterative_config(cfg, inst)
    li = ListInstance(P, cands, inst.params)
    res = list_decode_learn(li, base.eps, base.delta, base.k, seed, base=base)
    report = RunReport(
        "alg4",
        params={"eps": base.eps, "delta": base.delta, "k": base.k, "seed": seed,
                "candidates": len(cands), "validationSize": res.validation_size},
    )
    report.iterations = [
        {"candidate": i, "fraction": f, "admitted": i in res.admitted,
         "breakReason": None if r is None else r.break_reason}
        for i, (f, r) in enumerate(zip(res.fractions, res.results))
    ]
    report.notes.extend(res.warnings)
    return LearnOutput(res.hypothesis, report)


def _run_l1(cfg, inst, seed):
    # positives labelled 1, unlabeled points labelled 0
    Pd, Ud = _streams(cfg, inst)
    n = cfg.get("n", 2000)
    eps, delta, k = cfg.get("eps", 0.1), cfg.get("delta", 0.1), cfg.get("k", 2)

    def draw(m, gen):
        s = int(gen.integers(0, 2**63))
        X = np.vstack([sample(Pd, child_seed(s, 0), m), sample(Ud, child_seed(s, 1), m)])
        return X, np.r_[np.ones(m), np.zeros(m)]

    X, y = draw(n, np.random.default_rng(child_seed(seed, 0)))
    h = l1_regression_baseline(
        X, y, k, eps, delta, child_seed(seed, 1), sampler=draw, cN=cfg.get("cN", 4.0),
        reps_cap=cfg.get("repsCap"),
    )
    report = RunReport("l1reg-baseline", params={"eps": eps, "delta": delta, "k": k, "n": n, "seed": seed})
    return LearnOutput(h, report)


RUNNERS = {"alg1": _run_alg1, "alg2": _run_alg2, "alg3": _run_alg3, "alg4": _run_alg4, "l1reg-baseline": _run_l1}


def run_learner(cfg: dict, inst: PIUInstance, seed: int) -> LearnOutput:
    alg = cfg.get("algorithm")
    if alg is None:
        raise ConfigError("need 'algorithm'")
    if alg == "detect":
        raise ConfigError("the detect algorithm runs through the 'detect' command")
    out = RUNNERS[alg](cfg, inst, seed)
    if inst.truth_visible:
        est, hw = mc_error(out.hypothesis, inst.h_star, inst.d_star, cfg.get("evalM", 100_000), child_seed(seed, 99))
        out.report.error_estimate, out.report.error_halfwidth = est, hw
    return out


# -- commands -----------------------------------------------------------------


def cmd_gen(cfg: dict, out: Path) -> None:
    inst = resolve_instance(cfg)
    seed, n = cfg.get("seed", 0), cfg.get("n", 1000)
    if n < 0:
        raise ConfigError("n must be non-negative")
    out.mkdir(parents=True, exist_ok=True)
    write_points_csv(out / "positives.csv", sample(inst.p_star, child_seed(seed, 0), n))
    write_points_csv(out / "unlabeled.csv", sample(inst.d_imperfect, child_seed(seed, 1), n))
    _write_json(out / "instance.json", {**inst.to_dict(), "seed": seed, "n": n})
    log.info("wrote %d positives and %d unlabeled points to %s", n, n, out)


def cmd_learn(cfg: dict, out: Path) -> None:
    inst = resolve_instance(cfg)
    res = run_learner(cfg, inst, cfg.get("seed", 0))
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "hypothesis.json", res.hypothesis.to_dict())
    _write_json(out / "report.json", res.report.to_dict())
    log.info("error estimate %s; wrote %s", res.report.error_estimate, out)


def cmd_eval(cfg: dict, out: Path) -> None:
    if "hypothesisFile" not in cfg:
        raise ConfigError("need 'hypothesisFile'")
    inst = resolve_instance(cfg)
    if not inst.truth_visible:
        raise ConfigError("the instance carries no ground truth")
    h = hypothesis_from_dict(_read_json(cfg["hypothesisFile"]))
    m, seed = cfg.get("m", 100_000), cfg.get("seed", 0)
    est, hw = mc_error(h, inst.h_star, inst.d_star, m, seed)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "eval.json", {"estimate": est, "halfWidth95": hw, "m": m, "seed": seed})
    log.info("error %.4f +- %.4f", est, hw)


def cmd_detect(cfg: dict, out: Path) -> None:
    for key in ("samplesFile", "reference", "beta"):
        if key not in cfg:
            raise ConfigError(f"need {key!r}")
    ref = spec_from_dict(cfg["reference"])
    X = read_points_csv(cfg["samplesFile"], ref.dim)
    learner = {}
    for key, name in (("nCap", "n_cap"), ("repsCap", "reps_cap"), ("mCap", "m_cap"),
                      ("zetaFloor", "zeta_floor"), ("maxIterations", "max_iterations"),
                      ("cZeta", "cZeta"), ("cM", "cM"), ("cN", "cN"), ("cT", "cT")):
        if key in cfg:
            learner[name] = cfg[key]
    dcfg = DetectConfig(
        alpha=cfg.get("alpha", 0.5), sigma=cfg.get("sigma", 1.0), q=cfg.get("q", 1.0),
        k=cfg.get("k", 2), delta=cfg.get("delta", 0.1), mc_budget=cfg.get("mcBudget", 100_000),
        target=spec_from_dict(cfg["target"]) if "target" in cfg else None, learner=learner,
    )
    v = detect_truncation(X, ref, cfg["beta"], dcfg, cfg.get("seed", 0))
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "verdict.json", v.to_dict())
    _write_json(out / "report.json", v.report)
    log.info("verdict %s (mass %.4f, threshold %.4f)", v.verdict, v.reference_mass, v.threshold)


def _fmt(x: float) -> str:
    return repr(float(x))


def _bench_row(cfg: dict, name: str, alg: str, eps: float, n: int, seed: int) -> list[str]:
    row_cfg = {**cfg, "instance": name, "algorithm": alg, "eps": eps, "n": n, "seed": seed}
    t0 = time.perf_counter()
    try:
        inst = resolve_instance(row_cfg)
        res = run_learner(row_cfg, inst, seed)
        err, hw = res.report.error_estimate, res.report.error_halfwidth
        if err is None:
            err = hw = math.nan
        note = res.report.break_reason or ""
    except (*ABORTS, ValueError) as e:
        err, hw, note = math.nan, math.nan, f"failed: {type(e).__name__}: {e}"
    ms = int(round((time.perf_counter() - t0) * 1000))
    return [name, alg, _fmt(eps), str(n), str(seed), _fmt(err), _fmt(hw), str(ms), note]


def bench_rows(cfg: dict, threads: int = 1) -> list[list[str]]:
    """Rows in sweep order: instance, algorithm, eps, n, seed (outer to inner)."""
    base = {k: v for k, v in cfg.items() if k not in ("instances", "algorithms", "epsList", "nList", "seeds")}
    jobs = [
        (name, alg, float(eps), int(n), int(seed))
        for name in cfg.get("instances", [])
        for alg in cfg.get("algorithms", [])
        for eps in cfg.get("epsList", [])
        for n in cfg.get("nList", [])
        for seed in cfg.get("seeds", [])
    ]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda j: _bench_row(base, *j), jobs))
    return [_bench_row(base, *j) for j in jobs]


def format_bench_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def cmd_bench(cfg: dict, out: Path) -> None:
    threads = max(1, int(os.environ.get("PIU_THREADS", "1")))
    rows = bench_rows(cfg, threads)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as f:
        f.write(format_bench_csv(rows))
    log.info("wrote %d rows to %s", len(rows), out / "results.csv")


COMMANDS = {"gen": cmd_gen, "learn": cmd_learn, "eval": cmd_eval, "detect": cmd_detect, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--quiet", action="store_true", help="only log errors")
    parser = argparse.ArgumentParser(prog="piu", description="Learning from positive and imperfect unlabeled samples.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gen": "sample an instance to positives.csv / unlabeled.csv / instance.json",
        "learn": "run a learner, write hypothesis.json and report.json",
        "eval": "Monte Carlo error of a hypothesis against the ground truth",
        "detect": "truncation detection, write verdict.json",
        "bench": "parameter sweep, write results.csv",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    level = log.level
    log.setLevel(logging.ERROR if args.quiet else logging.INFO)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg = load_config(args.config, args.seed)
        COMMANDS[args.command](cfg, Path(args.out))
    except ABORTS as e:
        log.error("learner aborted: %s", e)
        return 2
    except (ValueError, KeyError, TypeError, OSError) as e:
        log.error("%s: %s", type(e).__name__, e)
        return 1
    finally:
        log.setLevel(level)
    return 0


if __name__ == "__main__":
    sys.exit(main())
