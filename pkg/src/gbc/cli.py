"""Batch experiment runner.

Every subcommand reads a JSON config (a file path or ``fixture:NAME``), runs
one experiment and writes ``results.csv``, ``summary.json`` and
``meta.json`` to ``--out``.  Exit status is 0 on success, 2 for invalid input
and 3 for numerical failure; failed runs leave no artifacts behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .baker import baker_hit_experiment, shrinking_balls
from .errors import ConfigError, GbcError, NumericError
from .gibbs import cylinder_measure, fact_constants, joint_measure
from .io import (
    config_hash,
    csv_text,
    fixture_names,
    load_fixture,
    load_json,
    load_measure,
    load_sequence,
    write_artifacts,
)
from .orbits import sbc_experiment, simulate_hits
from .shift import cylinders_from_spec
from .sp import sp_verdict
from .toral import (
    RectangleSequence,
    build_toral,
    drift_hit_experiment,
    fix_count,
    make_rectangle,
    partition_function,
    torus_hit_experiment,
)

log = logging.getLogger("gbc")

KINDS = ("measure", "sp-check", "counterexample", "simulate", "toral", "baker")


class Stage:
    """Names the module operation currently running, for error messages."""

    name = "cli.run"


def _stage(name: str):
    Stage.name = name
    log.debug("stage %s", name)


def _hit_rows(stats, series: str | None = None):
    for sd, N, E, S, r in stats.rows():
        yield ([series] if series else []) + [sd, N, E, S, r]


HIT_HEADER = ["seed", "N", "E_N", "S_N", "ratio"]


def _with_provenance(header, rows, kind, h):
    return csv_text(header + ["kind", "config_hash"], (list(r) + [kind, h] for r in rows))


def run_measure(cfg, workers, kind, h):
    _stage("gibbs.build_markov_gibbs")
    g = load_measure(cfg.get("measure", {}))
    _stage("gibbs.cylinder_measure")
    cyls = cylinders_from_spec(g.base, cfg.get("cylinders", []))
    rows = [[i, c.lo, c.hi, "-".join(map(str, c.word)), cylinder_measure(g, c)] for i, c in enumerate(cyls)]
    joints = []
    _stage("gibbs.joint_measure")
    for a, b in cfg.get("pairs", []):
        joints.append({"pair": [a, b], "joint": joint_measure(g, cyls[a], cyls[b])})
    fc = fact_constants(g)
    summary = {**g.to_dict(), "lambda": g.lam, "joints": joints, "fact_constants": fc.__dict__}
    return _with_provenance(["index", "lo", "hi", "word", "measure"], rows, kind, h), summary


def run_sp_check(cfg, workers, kind, h):
    _stage("gibbs.build_markov_gibbs")
    g = load_measure(cfg.get("measure", {}))
    _stage("bc-lab.load_sequence")
    seq = load_sequence(g, cfg.get("sequence", {}))
    grid = cfg.get("N_grid")
    if grid is None:
        N = int(cfg.get("N", len(seq)))
        grid = sorted({max(1, N >> j) for j in range(5)})
    _stage("bc-lab.sp_verdict")
    rep = sp_verdict(g, seq, grid, workers)
    summary = {**rep.summary(), "alignment_tag": seq.alignment_tag, "flags": seq.flags}
    return rep.to_csv(kind, h), summary


def _block_grid(seq, K):
    ks = sorted({max(1, K * f // 8) for f in (1, 2, 3, 4, 5, 6, 7, 8)})
    return [int(seq.s[k - 1]) for k in ks]


def run_counterexample(cfg, workers, kind, h):
    thm = str(cfg.get("thm", ""))
    _stage("gibbs.build_markov_gibbs")
    g = load_measure(cfg.get("measure", {}))
    seq_spec = dict(cfg.get("sequence", {}))
    if thm == "2.2":
        seq_spec.setdefault("generator", "thm22")
        _stage("bc-lab.thm22_counterexample")
        seq = load_sequence(g, seq_spec)
        K = len(seq.base)
        _stage("bc-lab.sp_verdict")
        grid = _block_grid(seq, K)
        rep = sp_verdict(g, seq, grid, workers)
        _, r_full = rep.ratios_at(1)
        summary = {
            **rep.summary(),
            "thm": thm,
            "K": K,
            "ratio_sK_over_sK2": float(r_full[-1] / r_full[grid.index(int(seq.s[K // 2 - 1]))]),
            "flags": seq.flags,
            "alignment_tag": seq.alignment_tag,
        }
        return rep.to_csv(kind, h), summary
    if thm in ("2.3", "prop16"):
        seq_spec.setdefault("generator", "thm23" if thm == "2.3" else "prop16")
        _stage("bc-lab.thm23_counterexample" if thm == "2.3" else "bc-lab.prop16_sequence")
        seq = load_sequence(g, seq_spec)
        info = seq.info
        ks = info.get("k", np.arange(1, len(seq.base) + 1))
        base_len = [len(c) for c in seq.base]
        mass = np.cumsum(seq.lengths * info["base_measure"])
        rows = [
            [int(k), L, int(l), int(s), float(m), float(bp), float(mp)]
            for k, L, l, s, m, bp, mp in zip(ks, base_len, seq.lengths, seq.s, info["base_measure"], info["base_partial"], mass)
        ]
        summary = {"thm": thm, "blocks": len(seq.base), "N": len(seq), **counterexample_growth(seq)}
        ns = int(cfg.get("num_samples", 0))
        if ns > 0:
            N = int(cfg.get("N", len(seq)))
            _stage("orbit-sim.simulate_hits")
            stats = simulate_hits(g, seq, N, ns, int(cfg["seed"]), cfg.get("checkpoints"), workers)
            summary["simulation"] = {
                "stabilized_fraction": float(np.mean(stats.stabilized())),
                "median_hits": float(np.median(stats.S[:, -1])),
                "median_ratio": stats.median_ratio(),
                "E_N": float(stats.E[-1]),
            }
        header = ["k", "base_length", "l_k", "s_k", "base_measure", "base_partial", "mass_partial"]
        return _with_provenance(header, rows, kind, h), summary
    raise ConfigError(f"counterexample: unknown theorem {thm!r}; use 2.2, 2.3 or prop16")


def counterexample_growth(seq) -> dict:
    """Tail and growth diagnostics of the partial sums at block ends."""
    s = seq.s.astype(float)
    bp = seq.info["base_partial"]
    mp = np.cumsum(seq.lengths * seq.info["base_measure"])
    top = s >= s[-1] / 10
    first = int(np.argmax(top))
    prev_b = bp[first - 1] if first > 0 else 0.0
    prev_m = mp[first - 1] if first > 0 else 0.0
    return {
        "base_sum": float(bp[-1]),
        "base_tail_top_decade": float(bp[-1] - prev_b),
        "mass_sum": float(mp[-1]),
        "mass_growth_top_decade": float(mp[-1] / prev_m - 1) if prev_m > 0 else None,
    }


def run_simulate(cfg, workers, kind, h):
    _stage("gibbs.build_markov_gibbs")
    g = load_measure(cfg.get("measure", {}))
    _stage("bc-lab.load_sequence")
    seq = load_sequence(g, cfg.get("sequence", {}))
    N = int(cfg.get("N", len(seq)))
    ns = int(cfg.get("num_samples", 100))
    if cfg.get("require_mass", True):
        _stage("orbit-sim.sbc_experiment")
        stats = sbc_experiment(g, seq, N, cfg.get("checkpoints"), ns, int(cfg["seed"]), workers)
    else:
        _stage("orbit-sim.simulate_hits")
        stats = simulate_hits(g, seq, N, ns, int(cfg["seed"]), cfg.get("checkpoints"), workers)
    return stats.to_csv(kind, h), stats.summary()


def run_toral(cfg, workers, kind, h):
    _stage("toral.build_toral")
    T = build_toral(cfg.get("map", [[2, 1], [1, 1]]))
    N = int(cfg.get("N", 100000))
    ns = int(cfg.get("num_samples", 200))
    seed = int(cfg["seed"])
    if "targets" in cfg:
        rects = RectangleSequence.from_targets(T, cfg["targets"])
    else:
        gen = cfg.get("generator", {})
        if gen.get("measure_law", "c_over_n") != "c_over_n":
            raise ConfigError("toral: only the c_over_n measure law is supported")
        rects = RectangleSequence.from_law(
            T, gen.get("center", [0.3, 0.6]), N, float(gen.get("c", 1.0)), float(gen.get("cap", 0.001)), float(gen.get("aspect", 1.0))
        )
    _stage("toral.torus_hit_experiment")
    stats = torus_hit_experiment(T, rects, N, ns, seed, cfg.get("checkpoints"), workers)
    rows = list(_hit_rows(stats, "targets"))
    summary = {"targets": stats.summary(), "lambda_u": T.lambda_u}
    if "drift" in cfg:
        d = cfg["drift"]
        _stage("toral.drift_hit_experiment")
        R0 = make_rectangle(T, d["center"], float(d["du"]), float(d["ds"]))
        dstats = drift_hit_experiment(T, R0, int(d.get("N", N)), ns, seed, None, workers)
        rows += list(_hit_rows(dstats, "drift"))
        always = np.all(dstats.S == dstats.checkpoints[None, :], axis=1)
        never = dstats.S[:, -1] == 0
        summary["drift"] = {
            "all_or_nothing_fraction": float(np.mean(always | never)),
            "always_hit_fraction": float(np.mean(always)),
            "never_hit_fraction": float(np.mean(never)),
            "R0_area": R0.area(T),
            "E_N": float(dstats.E[-1]),
        }
    nfix = int(cfg.get("fix_counts", 10))
    _stage("toral.fix_count")
    summary["fix_counts"] = [fix_count(T, n) for n in range(1, nfix + 1)]
    summary["normalized_partition"] = [
        partition_function(T, 0.0, n) * math.exp(-n * math.log(T.lambda_u)) for n in range(1, nfix + 1)
    ]
    return _with_provenance(["series"] + HIT_HEADER, rows, kind, h), summary


def growing_fraction(stats, octaves: int = 3) -> float:
    """Fraction of samples that gain hits over the last ``octaves`` doublings of ``N``."""
    cps = stats.checkpoints
    j = int(np.searchsorted(cps, cps[-1] / 2**octaves))
    return float(np.mean(stats.S[:, -1] > stats.S[:, j]))


def run_baker(cfg, workers, kind, h):
    N = int(cfg.get("N", 100000))
    ns = int(cfg.get("num_samples", 100))
    spec = cfg.get("balls", {})
    if isinstance(spec, list):
        balls = tuple(np.array(v, dtype=float) for v in zip(*[(b["center"][0], b["center"][1], b["r"]) for b in spec]))
    else:
        balls = shrinking_balls(spec.get("center", [0.4, 0.55]), N, float(spec.get("c", 3.0)), float(spec.get("r_max", 0.25)))
    _stage("toral.baker_hit_experiment")
    rep = baker_hit_experiment(balls, N, ns, int(cfg["seed"]), cfg.get("checkpoints"), workers, float(cfg.get("min_mass", 20.0)))
    rows = list(_hit_rows(rep.squares, "squares")) + list(_hit_rows(rep.balls, "balls"))
    sq, bl = rep.squares, rep.balls
    summary = {
        "squares": sq.summary(),
        "balls": bl.summary(),
        "min_area_ratio": float(rep.area_ratio.min()),
        "balls_growing_fraction": growing_fraction(bl),
    }
    return _with_provenance(["series"] + HIT_HEADER, rows, kind, h), summary


RUNNERS = {
    "measure": run_measure,
    "sp-check": run_sp_check,
    "counterexample": run_counterexample,
    "simulate": run_simulate,
    "toral": run_toral,
    "baker": run_baker,
}


def resolve_config(path: str | None, kind: str) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    if path.startswith("fixture:"):
        cfg = load_fixture(path.split(":", 1)[1])
    else:
        cfg = load_json(path)
    declared = cfg.get("kind", kind)
    if declared != kind:
        raise ConfigError(f"config is for {declared!r}, not {kind!r}")
    cfg["kind"] = kind
    return cfg


def run(kind: str, cfg: dict, out: str, workers: int = 1) -> int:
    """Execute one experiment; return the process exit code."""
    t0 = time.perf_counter()
    try:
        if "seed" not in cfg:
            raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
        cfg["seed"] = int(cfg["seed"]) & ((1 << 64) - 1)
        h = config_hash(cfg)
        results, summary = RUNNERS[kind](cfg, workers, kind, h)
        meta = {
            "tool": "gbc",
            "version": __version__,
            "kind": kind,
            "config_hash": h,
            "config": cfg,
            "workers": workers,
            "wall_time_s": time.perf_counter() - t0,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        write_artifacts(out, {"results.csv": results, "summary.json": summary, "meta.json": meta})
    except NumericError as exc:
        print(f"gbc: {Stage.name}: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (GbcError, ValueError, KeyError, TypeError) as exc:
        print(f"gbc: {Stage.name}: invalid input: {exc}", file=sys.stderr)
        return 2
    log.info("%s finished in %.2fs", kind, time.perf_counter() - t0)
    return 0


def list_fixtures() -> dict:
    """Catalog of bundled fixtures: name -> kind and description."""
    out = {}
    for name in fixture_names():
        cfg = load_fixture(name)
        out[name] = {"kind": cfg["kind"], "description": cfg.get("description", "")}
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gbc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind)
        s.add_argument("--config", help="JSON config path or fixture:NAME")
        s.add_argument("--seed", type=int, help="64-bit seed (overrides the config)")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out", default="gbc-out")
        if kind == "counterexample":
            s.add_argument("--thm", choices=["2.2", "2.3", "prop16"])
    f = sub.add_parser("fixtures")
    f.add_argument("name", nargs="?", help="print this fixture's config")
    return p


def main(argv=None) -> int:
    level = os.environ.get("GBC_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "fixtures":
        try:
            doc = load_fixture(args.name) if args.name else list_fixtures()
        except GbcError as exc:
            print(f"gbc: cli.list_fixtures: {exc}", file=sys.stderr)
            return 2
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    Stage.name = "cli.run"
    try:
        cfg = resolve_config(args.config, args.command)
    except GbcError as exc:
        print(f"gbc: cli.run: invalid input: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.command == "counterexample" and args.thm:
        cfg["thm"] = args.thm
    if args.workers < 1:
        print("gbc: cli.run: invalid input: --workers must be >= 1", file=sys.stderr)
        return 2
    return run(args.command, cfg, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
