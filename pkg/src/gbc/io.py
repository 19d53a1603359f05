"""Loading measures, sequences and targets from JSON documents; writing artifacts."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import shutil
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .gibbs import MarkovGibbs, Potential, bernoulli, build_markov_gibbs
from .sequences import (
    CylinderSequence,
    constant_sequence,
    derive_sequence,
    dnested_sequence,
    prop16_sequence,
    run_base,
    thm22_counterexample,
    thm23_blocks_for,
    thm23_counterexample,
)
from .shift import check_transitive, cylinders_from_spec

__all__ = [
    "load_json",
    "config_hash",
    "load_measure",
    "load_sequence",
    "fixture_names",
    "load_fixture",
    "write_artifacts",
    "csv_text",
]

FIXTURES = ("bernoulli2", "golden-mean-parry", "golden-mean-sbc", "cat-map", "baker", "thm22", "thm23", "prop16")


def load_json(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    """Short digest of the effective config; the worker count is excluded."""
    clean = {k: v for k, v in cfg.items() if k != "workers"}
    return hashlib.sha256(_canonical(clean).encode()).hexdigest()[:16]


def _require(spec: dict, key: str, where: str):
    if key not in spec:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return spec[key]


def load_measure(spec: dict) -> MarkovGibbs:
    """``{"bernoulli": [..]}``, ``{"matrix": [[..]]}`` (Parry) or ``{"matrix", "potential"}``."""
    if not isinstance(spec, dict):
        raise ConfigError("measure spec must be an object")
    if "bernoulli" in spec:
        return bernoulli(spec["bernoulli"])
    A = check_transitive(_require(spec, "matrix", "measure"))
    pot = spec.get("potential")
    return build_markov_gibbs(A, Potential.from_dict(pot) if pot is not None else None)


def _lengths(spec, K: int):
    if isinstance(spec, list):
        return spec
    law = spec if isinstance(spec, str) else "k"
    if law == "k":
        return lambda k: k
    if law == "log":
        return lambda k: int(np.ceil(np.log(k + 1)))
    if law == "const":
        return lambda k: 1
    raise ConfigError(f"unknown length law {law!r}")


def load_sequence(g: MarkovGibbs, spec: dict) -> CylinderSequence:
    """Explicit cylinders (optionally derived) or a named generator."""
    if not isinstance(spec, dict):
        raise ConfigError("sequence spec must be an object")
    A = g.base
    gen = spec.get("generator")
    if gen is None:
        cyl = cylinders_from_spec(A, _require(spec, "cylinders", "sequence"))
        if "derive" in spec:
            return derive_sequence(cyl, _require(spec["derive"], "lengths", "sequence.derive"))
        return CylinderSequence(cyl)
    if gen == "constant":
        (c,) = cylinders_from_spec(A, [_require(spec, "cylinder", "sequence")])
        return constant_sequence(c, int(_require(spec, "N", "sequence")))
    if gen == "dnested":
        return dnested_sequence(
            g,
            int(_require(spec, "N", "sequence")),
            D=int(spec.get("D", 2)),
            c=float(spec.get("c", 10.0)),
            cap=float(spec.get("cap", 0.5)),
            seed=int(spec.get("seed", 0)),
            max_length=None if spec.get("max_length") is None else int(spec["max_length"]),
        )
    if gen == "thm22":
        (c,) = cylinders_from_spec(A, [_require(spec, "base", "sequence")])
        K = int(_require(spec, "K", "sequence"))
        return thm22_counterexample(g, c, _lengths(spec.get("l", "k"), K), K, spec.get("mode", "aligned"))
    if gen == "thm23":
        eps = float(_require(spec, "eps", "sequence"))
        K = spec.get("K")
        if K is None:
            K = thm23_blocks_for(g, eps, int(_require(spec, "N_target", "sequence")))
        return thm23_counterexample(g, eps, int(K), spec.get("mode", "aligned"))
    if gen == "prop16":
        if "base_run" in spec:
            run = spec["base_run"]
            base = run_base(A, int(_require(run, "symbol", "base_run")), int(_require(run, "K", "base_run")))
        else:
            base = cylinders_from_spec(A, _require(spec, "base", "sequence"))
        return prop16_sequence(g, base)
    raise ConfigError(f"unknown sequence generator {gen!r}")


def fixture_names() -> list[str]:
    return list(FIXTURES)


def load_fixture(name: str) -> dict:
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    text = resources.files("gbc").joinpath("fixtures", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_artifacts(out_dir: str | os.PathLike, files: dict[str, str | dict]) -> None:
    """Write all files to a scratch directory, then move them into ``out_dir``.

    Nothing appears in ``out_dir`` unless every file was produced.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".gbc-", dir=out))
    try:
        for name, content in files.items():
            text = content if isinstance(content, str) else json.dumps(_jsonable(content), indent=2, sort_keys=True) + "\n"
            with open(tmp / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for name in files:
            os.replace(tmp / name, out / name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
