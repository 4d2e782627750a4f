"""Command-line front end: JSON config in, JSON report or CSV eigenvalue table out.

Config layout::

    {
      "algebra": {"blocks": [2], "weights": [1]},
      "channel": {"kind": "depolarising", "lambda": 0.5},
      "states": [{"unit": [0, 0]}, {"unit": [0, 1]}],
      "analyses": ["metrics", "properties", "structure", "spectrum", "contraction", "correctability"],
      "seed": 0, "samples": 200,
      "tolerances": {"psd": 1e-8}
    }

Elements are lists of blocks; a block is a list of rows; an entry is a real
number or an ``[re, im]`` pair.  A state may also be ``{"unit": [j, k]}`` (the
normalised diagonal unit ``e^{(j)}_{kk}``), ``"centre"`` or an element.
Channel kinds are the standard ones plus ``kraus`` (``"ops"``: list of
elements) and ``raw`` (``"superop"``: matrix in τ-orthonormal coordinates).

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 a computed
quantity contradicts a theorem about channels.
"""
from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import sys
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any

import numpy as np

from . import channels as ch
from .algebra import AlgebraSpec, AlgElement, DensityElement, Tolerances
from .channels import Channel, PropertyVerdict, Status
from .contraction import (bures_contraction_probe, correctability_obstruction, nonexpansive_probe,
                          inverse_positivity_check)
from .errors import BuresError, NumericalError, TheoremViolation
from .metrics import metric_report
from .structure import (SubspaceBasis, fit_unitarily_covariant, fixed_point_space,
                        irreducibility_verdict, multiplicative_domain, superoperator_spectrum)

__all__ = ["ConfigError", "RunConfig", "parse_config", "analyze", "emit", "main",
           "ANALYSES", "SCHEMA", "encode_element"]

SCHEMA = "bures-report/1"
ANALYSES = ("metrics", "properties", "structure", "spectrum", "contraction", "correctability")
FORMATS = ("json", "csv")
_TOL_FIELDS = tuple(f for f in Tolerances.__dataclass_fields__)


class ConfigError(BuresError, ValueError):
    """Invalid configuration; ``errors`` lists ``"path: message"`` strings."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    spec: AlgebraSpec
    channel: Channel | None
    states: list
    analyses: tuple
    seed: int = 0
    samples: int = 200
    tol: Tolerances = Tolerances()
    echo: dict = field(default_factory=dict)


# --- parsing ----------------------------------------------------------------

def _entry(v, path, errors):
    if isinstance(v, bool):
        errors.append(f"{path}: expected a number or [re, im]")
        return 0.0
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool)
                                                   for t in v):
        return complex(v[0], v[1])
    errors.append(f"{path}: expected a number or [re, im]")
    return 0.0


def _matrix(obj, shape, path, errors):
    rows, cols = shape
    if not isinstance(obj, list) or len(obj) != rows or not all(isinstance(r, list) for r in obj):
        got = len(obj) if isinstance(obj, list) else type(obj).__name__
        errors.append(f"{path}: expected {rows} rows of length {cols}, got {got}")
        return None
    if any(len(r) != cols for r in obj):
        errors.append(f"{path}: expected shape ({rows}, {cols}), got rows of lengths {[len(r) for r in obj]}")
        return None
    out = np.zeros(shape, dtype=complex)
    for i, r in enumerate(obj):
        for j, v in enumerate(r):
            out[i, j] = _entry(v, f"{path}[{i}][{j}]", errors)
    return out


def _element(obj, spec, path, errors) -> AlgElement | None:
    if isinstance(obj, dict) and "blocks" in obj:
        obj, path = obj["blocks"], f"{path}.blocks"
    if not isinstance(obj, list) or len(obj) != spec.n_blocks:
        errors.append(f"{path}: expected a list of {spec.n_blocks} blocks")
        return None
    blocks = [_matrix(b, (d, d), f"{path}[{j}]", errors) for j, (b, d) in enumerate(zip(obj, spec.block_dims))]
    if any(b is None for b in blocks):
        return None
    return spec.element(blocks)


def _number(obj, key, path, errors, default=None, kind=float):
    v = obj.get(key, default)
    if v is None:
        errors.append(f"{path}.{key}: required")
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and int(v) != v):
        errors.append(f"{path}.{key}: expected {'an integer' if kind is int else 'a number'}")
        return None
    return kind(v)


def _algebra(obj, errors) -> AlgebraSpec | None:
    if not isinstance(obj, dict):
        errors.append("algebra: required object with 'blocks'")
        return None
    blocks = obj.get("blocks")
    if not isinstance(blocks, list) or not blocks:
        errors.append("algebra.blocks: expected a nonempty list of positive integers")
        return None
    ok = True
    for i, d in enumerate(blocks):
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            errors.append(f"algebra.blocks[{i}]: block dimension must be a positive integer")
            ok = False
    weights = obj.get("weights", [1.0] * len(blocks))
    if not isinstance(weights, list) or len(weights) != len(blocks):
        errors.append(f"algebra.weights: expected {len(blocks)} numbers")
        return None
    for i, w in enumerate(weights):
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w):
            errors.append(f"algebra.weights[{i}]: expected a number")
            ok = False
        elif w <= 0:
            errors.append(f"algebra.weights[{i}]: trace weight must be positive (faithfulness)")
            ok = False
    return AlgebraSpec(blocks, weights) if ok else None


def _channel(obj, spec, tol, errors) -> Channel | None:
    if obj is None:
        return None
    if not isinstance(obj, dict) or "kind" not in obj:
        errors.append("channel: expected an object with 'kind'")
        return None
    kind = obj["kind"]
    n = len(errors)
    lam = None
    if kind in ("depolarising", "unitary_mixture"):
        lam = _number(obj, "lambda", "channel", errors)
        if lam is not None and not 0.0 <= lam <= 1.0:
            errors.append(f"channel.lambda: must lie in [0, 1], got {lam}")
    try:
        if kind == "kraus":
            ops = obj.get("ops")
            if not isinstance(ops, list) or not ops:
                errors.append("channel.ops: expected a nonempty list of elements")
                return None
            ws = [_element(w, spec, f"channel.ops[{i}]", errors) for i, w in enumerate(ops)]
            return None if len(errors) > n else ch.from_kraus(spec, ws)
        if kind == "raw":
            s = _matrix(obj.get("superop"), (spec.dim, spec.dim), "channel.superop", errors)
            return None if len(errors) > n else Channel(spec, s)
        if kind == "unitary":
            u = _element(obj.get("u"), spec, "channel.u", errors)
            return None if len(errors) > n else ch.unitary_channel(u, tol)
        if kind == "unitary_mixture":
            params = {}
            for key in ("u", "v"):
                if key in obj:
                    params[key] = _element(obj[key], spec, f"channel.{key}", errors)
            if len(errors) > n:
                return None
            if len(params) == 2:
                return ch.unitary_mixture(lam, params["u"], params["v"], tol)
            return ch.standard_channel(kind, spec, lam=lam)
        if kind == "depolarising":
            return None if len(errors) > n else ch.depolarising(spec, lam)
        if kind in ch.STANDARD_KINDS:
            return ch.standard_channel(kind, spec)
    except BuresError as exc:
        errors.append(f"channel: {exc}")
        return None
    errors.append(f"channel.kind: unknown channel kind {kind!r}")
    return None


def _state(obj, spec, path, tol, errors):
    try:
        if obj == "centre":
            return spec.centre()
        if isinstance(obj, dict) and "unit" in obj:
            jk = obj["unit"]
            if (not isinstance(jk, list) or len(jk) != 2 or not all(isinstance(t, int) for t in jk)
                    or not 0 <= jk[0] < spec.n_blocks or not 0 <= jk[1] < spec.block_dims[jk[0]]):
                errors.append(f"{path}.unit: expected [block, index] inside the algebra")
                return None
            return DensityElement.normalized(spec.unit(jk[0], jk[1], jk[1]), tol)
        x = _element(obj, spec, path, errors)
        return None if x is None else DensityElement.from_element(x, tol)
    except BuresError as exc:
        errors.append(f"{path}: {exc}")
        return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; raise :class:`ConfigError` listing every problem."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: malformed JSON ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected an object"])
    errors: list[str] = []
    unknown = set(data) - {"algebra", "channel", "states", "analyses", "seed", "samples", "tolerances"}
    errors += [f"{k}: unknown key" for k in sorted(unknown)]

    tol_obj = data.get("tolerances", {})
    tol = Tolerances()
    if not isinstance(tol_obj, dict):
        errors.append("tolerances: expected an object")
    else:
        changes = {}
        for k, v in tol_obj.items():
            if k not in _TOL_FIELDS:
                errors.append(f"tolerances.{k}: unknown tolerance")
            elif isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                errors.append(f"tolerances.{k}: expected a positive number")
            else:
                changes[k] = float(v)
        tol = tol.replace(**changes)

    seed = _number(data, "seed", "<root>", errors, 0, int)
    samples = _number(data, "samples", "<root>", errors, 200, int)
    if samples is not None and samples < 1:
        errors.append("samples: must be at least 1")

    analyses = data.get("analyses", list(ANALYSES))
    if not isinstance(analyses, list) or any(a not in ANALYSES for a in analyses):
        errors.append(f"analyses: expected a subset of {list(ANALYSES)}")
        analyses = []

    spec = _algebra(data.get("algebra"), errors)
    if spec is None:
        raise ConfigError(errors)
    channel = _channel(data.get("channel"), spec, tol, errors)
    states_obj = data.get("states", [])
    states = []
    if not isinstance(states_obj, list):
        errors.append("states: expected a list")
    else:
        states = [_state(s, spec, f"states[{i}]", tol, errors) for i, s in enumerate(states_obj)]
    if errors:
        raise ConfigError(errors)
    needs_channel = {"properties", "structure", "spectrum", "contraction", "correctability"}
    if channel is None and needs_channel & set(analyses):
        errors.append(f"channel: required by analyses {sorted(needs_channel & set(analyses))}")
    if errors:
        raise ConfigError(errors)

    echo = dict(data)
    echo.update(seed=seed, samples=samples, analyses=list(analyses),
                tolerances={k: getattr(tol, k) for k in _TOL_FIELDS})
    return RunConfig(spec, channel, states, tuple(analyses), seed, samples, tol, echo)


# --- serialisation ----------------------------------------------------------

def _float(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _complex(z) -> list:
    return [_float(z.real), _float(z.imag)]


def encode_element(x: AlgElement) -> list:
    return [[[_complex(v) for v in row] for row in b] for b in x.blocks]


def _jsonable(obj: Any):
    if isinstance(obj, AlgElement):
        return encode_element(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.item()) if obj.ndim == 0 else [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _complex(obj)
    return obj


_VERDICT_TOL = {"trace_preserving": ("zero",), "unital": ("zero",), "cp": ("herm", "psd"),
                "positive": ("psd",), "schwarz": ("psd",), "2-positive": ("psd",),
                "irreducible": ("fix", "zero"), "bures_contractive": ("fid",),
                "inverse_positive": ("psd",)}


def _verdict(v: PropertyVerdict, tol: Tolerances) -> dict:
    out = {"status": v.status.value, "certificate": v.certificate, "samples_used": v.samples_used,
           "seed": v.seed,
           "tolerance": {k: getattr(tol, k) for k in _VERDICT_TOL.get(v.prop, ())},
           "detail": _jsonable(v.detail)}
    if v.witness is not None:
        out["witness"] = _jsonable(v.witness)
    return out


def _subspace(s: SubspaceBasis) -> dict:
    return {"dimension": s.dimension, "status": s.status.value, "flags": dict(s.flags),
            "detail": _jsonable(s.detail), "basis": [encode_element(x) for x in s.basis]}


# --- analysis ---------------------------------------------------------------

def _metrics(cfg: RunConfig) -> list:
    rows = []
    images = None
    if cfg.channel is not None:
        images = [DensityElement.from_element(ch.apply(cfg.channel, s).hermitian_part(), cfg.tol)
                  for s in cfg.states]
    for i, j in combinations(range(len(cfg.states)), 2):
        rep = metric_report(cfg.states[i], cfg.states[j], cfg.tol)
        row = {"i": i, "j": j, **rep.to_dict()}
        if images is not None:
            after = metric_report(images[i], images[j], cfg.tol)
            row["fidelity_after"] = after.fidelity
            row["bures_after"] = after.bures
        rows.append(row)
    return rows


def _properties(cfg: RunConfig) -> dict:
    E, tol, n, s = cfg.channel, cfg.tol, cfg.samples, cfg.seed
    out = {
        "trace_preserving": ch.is_trace_preserving(E, tol),
        "unital": ch.is_unital(E, tol),
        "cp": ch.is_cp(E, tol),
        "positive": ch.is_positive(E, n, s, tol),
        "schwarz": ch.schwarz_status(E, n, s, tol),
        "2-positive": ch.k_positive_probe(E, 2, n, s, tol),
        "inverse_positive": inverse_positivity_check(E, n, s, tol),
    }
    return {k: _verdict(v, tol) for k, v in out.items()}


def _is_channel(E: Channel, cfg: RunConfig) -> bool:
    return bool(ch.is_trace_preserving(E, cfg.tol).holds
                and ch.is_positive(E, cfg.samples, cfg.seed, cfg.tol).holds)


def _certified_channel(E: Channel, cfg: RunConfig) -> bool:
    return (ch.is_trace_preserving(E, cfg.tol).status is Status.CERTIFIED_TRUE
            and ch.is_positive(E, cfg.samples, cfg.seed, cfg.tol).status is Status.CERTIFIED_TRUE)


def _structure(cfg: RunConfig) -> dict:
    E, tol = cfg.channel, cfg.tol
    out = {"fixed_points": _subspace(fixed_point_space(E, tol))}
    if _is_channel(E, cfg):
        out["multiplicative_domain"] = _subspace(
            multiplicative_domain(E, seed=cfg.seed, samples=cfg.samples, tol=tol))
        out["irreducibility"] = _verdict(irreducibility_verdict(E, cfg.seed, cfg.samples, tol), tol)
    else:
        out["skipped"] = "multiplicative domain and irreducibility need a positive trace-preserving map"
    if cfg.spec.is_factor:
        fit = fit_unitarily_covariant(E, cfg.samples, cfg.seed, tol=tol)
        out["covariance"] = {"alpha": fit.alpha, "beta": fit.beta, "residual": fit.residual,
                             "commutation_defect": fit.commutation_defect,
                             "anomalies": list(fit.anomalies)}
    return out


def _spectrum(cfg: RunConfig) -> dict:
    rep = superoperator_spectrum(cfg.channel, cfg.tol)
    if _certified_channel(cfg.channel, cfg):
        if not rep.perron_in_spectrum:
            raise TheoremViolation(f"spectral radius {rep.perron_value} of a positive map is not an eigenvalue")
        if abs(rep.perron_value - 1.0) > 1e-8:
            raise TheoremViolation(f"channel has Perron value {rep.perron_value}, expected 1")
    out = rep.to_dict()
    out["tolerance"] = {"spec": cfg.tol.spec}
    return out


def _contraction(cfg: RunConfig) -> dict:
    E = cfg.channel
    if not _is_channel(E, cfg):
        return {"skipped": "contraction analysis needs a positive trace-preserving map"}
    rep = nonexpansive_probe(E, cfg.samples, cfg.seed, cfg.tol)
    if rep.expansion_witness is not None and _certified_channel(E, cfg):
        raise TheoremViolation("a certified channel increased a Bures distance: "
                               + "; ".join(rep.diagnostics))
    verdict = bures_contraction_probe(E, cfg.samples, cfg.seed, cfg.tol)
    return {"report": rep.to_dict(), "verdict": _verdict(verdict, cfg.tol)}


def _correctability(cfg: RunConfig) -> dict:
    if len(cfg.states) < 2:
        return {"skipped": "needs at least two states"}
    w = correctability_obstruction(cfg.channel, cfg.states, cfg.tol)
    return {"obstruction": None if w is None else w._asdict()}


_RUNNERS = {"metrics": _metrics, "properties": _properties, "structure": _structure,
            "spectrum": _spectrum, "contraction": _contraction, "correctability": _correctability}


def analyze(cfg: RunConfig) -> dict:
    """Run the selected analyses; the result is deterministic for a fixed config."""
    results = {}
    for name in cfg.analyses:
        results[name] = _RUNNERS[name](cfg)
    report = {"schema": SCHEMA, "config": cfg.echo, "results": results}
    if cfg.channel is not None:
        report["provenance"] = cfg.channel.provenance.to_dict()
    return _jsonable(report)


def emit(report: dict, fmt: str = "json") -> bytes:
    """Serialise a report.

    ``json`` writes the whole report.  ``csv`` writes the eigenvalue table
    with columns ``re, im, modulus, is_peripheral``.
    """
    if fmt == "json":
        return (json.dumps(report, indent=2, allow_nan=False) + "\n").encode("utf-8")
    if fmt == "csv":
        spec = report.get("results", {}).get("spectrum")
        if spec is None:
            raise ValueError("csv output needs the spectrum analysis")
        peripheral = [tuple(z) for z in spec["peripheral_eigenvalues"]]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "modulus", "is_peripheral"])
        for re_, im_ in spec["eigenvalues"]:
            w.writerow([repr(re_), repr(im_), repr(float(np.hypot(re_, im_))),
                        str((re_, im_) in peripheral).lower()])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


# --- entry point --------------------------------------------------------------

_SUBCOMMANDS = {
    "analyze": None,
    "metrics": ("metrics",),
    "spectrum": ("spectrum",),
    "probe": ("contraction",),
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bures", description="Bures geometry and channel analysis.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"analyze": "run the analyses selected in the config (default: all)",
             "metrics": "pairwise metric table over the states",
             "spectrum": "superoperator spectrum",
             "probe": "Bures contractivity probe"}
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config", help="JSON config file, or - for stdin")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--tol-psd", type=float)
        sp.add_argument("--tol-fix", type=float)
        sp.add_argument("--format", choices=FORMATS, default="json")
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.config == "-" else open(args.config, encoding="utf-8").read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        data = json.loads(text)
        if isinstance(data, dict):
            if args.seed is not None:
                data["seed"] = args.seed
            if args.samples is not None:
                data["samples"] = args.samples
            tols = dict(data.get("tolerances") or {})
            if args.tol_psd is not None:
                tols["psd"] = args.tol_psd
            if args.tol_fix is not None:
                tols["fix"] = args.tol_fix
            if tols:
                data["tolerances"] = tols
            if _SUBCOMMANDS[args.command] is not None:
                data["analyses"] = list(_SUBCOMMANDS[args.command])
            text = json.dumps(data)
        cfg = parse_config(text)
    except (json.JSONDecodeError, ConfigError) as exc:
        errs = exc.errors if isinstance(exc, ConfigError) else [f"<root>: malformed JSON ({exc})"]
        for e in errs:
            print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        out = emit(analyze(cfg), args.format)
    except TheoremViolation as exc:
        print(f"theorem violation: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (BuresError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(out)
    else:
        sys.stdout.buffer.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
