"""JSON and CSV encodings of measures, costs, certificates and reports.

Numbers are written as strings ``"p/q"`` when exact and as JSON numbers
when floating; ``"inf"`` stands for an infinite cost. Every encoder output
is a plain ``dict``/``list`` tree and :func:`dumps` serializes it with a
fixed layout, so equal inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .costs import (EQUALITY_INDICATOR, INF, POWER_DISTANCE, SQUARED_SUM_BARYCENTER, TENSOR,
                    CostSpec)
from .measures import MODES, DiscreteCoupling, DiscreteMeasure, FactorSpace
from .monotonicity import Certificate
from .solvers import MotInstance, Solution


class FormatError(ValueError):
    """A file is not valid JSON or does not follow the expected layout."""

    def __init__(self, message: str, path: Optional[str] = None, offset: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}: " if offset is None else f"{path}: byte {offset}: "
        super().__init__(where + message)
        self.path = path
        self.offset = offset


# --- scalars ------------------------------------------------------------------------


def encode_number(v):
    if v is None:
        return None
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (int, Fraction, np.integer)):
        return str(Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v))
    raise TypeError(f"cannot encode {type(v).__name__}")


def decode_number(v):
    if isinstance(v, bool):
        raise FormatError(f"expected a number, got {v!r}")
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        try:
            return Fraction(s)
        except ValueError:
            raise FormatError(f"bad number {v!r}") from None
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    raise FormatError(f"expected a number, got {v!r}")


def _point(p) -> list:
    return [encode_number(x) for x in p]


def _key(d: dict, name: str, where: str):
    if not isinstance(d, dict):
        raise FormatError(f"{where}: expected an object")
    if name not in d:
        raise FormatError(f"{where}: missing key {name!r}")
    return d[name]


# --- measures -----------------------------------------------------------------------


def space_to_json(s: FactorSpace) -> dict:
    return {"dim": s.dim, "bounds": [[encode_number(lo), encode_number(hi)] for lo, hi in s.bounds]}


def space_from_json(d) -> FactorSpace:
    bounds = _key(d, "bounds", "space")
    try:
        space = FactorSpace(tuple((decode_number(lo), decode_number(hi)) for lo, hi in bounds))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"space: {exc}") from None
    if "dim" in d and d["dim"] != space.dim:
        raise FormatError(f"space: dim {d['dim']} does not match {space.dim} bounds")
    return space


def _mode(d, where) -> str:
    mode = d.get("mode", "rational") if isinstance(d, dict) else None
    if mode not in MODES:
        raise FormatError(f"{where}: mode must be one of {MODES}, got {mode!r}")
    return mode


def measure_to_json(m: DiscreteMeasure) -> dict:
    return {"space": space_to_json(m.space), "mode": m.mode,
            "atoms": [{"point": _point(p), "weight": encode_number(w)} for p, w in m.atoms]}


def measure_from_json(d) -> DiscreteMeasure:
    mode = _mode(d, "measure")
    space = space_from_json(_key(d, "space", "measure"))
    try:
        atoms = tuple(([decode_number(x) for x in _key(a, "point", "atom")],
                       decode_number(_key(a, "weight", "atom"))) for a in _key(d, "atoms", "measure"))
        return DiscreteMeasure(space, atoms, mode)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"measure: {exc}") from None


def coupling_to_json(c: DiscreteCoupling) -> dict:
    return {"spaces": [space_to_json(s) for s in c.spaces], "mode": c.mode,
            "atoms": [{"tuple": [_point(p) for p in t], "weight": encode_number(w)}
                      for t, w in c.atoms]}


def coupling_from_json(d) -> DiscreteCoupling:
    mode = _mode(d, "coupling")
    spaces = tuple(space_from_json(s) for s in _key(d, "spaces", "coupling"))
    try:
        atoms = tuple((tuple([decode_number(x) for x in p] for p in _key(a, "tuple", "atom")),
                       decode_number(_key(a, "weight", "atom"))) for a in _key(d, "atoms", "coupling"))
        return DiscreteCoupling(spaces, atoms, mode)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"coupling: {exc}") from None


# --- costs --------------------------------------------------------------------------


def _nested(arr):
    if not isinstance(arr, np.ndarray):
        return encode_number(arr)
    return [_nested(arr[i]) for i in range(arr.shape[0])]


def cost_to_json(c: CostSpec) -> dict:
    if c.kind == POWER_DISTANCE:
        return {"kind": c.kind, "p": encode_number(c.p)}
    if c.kind == SQUARED_SUM_BARYCENTER:
        return {"kind": c.kind, "n_marginals": c.n_marginals}
    if c.kind == EQUALITY_INDICATOR:
        return {"kind": c.kind, "equal_value": encode_number(c.equal_value),
                "unequal_value": encode_number(c.unequal_value)}
    out = {"kind": c.kind, "values": _nested(c.values)}
    if c.points is not None:
        out["points"] = [[_point(p) for p in pts] for pts in c.points]
    return out


def _decode_nested(v):
    if isinstance(v, list):
        return [_decode_nested(x) for x in v]
    return decode_number(v)


def cost_from_json(d) -> CostSpec:
    kind = _key(d, "kind", "cost")
    try:
        if kind == POWER_DISTANCE:
            return CostSpec.power_distance(decode_number(d.get("p", 2)))
        if kind == SQUARED_SUM_BARYCENTER:
            return CostSpec.squared_sum_barycenter(int(_key(d, "n_marginals", "cost")))
        if kind == EQUALITY_INDICATOR:
            return CostSpec.equality_indicator(decode_number(d.get("equal_value", 1)),
                                               decode_number(d.get("unequal_value", 2)))
        if kind == TENSOR:
            values = _decode_nested(_key(d, "values", "cost"))
            arr = np.empty(np.shape(np.array(values, dtype=object)), dtype=object)
            for idx in np.ndindex(arr.shape):
                v = values
                for i in idx:
                    v = v[i]
                arr[idx] = v
            points = d.get("points")
            if points is not None:
                points = [[[decode_number(x) for x in p] for p in pts] for pts in points]
            return CostSpec.tensor(arr, points)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"cost: {exc}") from None
    raise FormatError(f"cost: unknown kind {kind!r}")


# --- certificates, instances, solutions --------------------------------------------


def certificate_to_json(cert: Optional[Certificate]):
    if cert is None:
        return None
    return {"k": cert.k, "tuples": [[_point(p) for p in t] for t in cert.tuples],
            "permutations": [list(p) for p in cert.permutations],
            "before": encode_number(cert.before), "after": encode_number(cert.after),
            "aggregate": cert.aggregate}


def certificate_from_json(d) -> Certificate:
    tuples = tuple(tuple(tuple(decode_number(x) for x in p) for p in t)
                   for t in _key(d, "tuples", "certificate"))
    perms = tuple(tuple(int(i) for i in p) for p in _key(d, "permutations", "certificate"))
    aggregate = _key(d, "aggregate", "certificate")
    if aggregate not in ("sum", "max"):
        raise FormatError(f"certificate: bad aggregate {aggregate!r}")
    if "k" in d and d["k"] != len(tuples):
        raise FormatError("certificate: k does not match the number of tuples")
    return Certificate(tuples, perms, decode_number(_key(d, "before", "certificate")),
                       decode_number(_key(d, "after", "certificate")), aggregate)


def instance_to_json(inst: MotInstance) -> dict:
    return {"marginals": [measure_to_json(m) for m in inst.marginals],
            "cost": cost_to_json(inst.cost), "objective": inst.objective}


def instance_from_json(d) -> MotInstance:
    margs = tuple(measure_from_json(m) for m in _key(d, "marginals", "instance"))
    cost = cost_from_json(_key(d, "cost", "instance"))
    try:
        return MotInstance(margs, cost, d.get("objective", "sum"))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"instance: {exc}") from None


def solution_to_json(sol: Solution) -> dict:
    out = coupling_to_json(sol.plan) if sol.plan is not None else {"atoms": None}
    out["value"] = encode_number(sol.value)
    out["status"] = sol.status
    return out


def solution_from_json(d) -> Solution:
    plan = coupling_from_json(d) if d.get("atoms") is not None else None
    return Solution(plan, decode_number(_key(d, "value", "solution")), d.get("status", "optimal"))


# --- partitions and reports ---------------------------------------------------------


def partition_to_json(part) -> dict:
    marg = []
    for k, cells in enumerate(part.cells):
        marg.append({
            "halvings": part.halvings[k],
            "cells": [{"id": c.id, "index": list(c.index), "lo": _point(c.lo), "hi": _point(c.hi)}
                      for c in cells],
            "nesting": {str(cid): list(parent) for cid, parent in sorted(part.nesting[k].items())},
        })
    return {"level": part.level, "delta": part.delta, "marginals": marg}


CONVERGENCE_HEADER = ("n", "delta_n", "discrepancy", "objective", "epsilon_envelope")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, Fraction):
        return str(v)
    return repr(float(v))


def convergence_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONVERGENCE_HEADER)
    for r in rows:
        w.writerow([r.level, _cell(r.delta), _cell(r.discrepancy), _cell(r.objective),
                    _cell(r.envelope)])
    return buf.getvalue()


GAMMA_HEADER = ("n", "delta_n", "min_value", "objective_alpha", "gap", "analytic_gap",
                "discrepancy_to_limit")


def gamma_csv(run) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GAMMA_HEADER)
    for r in run.records:
        w.writerow([r.level, _cell(r.delta), _cell(r.min_value), _cell(r.objective_alpha),
                    _cell(r.gap), _cell(r.analytic_gap), _cell(r.discrepancy_to_limit)])
    return buf.getvalue()


def experiment_config_from_json(d) -> dict:
    """Decoded experiment config: plan, cost, objective, levels, k_max (+ optional extras)."""
    cfg = {"plan": coupling_from_json(_key(d, "plan", "config")),
           "cost": cost_from_json(_key(d, "cost", "config")),
           "objective": _key(d, "objective", "config"),
           "levels": [int(n) for n in _key(d, "levels", "config")],
           "k_max": int(_key(d, "k_max", "config"))}
    if cfg["objective"] not in ("sum", "max"):
        raise FormatError(f"config: bad objective {cfg['objective']!r}")
    for opt, conv in (("trials", int), ("seed", int), ("analytic", decode_number)):
        if opt in d:
            cfg[opt] = conv(d[opt])
    return cfg


# --- files --------------------------------------------------------------------------


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=True) + "\n"


def load_json(path) -> object:
    """Parse a JSON file; syntax errors name the file and the byte offset."""
    path = str(path)
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read file ({exc.strerror})", path) from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("not valid UTF-8", path, exc.start) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise FormatError(exc.msg, path, offset) from None


def write_text(path, text: str):
    Path(path).write_text(text, encoding="utf-8", newline="\n")


__all__ = ["FormatError", "encode_number", "decode_number", "space_to_json", "space_from_json",
           "measure_to_json", "measure_from_json", "coupling_to_json", "coupling_from_json",
           "cost_to_json", "cost_from_json", "certificate_to_json", "certificate_from_json",
           "instance_to_json", "instance_from_json", "solution_to_json", "solution_from_json",
           "partition_to_json", "convergence_csv", "gamma_csv", "experiment_config_from_json",
           "dumps", "load_json", "write_text"]
