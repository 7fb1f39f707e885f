"""Structured records of checked inequalities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    relation: str  # "<=", ">=", "==", "increasing", "true"
    passed: bool

    def to_dict(self):
        return {"name": self.name, "value": _plain(self.value), "bound": _plain(self.bound),
                "relation": self.relation, "passed": bool(self.passed)}


def at_most(name, value, bound):
    return Check(name, float(value), float(bound), "<=", bool(value <= bound))


def at_least(name, value, bound):
    return Check(name, float(value), float(bound), ">=", bool(value >= bound))


def holds(name, ok, value=math.nan):
    return Check(name, float(value), math.nan, "true", bool(ok))


def strictly_increasing(name, values):
    vals = [float(v) for v in values]
    ok = all(b > a for a, b in zip(vals, vals[1:]))
    return Check(name, vals[-1] if vals else math.nan, vals[0] if vals else math.nan,
                 "increasing", ok)


@dataclass
class Certificate:
    kind: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, check):
        self.checks.append(check)
        return check

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"kind": self.kind, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks],
                "data": _plain(self.data)}

    def to_json(self):
        return dumps(self.to_dict())


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True)
