"""Randomized identity testing: seeded sample boxes, residuals, reports."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .expr import Expr, VarSpace
from .program import evaluate_many

__all__ = ["Sampling", "Report", "DEFAULT", "residual", "check", "combine"]


@dataclass(frozen=True)
class Sampling:
    points: int = 25
    seed: int = 42
    tol: float = 1e-8
    box: tuple[float, float] = (-1.0, 1.0)

    def sample(self, vars: VarSpace) -> np.ndarray:
        """``points`` x ``len(vars)`` array, reproducible for a given seed.

        Each coordinate draws from its own stream keyed by name, so a
        coordinate has the same sampled values whether or not ``t`` has been
        appended to the space.
        """
        lo, hi = self.box
        cols = []
        for name in vars.names:
            key = [self.seed] + [ord(c) for c in name]
            rng = np.random.default_rng(key)
            cols.append(rng.uniform(lo, hi, self.points))
        if not cols:
            return np.zeros((self.points, 0))
        return np.column_stack(cols)

    def with_(self, **kw) -> "Sampling":
        return replace(self, **kw)


DEFAULT = Sampling()


@dataclass(frozen=True)
class Report:
    """Outcome of one sampled identity check (or a group of them)."""

    check: str
    anchor: str
    residual: float
    passed: bool
    witness: tuple[float, ...]
    coords: tuple[str, ...]
    sampling: Sampling
    parts: tuple["Report", ...] = ()
    note: str = ""

    def __bool__(self) -> bool:
        return self.passed

    @property
    def failures(self) -> list[str]:
        if not self.parts:
            return [] if self.passed else [self.check]
        return [n for p in self.parts for n in p.failures]

    def leaves(self) -> list["Report"]:
        if not self.parts:
            return [self]
        return [leaf for p in self.parts for leaf in p.leaves()]

    def part(self, name: str) -> "Report":
        for p in self.parts:
            if p.check == name:
                return p
        raise KeyError(name)

    def record(self) -> dict:
        return {
            "check": self.check,
            "anchor": self.anchor,
            "residual": float(self.residual),
            "pass": bool(self.passed),
            "witness": [float(w) for w in self.witness],
            "seed": int(self.sampling.seed),
        }

    def renamed(self, name: str) -> "Report":
        return replace(self, check=name)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.check:<48} residual={self.residual:.3e}  [{self.anchor}]"


def residual(exprs: Sequence[Expr], vars: VarSpace, sampling: Sampling = DEFAULT):
    """Max |value| of ``exprs`` over the sample points, and the worst point."""
    pts = sampling.sample(vars)
    if not exprs:
        return 0.0, tuple(pts[0]) if len(pts) else ()
    vals = np.abs(evaluate_many(list(exprs), vars, pts))
    per_point = vals.max(axis=1)
    worst = int(np.argmax(per_point))
    return float(per_point[worst]), tuple(float(v) for v in pts[worst])


def check(
    name: str,
    anchor: str,
    exprs: Iterable[Expr],
    vars: VarSpace,
    sampling: Sampling = DEFAULT,
    note: str = "",
) -> Report:
    """Report whether every expression in ``exprs`` vanishes on the sample."""
    res, witness = residual(list(exprs), vars, sampling)
    return Report(
        check=name,
        anchor=anchor,
        residual=res,
        passed=res < sampling.tol,
        witness=witness,
        coords=vars.names,
        sampling=sampling,
        note=note,
    )


def combine(name: str, anchor: str, parts: Sequence[Report], sampling: Sampling = DEFAULT) -> Report:
    """Group reports; passes iff every part passes."""
    parts = tuple(parts)
    if parts:
        worst = max(parts, key=lambda r: r.residual)
        res, witness, coords = worst.residual, worst.witness, worst.coords
        sampling = worst.sampling
    else:
        res, witness, coords = 0.0, (), ()
    return Report(
        check=name,
        anchor=anchor,
        residual=res,
        passed=all(p.passed for p in parts),
        witness=witness,
        coords=coords,
        sampling=sampling,
        parts=parts,
    )
