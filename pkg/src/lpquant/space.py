"""Discrete weighted measure spaces carrying a vector-valued function.

A space is a finite list of atoms ``(w_i, f_i)`` with ``w_i > 0`` and
``f_i in R^d``.  With ``infinite_mass=True`` the space also carries a
background of infinite measure on which ``f`` is identically 0; it never
contributes to an integral of ``||f - 0||^p`` but forces any finite-cost
approximation to use the value 0 there.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .norms import NormDescriptor


class Atom(NamedTuple):
    weight: float
    value: tuple


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    weights: np.ndarray  # (n,)
    values: np.ndarray  # (n, d)
    infinite_mass: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        f = np.array(self.values, dtype=float)
        if f.ndim != 2 or f.shape[0] != w.shape[0]:
            raise ValueError(f"values must have shape (n, d) with n={w.shape[0]}, got {f.shape}")
        if f.shape[1] < 1:
            raise ValueError("dimension must be at least 1")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom weights must be finite and strictly positive")
        if not np.all(np.isfinite(f)):
            raise ValueError("atom values must be finite")
        w.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", f)
        object.__setattr__(self, "infinite_mass", bool(self.infinite_mass))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def mass(self) -> float:
        """Total finite mass (the background, if any, is not counted)."""
        return float(np.sum(self.weights))

    @property
    def atoms(self) -> list:
        return [Atom(float(w), tuple(float(x) for x in v)) for w, v in zip(self.weights, self.values)]

    def subspace(self, idx) -> "MeasureSpace":
        idx = np.asarray(idx, dtype=int)
        return MeasureSpace(self.weights[idx], self.values[idx].reshape(len(idx), self.dim), False)

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "infinite_mass": self.infinite_mass,
            "atoms": [{"w": float(w), "f": [float(x) for x in v]} for w, v in zip(self.weights, self.values)],
        }

    def __eq__(self, other):
        if not isinstance(other, MeasureSpace):
            return NotImplemented
        return (
            self.infinite_mass == other.infinite_mass
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.values, other.values)
        )


def load(atoms: Iterable, dim: int, infinite_mass: bool = False) -> MeasureSpace:
    """Build a validated space from ``(weight, value)`` pairs."""
    atoms = list(atoms)
    if not atoms:
        raise ValueError("a measure space needs at least one atom")
    weights, values = [], []
    for i, atom in enumerate(atoms):
        w, v = atom
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if v.ndim != 1 or v.shape[0] != dim:
            raise ValueError(f"atom {i} has dimension {v.shape}, expected {dim}")
        if not w > 0:
            raise ValueError(f"atom {i} has nonpositive weight {w}")
        weights.append(float(w))
        values.append(v)
    return MeasureSpace(np.array(weights), np.array(values).reshape(len(atoms), dim), infinite_mass)


def lp_norm(space: MeasureSpace, norm: NormDescriptor, p: float) -> float:
    r = norm.eval(space.values)
    if p == np.inf:
        return float(np.max(r, initial=0.0))
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    return float(np.sum(space.weights * r**p) ** (1.0 / p))


def tail_truncate(space: MeasureSpace, norm: NormDescriptor, eps: float) -> MeasureSpace:
    """Restrict to the atoms with ``||f|| >= eps``.

    The result always has finite mass.  It may have no atoms at all when
    ``eps`` exceeds every ``||f_i||``.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    keep = np.flatnonzero(norm.eval(space.values) >= eps)
    return space.subspace(keep)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def from_json_dict(obj: dict) -> MeasureSpace:
    try:
        dim = int(obj["dim"])
        atoms = [(a["w"], a["f"]) for a in obj["atoms"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed space JSON: {exc}") from None
    return load(atoms, dim, bool(obj.get("infinite_mass", False)))


def read_space(path, infinite_mass=None) -> MeasureSpace:
    """Read a space from ``.json`` or ``.csv`` (rows: weight, then coordinates).

    ``infinite_mass`` overrides the flag stored in the file when not None.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed space JSON: {exc}") from None
        space = from_json_dict(obj)
    else:
        rows = [r for r in csv.reader(text.splitlines()) if r and not r[0].lstrip().startswith("#")]
        try:
            rows = [[float(x) for x in r] for r in rows]
        except ValueError as exc:
            raise ValueError(f"malformed space CSV: {exc}") from None
        if not rows or len(rows[0]) < 2:
            raise ValueError("space CSV needs rows of: weight, coord_1, ..., coord_d")
        space = load([(r[0], r[1:]) for r in rows], len(rows[0]) - 1)
    if infinite_mass is not None and bool(infinite_mass) != space.infinite_mass:
        space = MeasureSpace(space.weights, space.values, bool(infinite_mass))
    return space


def write_space(space: MeasureSpace, path) -> None:
    # repr-based float output is the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(space.to_json_dict(), indent=1) + "\n")
