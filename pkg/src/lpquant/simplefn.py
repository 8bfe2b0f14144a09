"""Simple functions ``h = sum_i x_i 1_{A_i}`` on a discrete space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .norms import NormDescriptor
from .space import MeasureSpace


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    """``centers[j]`` is the value taken on the cell ``{a : assignment[a] == j}``.

    ``background`` is the index of the center used on the infinite-mass
    background (it must be the zero vector); None for finite-mass spaces.
    """

    centers: np.ndarray  # (m, d)
    assignment: np.ndarray  # (n,) ints in [0, m)
    background: Optional[int] = None

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        a = np.array(self.assignment, dtype=np.int64).reshape(-1)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("a simple function needs at least one center")
        if a.size and (a.min() < 0 or a.max() >= c.shape[0]):
            raise ValueError("assignment refers to a nonexistent center")
        if self.background is not None and not 0 <= self.background < c.shape[0]:
            raise ValueError("background index out of range")
        c.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "assignment", a)
        if self.background is not None:
            object.__setattr__(self, "background", int(self.background))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def cells(self) -> list:
        """Atom indices of each cell, in center order."""
        return [np.flatnonzero(self.assignment == j) for j in range(self.k)]

    def to_json_dict(self) -> dict:
        return {
            "centers": [[float(x) for x in c] for c in self.centers],
            "assignment": [int(i) for i in self.assignment],
            "background": self.background,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SimpleFunction":
        try:
            return cls(np.array(obj["centers"], dtype=float), np.array(obj["assignment"], dtype=np.int64),
                       obj.get("background"))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed simple-function JSON: {exc}") from None

    def __eq__(self, other):
        if not isinstance(other, SimpleFunction):
            return NotImplemented
        return (
            self.background == other.background
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.assignment, other.assignment)
        )


def _validate(space: MeasureSpace, h: SimpleFunction) -> None:
    if h.assignment.shape[0] != space.n:
        raise ValueError(f"assignment covers {h.assignment.shape[0]} atoms, space has {space.n}")
    if h.centers.shape[1] != space.dim:
        raise ValueError("center dimension does not match the space")
    if space.infinite_mass:
        if h.background is None:
            raise ValueError("infinite-mass space needs a background center")
        if np.any(h.centers[h.background] != 0):
            raise ValueError("background center must be 0 on an infinite-mass space (infinite cost otherwise)")


def residual_norms(space: MeasureSpace, norm: NormDescriptor, h: SimpleFunction) -> np.ndarray:
    """``||f_a - h(a)||`` for every atom."""
    _validate(space, h)
    return norm.eval(space.values - h.centers[h.assignment])


def cost(space: MeasureSpace, norm: NormDescriptor, p: float, h: SimpleFunction) -> float:
    """``||f - h||_p``; the background contributes nothing."""
    r = residual_norms(space, norm, h)
    if p == np.inf:
        return float(np.max(r, initial=0.0))
    return float(np.sum(space.weights * r**p) ** (1.0 / p))


def reduce(space: MeasureSpace, h: SimpleFunction) -> SimpleFunction:
    """Merge equal centers (lowest index wins) and drop cells without atoms.

    On an infinite-mass space the background cell always survives.
    """
    _validate(space, h)
    background = h.background if space.infinite_mass else None
    # canonical representative: lowest index holding the same vector
    rep = np.arange(h.k)
    for j in range(h.k):
        for i in range(j):
            if rep[i] == i and np.array_equal(h.centers[i], h.centers[j]):
                rep[j] = i
                break
    assign = rep[h.assignment]
    used = set(assign.tolist())
    if background is not None:
        background = int(rep[background])
        used.add(background)
    keep = sorted(used)
    if not keep:
        raise ValueError("cannot reduce a simple function on an empty space")
    new_index = {old: new for new, old in enumerate(keep)}
    return SimpleFunction(
        h.centers[keep],
        np.array([new_index[a] for a in assign.tolist()], dtype=np.int64),
        None if background is None else new_index[background],
    )


def degree(space: MeasureSpace, h: SimpleFunction) -> int:
    return reduce(space, h).k


def bounded_reduction(space: MeasureSpace, norm: NormDescriptor, p: float, h: SimpleFunction,
                      threshold: float) -> SimpleFunction:
    """Replace every center with ``||x_i|| > threshold`` by 0.

    The zeroed cells ``B`` satisfy
    ``cost(g)^p <= cost(h)^p + sum_{a in B} w_a ||f_a||^p``.
    The output is not reduced; several cells may now carry the value 0.
    """
    if p == np.inf:
        raise ValueError("bounded reduction is defined for p < inf")
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    _validate(space, h)
    big = norm.eval(h.centers) > threshold
    if not big.any():
        return h
    centers = np.array(h.centers)
    centers[big] = 0.0
    return SimpleFunction(centers, h.assignment, h.background)
