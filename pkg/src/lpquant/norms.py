"""Norms on R^d.

Three smooth, strictly convex kinds are supported: the euclidean norm, the
q-norm (1 < q < inf) and a diagonally weighted euclidean norm.  Every method
accepts a single vector of shape ``(d,)`` or a stack of shape ``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

KINDS = ("euclidean", "q", "weighted")

# Spellings recognised by parse_norm but rejected (not Gateaux smooth off 0).
_NONSMOOTH = {"linf", "l_inf", "inf", "max", "chebyshev", "l1", "manhattan", "taxicab"}


@dataclass(frozen=True)
class NormDescriptor:
    """A norm on R^dim.

    ``kind`` is one of ``"euclidean"``, ``"q"`` (exponent ``q``) or
    ``"weighted"`` (positive ``weights``, ``||z|| = sqrt(sum w_i z_i^2)``).
    """

    kind: str
    dim: int
    q: Optional[float] = None
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if self.kind == "q":
            if self.q is None or not np.isfinite(self.q) or self.q <= 1:
                raise ValueError(f"q-norm needs 1 < q < inf, got {self.q!r}")
            object.__setattr__(self, "q", float(self.q))
        if self.kind == "weighted":
            if self.weights is None or len(self.weights) != self.dim:
                raise ValueError("weighted norm needs one weight per coordinate")
            w = tuple(float(x) for x in self.weights)
            if not all(np.isfinite(x) and x > 0 for x in w):
                raise ValueError("norm weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)

    # capability flags
    @property
    def strictly_convex(self) -> bool:
        return True

    @property
    def gateaux_smooth(self) -> bool:
        return True

    @property
    def inner_product(self) -> bool:
        """True when the norm comes from an inner product (p=2 means are averages)."""
        return self.kind in ("euclidean", "weighted") or self.q == 2.0

    @property
    def spec(self) -> str:
        if self.kind == "euclidean":
            return "euclidean"
        if self.kind == "q":
            return f"q:{self.q!r}"
        return "weighted:" + ",".join(repr(w) for w in self.weights)

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 or z.shape[-1] != self.dim:
            raise ValueError(f"expected vectors of dimension {self.dim}, got shape {z.shape}")
        return z

    def eval(self, z):
        """Norm of ``z`` along the last axis."""
        z = self._check(z)
        if self.kind == "euclidean":
            return np.sqrt(np.sum(z * z, axis=-1))
        if self.kind == "weighted":
            return np.sqrt(np.sum(np.asarray(self.weights) * z * z, axis=-1))
        a = np.abs(z)
        # scale by the max coordinate so |z_i|^q cannot overflow/underflow
        m = np.max(a, axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        r = np.sum((a / safe) ** self.q, axis=-1) ** (1.0 / self.q)
        return r * np.squeeze(m, axis=-1)

    def dual_eval(self, g):
        """Dual norm of the covector ``g``."""
        g = self._check(g)
        if self.kind == "euclidean":
            return np.sqrt(np.sum(g * g, axis=-1))
        if self.kind == "weighted":
            return np.sqrt(np.sum(g * g / np.asarray(self.weights), axis=-1))
        conj = NormDescriptor("q", self.dim, q=self.q / (self.q - 1.0))
        return conj.eval(g)

    def gradient(self, z):
        """Gradient of ``||.||`` at each row of ``z``; rows equal to 0 map to 0."""
        z = self._check(z)
        nz = self.eval(z)
        pos = nz > 0
        den = np.where(pos, nz, 1.0)[..., None]
        if self.kind == "euclidean":
            g = z / den
        elif self.kind == "weighted":
            g = np.asarray(self.weights) * z / den
        else:
            g = np.sign(z) * (np.abs(z) / den) ** (self.q - 1.0)
        return np.where(pos[..., None], g, 0.0)

    def __call__(self, z):
        return self.eval(z)


def parse_norm(text: str, dim: Optional[int] = None) -> NormDescriptor:
    """Parse ``"euclidean"``, ``"q:<float>"`` or ``"weighted:<w1,w2,...>"``."""
    s = text.strip().lower()
    if s in _NONSMOOTH or s in ("q:1", "q:inf", "q:1.0"):
        raise ValueError(f"norm {text!r} is not Gateaux smooth away from 0; not supported")
    if s in ("euclidean", "l2", "q:2"):
        if dim is None:
            raise ValueError("dimension required for the euclidean norm")
        return NormDescriptor("euclidean", dim)
    kind, sep, arg = s.partition(":")
    if not sep:
        raise ValueError(f"unknown norm spec {text!r}")
    if kind == "q":
        try:
            q = float(arg)
        except ValueError:
            raise ValueError(f"bad q exponent in {text!r}") from None
        if dim is None:
            raise ValueError("dimension required for the q-norm")
        return NormDescriptor("q", dim, q=q)
    if kind == "weighted":
        try:
            w = tuple(float(x) for x in arg.split(","))
        except ValueError:
            raise ValueError(f"bad weights in {text!r}") from None
        if dim is not None and len(w) != dim:
            raise ValueError(f"{len(w)} weights given for dimension {dim}")
        return NormDescriptor("weighted", len(w), weights=w)
    raise ValueError(f"unknown norm spec {text!r}")


def eval_norm(norm: NormDescriptor, z):
    r = norm.eval(z)
    return float(r) if np.ndim(r) == 0 else r


def dir_deriv(norm: NormDescriptor, z, v) -> float:
    """Directional derivative of the norm at ``z != 0`` in direction ``v``."""
    z = norm._check(z)
    v = norm._check(v)
    if not norm.eval(z) > 0:
        raise ValueError("the norm is not differentiable at 0")
    return float(np.dot(norm.gradient(z), v))


def grad_pth_power(norm: NormDescriptor, z, v, p: float) -> float:
    """Directional derivative of ``||z||^p`` in direction ``v`` (p > 1).

    At ``z = 0`` the derivative is exactly 0.
    """
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    z = norm._check(z)
    v = norm._check(v)
    r = float(norm.eval(z))
    if r == 0.0:
        return 0.0
    return p * r ** (p - 1.0) * float(np.dot(norm.gradient(z), v))
