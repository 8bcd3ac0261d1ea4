"""Augmentation transforms and orbits.

A :class:`Transform` is a deterministic map on input vectors. An
:class:`Orbit` is a distribution over transforms: either a uniform mixture of
``K`` fixed transforms (``mode="finite"``) or a parametric sampler that draws
a fresh transform each time (``mode="stochastic"``).

Planar transforms (``rotation_2d`` and ``sign_flip``) view a length-``D``
input as ``D // 2`` points ``(x0, y0, x1, y1, ...)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ModeError

__all__ = [
    "Transform",
    "Orbit",
    "SamplerFactor",
    "identity_orbit",
    "cyclic_shift_group",
    "rotation_group",
    "sign_flip_group",
    "sample_augmentation",
    "sample_augmentations",
    "enumerate_orbit",
    "freeze_orbit",
]

KINDS = ("identity", "cyclic_shift", "rotation_2d", "sign_flip", "additive_jitter", "chain")


def _as_points(x):
    if x.shape[-1] % 2:
        raise ContractError(f"planar transforms need an even input dimension, got {x.shape[-1]}")
    return x.reshape(x.shape[:-1] + (x.shape[-1] // 2, 2))


def _jitter_noise(seed, dim):
    return np.random.Generator(np.random.Philox(int(seed))).standard_normal(dim)


@dataclass(frozen=True)
class Transform:
    """One fixed augmentation.

    ``param`` depends on ``kind``: shift offset (int), rotation angle
    (radians), flipped axis (0 or 1), ``(scale, seed)`` for jitter, or a
    tuple of transforms for ``chain`` (applied left to right).
    """

    kind: str = "identity"
    param: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown transform kind {self.kind!r}")

    def apply(self, x):
        """Apply to a vector or to a stack of vectors along the last axis."""
        x = np.asarray(x, dtype=np.float64)
        k = self.kind
        if k == "identity":
            return x.copy()
        if k == "cyclic_shift":
            return np.roll(x, int(self.param), axis=-1)
        if k == "rotation_2d":
            c, s = np.cos(self.param), np.sin(self.param)
            p = _as_points(x)
            out = np.stack([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1]], axis=-1)
            return out.reshape(x.shape)
        if k == "sign_flip":
            p = _as_points(x).copy()
            p[..., int(self.param)] *= -1.0
            return p.reshape(x.shape)
        if k == "additive_jitter":
            scale, seed = self.param
            return x + scale * _jitter_noise(seed, x.shape[-1])
        for t in self.param:
            x = t.apply(x)
        return x

    def __call__(self, x):
        return self.apply(x)


@dataclass(frozen=True)
class SamplerFactor:
    """One independent component of a stochastic augmentation sampler.

    Kinds:

    * ``cyclic_shift``: offset uniform on ``{0, ..., period-1}``
    * ``rotation``: angle uniform on ``[0, max_angle)``
    * ``sign_flip``: negate ``axis`` with probability 1/2
    * ``jitter``: add ``scale * N(0, I)``
    * ``identity``: degenerate sampler, always the identity
    """

    kind: str
    period: int = 0
    max_angle: float = 2 * np.pi
    axis: int = 0
    scale: float = 0.0

    def draw(self, rng):
        if self.kind == "cyclic_shift":
            return Transform("cyclic_shift", int(rng.integers(self.period)))
        if self.kind == "rotation":
            return Transform("rotation_2d", float(rng.uniform(0.0, self.max_angle)))
        if self.kind == "sign_flip":
            return Transform("sign_flip", self.axis) if rng.random() < 0.5 else Transform()
        if self.kind == "jitter":
            return Transform("additive_jitter", (self.scale, int(rng.integers(2**63))))
        if self.kind == "identity":
            return Transform()
        raise ContractError(f"unknown sampler factor {self.kind!r}")

    def apply_random(self, X, rng):
        """Vectorized: apply an independent draw to every vector in ``X`` (shape ``(..., D)``)."""
        lead = X.shape[:-1]
        D = X.shape[-1]
        if self.kind == "cyclic_shift":
            off = rng.integers(self.period, size=lead)
            idx = (np.arange(D) - off[..., None]) % D
            return np.take_along_axis(X, idx, axis=-1)
        if self.kind == "rotation":
            th = rng.uniform(0.0, self.max_angle, size=lead)[..., None]
            p = _as_points(X)
            c, s = np.cos(th), np.sin(th)
            out = np.stack([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1]], axis=-1)
            return out.reshape(X.shape)
        if self.kind == "sign_flip":
            flip = rng.random(size=lead) < 0.5
            p = _as_points(X).copy()
            p[..., self.axis] = np.where(flip[..., None], -p[..., self.axis], p[..., self.axis])
            return p.reshape(X.shape)
        if self.kind == "jitter":
            return X + self.scale * rng.standard_normal(X.shape)
        if self.kind == "identity":
            return X.copy()
        raise ContractError(f"unknown sampler factor {self.kind!r}")


@dataclass(frozen=True)
class Orbit:
    """Augmentation distribution ``P(x'|x)``.

    Use :meth:`finite` or :meth:`stochastic` rather than the constructor.
    ``group`` declares that the finite transforms form a group, which gates
    group-only assertions such as closure and invariance.
    """

    mode: str
    transforms: tuple = ()
    factors: tuple = ()
    group: bool = False
    name: str = ""

    @classmethod
    def finite(cls, transforms, group=False, name=""):
        transforms = tuple(transforms)
        if not transforms:
            raise ContractError("a finite orbit needs at least one transform")
        return cls("finite", transforms=transforms, group=group, name=name)

    @classmethod
    def stochastic(cls, factors, name=""):
        factors = tuple(factors)
        if not factors:
            raise ContractError("a stochastic orbit needs at least one sampler factor")
        return cls("stochastic", factors=factors, name=name)

    @property
    def is_finite(self):
        return self.mode == "finite"

    @property
    def size(self):
        """Number of transforms ``K`` of a finite orbit."""
        self._require_finite("size")
        return len(self.transforms)

    @property
    def is_identity(self):
        return self.is_finite and all(t.kind == "identity" for t in self.transforms)

    def _require_finite(self, what):
        if not self.is_finite:
            raise ModeError(f"{what} requires a finite orbit, got a stochastic one")

    def draw_transform(self, rng):
        if self.is_finite:
            return self.transforms[int(rng.integers(len(self.transforms)))]
        parts = tuple(f.draw(rng) for f in self.factors)
        return parts[0] if len(parts) == 1 else Transform("chain", parts)

    def enumerate_batch(self, X):
        """All transforms applied to every row: shape ``(N, K, D)``."""
        self._require_finite("enumeration")
        X = np.asarray(X, dtype=np.float64)
        return np.stack([t.apply(X) for t in self.transforms], axis=1)

    def sample_batch(self, X, K, rng):
        """``K`` i.i.d. augmentations of every row of ``X``: shape ``(N, K, D)``.

        Finite orbits are sampled with replacement.
        """
        X = np.asarray(X, dtype=np.float64)
        if K < 1:
            raise ContractError(f"K must be >= 1, got {K}")
        N = X.shape[0]
        if self.is_finite:
            idx = rng.integers(len(self.transforms), size=(N, K))
            return self.enumerate_batch(X)[np.arange(N)[:, None], idx]
        out = np.broadcast_to(X[:, None, :], (N, K, X.shape[1])).copy()
        for f in self.factors:
            out = f.apply_random(out, rng)
        return out


def identity_orbit():
    return Orbit.finite([Transform()], group=True, name="identity")


def cyclic_shift_group(dim, step=1):
    """Cyclic shifts by multiples of ``step`` on a length-``dim`` ring."""
    if dim % step:
        raise ContractError(f"step {step} must divide dim {dim} to form a group")
    return Orbit.finite(
        [Transform("cyclic_shift", s) for s in range(0, dim, step)], group=True, name=f"cyclic_shift/{step}"
    )


def rotation_group(order):
    """The cyclic rotation group C_order acting on planar point sets."""
    return Orbit.finite(
        [Transform("rotation_2d", 2 * np.pi * k / order) for k in range(order)], group=True, name=f"C{order}"
    )


def sign_flip_group():
    """Klein four-group of axis reflections on planar point sets."""
    ts = [
        Transform(),
        Transform("sign_flip", 0),
        Transform("sign_flip", 1),
        Transform("chain", (Transform("sign_flip", 0), Transform("sign_flip", 1))),
    ]
    return Orbit.finite(ts, group=True, name="sign_flips")


def _check_vector(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ContractError(f"expected an input vector, got shape {x.shape}")
    return x


def sample_augmentation(orbit, x, rng):
    """Apply one draw from ``orbit`` to the vector ``x``."""
    return orbit.draw_transform(rng).apply(_check_vector(x))


def sample_augmentations(orbit, x, K, rng):
    """``K`` i.i.d. augmentations of one vector as a ``(K, D)`` array."""
    return orbit.sample_batch(_check_vector(x)[None, :], K, rng)[0]


def enumerate_orbit(orbit, x):
    """``[a_1(x), ..., a_K(x)]`` in declaration order, as a ``(K, D)`` array."""
    return orbit.enumerate_batch(_check_vector(x)[None, :])[0]


def freeze_orbit(orbit, K, rng):
    """Draw ``K`` transforms once from a stochastic orbit and fix them."""
    if K < 1:
        raise ContractError(f"K must be >= 1, got {K}")
    if orbit.is_finite:
        raise ModeError("freeze_orbit expects a stochastic orbit")
    return Orbit.finite([orbit.draw_transform(rng) for _ in range(K)], name=f"frozen({orbit.name})x{K}")
