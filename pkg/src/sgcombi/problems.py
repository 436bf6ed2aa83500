"""Model problems with known data and, where available, exact solutions.

Data functions take a sequence of per-axis coordinate arrays (broadcastable,
as produced by :meth:`TensorGrid.coordinates`) or plain floats, and return
an array.  They are small picklable classes so that problems can be shipped
to worker processes.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

POISSON = "poisson"
ADVECTION = "advection"
ADVECTION_DIFFUSION = "advection_diffusion"
KINDS = (POISSON, ADVECTION, ADVECTION_DIFFUSION)

# offsets of the Gaussian peak, chosen off any dyadic point
GAUSS_CENTER = (
    0.22081976,
    0.29072005,
    0.28051979,
    0.27032006,
    0.24122005,
    0.17071947,
    0.10101947,
    0.09021981,
)

PROFILE_VELOCITY = (0.31415926535897932385, -0.27182818284590452354)


@dataclass(frozen=True)
class ProblemSpec:
    """A linear PDE on the unit cube together with its data.

    For ``advection_diffusion`` the last axis is time (final time 1) and
    ``velocity`` / ``nu`` refer to the spatial axes only; ``initial`` is the
    data at ``t = 0`` and ``boundary`` the Dirichlet data on the spatial
    boundary.  For ``advection`` all axes (time included) are transport
    directions with positive velocity and ``boundary`` is the inflow data on
    the faces ``x_k = 0``.
    """

    kind: str
    dim: int
    rhs: Callable | None = None
    boundary: Callable | None = None
    initial: Callable | None = None
    velocity: tuple[float, ...] | None = None
    nu: float = 0.0
    exact: Callable | None = None
    eval_point: tuple[float, ...] | None = None
    deriv_sup: float | None = None
    name: str = ""
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.nu < 0:
            raise ValueError("diffusivity must be >= 0")
        if self.velocity is not None:
            n_vel = self.dim - 1 if self.kind == ADVECTION_DIFFUSION else self.dim
            if len(self.velocity) != n_vel:
                raise ValueError(f"expected {n_vel} velocity components, got {len(self.velocity)}")

    @property
    def space_dim(self) -> int:
        return self.dim - 1 if self.kind == ADVECTION_DIFFUSION else self.dim

    @property
    def center(self) -> tuple[float, ...]:
        return tuple([0.5] * self.dim) if self.eval_point is None else self.eval_point


# -- data functions ---------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, x):
        shape = np.broadcast_shapes(*(np.shape(xk) for xk in x))
        return np.full(shape, float(self.value))


@dataclass(frozen=True)
class Affine:
    """``offset + sum_k slope_k x_k``."""

    slopes: tuple[float, ...]
    offset: float = 0.0

    def __call__(self, x):
        out = self.offset
        for s, xk in zip(self.slopes, x):
            out = out + s * np.asarray(xk, dtype=float)
        return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class QuadraticBump:
    """``sum_k x_k (1 - x_k)``; its Laplacian is ``-2 d``."""

    def __call__(self, x):
        out = 0.0
        for xk in x:
            xk = np.asarray(xk, dtype=float)
            out = out + xk * (1.0 - xk)
        return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class Gaussian:
    """``exp(-1/2 sum_k lam_k (x_k - p_k)^2)``."""

    lam: tuple[float, ...]
    center: tuple[float, ...]

    def __call__(self, x):
        expo = 0.0
        for lk, pk, xk in zip(self.lam, self.center, x):
            expo = expo + lk * (np.asarray(xk, dtype=float) - pk) ** 2
        return np.exp(-0.5 * expo)


@dataclass(frozen=True)
class GaussianLaplacian:
    """Laplacian of :class:`Gaussian`: ``sum_k lam_k (-1 + lam_k y_k^2) u``."""

    lam: tuple[float, ...]
    center: tuple[float, ...]

    def __call__(self, x):
        u = Gaussian(self.lam, self.center)(x)
        factor = 0.0
        for lk, pk, xk in zip(self.lam, self.center, x):
            y = np.asarray(xk, dtype=float) - pk
            factor = factor + lk * (-1.0 + lk * y**2)
        return factor * u


def transition(t, k: int):
    """``(2/pi) arctan(tan^k(pi t / 2))`` on ``[0, 1]``: 0 at 0, 1 at 1, C^{k-1} at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(over="ignore"):
        inner = np.tan(0.5 * np.pi * t) ** k
    out = np.arctan(inner) * (2.0 / np.pi)
    return np.where(t >= 1.0, 1.0, out)


@dataclass(frozen=True)
class RadialProfile:
    """1 inside radius ``(1 - eps) r_outer``, 0 outside ``r_outer``, smooth in between."""

    center: tuple[float, float]
    r_outer: float
    eps: float
    k: int = 5

    @property
    def r_inner(self) -> float:
        return (1.0 - self.eps) * self.r_outer

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.eps == 0.0:
            return np.where(r < self.r_outer, 1.0, 0.0)
        t = (self.r_outer - r) / (self.r_outer - self.r_inner)
        return transition(t, self.k)

    def __call__(self, x):
        r2 = 0.0
        for mk, xk in zip(self.center, x):
            r2 = r2 + (np.asarray(xk, dtype=float) - mk) ** 2
        return self.radial(np.sqrt(r2))


# -- constructors -------------------------------------------------------------


def gaussian_poisson(
    d: int,
    lam: Sequence[float] | None = None,
    center: Sequence[float] | None = None,
) -> ProblemSpec:
    """Poisson problem ``Laplace u = f`` whose solution is a Gaussian bump."""
    lam = tuple(float(v) for v in (lam if lam is not None else [1.0] * d))
    if center is None:
        if d > len(GAUSS_CENTER):
            raise ValueError(f"default centre only defined for d <= {len(GAUSS_CENTER)}")
        center = GAUSS_CENTER[:d]
    center = tuple(float(v) for v in center)
    if len(lam) != d or len(center) != d:
        raise ValueError("lambda and centre must have d entries")
    if any(v < 0 for v in lam):
        raise ValueError("lambda entries must be >= 0")
    u = Gaussian(lam, center)
    # sup of all derivatives of order <= 4 per axis: attained at the centre
    sup = max(1.0, math.prod(max(1.0, lk**2) for lk in lam))
    return ProblemSpec(
        kind=POISSON,
        dim=d,
        rhs=GaussianLaplacian(lam, center),
        boundary=u,
        exact=u,
        eval_point=tuple([0.5] * d),
        deriv_sup=sup,
        name="poisson-gauss",
        params={"lam": lam, "center": center},
    )


def quadratic_poisson(d: int) -> ProblemSpec:
    """Poisson problem with solution ``sum_k x_k (1 - x_k)``, reproduced exactly at nodes."""
    u = QuadraticBump()
    return ProblemSpec(
        kind=POISSON,
        dim=d,
        rhs=Constant(-2.0 * d),
        boundary=u,
        exact=u,
        eval_point=tuple([0.5] * d),
        deriv_sup=2.0,
        name="poisson-quadratic",
    )


def constant_poisson(d: int, value: float = 1.0) -> ProblemSpec:
    c = Constant(value)
    return ProblemSpec(
        kind=POISSON,
        dim=d,
        rhs=Constant(0.0),
        boundary=c,
        exact=c,
        eval_point=tuple([0.5] * d),
        deriv_sup=abs(value),
        name="poisson-constant",
    )


def linear_advection(data: Callable, velocity: Sequence[float], exact: Callable | None = None) -> ProblemSpec:
    """Transport ``sum_k b_k d_k u = 0`` with inflow data on the faces ``x_k = 0``."""
    velocity = tuple(float(b) for b in velocity)
    return ProblemSpec(
        kind=ADVECTION,
        dim=len(velocity),
        boundary=data,
        velocity=velocity,
        exact=exact,
        name="advection",
    )


def advection_profile(epsilon: float = 0.9, k: int = 5, nu: float = 0.1) -> ProblemSpec:
    """Advection-diffusion of a radial bump in 2D, posed on the space-time cube.

    The bump starts in the upper left quarter and is carried by the fixed
    velocity towards the lower right, its outer circle touching the centre at
    ``t = 0`` and again at ``t = 1``.  Dirichlet data is zero.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    b1, b2 = PROFILE_VELOCITY
    center = (0.5 * (1.0 - b1), 0.5 * (1.0 - b2))
    r_outer = 0.5 * math.hypot(b1, b2)
    return ProblemSpec(
        kind=ADVECTION_DIFFUSION,
        dim=3,
        initial=RadialProfile(center, r_outer, float(epsilon), int(k)),
        boundary=Constant(0.0),
        velocity=PROFILE_VELOCITY,
        nu=float(nu),
        eval_point=(0.5, 0.5, 1.0),
        name="adv-diff",
        params={"epsilon": epsilon, "k": k, "nu": nu},
    )
