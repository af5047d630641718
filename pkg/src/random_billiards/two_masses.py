"""Random billiard of a free molecule striking a spring-free bound mass.

The mechanical system: a bound mass ``m1`` slides on a segment ``[0, l]``
between a solid bottom wall and a semi-permeable top wall, and a free
molecule of mass ``m2`` enters through the top wall, undergoes elastic
collisions with the bound mass (and the bound mass with the walls), and
eventually exits.  In rescaled coordinates the whole interaction reduces
to billiard motion in a right triangle of angle ``alpha`` where
``tan(alpha) = gamma = sqrt(m2/m1)``.

For ``gamma < 1/sqrt(3)`` (``m1 > 3 m2``) the exit speed of the molecule
is a known piecewise-linear function of the incoming speed ``v`` and of
the bound-mass velocity ``w`` at entry: one of at most three affine
branches fires, with probabilities depending only on ``v/|w|``.  This
module implements

* :func:`derive_params` - the branch constants and region thresholds,
* :func:`branch_menu` / :func:`random_map_step` - the closed-form random map,
* :func:`event_driven_step` - an independent oracle that integrates the
  two-particle dynamics event by event in the original coordinates,
* :func:`stationary_density` - the Maxwell-Boltzmann-type stationary law,
* :func:`kernel_kappa` / :func:`kernel_K` - the one-step transition
  density and its symmetric version relative to the stationary measure.

All speeds are in the scaled variables (bound mass ``w``, molecule ``v``);
``sigma`` is the wall temperature parameter of the Gaussian wall law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, SimulationError
from .stats import RandomStream, sample_gaussian

_LOG_2PI = math.log(2.0 * math.pi)
# Gaussian factors below exp(-700) are treated as exact zeros.
_LOG_FLOOR = -700.0

REGIONS = ("W_NONNEG", "I1", "I2", "I3", "I4")


@dataclass(frozen=True)
class TwoMassParams:
    """Derived constants of the two-mass random map at mass ratio ``gamma**2``.

    ``a, b`` and ``a_bar, b_bar`` are the coefficients of the affine
    branches; ``t1 < t2 < t3`` are the ``v/|w|`` region thresholds
    (``tan`` of ``alpha``, ``2 alpha``, ``3 alpha``); ``c_lo < 1 < c_hi``
    are the support constants entering the transition kernel.
    """

    gamma: float
    sigma: float
    a: float
    b: float
    a_bar: float
    b_bar: float
    t1: float
    t2: float
    t3: float
    c_lo: float
    c_hi: float


def derive_params(gamma: float, sigma: float = 1.0) -> TwoMassParams:
    """Compute :class:`TwoMassParams` for ``0 < gamma < 1/sqrt(3)``.

    ``gamma = sqrt(m2/m1)`` must stay below ``1/sqrt(3)`` (i.e. ``m1 > 3 m2``)
    for the three-branch closed form to be valid.
    """
    gamma = float(gamma)
    sigma = float(sigma)
    if not 0.0 < gamma < 1.0 / math.sqrt(3.0):
        raise ValueError("gamma must lie in (0, 1/sqrt(3))")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    g2 = gamma * gamma
    one = 1.0 + g2
    a = (1.0 - g2) / one
    b = 2.0 * gamma / one
    a_bar = (1.0 - 6.0 * g2 + g2 * g2) / (one * one)
    b_bar = 4.0 * gamma * (1.0 - g2) / (one * one)
    t1 = gamma
    t2 = 2.0 * gamma / (1.0 - g2)
    t3 = gamma * (3.0 - g2) / (1.0 - 3.0 * g2)
    c_lo = g2 * (3.0 + 3.0 * g2 + g2 * g2) / (one * (3.0 - g2))
    c_hi = (3.0 - g2) / one
    return TwoMassParams(gamma, sigma, a, b, a_bar, b_bar, t1, t2, t3, c_lo, c_hi)


@dataclass(frozen=True)
class WallLaw:
    """Law of the bound-mass velocity seen at entry.

    ``gaussian``: mean zero, standard deviation ``scale`` (the physical
    wall law).  ``bernoulli``: ``+scale`` or ``-scale`` with equal
    probability (the simplified law used for small-ratio asymptotics).
    """

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "bernoulli"):
            raise ValueError("kind must be 'gaussian' or 'bernoulli'")
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")

    @classmethod
    def gaussian(cls, sigma: float) -> "WallLaw":
        return cls("gaussian", float(sigma))

    @classmethod
    def bernoulli(cls, speed: float) -> "WallLaw":
        return cls("bernoulli", float(speed))

    def sample(self, stream: RandomStream) -> float:
        if self.kind == "gaussian":
            return sample_gaussian(stream, 0.0, self.scale)
        return self.scale if stream.uniform() < 0.5 else -self.scale

    def sample_many(self, stream: RandomStream, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return sample_gaussian(stream, 0.0, self.scale, size=n)
        return np.where(stream.uniforms(n) < 0.5, self.scale, -self.scale)


def classify_region(v: float, w: float, params: TwoMassParams) -> str:
    """Region of the entry state: ``W_NONNEG`` or ``I1``..``I4`` by ``v/|w|``.

    Region boundaries are right-closed: ``v/|w| == t1`` belongs to ``I1``,
    and so on.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    if w >= 0:
        return "W_NONNEG"
    r = v / abs(w)
    if r <= params.t1:
        return "I1"
    if r <= params.t2:
        return "I2"
    if r <= params.t3:
        return "I3"
    return "I4"


@dataclass(frozen=True)
class BranchOutcome:
    """One possible exit speed with its branch label and probability."""

    branch: str
    probability: float
    speed: float


def _pq(v: float, W: float, params: TwoMassParams) -> tuple[float, float]:
    # Branch probabilities p and q as functions of |w|/v.  The coefficient
    # of p must be gamma itself: that is the unique choice making the
    # probabilities continuous at the region boundaries (p -> 1 at r = t1,
    # p + q -> 1 at r = t3) and detailed balance exact, and it is the one
    # the event-driven dynamics reproduces.
    g = params.gamma
    ratio = W / v
    p = g * ratio
    q = 2.0 * (1.0 - g * g) / (1.0 + g * g) - 4.0 * g / (1.0 + g * g) * ratio
    return p, q


def branch_menu(v: float, w: float, params: TwoMassParams) -> list[BranchOutcome]:
    """All branches that can fire from entry state ``(v, w)``.

    Probabilities are listed in the fixed order F1, F2, F3 and sum to 1;
    every exit speed is positive.
    """
    region = classify_region(v, w, params)
    W = abs(w)
    f1 = params.a * v + params.b * W
    f2 = params.a * v - params.b * W
    f3 = -params.a_bar * v + params.b_bar * W
    if region in ("W_NONNEG", "I1"):
        return [BranchOutcome("F1", 1.0, f1)]
    p, q = _pq(v, W, params)
    if region == "I2":
        return [BranchOutcome("F1", p, f1), BranchOutcome("F3", 1.0 - p, f3)]
    if region == "I3":
        return [
            BranchOutcome("F1", p, f1),
            BranchOutcome("F2", q, f2),
            BranchOutcome("F3", 1.0 - p - q, f3),
        ]
    return [BranchOutcome("F1", p, f1), BranchOutcome("F2", 1.0 - p, f2)]


def random_map_step(
    v: float, law: WallLaw, stream: RandomStream, params: TwoMassParams
) -> float:
    """One step of the random map: draw ``w`` from ``law``, pick a branch.

    Consumes exactly one wall draw and one branch-selection uniform per
    call, regardless of how many branches the region offers.
    """
    w = law.sample(stream)
    u = stream.uniform()
    menu = branch_menu(v, w, params)
    acc = 0.0
    for outcome in menu:
        acc += outcome.probability
        if u < acc:
            return outcome.speed
    return menu[-1].speed


def sample_one_step(
    v: float, law: WallLaw, stream: RandomStream, n: int, params: TwoMassParams
) -> np.ndarray:
    """Vectorized one-step sample: ``n`` independent exits from speed ``v``.

    Consumes the same two variates per sample as :func:`random_map_step`,
    drawn as blocks.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    w = law.sample_many(stream, n)
    u = stream.uniforms(n)
    return _step_speeds(v, w, u, params)


def _step_speeds(v, w, u, params: TwoMassParams) -> np.ndarray:
    # Vectorized branch selection; mirrors the cumulative order F1, F2, F3.
    W = np.abs(w)
    f1 = params.a * v + params.b * W
    f2 = params.a * v - params.b * W
    f3 = -params.a_bar * v + params.b_bar * W
    g = params.gamma
    ratio = W / v
    p = g * ratio
    q = 2.0 * (1.0 - g * g) / (1.0 + g * g) - 4.0 * g / (1.0 + g * g) * ratio
    with np.errstate(divide="ignore"):
        r = np.where(W > 0, v / np.where(W > 0, W, 1.0), np.inf)
    neg = w < 0
    in2 = neg & (r > params.t1) & (r <= params.t2)
    in3 = neg & (r > params.t2) & (r <= params.t3)
    in4 = neg & (r > params.t3)
    take2 = (in3 & (u >= p) & (u < p + q)) | (in4 & (u >= p))
    take3 = (in2 & (u >= p)) | (in3 & (u >= p + q))
    return np.where(take2, f2, np.where(take3, f3, f1))


def run_chain(
    v0: float,
    steps: int,
    law: WallLaw,
    stream: RandomStream,
    params: TwoMassParams,
) -> np.ndarray:
    """Iterate the random map ``steps`` times from ``v0``; returns all states.

    The returned array holds the speed after each step (length ``steps``).
    """
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    w_all = law.sample_many(stream, steps).tolist()
    u_all = stream.uniforms(steps).tolist()
    g = params.gamma
    a, b = params.a, params.b
    a_bar, b_bar = params.a_bar, params.b_bar
    t1, t2, t3 = params.t1, params.t2, params.t3
    q0 = 2.0 * (1.0 - g * g) / (1.0 + g * g)
    q1 = 4.0 * g / (1.0 + g * g)
    out = np.empty(steps)
    v = float(v0)
    for i in range(steps):
        w = w_all[i]
        if w >= 0.0:
            v = a * v + b * w
        else:
            W = -w
            r = v / W
            if r <= t1:
                v = a * v + b * W
            else:
                u = u_all[i]
                ratio = W / v
                p = g * ratio
                if r <= t2:
                    v = a * v + b * W if u < p else -a_bar * v + b_bar * W
                elif r <= t3:
                    q = q0 - q1 * ratio
                    if u < p:
                        v = a * v + b * W
                    elif u < p + q:
                        v = a * v - b * W
                    else:
                        v = -a_bar * v + b_bar * W
                else:
                    v = a * v + b * W if u < p else a * v - b * W
        out[i] = v
    return out


_EVENT_CAP = 10**6


def event_driven_step(v: float, x: float, w: float, params: TwoMassParams) -> float:
    """Exit speed from exact event-driven two-particle dynamics.

    Works in the original (unscaled) coordinates with ``m1 = 1``,
    ``m2 = gamma**2``: the molecule enters the interaction segment at the
    semi-permeable wall moving inward, collides elastically with the
    bound mass (which reflects off both segment ends), and the function
    returns its scaled speed when it exits.  ``x`` is the bound-mass
    position in the scaled segment ``[0, 1]``, ``w`` its scaled velocity.

    This routine shares no formulas with the closed-form random map and
    serves as its oracle.  Total kinetic energy is checked to 1e-10
    relative at exit.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    g = params.gamma
    m1 = 1.0
    m2 = g * g
    m = m1 + m2
    ell = math.sqrt(m / m1)  # scaled segment length 1 maps to this
    sm1 = math.sqrt(m1 / m)
    sm2 = math.sqrt(m2 / m)
    x1 = x / sm1
    v1 = w / sm1
    x2 = ell
    v2 = -v / sm2
    energy0 = m1 * v1 * v1 + m2 * v2 * v2
    for _ in range(_EVENT_CAP):
        t_coll = (x2 - x1) / (v1 - v2) if v2 < v1 else math.inf
        t_wall = math.inf
        wall_hit = 0.0
        if v1 < 0.0:
            t_wall = -x1 / v1
            wall_hit = 0.0
        elif v1 > 0.0:
            t_wall = (ell - x1) / v1
            wall_hit = ell
        t_exit = (ell - x2) / v2 if v2 > 0.0 else math.inf
        t = min(t_coll, t_wall, t_exit)
        if t is math.inf:
            raise SimulationError("no next event; state is degenerate")
        x1 += v1 * t
        x2 += v2 * t
        if t_exit <= t_coll and t_exit <= t_wall:
            energy1 = m1 * v1 * v1 + m2 * v2 * v2
            if abs(energy1 - energy0) > 1e-10 * energy0:
                raise NumericError("energy drifted during event-driven step")
            return v2 * sm2
        if t_coll <= t_wall:
            x2 = x1  # remove the roundoff gap at contact
            v1, v2 = (
                ((m1 - m2) * v1 + 2.0 * m2 * v2) / m,
                ((m2 - m1) * v2 + 2.0 * m1 * v1) / m,
            )
        else:
            x1 = wall_hit
            v1 = -v1
    raise SimulationError("event cap exceeded in event-driven step")


def stationary_density(v, params: TwoMassParams):
    """Stationary speed density ``v/sigma**2 * exp(-v**2 / (2 sigma**2))``.

    Zero for ``v <= 0``.  Integrates to 1 on the half line.
    """
    v = np.asarray(v, dtype=float)
    s2 = params.sigma * params.sigma
    out = np.where(v > 0, v / s2 * np.exp(-np.square(v) / (2.0 * s2)), 0.0)
    return float(out) if out.ndim == 0 else out


def _log_gauss(delta, scale: float):
    # log of the centered normal density with standard deviation `scale`.
    return -0.5 * np.square(delta / scale) - math.log(scale) - 0.5 * _LOG_2PI


def _kernel_pieces(v: float, u, params: TwoMassParams):
    """Log-densities and branch weights of the two kernel pieces at ``(v, u)``.

    Piece one collects the branches ``u = a v +/- b |w|`` (Gaussian factor
    in ``u - a v``), piece two the branch ``u = -a_bar v + b_bar |w|``
    (Gaussian factor in ``u + a_bar v``).  The weights are the branch
    probabilities expressed through the wall speed that maps onto ``u``.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    u = np.asarray(u, dtype=float)
    g = params.gamma
    a, b = params.a, params.b
    a_bar, b_bar = params.a_bar, params.b_bar
    c_hi = params.c_hi
    sig = params.sigma
    q0 = 2.0 * (1.0 - g * g) / (1.0 + g * g)
    q1 = 4.0 * g / (1.0 + g * g)

    log_g1 = _log_gauss(u - a * v, b * sig)
    w1 = np.abs(u - a * v) / b  # wall speed reaching u through branches 1/2
    p1 = g * w1 / v
    # Boundary points take the shared two-sided limit of the adjacent
    # pieces, so the density is its continuous representative everywhere
    # a quadrature node could land.
    weight1 = np.zeros_like(u)
    weight1 += np.where(u >= a * v, 1.0, 0.0)  # branch 1, non-negative wall speeds
    weight1 += np.where(u >= c_hi * v, 1.0, 0.0)  # branch 1 fires surely in I1
    weight1 += np.where((u > a * v) & (u < c_hi * v), p1, 0.0)  # branch 1 from I2-I4
    # Branch 2 from I3 lands below v/c_hi with weight q; written as 2u/v,
    # which is q's exact value there and avoids cancellation as u -> 0.
    weight1 += np.where((u > 0) & (u <= v / c_hi), 2.0 * u / v, 0.0)
    weight1 += np.where((u > v / c_hi) & (u < a * v), 1.0 - p1, 0.0)  # branch 2 from I4

    log_g2 = _log_gauss(u + a_bar * v, b_bar * sig)
    w2 = (u + a_bar * v) / b_bar  # wall speed reaching u through branch 3
    p2 = g * w2 / v
    q2 = q0 - q1 * w2 / v
    weight2 = np.zeros_like(u)
    weight2 += np.where((u >= v) & (u < c_hi * v), 1.0 - p2, 0.0)  # branch 3 from I2
    # Branch 3 from I3: its source region ends at v/|w| = t3, whose image
    # is u = v/c_hi, so that is the inner endpoint of this interval.
    weight2 += np.where((u > v / c_hi) & (u < v), 1.0 - p2 - q2, 0.0)
    return log_g1, weight1, log_g2, weight2


def kernel_kappa(v: float, u, params: TwoMassParams):
    """One-step transition density ``kappa(v, u)`` in ``u`` (Lebesgue).

    Vectorized over ``u``; zero for ``u <= 0``.  Gaussian factors are
    evaluated in log space and become exact zeros below ``exp(-700)``.
    """
    u_arr = np.asarray(u, dtype=float)
    log_g1, weight1, log_g2, weight2 = _kernel_pieces(v, u_arr, params)
    out = np.where(log_g1 > _LOG_FLOOR, np.exp(np.maximum(log_g1, _LOG_FLOOR)), 0.0) * weight1
    out = out + np.where(log_g2 > _LOG_FLOOR, np.exp(np.maximum(log_g2, _LOG_FLOOR)), 0.0) * weight2
    out = np.where(u_arr > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def kernel_K(v: float, u, params: TwoMassParams):
    """Symmetric kernel ``K(v, u) = kappa(v, u) / stationary_density(u)``.

    Satisfies ``K(v, u) == K(u, v)`` (detailed balance).  Each piece is
    evaluated as ``exp(log kappa-piece - log rho + log weight)`` so the
    ratio stays finite where both factors underflow and as ``u -> 0``.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0):
        raise ValueError("u must be positive")
    log_g1, weight1, log_g2, weight2 = _kernel_pieces(v, u_arr, params)
    sig = params.sigma
    log_rho = np.log(u_arr) - np.square(u_arr) / (2.0 * sig * sig) - 2.0 * math.log(sig)
    with np.errstate(divide="ignore"):
        lw1 = np.log(weight1)
        lw2 = np.log(weight2)
    out = np.exp(np.maximum(log_g1 - log_rho + lw1, _LOG_FLOOR))
    out = out + np.exp(np.maximum(log_g2 - log_rho + lw2, _LOG_FLOOR))
    out = np.where(out <= math.exp(_LOG_FLOOR + 1.0), 0.0, out)
    return float(out) if out.ndim == 0 else out
