"""Specular scattering off one periodic cell of a piecewise linear wall.

A cell is one period of the wall relief: a piecewise linear graph over
z in [0, 1], extended periodically, with the vacuum side above.  A unit
speed particle enters through the horizontal line just above the highest
vertex, reflects specularly off the contour, and eventually re-crosses
that line moving outward.  The induced map from incoming to outgoing
angle (measured from the inward normal, which points straight down) is
the scattering map; entering at a uniformly random abscissa turns it
into a Markov chain on (-pi/2, pi/2) whose stationary law is the cosine
law half cos(theta) regardless of the cell shape.

The rotating-dumbbell wall reduces to the same setting: its shape is the
two-arc contour of dumbbell_cell, and the unoriented axis angle on
(0, pi) rides on the signed chain through a double cover.
"""

import csv
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericError, SimulationError
from .spectra import DiscretizedOperator, GridSpec, discretize_rows
from .stats import RandomStream

logger = logging.getLogger(__name__)

ENTRY_MARGIN = 1e-9

_CORNER_TOL = 1e-12
_MIN_ADVANCE = 1e-12
_EVENT_CAP = 10**4
_RETRY_CAP = 64
_CHUNK = 1 << 14


@dataclass(frozen=True)
class BilliardCell:
    """One period of a piecewise linear wall contour.

    vertices runs left to right across the period: z strictly increasing
    from 0 to 1, y >= 0 everywhere, and the first and last y equal so the
    periodic continuation has no jump.  The entry line used by the
    scattering map sits at depth + ENTRY_MARGIN.
    """

    vertices: tuple

    def __post_init__(self) -> None:
        verts = tuple((float(z), float(y)) for z, y in self.vertices)
        if len(verts) < 2:
            raise ValueError("a cell needs at least two vertices")
        z = np.array([p[0] for p in verts])
        y = np.array([p[1] for p in verts])
        if abs(z[0]) > 1e-12 or abs(z[-1] - 1.0) > 1e-12:
            raise ValueError("vertex z must run from 0 to 1")
        if np.any(np.diff(z) <= 0):
            raise ValueError("vertex z must be strictly increasing")
        if np.any(y < 0):
            raise ValueError("vertex y must be nonnegative")
        if y[0] != y[-1]:
            raise ValueError("first and last vertex must share y")
        verts = ((0.0, float(y[0])),) + verts[1:-1] + ((1.0, float(y[-1])),)
        object.__setattr__(self, "vertices", verts)

    @property
    def depth(self) -> float:
        return max(p[1] for p in self.vertices)


@dataclass(frozen=True)
class ScatterState:
    """Incoming angle to the inward normal plus the entry abscissa."""

    theta: float
    entry_x: float

    def __post_init__(self) -> None:
        if not abs(self.theta) < math.pi / 2:
            raise ValueError("theta must lie strictly inside (-pi/2, pi/2)")
        if not 0.0 <= self.entry_x < 1.0:
            raise ValueError("entry_x must lie in [0, 1)")


def dumbbell_cell(gamma: float, segments_per_arc: int = 64) -> BilliardCell:
    """Reduced contour cell of a wall of rotating dumbbells.

    The contour is y = max(-gamma sin(2 pi z), sin(2 pi z)/gamma)/(2 pi):
    one arc of height 1/(2 pi gamma) on [0, 1/2] and one of height
    gamma/(2 pi) on [1/2, 1], each sampled with segments_per_arc chords.
    gamma is the square root of the dumbbell's mass ratio.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    spa = int(segments_per_arc)
    if spa < 16:
        raise ValueError("segments_per_arc must be at least 16")
    verts = []
    for j in range(2 * spa + 1):
        z = j / (2 * spa)
        if j in (0, spa, 2 * spa):
            yv = 0.0
        elif j < spa:
            yv = math.sin(math.pi * j / spa) / (2.0 * math.pi * gamma)
        else:
            yv = gamma * math.sin(math.pi * (j - spa) / spa) / (2.0 * math.pi)
        verts.append((z, yv))
    return BilliardCell(tuple(verts))


@lru_cache(maxsize=64)
def _geometry(cell: BilliardCell):
    """Per-segment arrays: endpoints, slope, unit upward normal, entry height."""
    v = np.array(cell.vertices)
    z0, y0 = v[:-1, 0].copy(), v[:-1, 1].copy()
    z1 = v[1:, 0].copy()
    slope = (v[1:, 1] - y0) / (z1 - z0)
    norm = np.sqrt(1.0 + slope * slope)
    return z0, z1, y0, slope, -slope / norm, 1.0 / norm, cell.depth + ENTRY_MARGIN


def _trace_chunk(geo, th, x0, o_theta, o_x, o_b) -> None:
    z0, z1, ys0, slope, nx, ny, ye = geo
    m = th.size
    w = x0.copy()
    y = np.full(m, ye)
    vx = np.sin(th)
    vy = -np.cos(th)
    bounces = np.zeros(m, dtype=np.int64)
    events = np.zeros(m, dtype=np.int64)
    retries = np.zeros(m, dtype=np.int64)
    act = np.arange(m)
    while act.size:
        aw, ay = w[act], y[act]
        avx, avy = vx[act], vy[act]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_exit = np.where(avy > 0, (ye - ay) / avy, np.inf)
            t_win = np.where(
                avx > 0,
                (1.0 - aw) / avx,
                np.where(avx < 0, -aw / avx, np.inf),
            )
            denom = avy[:, None] - slope[None, :] * avx[:, None]
            t_seg = (
                ys0[None, :] - ay[:, None] + slope[None, :] * (aw[:, None] - z0[None, :])
            ) / denom
            zhit = aw[:, None] + avx[:, None] * t_seg
            ok = (
                np.isfinite(t_seg)
                & (t_seg > _MIN_ADVANCE)
                & (zhit >= z0[None, :] - _CORNER_TOL)
                & (zhit <= z1[None, :] + _CORNER_TOL)
            )
        t_seg = np.where(ok, t_seg, np.inf)
        s_hit = np.argmin(t_seg, axis=1)
        t_hit = t_seg[np.arange(act.size), s_hit]
        t_star = np.minimum(np.minimum(t_hit, t_exit), t_win)
        if not np.all(np.isfinite(t_star)):
            raise SimulationError("a ray found no next event inside the cell")
        events[act] += 1
        if np.any(events[act] > _EVENT_CAP):
            raise SimulationError(f"scatter exceeded the {_EVENT_CAP} event cap")
        is_hit = t_hit <= t_star
        is_exit = ~is_hit & (t_exit <= t_win)
        is_win = ~is_hit & ~is_exit
        if np.any(is_exit):
            idx = act[is_exit]
            o_theta[idx] = np.arctan2(vx[idx], vy[idx])
            o_x[idx] = (w[idx] + vx[idx] * t_exit[is_exit]) % 1.0
            o_b[idx] = bounces[idx]
        if np.any(is_win):
            idx = act[is_win]
            y[idx] += vy[idx] * t_win[is_win]
            w[idx] = np.where(vx[idx] > 0, 0.0, 1.0)
        if np.any(is_hit):
            idx = act[is_hit]
            thit = t_hit[is_hit]
            seg = s_hit[is_hit]
            wh = w[idx] + vx[idx] * thit
            yh = y[idx] + vy[idx] * thit
            near = (np.abs(wh - z0[seg]) <= _CORNER_TOL) | (
                np.abs(z1[seg] - wh) <= _CORNER_TOL
            )
            cid = idx[near]
            if cid.size:
                retries[cid] += 1
                if np.any(retries[cid] > _RETRY_CAP):
                    raise SimulationError("corner retries exhausted")
                logger.info(
                    "corner hit for %d ray(s); retrying with nudged entry", cid.size
                )
                w[cid] = (x0[cid] + retries[cid] * 1e-9) % 1.0
                y[cid] = ye
                vx[cid] = np.sin(th[cid])
                vy[cid] = -np.cos(th[cid])
                bounces[cid] = 0
                events[cid] = 0
            hid = idx[~near]
            if hid.size:
                sg = seg[~near]
                w[hid] = wh[~near]
                y[hid] = yh[~near]
                d = vx[hid] * nx[sg] + vy[hid] * ny[sg]
                vx[hid] -= 2.0 * d * nx[sg]
                vy[hid] -= 2.0 * d * ny[sg]
                speed = np.hypot(vx[hid], vy[hid])
                if np.any(np.abs(speed - 1.0) > 1e-12):
                    raise NumericError("reflection broke unit speed beyond 1e-12")
                vx[hid] /= speed
                vy[hid] /= speed
                bounces[hid] += 1
        act = act[~is_exit]


def _trace_batch(cell: BilliardCell, thetas, entry_xs):
    th = np.asarray(thetas, dtype=float).ravel()
    x0 = np.asarray(entry_xs, dtype=float).ravel()
    if th.size != x0.size:
        raise ValueError("thetas and entry_xs must have matching lengths")
    if not np.all(np.abs(th) < math.pi / 2):
        raise ValueError("theta must lie strictly inside (-pi/2, pi/2)")
    if np.any((x0 < 0.0) | (x0 >= 1.0)):
        raise ValueError("entry_x must lie in [0, 1)")
    geo = _geometry(cell)
    n = th.size
    o_theta = np.empty(n)
    o_x = np.empty(n)
    o_b = np.zeros(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, n))
        _trace_chunk(geo, th[sl], x0[sl], o_theta[sl], o_x[sl], o_b[sl])
    return o_theta, o_x, o_b


def trace(cell: BilliardCell, theta_in: float, entry_x: float):
    """Full scattering record: (theta_out, exit_x, reflection count)."""
    state = ScatterState(float(theta_in), float(entry_x))
    t, x, b = _trace_batch(cell, [state.theta], [state.entry_x])
    return float(t[0]), float(x[0]), int(b[0])


def scatter(cell: BilliardCell, theta_in: float, entry_x: float) -> float:
    """Outgoing angle of the deterministic scattering map."""
    return trace(cell, theta_in, entry_x)[0]


def scatter_many(cell: BilliardCell, thetas, entry_xs) -> np.ndarray:
    """Vectorized scatter over matched arrays of angles and entry points."""
    return _trace_batch(cell, thetas, entry_xs)[0]


def random_scatter(cell: BilliardCell, theta: float, stream: RandomStream) -> float:
    """One step of the random scattering chain: uniform entry abscissa."""
    return float(random_scatter_many(cell, [theta], stream)[0])


def random_scatter_many(cell: BilliardCell, thetas, stream: RandomStream) -> np.ndarray:
    th = np.asarray(thetas, dtype=float).ravel()
    return scatter_many(cell, th, stream.uniforms(th.size))


def random_scatter_axis(cell: BilliardCell, theta: float, stream: RandomStream) -> float:
    """One step of the unoriented-axis chain on (0, pi).

    The axis angle has stationary density sin(theta)/2.  Its sine couples
    it to the signed chain: u = sin(theta) enters as a signed angle
    +/- arccos(u) with a fair sign, scatters, and the outgoing cosine
    lifts back through a fair choice of its two axis-angle preimages.
    """
    return float(random_scatter_axis_many(cell, [theta], stream)[0])


def random_scatter_axis_many(
    cell: BilliardCell, thetas, stream: RandomStream
) -> np.ndarray:
    th = np.asarray(thetas, dtype=float).ravel()
    if np.any((th <= 0.0) | (th >= math.pi)) or not np.all(np.isfinite(th)):
        raise ValueError("axis angles must lie strictly inside (0, pi)")
    sign_in = np.where(stream.uniforms(th.size) < 0.5, -1.0, 1.0)
    phi = sign_in * np.arccos(np.sin(th))
    phi_out = scatter_many(cell, phi, stream.uniforms(th.size))
    base = np.arcsin(np.clip(np.cos(phi_out), -1.0, 1.0))
    return np.where(stream.uniforms(th.size) < 0.5, math.pi - base, base)


def estimate_cell_operator(
    cell: BilliardCell,
    grid: GridSpec,
    samples_per_node: int,
    stream: RandomStream,
    angle_domain: str = "signed",
) -> DiscretizedOperator:
    """Monte Carlo transition operator of the random scattering chain.

    angle_domain "signed" uses the oriented angle on (-pi/2, pi/2) with
    the cosine stationary law; "axis" uses the unoriented axis angle on
    (0, pi) with stationary density sin/2, the natural coordinate for the
    dumbbell wall.  The grid must sit inside the chosen domain.
    """
    half = math.pi / 2
    tol = 1e-9
    if angle_domain == "signed":
        if grid.lo < -half - tol or grid.v_max > half + tol:
            raise ValueError("signed-angle grid must sit inside (-pi/2, pi/2)")

        def density(th):
            return 0.5 * np.cos(th)

        def rows(node, count, fork):
            return random_scatter_many(cell, np.full(count, node), fork)

    elif angle_domain == "axis":
        if grid.lo < -tol or grid.v_max > math.pi + tol:
            raise ValueError("axis-angle grid must sit inside (0, pi)")

        def density(th):
            return 0.5 * np.sin(th)

        def rows(node, count, fork):
            return random_scatter_axis_many(cell, np.full(count, node), fork)

    else:
        raise ValueError("angle_domain must be 'signed' or 'axis'")
    return discretize_rows(rows, density, grid, samples_per_node, stream)


def read_cell_csv(path) -> BilliardCell:
    """Load a cell from a CSV of z,y vertex rows (header required)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if not rows or [f.strip().lower() for f in rows[0][:2]] != ["z", "y"]:
        raise ValueError("cell file must start with a z,y header row")
    verts = []
    for r in rows[1:]:
        if len(r) != 2:
            raise ValueError(f"bad vertex row: {r!r}")
        verts.append((float(r[0]), float(r[1])))
    return BilliardCell(tuple(verts))


def write_cell_csv(cell: BilliardCell, path) -> None:
    """Write a cell's vertices as a z,y CSV with full precision."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["z", "y"])
        for z, y in cell.vertices:
            wr.writerow([f"{z:.17g}", f"{y:.17g}"])
