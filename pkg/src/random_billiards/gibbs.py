"""Thermal sampling of wall states and the spring-mass collision chain.

A molecule-wall collision is simulated by refreshing the wall half of the
system from a Gibbs ensemble: draw an energy from an exponential law, draw
a configuration on the accessible sublevel set with a power of the local
speed as density, pick an isotropic direction, and fix the speed by energy
conservation.  The same machinery with a different density exponent and a
cosine-weighted direction produces equilibrium molecule states.

Potentials are per unit mass, so a state with configuration q and speed
h carries energy h^2/2 + U(q).  Potential callables must broadcast over
numpy arrays of shape (..., m).

The spring-mass system (one bound mass on a linear spring, struck by a
free mass) instantiates the wall description in scaled coordinates where
both degrees of freedom carry the total mass and collisions are specular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError, SimulationError
from .stats import RandomStream, sample_cosine_direction, sample_gaussian

_TINY_UNIFORM = 1e-300
_ACCEPT_FLOOR = 1e-6
_EVENT_CAP = 10**6


@dataclass(frozen=True)
class GibbsSystemSpec:
    """One side of the molecule-wall system: dimension, potential, box, beta.

    ``potential`` maps arrays of shape (..., dim_wall) to per-unit-mass
    potential values of shape (...) and must be bounded below on the
    domain.  Degenerate axes (low == high) describe point components.
    """

    dim_wall: int
    potential: Callable[[np.ndarray], np.ndarray]
    domain: tuple[tuple[float, float], ...]
    beta: float

    def __post_init__(self):
        if int(self.dim_wall) != self.dim_wall or self.dim_wall < 1:
            raise ValueError("dim_wall must be an integer >= 1")
        object.__setattr__(self, "dim_wall", int(self.dim_wall))
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(dom) != self.dim_wall:
            raise ValueError("domain needs one (low, high) pair per coordinate")
        for lo, hi in dom:
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError("domain bounds must be finite with low <= high")
        object.__setattr__(self, "domain", dom)
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def potential_at(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.asarray(self.potential(points), dtype=float)


@dataclass(frozen=True)
class SpringMassParams:
    """Bound mass m1 on a spring of stiffness k, free mass m2, zone length l."""

    m1: float = 10.0
    m2: float = 1.0
    k: float = 5.0
    l: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("m1", "m2", "k", "l", "beta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def total_mass(self) -> float:
        return self.m1 + self.m2

    @property
    def omega(self) -> float:
        """Angular frequency of the bound mass in scaled coordinates."""
        return math.sqrt(self.k / self.m1)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def half_width(self) -> float:
        """Scaled turning wall position: the bound coordinate lives in [-c, c]."""
        return 0.5 * self.l * math.sqrt(self.m1 / self.total_mass)

    @property
    def slope(self) -> float:
        """Slope of the collision diagonal in scaled coordinates."""
        return math.sqrt(self.m2 / self.m1)

    @property
    def exit_height(self) -> float:
        """Scaled molecule coordinate of the zone entry line."""
        return self.l * math.sqrt(self.m2 / self.total_mass)

    @property
    def speed_scale(self) -> float:
        """Scaled molecule speed per unit of physical molecule speed."""
        return math.sqrt(self.m2 / self.total_mass)


def spring_wall_spec(params: SpringMassParams) -> GibbsSystemSpec:
    """The spring wall as a generic one-dimensional Gibbs system.

    Scaled coordinates carry the total mass, so the per-unit-mass
    potential is omega^2 x^2 / 2 and the effective inverse temperature
    picks up a factor of the total mass.
    """
    omega2 = params.k / params.m1
    c = params.half_width
    return GibbsSystemSpec(
        dim_wall=1,
        potential=lambda q: 0.5 * omega2 * q[..., 0] ** 2,
        domain=((-c, c),),
        beta=params.beta * params.total_mass,
    )


def point_molecule_spec(beta: float) -> GibbsSystemSpec:
    """A structureless molecule: one normal coordinate, no potential."""
    return GibbsSystemSpec(
        dim_wall=1,
        potential=lambda q: np.zeros(q.shape[:-1]),
        domain=((0.0, 0.0),),
        beta=beta,
    )


def h_energy(energy: float, potential_value: float) -> float:
    """Speed sqrt(2(E - u)) of a unit-mass state, zero where E <= u."""
    if energy > potential_value:
        return math.sqrt(2.0 * (energy - potential_value))
    return 0.0


def sample_energy(beta: float, stream: RandomStream) -> float:
    """Exponential energy draw, E = -ln(U)/beta."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    u = max(stream.uniform(), _TINY_UNIFORM)
    return -math.log(u) / beta


def _sample_positions_interval(energy, spec, exponent, stream, size):
    """Positions on a 1-d sublevel set, density (2(E-U))^(exponent/2).

    Negative exponents have integrable turning-point singularities, so the
    draw happens in the angle variable x = mid + w sin(phi), where the
    density is bounded whenever the turning points are simple.
    """
    lo, hi = spec.domain[0]
    if lo == hi:
        raise ValueError("interval sampling needs a nondegenerate domain")
    grid = np.linspace(lo, hi, 2049)
    ug = spec.potential_at(grid[:, None])
    below = ug < energy
    if not below.any():
        raise ValueError("sublevel set is empty at this energy")
    if ug.max() - ug.min() <= 1e-14 * max(1.0, abs(ug.max())):
        # constant potential: the position law is uniform for any exponent
        return lo + (hi - lo) * stream.uniforms(size)

    def crossing(a, b):
        # U(a) < E <= U(b) or vice versa; bisect U - E to the boundary
        fa = spec.potential_at(np.array([[a]]))[0] - energy
        for _ in range(80):
            mid = 0.5 * (a + b)
            fm = spec.potential_at(np.array([[mid]]))[0] - energy
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        return 0.5 * (a + b)

    components = []
    i = 0
    n = below.size
    while i < n:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and below[j + 1]:
            j += 1
        left = grid[i] if i == 0 else crossing(grid[i], grid[i - 1])
        right = grid[j] if j == n - 1 else crossing(grid[j], grid[j + 1])
        if right > left:
            components.append((left, right))
        i = j + 1
    if not components:
        raise ValueError("sublevel set is empty at this energy")

    mids = np.array([0.5 * (a + b) for a, b in components])
    widths = np.array([0.5 * (b - a) for a, b in components])
    phi_grid = np.linspace(-np.pi / 2, np.pi / 2, 513)[1:-1]

    def density(comp_idx, phi):
        x = mids[comp_idx] + widths[comp_idx] * np.sin(phi)
        gap = energy - spec.potential_at(x[:, None])
        val = np.zeros_like(phi)
        pos = gap > 0
        val[pos] = (
            widths[comp_idx][pos]
            * np.cos(phi[pos])
            * (2.0 * gap[pos]) ** (exponent / 2.0)
        )
        return val

    n_comp = len(components)
    idx_all = np.repeat(np.arange(n_comp), phi_grid.size)
    dens_grid = density(idx_all, np.tile(phi_grid, n_comp)).reshape(
        n_comp, phi_grid.size
    )
    if not np.all(np.isfinite(dens_grid)):
        raise NumericError("position density is unbounded (degenerate turning point)")
    caps = 1.2 * dens_grid.max(axis=1)
    if not caps.max() > 0:
        raise ValueError("sublevel set is empty at this energy")
    caps = np.maximum(caps, 1e-12 * caps.max())

    for _ in range(8):
        out = np.empty(size)
        filled = 0
        trials = 0
        violated = False
        cum = np.cumsum(caps) / caps.sum()
        while filled < size:
            batch = min(max(64, 4 * (size - filled)), 1 << 20)
            comp = np.searchsorted(cum, stream.uniforms(batch))
            phi = np.pi * (stream.uniforms(batch) - 0.5)
            vals = density(comp, phi)
            if np.any(vals > caps[comp]):
                # envelope too small; inflate and redo the whole draw
                caps = caps * 2.0
                violated = True
                break
            keep = stream.uniforms(batch) * caps[comp] < vals
            got = np.flatnonzero(keep)[: size - filled]
            out[filled : filled + got.size] = (
                mids[comp[got]] + widths[comp[got]] * np.sin(phi[got])
            )
            filled += got.size
            trials += batch
            if trials > 10**6 and filled < _ACCEPT_FLOOR * trials:
                raise NumericError("rejection acceptance below 1e-6")
        if not violated:
            return out
    raise NumericError("could not establish a rejection envelope")


def _sample_positions_box(energy, spec, exponent, stream, size):
    """Rejection sampling of (2(E-U))^(exponent/2) on the domain box."""
    los = np.array([lo for lo, _ in spec.domain])
    his = np.array([hi for _, hi in spec.domain])
    m = spec.dim_wall
    n_axis = max(2, min(512, int(math.ceil(2e5 ** (1.0 / m)))))
    axes = [np.linspace(lo, hi, n_axis) if hi > lo else np.array([lo])
            for lo, hi in spec.domain]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    gap = energy - spec.potential_at(mesh)
    dens_grid = np.where(gap > 0, (2.0 * np.maximum(gap, 0.0)) ** (exponent / 2.0), 0.0)
    if not dens_grid.max() > 0:
        raise ValueError("sublevel set is empty at this energy")
    cap = 1.0 if exponent == 0 else 1.2 * dens_grid.max()

    for _ in range(8):
        out = np.empty((size, m))
        filled = 0
        trials = 0
        violated = False
        while filled < size:
            batch = min(max(64, 4 * (size - filled)), 1 << 20)
            q = los + stream.uniforms(batch * m).reshape(batch, m) * (his - los)
            gap = energy - spec.potential_at(q)
            vals = np.where(
                gap > 0, (2.0 * np.maximum(gap, 0.0)) ** (exponent / 2.0), 0.0
            )
            if np.any(vals > cap):
                cap = cap * 2.0
                violated = True
                break
            keep = stream.uniforms(batch) * cap < vals
            got = np.flatnonzero(keep)[: size - filled]
            out[filled : filled + got.size] = q[got]
            filled += got.size
            trials += batch
            if trials > 10**6 and filled < _ACCEPT_FLOOR * trials:
                raise NumericError("rejection acceptance below 1e-6")
        if not violated:
            return out
    raise NumericError("could not establish a rejection envelope")


def sample_wall_position(
    energy: float,
    spec: GibbsSystemSpec,
    stream: RandomStream,
    size: int | None = None,
    exponent: int | None = None,
):
    """Configuration draw with density proportional to h_E^(m-2).

    The exponent defaults to dim_wall - 2 and is exposed so the molecule
    variant (m - 1) and the wall variant can share one implementation.
    Negative exponents are supported in one dimension only.
    """
    if exponent is None:
        exponent = spec.dim_wall - 2
    one = size is None
    n = 1 if one else int(size)
    if n < 0:
        raise ValueError("size must be nonnegative")
    if exponent < 0:
        if spec.dim_wall != 1:
            raise ValueError("negative density exponents need dim_wall == 1")
        lo, hi = spec.domain[0]
        if lo == hi:
            raise ValueError("sublevel set is empty at this energy")
        out = _sample_positions_interval(energy, spec, exponent, stream, n)[:, None]
    else:
        out = _sample_positions_box(energy, spec, exponent, stream, n)
    return out[0] if one else out


def _uniform_sphere(stream: RandomStream, m: int) -> np.ndarray:
    if m == 1:
        return np.array([1.0 if stream.uniform() < 0.5 else -1.0])
    while True:
        g = np.asarray(sample_gaussian(stream, 0.0, 1.0, size=m))
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            return g / norm


def sample_wall_state(
    spec: GibbsSystemSpec, stream: RandomStream, size: int | None = None
):
    """Pre-collision wall state: (q, velocity) from the Gibbs ensemble.

    Energy is exponential(beta), the position has density h_E^(m-2) on
    the accessible part of the domain, the direction is uniform on the
    unit sphere (a fair sign for m = 1), and the speed is h_E(q).
    """
    one = size is None
    n = 1 if one else int(size)
    m = spec.dim_wall
    qs = np.empty((n, m))
    vs = np.empty((n, m))
    for i in range(n):
        e = sample_energy(spec.beta, stream)
        q = sample_wall_position(e, spec, stream)
        u = _uniform_sphere(stream, m)
        speed = h_energy(e, float(spec.potential_at(q[None, :])[0]))
        qs[i] = q
        vs[i] = speed * u
    return (qs[0], vs[0]) if one else (qs, vs)


def sample_stationary_molecule(
    spec: GibbsSystemSpec, stream: RandomStream, size: int | None = None
):
    """Equilibrium molecule state: (q, velocity).

    Differs from the wall draw in two ways: the position density exponent
    is m - 1, and the direction is cosine-weighted toward the interaction
    zone.  The inward normal is the last coordinate axis.  For a
    structureless molecule this reduces to the boundary Maxwell-Boltzmann
    law.
    """
    one = size is None
    n = 1 if one else int(size)
    m = spec.dim_wall
    qs = np.empty((n, m))
    vs = np.empty((n, m))
    for i in range(n):
        e = sample_energy(spec.beta, stream)
        q = sample_wall_position(e, spec, stream, exponent=m - 1)
        if m == 1:
            u = np.array([1.0])
        else:
            u = sample_cosine_direction(stream, m - 1)
        speed = h_energy(e, float(spec.potential_at(q[None, :])[0]))
        qs[i] = q
        vs[i] = speed * u
    return (qs[0], vs[0]) if one else (qs, vs)


def sample_spring_wall(
    params: SpringMassParams,
    stream: RandomStream,
    energy_draw: str = "confined",
) -> tuple[float, float, float]:
    """Scaled spring-wall state (x, x_dot) and its physical energy.

    The position draw uses the exact angle transform for the quadratic
    potential: x = A sin((2 U2 - 1) arcsin L), with A the free amplitude
    and L the clipping factor of the turning walls.

    ``energy_draw`` selects how the clipped position range feeds back
    into the energy law.  The plain exponential draw ("verbatim")
    overweights high energies once the amplitude exceeds the wall
    spacing, because the accessible arc shrinks; "confined" corrects
    this by thinning energies with the arcsin L acceptance and is the
    default, matching the stationary law of the full dynamics.
    """
    if energy_draw not in ("confined", "verbatim"):
        raise ValueError("energy_draw must be 'confined' or 'verbatim'")
    while True:
        energy = sample_energy(params.beta, stream)
        clip = min(1.0, 0.5 * params.l * math.sqrt(params.k / (2.0 * energy)))
        if energy_draw == "confined":
            if stream.uniform() > (2.0 / math.pi) * math.asin(clip):
                continue
        amplitude = math.sqrt(2.0 * energy * params.m1 / (params.total_mass * params.k))
        x = amplitude * math.sin((2.0 * stream.uniform() - 1.0) * math.asin(clip))
        h2 = 2.0 * energy / params.total_mass - (params.k / params.m1) * x * x
        speed = math.sqrt(max(h2, 0.0))
        sign = 1.0 if stream.uniform() < 0.5 else -1.0
        return x, sign * speed, energy


def _spring_position(t, x0, vx0, omega):
    return x0 * math.cos(omega * t) + (vx0 / omega) * math.sin(omega * t)


def _spring_velocity(t, x0, vx0, omega):
    return -x0 * omega * math.sin(omega * t) + vx0 * math.cos(omega * t)


def _next_wall_time(x0, vx0, omega, c):
    """First t > 0 with |x(t)| = c, for x(t) = R cos(omega t - phase)."""
    radius = math.hypot(x0, vx0 / omega)
    if radius < c:
        return math.inf
    phase = math.atan2(vx0 / omega, x0)
    period = 2.0 * math.pi / omega
    best = math.inf
    for target in (c, -c):
        if radius < abs(target):
            continue
        base = math.acos(max(-1.0, min(1.0, target / radius)))
        for branch in (base, -base):
            t = ((phase + branch) / omega) % period
            if t < 1e-13:
                t += period
            best = min(best, t)
    return best


def _spring_flight(x, vx, y, vy, params: SpringMassParams):
    """Deterministic evolution until the molecule exits; returns the state.

    Events: specular bounce off the collision diagonal, bound-mass
    reflection at the turning walls, exit through the entry line.  The
    diagonal crossing is bracketed by scanning at 1/64 of the spring
    period and resolved by bisection to 1e-12.
    """
    omega = params.omega
    c = params.half_width
    slope = params.slope
    offset = 0.5 * params.exit_height
    exit_y = params.exit_height
    dt = params.period / 64.0
    energy0 = 0.5 * params.total_mass * (
        vx * vx + vy * vy + omega * omega * x * x
    )
    for _ in range(_EVENT_CAP):
        t_exit = (exit_y - y) / vy if vy > 0 else math.inf
        t_wall = _next_wall_time(x, vx, omega, c)
        horizon = min(t_exit, t_wall)

        def gap(t):
            return y + vy * t - slope * _spring_position(t, x, vx, omega) - offset

        # the diagonal is out of reach while y + vy t - offset exceeds
        # slope * R (the largest excursion of the bound mass), so skip ahead
        # to where contact first becomes possible; once possible, the next
        # crossing, if any, lies within one spring period
        reach = slope * math.hypot(x, vx / omega)
        margin0 = y - offset - reach
        if vy >= 0 and margin0 > 0:
            t_lo = math.inf
        elif vy < 0:
            t_lo = max(0.0, margin0 / -vy)
        else:
            t_lo = 0.0
        t_diag = math.inf
        if t_lo < horizon:
            window_end = min(horizon, t_lo + 2.0 * params.period + 2.0 * dt)
            # arm only after the molecule is strictly above the diagonal so
            # a fresh bounce is not re-detected; a clearly negative sample
            # still counts unarmed, catching grazing re-hits that stay
            # within noise of the diagonal until they dive
            t_prev = t_lo
            armed = gap(t_prev) > 1e-14
            while t_prev < window_end:
                t_cur = min(t_prev + dt, window_end)
                g_cur = gap(t_cur)
                level = 0.0 if armed else -1e-13
                if (g_cur <= level if armed else g_cur < level) and t_cur > 1e-12:
                    lo, hi = t_prev, t_cur
                    for _ in range(200):
                        mid = 0.5 * (lo + hi)
                        if gap(mid) <= level:
                            hi = mid
                        else:
                            lo = mid
                        if hi - lo < 1e-12:
                            break
                    if hi - lo >= 1e-12:
                        raise NumericError(
                            "diagonal crossing did not converge: "
                            f"bracket [{lo}, {hi}], gap [{gap(lo)}, {gap(hi)}]"
                        )
                    t_diag = lo
                    break
                if g_cur > 1e-14:
                    armed = True
                t_prev = t_cur

        t_star = min(t_exit, t_wall, t_diag)
        if t_star is math.inf:
            raise NumericError("no next event found for the spring flight")
        x, vx = (
            _spring_position(t_star, x, vx, omega),
            _spring_velocity(t_star, x, vx, omega),
        )
        y = y + vy * t_star
        if t_star == t_exit:
            energy1 = 0.5 * params.total_mass * (
                vx * vx + vy * vy + omega * omega * x * x
            )
            if abs(energy1 - energy0) > 1e-8 * max(1.0, energy0):
                raise NumericError(
                    f"flight energy drifted from {energy0} to {energy1}"
                )
            return x, vx, y, vy
        if t_star == t_diag:
            # specular bounce off the diagonal, normal along (-slope, 1)
            norm = math.hypot(slope, 1.0)
            nx, ny = -slope / norm, 1.0 / norm
            dot = vx * nx + vy * ny
            vx, vy = vx - 2.0 * dot * nx, vy - 2.0 * dot * ny
        else:
            vx = -vx
    raise SimulationError("event cap exceeded in spring flight")


def spring_mass_step(
    v_old: float,
    params: SpringMassParams,
    stream: RandomStream,
    energy_draw: str = "confined",
) -> float:
    """One collision event: physical molecule speed in, speed out.

    The wall is refreshed from the Gibbs ensemble, the molecule enters
    the interaction zone at the given speed, and the coupled system
    evolves deterministically (sinusoidal bound mass, linear molecule,
    specular exchanges) until the molecule leaves the zone.
    """
    if not v_old > 0:
        raise ValueError("v_old must be positive")
    x, vx, _ = sample_spring_wall(params, stream, energy_draw)
    y = params.exit_height
    vy = -v_old * params.speed_scale
    _, _, _, vy_out = _spring_flight(x, vx, y, vy, params)
    return vy_out / params.speed_scale


def run_spring_chain(
    v0: float,
    steps: int,
    params: SpringMassParams,
    stream: RandomStream,
    energy_draw: str = "confined",
) -> np.ndarray:
    """Iterate spring_mass_step; returns the physical speeds after each step."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    out = np.empty(int(steps))
    v = float(v0)
    for i in range(int(steps)):
        v = spring_mass_step(v, params, stream, energy_draw)
        out[i] = v
    return out
