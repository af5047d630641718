"""Finite-rank approximation of the wall-collision Markov operator.

The operator acts on observables of the molecule speed.  It is discretized
on a quadrature grid over (0, v_max) either from a closed-form kernel
(Nystrom) or from Monte Carlo one-step histograms, and its spectrum is
extracted from a symmetrized matrix so that eigenvalues are guaranteed
real and inside [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericError
from .stats import EmpiricalDistribution, RandomStream

_RULES = ("midpoint", "gauss_legendre")


@dataclass(frozen=True)
class GridSpec:
    """Quadrature grid over the interval (lo, v_max), by default speeds (0, v_max)."""

    n: int
    v_max: float
    rule: str = "midpoint"
    lo: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not (self.v_max > self.lo):
            raise ValueError("v_max must exceed the lower end of the grid")
        if self.rule not in _RULES:
            raise ValueError(f"rule must be one of {_RULES}")

    def nodes_and_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes in (lo, v_max) and positive Lebesgue quadrature weights."""
        n = int(self.n)
        if self.rule == "midpoint":
            h = (self.v_max - self.lo) / n
            nodes = self.lo + (np.arange(n) + 0.5) * h
            weights = np.full(n, h)
        else:
            x, w = np.polynomial.legendre.leggauss(n)
            half = 0.5 * (self.v_max - self.lo)
            nodes = self.lo + half * (x + 1.0)
            weights = half * w
        return nodes, weights

    def cell_edges(self) -> np.ndarray:
        """Edges of the cells used for histogram rows and measure output.

        Midpoint cells are the uniform partition; for other rules the
        cells are the Voronoi intervals of the nodes.
        """
        nodes, _ = self.nodes_and_weights()
        if self.rule == "midpoint":
            return np.linspace(self.lo, self.v_max, int(self.n) + 1)
        inner = 0.5 * (nodes[1:] + nodes[:-1])
        return np.concatenate(([self.lo], inner, [self.v_max]))


@dataclass(frozen=True)
class DiscretizedOperator:
    """Matrix of mu-relative kernel values K(node_i, node_j) on a grid.

    mu_weights are the quadrature masses of the stationary measure at the
    nodes, renormalized to sum 1.  Row-stochasticity in the mu-weighted
    sense (sum_j matrix[i, j] * mu_weights[j] ~= 1) holds up to truncation
    and quadrature error.
    """

    nodes: np.ndarray
    mu_weights: np.ndarray
    matrix: np.ndarray
    grid: GridSpec
    spill_fraction: float = 0.0

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.mu_weights, dtype=float)
        m = np.asarray(self.matrix, dtype=float)
        if nodes.ndim != 1 or w.shape != nodes.shape:
            raise ValueError("nodes and mu_weights must be equal-length 1-d")
        if m.shape != (nodes.size, nodes.size):
            raise ValueError("matrix must be n x n")
        if not np.all(w > 0):
            raise ValueError("mu_weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "mu_weights", w)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.nodes.size

    def row_mass(self) -> np.ndarray:
        """sum_j matrix[i, j] * mu_weights[j], ideally all ones."""
        return self.matrix @ self.mu_weights

    def cell_edges(self) -> np.ndarray:
        return self.grid.cell_edges()

    def stationary_masses(self) -> np.ndarray:
        """Exact fixed measure of the normalized evolution operator."""
        _, _, chi = _normalized_symmetric(self)
        pi = chi * chi
        return pi / pi.sum()


@dataclass(frozen=True)
class SpectrumResult:
    """Top eigenvalues of the symmetrized operator, sorted descending."""

    eigenvalues: np.ndarray
    gap: float
    eigenfunctions: np.ndarray | None = None
    eigendensities: np.ndarray | None = None
    negative_tail: float = 0.0


def _mu_weights(density, nodes: np.ndarray, leb: np.ndarray) -> np.ndarray:
    dens = np.broadcast_to(np.asarray(density(nodes), dtype=float), nodes.shape)
    if not np.all(np.isfinite(dens)) or np.any(dens < 0):
        raise NumericError("density must be finite and nonnegative on the grid")
    w = dens * leb
    total = w.sum()
    if not (total > 0):
        raise NumericError("density integrates to zero on the grid")
    return w / total


def _kernel_matrix(kernel, nodes: np.ndarray) -> np.ndarray:
    n = nodes.size
    m = np.empty((n, n))
    for i, v in enumerate(nodes):
        row = np.broadcast_to(np.asarray(kernel(v, nodes), dtype=float), (n,))
        m[i] = row
    bad = ~np.isfinite(m)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NumericError(f"non-finite kernel value at nodes ({i}, {j})")
    if np.any(m < 0):
        i, j = np.argwhere(m < 0)[0]
        raise NumericError(f"negative kernel value at nodes ({i}, {j})")
    return m


def discretize_nystrom(kernel, density, grid: GridSpec) -> DiscretizedOperator:
    """Quadrature discretization: matrix[i, j] = K(node_i, node_j).

    kernel(v, u) is the stationary-measure-relative transition kernel and
    density(v) the stationary speed density; both may be vectorized in
    their array argument or return scalars.
    """
    nodes, leb = grid.nodes_and_weights()
    w = _mu_weights(density, nodes, leb)
    matrix = _kernel_matrix(kernel, nodes)
    return DiscretizedOperator(nodes, w, matrix, grid)


def discretize_rows(
    row_sampler,
    density,
    grid: GridSpec,
    samples_per_node: int,
    stream: RandomStream,
) -> DiscretizedOperator:
    """Monte Carlo discretization from per-node batches of one-step draws.

    Row i bins row_sampler(node_i, samples_per_node, stream.fork(i)) into
    the grid cells and converts the cell frequencies to mu-relative kernel
    estimates.  Samples outside the grid land in the nearest end cell;
    their overall fraction is reported as spill_fraction.
    """
    samples_per_node = int(samples_per_node)
    if samples_per_node < 10**3:
        raise ValueError("samples_per_node must be at least 1000")
    nodes, leb = grid.nodes_and_weights()
    w = _mu_weights(density, nodes, leb)
    edges = grid.cell_edges()
    n = nodes.size
    counts = np.empty((n, n))
    spilled = 0
    for i, v in enumerate(nodes):
        fork = stream.fork(i)
        out = np.asarray(row_sampler(float(v), samples_per_node, fork), dtype=float)
        if out.shape != (samples_per_node,):
            raise NumericError(f"row sampler returned a bad batch at node {i}")
        if not np.all(np.isfinite(out)):
            raise NumericError(f"step returned a non-finite value at node {i}")
        spilled += int(np.count_nonzero((out > edges[-1]) | (out < edges[0])))
        counts[i] = np.histogram(np.clip(out, edges[0], edges[-1]), bins=edges)[0]
    probs = counts / samples_per_node
    matrix = probs / w[None, :]
    spill = spilled / (n * samples_per_node)
    return DiscretizedOperator(nodes, w, matrix, grid, spill_fraction=spill)


def discretize_mc(
    step,
    density,
    grid: GridSpec,
    samples_per_node: int,
    stream: RandomStream,
) -> DiscretizedOperator:
    """Monte Carlo discretization from one-step simulation histograms.

    Row i collects samples_per_node draws of step(node_i, stream) into the
    grid cells and converts the cell frequencies to mu-relative kernel
    estimates.  Samples above v_max land in the last cell; their overall
    fraction is reported as spill_fraction.
    """

    def rows(v: float, count: int, fork: RandomStream) -> np.ndarray:
        return np.array([step(v, fork) for _ in range(count)])

    return discretize_rows(rows, density, grid, samples_per_node, stream)


def _normalized_symmetric(
    op: DiscretizedOperator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Symmetrized, symmetrically normalized matrix S with S chi = chi.

    S = sym(D^1/2 M D^1/2) rescaled by 1/sqrt(t_i t_j) where t is the
    generalized row sum against psi = sqrt(mu_weights).  The rescaled S is
    nonnegative symmetric with positive eigenvector chi = psi sqrt(t) at
    eigenvalue exactly 1, so 1 is its spectral radius and every eigenvalue
    lies in [-1, 1] regardless of quadrature or sampling noise.
    """
    w = op.mu_weights
    psi = np.sqrt(w)
    a = psi[:, None] * op.matrix * psi[None, :]
    s = 0.5 * (a + a.T)
    t = (s @ psi) / psi
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise NumericError("operator has an unreachable node (zero row mass)")
    s /= np.sqrt(np.outer(t, t))
    s = 0.5 * (s + s.T)
    chi = psi * np.sqrt(t)
    return s, t, chi


def spectrum(op: DiscretizedOperator, k: int) -> SpectrumResult:
    """Top-k eigenvalues and eigenvectors of the symmetrized operator.

    Eigenfunctions are the operator's observable-side eigenvectors;
    eigendensities are eigenfunction times the stationary node masses,
    i.e. the node masses of the corresponding eigenmeasure.
    """
    k = int(k)
    if not 1 <= k <= op.n:
        raise ValueError("k must be between 1 and the grid size")
    s, _, chi = _normalized_symmetric(op)
    try:
        vals, vecs = scipy.linalg.eigh(s)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    gap = 1.0 - vals[1] if op.n > 1 else float("nan")
    negative_tail = max(0.0, -float(vals[-1]))
    funcs = vecs[:, :k] / chi[:, None]
    dens = vecs[:, :k] * chi[:, None]
    # fix signs so the largest-magnitude entry of each eigenfunction is positive
    for j in range(k):
        lead = np.argmax(np.abs(funcs[:, j]))
        if funcs[lead, j] < 0:
            funcs[:, j] = -funcs[:, j]
            dens[:, j] = -dens[:, j]
    return SpectrumResult(
        eigenvalues=vals[:k],
        gap=float(gap),
        eigenfunctions=funcs,
        eigendensities=dens,
        negative_tail=negative_tail,
    )


def gap_scan(system, gammas) -> list[tuple[float, float]]:
    """Spectral gap for each parameter value; system(gamma) -> operator."""
    out = []
    for gamma in gammas:
        op = system(gamma)
        out.append((float(gamma), spectrum(op, k=2).gap))
    return out


def hs_norm(kernel, density, grid: GridSpec) -> float:
    """Hilbert-Schmidt norm sqrt(sum K(v_i, u_j)^2 mu_i mu_j)."""
    nodes, leb = grid.nodes_and_weights()
    w = _mu_weights(density, nodes, leb)
    matrix = _kernel_matrix(kernel, nodes)
    value = float(np.sqrt(np.einsum("ij,i,j->", matrix**2, w, w)))
    if not np.isfinite(value):
        raise NumericError("Hilbert-Schmidt norm is not finite")
    return value


def _initial_node_masses(
    op: DiscretizedOperator, initial: EmpiricalDistribution
) -> np.ndarray:
    """Project a histogram law onto the operator's grid cells."""
    cdf_x = initial.edges
    cdf_y = np.concatenate(([0.0], np.cumsum(initial.masses)))
    edges = op.cell_edges()
    outside = cdf_y[-1] - (
        np.interp(edges[-1], cdf_x, cdf_y) - np.interp(edges[0], cdf_x, cdf_y)
    )
    if outside > 1e-9:
        raise ValueError("initial law has mass outside the grid range")
    masses = np.diff(np.interp(edges, cdf_x, cdf_y))
    total = masses.sum()
    if not (total > 0):
        raise ValueError("initial law has no mass on the grid")
    return masses / total


def evolve_density(
    op: DiscretizedOperator,
    initial: EmpiricalDistribution,
    checkpoints,
) -> list[EmpiricalDistribution]:
    """Push the initial law through n steps for each checkpoint n.

    The evolution uses the exactly mass-preserving operator similar to the
    normalized symmetric matrix, so the measure returned for a checkpoint
    is a probability law on the operator's grid cells and the reported
    spectral gap is exactly its contraction rate.
    """
    steps = [int(c) for c in checkpoints]
    if any(c < 0 for c in steps):
        raise ValueError("checkpoints must be nonnegative")
    s, _, chi = _normalized_symmetric(op)
    # transition(i, j) = S_ij chi_j / chi_i is row-stochastic; measures
    # evolve by m <- m @ transition
    transition = s * (chi[None, :] / chi[:, None])
    edges = op.cell_edges()
    m = _initial_node_masses(op, initial)
    results: dict[int, EmpiricalDistribution] = {}
    done = 0
    for target in sorted(set(steps)):
        for _ in range(target - done):
            m = m @ transition
        done = target
        results[target] = EmpiricalDistribution(edges.copy(), m.copy())
    return [results[c] for c in steps]
