"""Figure rendering for the command-line reports.

Each function takes the same arrays a command writes as CSV and saves a
matplotlib figure.  The Agg backend is forced so rendering works in
headless runs; nothing here is needed by the numerical code.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 130


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_chain(values, path: str, ylabel: str = "speed") -> None:
    """Trace plot plus marginal histogram of a simulated chain."""
    values = np.asarray(values, dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2), width_ratios=[2, 1])
    ax1.plot(np.arange(1, values.size + 1), values, lw=0.5)
    ax1.set_xlabel("step")
    ax1.set_ylabel(ylabel)
    ax2.hist(values, bins=60, density=True, color="tab:gray")
    ax2.set_xlabel(ylabel)
    ax2.set_ylabel("density")
    _save(fig, path)


def plot_kernel(u, kappa, big_k, v: float, path: str) -> None:
    """Transition density and its symmetric version at fixed entry speed."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(u, kappa)
    ax1.set_xlabel("u")
    ax1.set_ylabel(f"kappa({v:g}, u)")
    ax2.plot(u, big_k)
    ax2.set_xlabel("u")
    ax2.set_ylabel(f"K({v:g}, u)")
    _save(fig, path)


def plot_spectrum(eigenvalues, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    vals = np.asarray(eigenvalues, dtype=float)
    ax.plot(np.arange(1, vals.size + 1), vals, ".", ms=4)
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    _save(fig, path)


def plot_gap_scan(gammas, gaps, path: str) -> None:
    """Measured gap against the small-ratio prediction 4 gamma^2."""
    gammas = np.asarray(gammas, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.loglog(gammas, gaps, "o-", label="gap")
    ax.loglog(gammas, 4.0 * gammas**2, "--", label="4 gamma^2")
    ax.set_xlabel("gamma")
    ax.set_ylabel("spectral gap")
    ax.legend()
    _save(fig, path)


def plot_evolution(checkpoints, distributions, path: str) -> None:
    """Cell densities of the evolved law at each checkpoint."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for n, dist in zip(checkpoints, distributions):
        mid = 0.5 * (dist.edges[:-1] + dist.edges[1:])
        ax.plot(mid, dist.masses / np.diff(dist.edges), label=f"n={n}")
    ax.set_xlabel("speed")
    ax.set_ylabel("density")
    ax.legend()
    _save(fig, path)


def plot_moments(z, estimates, gamma: float, path: str) -> None:
    """First moment of the one-collision speed change vs its small-gamma limit."""
    z = np.asarray(z, dtype=float)
    e1 = np.array([m.e1 for m in estimates])
    se1 = np.array([m.se1 for m in estimates])
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.errorbar(z, e1, yerr=2 * se1, fmt="o", label="E[Z - z]")
    zz = np.linspace(z.min(), z.max(), 200)
    ax.plot(zz, 2.0 * gamma**2 * (1.0 / zz - zz), "--", label="2 gamma^2 (1/z - z)")
    ax.set_xlabel("z")
    ax.set_ylabel("first moment")
    ax.legend()
    _save(fig, path)


def plot_samples_hist(values, path: str, xlabel: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.hist(np.asarray(values, dtype=float), bins=60, density=True, color="tab:gray")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("density")
    _save(fig, path)
