"""Static figures for the CLI reports (Agg backend, PNG files)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_energies(series, path):
    t = np.asarray(series.times)
    fig, (ax, bx) = plt.subplots(1, 2, figsize=(10, 4))
    for name, label in (("E_low", "E_low"), ("E_high", "E_high"),
                        ("D_low", "D_low"), ("D_high", "D_high")):
        y = series.column(name)
        if np.any(y > 0):
            ax.semilogy(t, np.where(y > 0, y, np.nan), label=label)
    ax.set_xlabel("t")
    ax.set_title("energies and dissipation")
    ax.legend()
    bx.plot(t, series.column("min_coeff"), label="min 1-2kp")
    bx.plot(t, series.column("max_coeff"), label="max 1-2kp")
    bx.set_xlabel("t")
    bx.set_title("degeneracy coefficient")
    bx.legend()
    return _save(fig, path)


def plot_mms(rows, path):
    h = np.array([r.h for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    for attr, label in (("error_p", "pressure"), ("error_theta", "temperature")):
        e = np.array([getattr(r, attr) for r in rows])
        if np.any(e > 0):
            ax.loglog(h, e, "o-", label=label)
    ax.loglog(h, (h / h[0]) ** 2 * max(r.error for r in rows[:1]), "k--", label="slope 2")
    ax.set_xlabel("h")
    ax.set_ylabel("L2 error at final time")
    ax.legend()
    return _save(fig, path)


def plot_tau(rows, path):
    tau = np.array([r.tau for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    for attr, label in (("theta_gap", "temperature gap"), ("p_gap", "pressure gap")):
        g = np.array([getattr(r, attr) for r in rows])
        if np.any(g > 0):
            ax.loglog(tau, np.where(g > 0, g, np.nan), "o-", label=label)
    ax.set_xlabel("tau")
    ax.set_ylabel("L2 gap to tau = 0")
    ax.legend()
    return _save(fig, path)


def plot_inequalities(sweep, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ns = [n for n, _ in sweep]
    names = [r.name for r in sweep[0][1]]
    for i, name in enumerate(names):
        ax.plot(ns, [reps[i].worst_ratio for _, reps in sweep], "o-", label=name)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("interior nodes per axis")
    ax.set_ylabel("worst ratio")
    ax.legend()
    return _save(fig, path)
