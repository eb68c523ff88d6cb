"""Matplotlib renderers for the CLI report paths (saved to file, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_demo_estimates(rows, path) -> None:
    """rows: (label, k, p, value, std_error)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ks = sorted({r[1] for r in rows})
    for k in ks:
        pts = sorted((r[2], r[3], r[4]) for r in rows if r[1] == k)
        ps = [q[0] for q in pts]
        ax.errorbar(
            ps,
            [q[1] for q in pts],
            yerr=[q[2] for q in pts],
            marker="o",
            capsize=3,
            label=f"k={k}",
        )
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.axhline(0.0, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("measurement rate p")
    ax.set_ylabel(r"estimated $\langle Z^{\otimes k}\rangle$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_demo_norms(rows, path) -> None:
    """rows: (k, p, empirical, inverse_weight)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ks = sorted({r[0] for r in rows})
    colors = plt.cm.viridis(np.linspace(0.1, 0.85, len(ks)))
    for k, color in zip(ks, colors):
        pts = sorted((r[1], r[2], r[3]) for r in rows if r[0] == k)
        ps = [q[0] for q in pts]
        ax.plot(ps, [q[2] for q in pts], "-", color=color, label=f"k={k} (1/w)")
        ax.plot(ps, [q[1] for q in pts], "o", color=color, mfc="none")
    ax.set_yscale("log")
    ax.set_xlabel("measurement rate p")
    ax.set_ylabel(r"shadow norm $\Vert P\Vert^2$")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scaling(curves, sweep_rows, minimum, path) -> None:
    """curves: list of NormCurve; sweep_rows: (p, beta, delta, rms); minimum: (p*, beta_min)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.6, 3.6))
    show = curves[:: max(1, len(curves) // 6)]
    colors = plt.cm.plasma(np.linspace(0.05, 0.9, len(show)))
    for curve, color in zip(show, colors):
        ks, ln = curve.log_norms()
        ax1.plot(ks, ln, "-", color=color, lw=1.2, label=f"p={curve.p:.2f}")
    ax1.set_xlabel("operator size k")
    ax1.set_ylabel(r"$\log \Vert P\Vert^2$")
    ax1.legend(fontsize=7)
    ps = [r[0] for r in sweep_rows]
    betas = [r[1] for r in sweep_rows]
    ax2.plot(ps, betas, "o-", ms=3.5)
    ax2.axhline(3.0, color="gray", lw=0.8, ls="--")
    ax2.axhline(2.0, color="gray", lw=0.8, ls="--")
    ax2.plot([minimum[0]], [minimum[1]], "r*", ms=12)
    ax2.set_xlabel("measurement rate p")
    ax2.set_ylabel(r"base $\beta$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_weight_decay(rows, path, ylabel="w(P)") -> None:
    """rows: (k, w)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ks = [r[0] for r in rows]
    ws = [max(r[1], 1e-300) for r in rows]
    ax.semilogy(ks, ws, "o-", ms=4)
    ax.set_xlabel("operator size k")
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_toy(rows, path) -> None:
    """rows: (label, analytic, mc, std_error)."""
    fig, ax = plt.subplots(figsize=(5.6, 3.4))
    xs = np.arange(len(rows))
    ax.errorbar(
        xs,
        [r[2] for r in rows],
        yerr=[3 * r[3] for r in rows],
        fmt="o",
        capsize=3,
        label="Monte Carlo (3 sigma)",
    )
    ax.plot(xs, [r[1] for r in rows], "k_", ms=16, label="closed form")
    ax.set_xticks(xs)
    ax.set_xticklabels([r[0] for r in rows], rotation=30, fontsize=7, ha="right")
    ax.set_yscale("log")
    ax.set_ylabel("Pauli weight")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_statmech(rows, path) -> None:
    """rows: (h_over_j, k, w, w_volume_pred, w_area_pred)."""
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    hs = sorted({r[0] for r in rows})
    colors = plt.cm.coolwarm(np.linspace(0.05, 0.95, len(hs)))
    for h, color in zip(hs, colors):
        pts = sorted((r[1], r[2], r[3], r[4]) for r in rows if r[0] == h)
        ks = [q[0] for q in pts]
        ax.semilogy(ks, [q[1] for q in pts], "o-", color=color, label=f"h/J={h:g}")
        ax.semilogy(ks, [q[2] for q in pts], ":", color=color, lw=0.9)
        ax.semilogy(ks, [q[3] for q in pts], "--", color=color, lw=0.9)
    ax.set_xlabel("operator size k")
    ax.set_ylabel("Pauli weight")
    ax.legend(fontsize=7, title="dots: ED; dotted/dashed: volume/area form")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
