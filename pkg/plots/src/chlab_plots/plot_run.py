"""Render a completed run into the five standard figure families.

plot_run(csv_path, snapshot_dir, out_dir) emits

    energy.png       psi / psi_hat / psi_tilde with the decaying envelope
    mass.png         measured means against the closed-form relaxation law
    separation.png   field extrema against the +-1 pure-phase guides
    snapshot_<t>.png one per snapshot file (heatmaps in 2D, profiles in 1D)
    ls_probe.png     Lojasiewicz quotient table, when the run produced one

A header-only CSV still yields the full set, annotated "no data".
Inputs are never modified; rerunning overwrites the same file names.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import read_ls_probe_csv, read_run_csv, read_snapshot

_GUIDE = dict(color="k", lw=0.8, ls=":", alpha=0.6)


def _echo_title(table, base):
    keys = ("dim", "n", "sigma", "c", "tau")
    bits = [f"{k}={table.echo[k]}" for k in keys if k in table.echo]
    return base + ("\n" + ", ".join(bits) if bits else "")


def _no_data(ax):
    ax.annotate("no data", xy=(0.5, 0.5), xycoords="axes fraction",
                ha="center", va="center", fontsize=14, color="gray")


def _save(fig, path, written):
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.add(Path(path))


def _plot_energy(table, out_dir, written):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if len(table):
        t = table.array("t")
        for name, style in (("psi", "-"), ("psi_hat", "--"), ("psi_tilde", "-.")):
            ax.plot(t, table.array(name), style, label=name)
        sigma = table.param("sigma", 0.0)
        late = t >= 1.0
        if sigma and sigma > 0 and np.any(late):
            # empirical envelope constant from the decaying source term
            k_hat = np.max(np.abs(table.array("oono_source")[late]) * np.exp(sigma * t[late]))
            env = table.array("psi_tilde") + (k_hat / sigma) * np.exp(-sigma * t)
            ax.plot(t, env, ":", color="crimson", label="psi_tilde + K/sigma e^(-sigma t)")
        ax.legend(fontsize=8)
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
    else:
        _no_data(ax)
    ax.set_title(_echo_title(table, "free energies"), fontsize=9)
    _save(fig, os.path.join(out_dir, "energy.png"), written)


def _plot_mass(table, out_dir, written):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if len(table):
        t = table.array("t")
        ax.plot(t, table.array("mass_u"), "-", label="mean u (measured)")
        ax.plot(t, table.array("mass_v"), "-", label="mean v (measured)")
        sigma, c = table.param("sigma"), table.param("c")
        if sigma is not None and c is not None:
            v0, t0 = table.columns["mass_v"][0], table.columns["t"][0]
            law = c + (v0 - c) * np.exp(-sigma * (t - t0))
            ax.plot(t, law, "k--", lw=1.0, label="mean v (closed form)")
            ax.axhline(c, **_GUIDE)
        ax.legend(fontsize=8)
        ax.set_xlabel("t")
        ax.set_ylabel("mean")
    else:
        _no_data(ax)
    ax.set_title(_echo_title(table, "mass relaxation"), fontsize=9)
    _save(fig, os.path.join(out_dir, "mass.png"), written)


def _plot_separation(table, out_dir, written):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if len(table):
        t = table.array("t")
        ax.fill_between(t, table.array("min_u"), table.array("max_u"), alpha=0.35, label="u range")
        ax.fill_between(t, table.array("min_v"), table.array("max_v"), alpha=0.35, label="v range")
        ax.axhline(1.0, **_GUIDE)
        ax.axhline(-1.0, **_GUIDE)
        ax.set_ylim(-1.1, 1.1)
        ax.legend(fontsize=8)
        ax.set_xlabel("t")
        ax.set_ylabel("field extrema")
    else:
        _no_data(ax)
        ax.axhline(1.0, **_GUIDE)
        ax.axhline(-1.0, **_GUIDE)
    ax.set_title(_echo_title(table, "separation envelope"), fontsize=9)
    _save(fig, os.path.join(out_dir, "separation.png"), written)


def _plot_snapshot(path, table, out_dir, written):
    t, ub, vb = read_snapshot(path)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, block, name in zip(axes, (ub, vb), ("u", "v")):
        if block.dim == 2:
            im = ax.imshow(
                block.values.T,
                origin="lower",
                extent=(0, block.length[0], 0, block.length[1]),
                vmin=-1.0,
                vmax=1.0,
                cmap="RdBu_r",
            )
            fig.colorbar(im, ax=ax, shrink=0.8)
        else:
            x = (np.arange(block.n[0]) + 0.5) * block.length[0] / block.n[0]
            ax.plot(x, block.values)
            ax.set_ylim(-1.1, 1.1)
            ax.axhline(1.0, **_GUIDE)
            ax.axhline(-1.0, **_GUIDE)
        ax.set_title(f"{name}(x, t={t:g})", fontsize=9)
    fig.suptitle(_echo_title(table, ""), fontsize=8)
    _save(fig, os.path.join(out_dir, f"snapshot_{t:g}.png"), written)


def _plot_ls_probe(probe_path, table, out_dir, written):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if probe_path is not None and os.path.exists(probe_path):
        consistent, rows = read_ls_probe_csv(probe_path)
        thetas = sorted({r[1] for r in rows})
        for th in thetas:
            pts = [(r[0], r[4]) for r in rows if r[1] == th and r[4] is not None]
            if pts:
                tt, ratio = zip(*pts)
                flag = "yes" if consistent.get(th, False) else "no"
                ax.plot(tt, ratio, "o-", ms=3, label=f"theta={th:g} (bounded: {flag})")
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("|dE|^(1-theta) / dual-norm RHS")
        if thetas:
            ax.legend(fontsize=7)
        else:
            _no_data(ax)
    else:
        _no_data(ax)
    ax.set_title(_echo_title(table, "Lojasiewicz quotient probe"), fontsize=9)
    _save(fig, os.path.join(out_dir, "ls_probe.png"), written)


def plot_run(csv_path, snapshot_dir, out_dir):
    """Render all figure families; returns the set of files written."""
    table = read_run_csv(csv_path)
    os.makedirs(out_dir, exist_ok=True)
    written = set()

    _plot_energy(table, out_dir, written)
    _plot_mass(table, out_dir, written)
    _plot_separation(table, out_dir, written)

    snapdir = Path(snapshot_dir)
    snaps = sorted(snapdir.glob("snapshot_*.chf")) if snapdir.is_dir() else []
    for snap in snaps:
        _plot_snapshot(snap, table, out_dir, written)

    candidates = [Path(csv_path).parent / "ls_probe.csv", snapdir / "ls_probe.csv"]
    probe = next((p for p in candidates if p.exists()), None)
    _plot_ls_probe(probe, table, out_dir, written)
    return written
