"""Figure rendering for the report paths.

Every CLI report writes tidy CSV first; these helpers render the matching
matplotlib figures next to it.  The Agg backend keeps the CLI headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_solution_figure(u, path, title="solution") -> None:
    dom = u.domain
    if dom.dimension == 1:
        fig, ax = _new_axes(title, "x", "u")
        ax.plot(dom.axes[0], u.values, lw=1.5)
    else:
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        ax.set_title(title)
        pc = ax.pcolormesh(dom.axes[0], dom.axes[1], u.values.T, shading="auto")
        fig.colorbar(pc, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    _finish(fig, path)


def save_net_loglog_figure(nets: dict, eps_values, path, title="nets",
                           ylabel="|value|") -> None:
    fig, ax = _new_axes(title, "epsilon", ylabel)
    eps = np.asarray(eps_values, dtype=float)
    for label, values in nets.items():
        mag = np.abs(np.asarray(values, dtype=float))
        mask = mag > 0.0
        if not np.any(mask):
            continue
        ax.loglog(eps[mask], mag[mask], marker="o", ms=3, lw=1.0, label=label)
    ax.invert_xaxis()
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_sweep_figures(reports, out_dir) -> None:
    eps = [rep.epsilon if rep.epsilon is not None else math.nan for rep in reports]
    save_net_loglog_figure(
        {"Linf": [rep.u_linf for rep in reports],
         "H1": [rep.u_h1 for rep in reports]},
        eps, f"{out_dir}/sweep_norms.png",
        title="solution norms along the sweep", ylabel="norm")
    fig, ax = _new_axes("a-priori estimate ratio", "epsilon", "r*|u|_H1 / data")
    ax.semilogx(eps, [rep.estimate_ratio for rep in reports], marker="o", ms=3)
    ax.invert_xaxis()
    _finish(fig, f"{out_dir}/estimate_ratio.png")


def save_residual_figure(entries, eps_values, path,
                         title="weak residuals") -> None:
    nets = {}
    for e in entries:
        label = e.test_id if e.slope is None else f"{e.test_id} (slope {e.slope:.2f})"
        nets[label] = e.residuals
    save_net_loglog_figure(nets, eps_values, path, title=title, ylabel="|residual|")


def save_convergence_figure(ns, errors_by_label: dict, path,
                            title="manufactured convergence") -> None:
    fig, ax = _new_axes(title, "interior nodes", "Linf error")
    ns = np.asarray(ns, dtype=float)
    for label, errs in errors_by_label.items():
        ax.loglog(ns, errs, marker="o", ms=4, label=label)
    ref = errors_by_label[next(iter(errors_by_label))][0] * (ns[0] / ns) ** 2
    ax.loglog(ns, ref, "k--", lw=0.8, label="order 2")
    ax.legend(fontsize=8)
    _finish(fig, path)
