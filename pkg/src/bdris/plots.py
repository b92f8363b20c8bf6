"""Headless figure rendering for the experiment outputs.

matplotlib is imported lazily with the Agg backend so library users who never
render figures pay no import cost and no display is ever required.
"""

from __future__ import annotations

from pathlib import Path

from .fisher import crb_db

_SCHEME_STYLE = {
    "proposed": {"color": "tab:blue", "marker": "o"},
    "diagonal_baseline": {"color": "tab:orange", "marker": "s"},
    "random_unitary": {"color": "tab:green", "marker": "^"},
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_trace(config, outcomes, path) -> Path:
    """Bound (dB) versus iteration for the proposed scheme, with flat
    reference lines for the non-iterative baselines."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for scheme in config.schemes:
        got = outcomes[scheme]
        style = _SCHEME_STYLE.get(scheme, {})
        if scheme == "proposed" and got.trace is not None and got.trace.records:
            iters = [rec.iteration for rec in got.trace.records]
            values = [crb_db(rec.crb_theta) for rec in got.trace.records]
            ax.plot(iters, values, label=scheme, color=style.get("color"))
        else:
            ax.axhline(
                crb_db(got.crb_theta),
                linestyle="--",
                color=style.get("color"),
                label=scheme,
            )
    ax.set_xlabel("iteration")
    ax.set_ylabel("bound on angle variance (dB rad$^2$)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows, path) -> Path:
    """Bound (dB) versus the swept axis, one line per scheme."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    axis = rows[0].axis if rows else "axis"
    schemes = []
    for row in rows:
        if row.scheme not in schemes:
            schemes.append(row.scheme)
    for scheme in schemes:
        pts = [(r.axis_value, r.crb_db) for r in rows if r.scheme == scheme]
        style = _SCHEME_STYLE.get(scheme, {})
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            label=scheme,
            color=style.get("color"),
            marker=style.get("marker", "o"),
        )
    if axis == "noise_power":
        ax.set_xscale("log")
    ax.set_xlabel(axis.replace("_", " "))
    ax.set_ylabel("bound on angle variance (dB rad$^2$)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
