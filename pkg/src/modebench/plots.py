"""Static SVG plot emission (a convenience, never a test surface)."""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "modebench"
    import matplotlib.pyplot as plt

    return plt


def decay_plot(path: Path, seq_lengths, means, sem, overlays=None, title="") -> None:
    """Mean fidelity versus sequence length with optional model overlays.

    ``overlays`` is a list of (label, lengths, values) curves.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.errorbar(seq_lengths, means, yerr=sem, fmt="s", ms=4, capsize=2, label="measured")
    for label, xs, ys in overlays or ():
        ax.plot(xs, ys, "--", lw=1.2, label=label)
    ax.set_xlabel("sequence length L")
    ax.set_ylabel("mean fidelity")
    ax.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def histogram_grid(path: Path, seq_lengths, fidelity_rows, gamma_overlays=None) -> None:
    """Per-length fidelity histograms with optional Gamma-density overlays.

    ``fidelity_rows`` is iterable over (n_circuits,) arrays, one per length;
    ``gamma_overlays`` maps row index -> (x, pdf) curve.
    """
    plt = _pyplot()
    rows = list(fidelity_rows)
    n = len(rows)
    fig, axes = plt.subplots(1, n, figsize=(2.4 * n, 2.6), squeeze=False)
    for i, (ax, values) in enumerate(zip(axes[0], rows)):
        ax.hist(values, bins=18, density=True, alpha=0.65)
        if gamma_overlays and i in gamma_overlays:
            x, pdf = gamma_overlays[i]
            ax.plot(x, pdf, "k--", lw=1.0)
        ax.set_title(f"L = {seq_lengths[i]:g}", fontsize=9)
        ax.set_xlabel("fidelity", fontsize=8)
        ax.tick_params(labelsize=7)
    axes[0][0].set_ylabel("density", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def comparison_plot(path: Path, seq_lengths, curves, title="") -> None:
    """Overlay several labelled mean-fidelity curves on one axis."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    markers = ["s", "x", "o", "^", "v"]
    for i, (label, ys) in enumerate(curves):
        style = "--" if "analytic" in label else markers[i % len(markers)] + "-"
        ax.plot(seq_lengths, ys, style, ms=4, lw=1.0, label=label)
    ax.set_xlabel("sequence length L")
    ax.set_ylabel("mean fidelity")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
