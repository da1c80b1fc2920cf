"""Figure export: iterate trajectories and distance-decay curves.

Rendering is deterministic for fixed input: the SVG hash salt is pinned and
no timestamp metadata is written, so repeated invocations produce identical
bytes on the same platform.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .errors import ConfigurationError  # noqa: E402
from .records import Trace  # noqa: E402

__all__ = ["export_svg"]

matplotlib.rcParams["svg.hashsalt"] = "devsplit"


def export_svg(traces: list[tuple[str, Trace]], mode: str, path) -> None:
    """Render one figure from labelled traces and write it to ``path``.

    ``mode='trajectory'`` draws the p-iterate paths (2-d problems only);
    ``mode='distance'`` draws distance-to-solution against iteration on a
    log10 ordinate. Empty traces yield an empty-axes figure.
    """
    if mode not in ("trajectory", "distance"):
        raise ConfigurationError(f"unknown figure mode {mode!r}")
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    try:
        any_line = False
        for label, tr in traces:
            if len(tr) == 0:
                continue
            if mode == "trajectory":
                if not tr.keep_vectors or (tr.p and tr.p[0].shape[0] != 2):
                    raise ConfigurationError("trajectory mode needs 2-d iterate traces")
                xs = [row[0] for row in tr.p]
                ys = [row[1] for row in tr.p]
                ax.plot(xs, ys, lw=1.0, label=label)
                any_line = True
            else:
                pairs = [(n, d) for n, d in zip(tr.n, tr.dist) if d == d and d > 0.0]
                if pairs:
                    ax.semilogy([n for n, _ in pairs], [d for _, d in pairs],
                                lw=1.0, label=label)
                    any_line = True
        if mode == "trajectory":
            ax.set_xlabel("first coordinate")
            ax.set_ylabel("second coordinate")
            ax.set_aspect("equal", adjustable="datalim")
        else:
            ax.set_xlabel("iteration")
            ax.set_ylabel("distance to solution")
        if any_line and len(traces) > 1:
            ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
