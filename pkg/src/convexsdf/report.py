"""Figure rendering for solver runs.

Renders matplotlib figures next to the delimited diagnostics: a
convergence panel (residual norms and objective against iteration) and a
result panel (mask contour over the input for 2D runs, three mid-grid
slices for 3D).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import MaskField


def save_convergence_figure(records, path) -> None:
    """Residual norms (log scale) and objective value per iteration.

    ``records`` are dicts as returned by :func:`convexsdf.io.read_diagnostics`
    or IterationStats-like objects.
    """
    def col(name, attr):
        out = []
        for r in records:
            out.append(r[name] if isinstance(r, dict) else getattr(r, attr))
        return np.asarray(out, dtype=np.float64)

    iters = col("iter", "iteration")
    fig, (ax_res, ax_obj) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    for name, attr, style in (
        ("res_p", "res_p", "-"),
        ("res_Q", "res_q", "--"),
        ("res_z", "res_z", "-."),
        ("dphi", "dphi", ":"),
    ):
        values = np.maximum(col(name, attr), 1e-300)
        ax_res.semilogy(iters, values, style, label=name)
    ax_res.set_ylabel("sup-norm residual")
    ax_res.legend(loc="best", fontsize=8)
    ax_res.grid(True, alpha=0.3)
    ax_obj.plot(iters, col("objective", "objective"))
    ax_obj.set_xlabel("iteration")
    ax_obj.set_ylabel("objective")
    ax_obj.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_mask_figure(mask: MaskField, path, background: np.ndarray | None = None) -> None:
    """Result snapshot: contour over the input (2D) or mid slices (3D)."""
    m = mask.values.astype(float)
    if mask.shape.ndim == 2:
        fig, ax = plt.subplots(figsize=(5.4, 5.4))
        base = background if background is not None else m
        ax.imshow(np.asarray(base, dtype=float), cmap="gray", interpolation="nearest")
        ax.contour(m, levels=[0.5], colors="r", linewidths=1.2)
        ax.set_xticks([])
        ax.set_yticks([])
    else:
        fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.8))
        for ax, axis in zip(axes, range(3)):
            mid = mask.shape.dims[axis] // 2
            sl = np.take(m, mid, axis=axis)
            if background is not None:
                ax.imshow(np.take(np.asarray(background, dtype=float), mid, axis=axis),
                          cmap="gray", interpolation="nearest")
                ax.contour(sl, levels=[0.5], colors="r", linewidths=1.2)
            else:
                ax.imshow(sl, cmap="gray", interpolation="nearest")
            ax.set_title(f"axis {axis} mid-slice", fontsize=9)
            ax.set_xticks([])
            ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_run_figures(out_dir, history=None, mask: MaskField | None = None,
                       background: np.ndarray | None = None) -> list[str]:
    """Write the standard figure set into a directory; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if history:
        target = out / "convergence.png"
        save_convergence_figure(history, target)
        written.append(str(target))
    if mask is not None:
        target = out / "result.png"
        save_mask_figure(mask, target, background)
        written.append(str(target))
    return written
