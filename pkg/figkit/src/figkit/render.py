"""Heatmap grids and free-energy curves from a sweep table.

Layout follows the source material: heatmap panels show tau on the x-axis and
U on the y-axis, one panel per (drive, T), with the panel's own value range
printed in its title (a shared range across panels is available behind a
flag).  The colormap is monotone in lightness, lighter meaning larger values.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, SweepTable

CMAP = "viridis"  # perceptually uniform, monotone lightness
QUANTITIES = ("W_ext", "dS", "rel_err_W", "rel_err_dS", "dF")
ERROR_FLOOR = 1e-9

DRIVE_ORDER = ("mi", "comb", "aef")
DRIVE_LABEL = {"mi": "MI", "comb": "comb", "aef": "AEF"}
QUANTITY_LABEL = {
    "W_ext": "extracted work (J)",
    "dS": "entropy variation",
    "rel_err_W": "relative error of extracted work",
    "rel_err_dS": "relative error of entropy variation",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: a quantity, the method it comes from, and the range policy."""

    quantity: str
    method: str = "exact"
    shared_range: bool = False

    def __post_init__(self) -> None:
        if self.quantity not in QUANTITIES:
            raise SchemaError(f"unknown quantity {self.quantity!r}, expected one of {QUANTITIES}")


def _ordered_drives(table: SweepTable) -> list[str]:
    present = set(table.drives())
    ordered = [d for d in DRIVE_ORDER if d in present]
    return ordered + sorted(present - set(DRIVE_ORDER))


def panel_matrix(table: SweepTable, spec: FigureSpec, drive: str, T: float):
    """(tau axis, U axis, matrix) for one panel, deriving relative errors
    against the exact method when requested."""
    if spec.quantity in ("W_ext", "dS"):
        return table.panel(drive, T, spec.method, spec.quantity)
    base = "W_ext" if spec.quantity == "rel_err_W" else "dS"
    taus, us, approx = table.panel(drive, T, spec.method, base)
    taus_e, us_e, exact = table.panel(drive, T, "exact", base)
    if not (np.array_equal(taus, taus_e) and np.array_equal(us, us_e)):
        raise SchemaError("approximate and exact grids have different coordinates")
    rel = np.abs(approx - exact) / np.maximum(np.abs(exact), ERROR_FLOOR)
    return taus, us, rel


def render_heatmap_grid(
    csv_table: SweepTable,
    spec: FigureSpec,
    out_dir: str | Path,
    stem: str | None = None,
) -> list[Path]:
    """One PNG per (drive, T) panel plus a combined contact sheet mirroring
    the drives-by-temperatures arrangement.  Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or f"{spec.quantity}_{spec.method}"

    drives = _ordered_drives(csv_table)
    temps = csv_table.temperatures()
    panels = {}
    for drive in drives:
        for T in temps:
            panels[(drive, T)] = panel_matrix(csv_table, spec, drive, T)

    vmin = vmax = None
    if spec.shared_range:
        vmin = min(float(np.min(g)) for _, _, g in panels.values())
        vmax = max(float(np.max(g)) for _, _, g in panels.values())

    label = QUANTITY_LABEL.get(spec.quantity, spec.quantity)
    written: list[Path] = []

    def draw(ax, drive, T):
        taus, us, grid = panels[(drive, T)]
        lo = vmin if spec.shared_range else float(np.min(grid))
        hi = vmax if spec.shared_range else float(np.max(grid))
        im = ax.pcolormesh(taus, us, grid, cmap=CMAP, vmin=lo, vmax=hi, shading="nearest")
        ax.set_xlabel(r"$\tau$ (1/J)")
        ax.set_ylabel("U (J)")
        ax.set_title(
            f"{DRIVE_LABEL.get(drive, drive)}, T={T:g} J/k$_B$\n"
            f"[{lo:.3g}, {hi:.3g}]",
            fontsize=9,
        )
        return im

    for (drive, T), _ in panels.items():
        fig, ax = plt.subplots(figsize=(4.2, 3.4), constrained_layout=True)
        im = draw(ax, drive, T)
        fig.colorbar(im, ax=ax, label=label)
        path = out_dir / f"{stem}_{drive}_T{T:g}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)

    sheet, axes = plt.subplots(
        len(temps), len(drives),
        figsize=(4.0 * len(drives), 3.2 * len(temps)),
        constrained_layout=True, squeeze=False,
    )
    for row, T in enumerate(temps):
        for col, drive in enumerate(drives):
            im = draw(axes[row][col], drive, T)
            sheet.colorbar(im, ax=axes[row][col])
    sheet.suptitle(f"{label} ({spec.method})")
    sheet_path = out_dir / f"{stem}_grid.png"
    sheet.savefig(sheet_path, dpi=130)
    plt.close(sheet)
    written.append(sheet_path)
    return written


def render_free_energy_curves(
    csv_table: SweepTable,
    out_path: str | Path,
    method: str = "exact",
    tol: float = 1e-9,
) -> Path:
    """dF versus U, one curve per temperature, one panel per drive.

    dF must be constant along tau; a spread beyond ``tol`` is a
    data-integrity error.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    drives = _ordered_drives(csv_table)
    temps = csv_table.temperatures()

    fig, axes = plt.subplots(
        1, len(drives), figsize=(4.0 * len(drives), 3.4),
        constrained_layout=True, squeeze=False,
    )
    colors = plt.get_cmap("tab10")
    for col, drive in enumerate(drives):
        ax = axes[0][col]
        for i, T in enumerate(temps):
            taus, us, grid = csv_table.panel(drive, T, method, "dF")
            per_u_spread = np.ptp(grid, axis=1)
            if per_u_spread.size and per_u_spread.max() > tol:
                raise SchemaError(
                    f"dF varies along tau by {per_u_spread.max():.3e} J for "
                    f"drive={drive!r}, T={T:g} (limit {tol:g})"
                )
            dF = grid[:, 0]
            marker = "o" if len(us) == 1 else None
            ax.plot(us, dF, marker=marker, color=colors(i), label=f"T={T:g} J/k$_B$")
        ax.set_xlabel("U (J)")
        ax.set_ylabel(r"$\Delta F$ (J)")
        ax.set_title(DRIVE_LABEL.get(drive, drive))
        ax.legend(fontsize=8)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
