"""Reader for the sweep CSV interchange format.

The schema is fixed: columns drive, T, U, tau, method, W_avg, W_ext, dF, dS,
steps, clamped_flag, error_floor_flag, floats at 17 significant digits.  This
module is the only coupling to the producer; everything else works on the
in-memory table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

COLUMNS = (
    "drive", "T", "U", "tau", "method",
    "W_avg", "W_ext", "dF", "dS", "steps", "clamped_flag", "error_floor_flag",
)
FLOAT_COLUMNS = ("T", "U", "tau", "W_avg", "W_ext", "dF", "dS")


class SchemaError(ValueError):
    """CSV does not match the sweep schema."""


@dataclass(frozen=True)
class SweepTable:
    """Column-store of one sweep CSV."""

    drive: np.ndarray
    T: np.ndarray
    U: np.ndarray
    tau: np.ndarray
    method: np.ndarray
    values: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.drive)

    def drives(self) -> list[str]:
        return sorted(set(self.drive))

    def temperatures(self) -> list[float]:
        return sorted(set(self.T))

    def methods(self) -> list[str]:
        return sorted(set(self.method))

    def panel(self, drive: str, T: float, method: str, quantity: str):
        """(tau axis, U axis, matrix[U, tau]) for one (drive, T, method)."""
        mask = (self.drive == drive) & (self.T == T) & (self.method == method)
        if not mask.any():
            raise SchemaError(
                f"no rows for drive={drive!r}, T={T:g}, method={method!r}"
            )
        us = np.unique(self.U[mask])
        taus = np.unique(self.tau[mask])
        grid = np.full((len(us), len(taus)), np.nan)
        ui = {u: i for i, u in enumerate(us)}
        ti = {t: i for i, t in enumerate(taus)}
        vals = self.values[quantity][mask]
        for u, t, v in zip(self.U[mask], self.tau[mask], vals):
            grid[ui[u], ti[t]] = v
        if np.isnan(grid).any():
            raise SchemaError(
                f"incomplete (U, tau) grid for drive={drive!r}, T={T:g}, method={method!r}"
            )
        return taus, us, grid


def read_sweep_csv(path: str | Path) -> SweepTable:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        if header != COLUMNS:
            raise SchemaError(f"{path}: column order must be {','.join(COLUMNS)}")

        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(COLUMNS):
                raise SchemaError(f"{path}:{lineno}: expected {len(COLUMNS)} fields")
            try:
                rows.append((
                    row[0], float(row[1]), float(row[2]), float(row[3]), row[4],
                    float(row[5]), float(row[6]), float(row[7]), float(row[8]),
                    int(row[9]), int(row[10]), int(row[11]),
                ))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc

    if not rows:
        return SweepTable(
            drive=np.array([], dtype=object), T=np.array([]), U=np.array([]),
            tau=np.array([]), method=np.array([], dtype=object),
            values={k: np.array([]) for k in ("W_avg", "W_ext", "dF", "dS")},
        )
    cols = list(zip(*rows))
    return SweepTable(
        drive=np.array(cols[0], dtype=object),
        T=np.array(cols[1]),
        U=np.array(cols[2]),
        tau=np.array(cols[3]),
        method=np.array(cols[4], dtype=object),
        values={
            "W_avg": np.array(cols[5]),
            "W_ext": np.array(cols[6]),
            "dF": np.array(cols[7]),
            "dS": np.array(cols[8]),
        },
    )
