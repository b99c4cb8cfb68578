"""figkit tests run against synthetic, schema-conformant CSVs; the package
never imports the producer."""

import math

import numpy as np
import pytest

from figkit import (
    FigureSpec,
    SchemaError,
    read_sweep_csv,
    render_free_energy_curves,
    render_heatmap_grid,
)
from figkit.render import panel_matrix

HEADER = "drive,T,U,tau,method,W_avg,W_ext,dF,dS,steps,clamped_flag,error_floor_flag"


def write_csv(path, rows):
    path.write_text("\n".join([HEADER] + rows) + "\n")
    return path


def preset_rows(drives=("mi", "comb", "aef"), temps=(0.2, 2.5, 20.0),
                us=(0.0, 5.0, 10.0), taus=(0.5, 5.0, 10.0),
                methods=("exact", "ni", "exact-ni")):
    """Preset-shaped synthetic data: smooth in (U, tau), constant in U for NI,
    dF independent of tau."""
    rows = []
    for drive in drives:
        for T in temps:
            for U in us:
                for tau in taus:
                    for method in methods:
                        if method == "ni":
                            w = math.sin(tau) / T
                            dF = 0.3 / T
                        else:
                            w = math.sin(tau) / T + 0.1 * U * (1.0 if method == "exact" else 1.05)
                            dF = 0.3 / T + 0.05 * U
                        dS = max((w - dF) / T, 0.0)
                        rows.append(
                            f"{drive},{T:.17g},{U:.17g},{tau:.17g},{method},"
                            f"{-w:.17g},{w:.17g},{dF:.17g},{dS:.17g},2000,0,0"
                        )
    return rows


class TestReader:
    def test_reads_preset_shape(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        assert table.drives() == ["aef", "comb", "mi"]
        assert table.temperatures() == [0.2, 2.5, 20.0]
        assert len(table) == 3 * 3 * 3 * 3 * 3

    def test_missing_column_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("drive,T,U\n")
        with pytest.raises(SchemaError, match="tau"):
            read_sweep_csv(bad)

    def test_bad_row_reports_line(self, tmp_path):
        rows = preset_rows()
        rows[0] = rows[0].replace("2000", "xx")
        with pytest.raises(SchemaError, match=":2"):
            read_sweep_csv(write_csv(tmp_path / "bad.csv", rows))

    def test_missing_combination_named(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows(methods=("exact",))))
        with pytest.raises(SchemaError, match="method='ni'"):
            table.panel("comb", 0.2, "ni", "W_ext")


class TestHeatmaps:
    def test_single_cell_csv(self, tmp_path):
        rows = preset_rows(drives=("comb",), temps=(2.5,), us=(1.0,), taus=(2.0,),
                           methods=("exact",))
        table = read_sweep_csv(write_csv(tmp_path / "one.csv", rows))
        written = render_heatmap_grid(table, FigureSpec("W_ext"), tmp_path / "figs")
        assert len(written) == 2  # one panel + contact sheet
        assert all(p.exists() and p.stat().st_size > 0 for p in written)

    def test_preset_grid_has_nine_panels(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        written = render_heatmap_grid(table, FigureSpec("W_ext"), tmp_path / "figs")
        panels = [p for p in written if not p.name.endswith("_grid.png")]
        sheets = [p for p in written if p.name.endswith("_grid.png")]
        assert len(panels) == 9 and len(sheets) == 1

    def test_ni_panels_column_constant(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        taus, us, grid = panel_matrix(table, FigureSpec("W_ext", method="ni"), "comb", 0.2)
        assert np.ptp(grid, axis=0).max() == 0.0
        written = render_heatmap_grid(
            table, FigureSpec("W_ext", method="ni"), tmp_path / "figs"
        )
        assert all(p.exists() for p in written)

    def test_relative_error_quantity(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        taus, us, rel = panel_matrix(
            table, FigureSpec("rel_err_W", method="exact-ni"), "aef", 2.5
        )
        # synthetic data: exact-ni work differs from exact by 5% of 0.1*U
        expected = np.abs(0.005 * us[:, None]) / np.maximum(
            np.abs(np.sin(taus)[None, :] / 2.5 + 0.1 * us[:, None]), 1e-9
        )
        assert np.allclose(rel, expected, atol=1e-12)

    def test_shared_range_flag(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        written = render_heatmap_grid(
            table, FigureSpec("dS", shared_range=True), tmp_path / "figs", stem="shared"
        )
        assert all(p.exists() for p in written)

    def test_unknown_quantity_rejected(self):
        with pytest.raises(SchemaError):
            FigureSpec("bogus")


class TestFreeEnergyCurves:
    def test_three_panel_figure(self, tmp_path):
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        out = render_free_energy_curves(table, tmp_path / "figs" / "dF.png")
        assert out.exists() and out.stat().st_size > 0

    def test_single_point_markers(self, tmp_path):
        rows = preset_rows(drives=("aef",), us=(2.0,), taus=(1.0,))
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", rows))
        out = render_free_energy_curves(table, tmp_path / "dF.png")
        assert out.exists()

    def test_tau_dependent_df_rejected(self, tmp_path):
        rows = preset_rows()
        # corrupt one exact dF entry so the column varies along tau
        idx = next(i for i, r in enumerate(rows) if ",exact," in r)
        parts = rows[idx].split(",")
        parts[7] = f"{float(parts[7]) + 1.0:.17g}"
        rows[idx] = ",".join(parts)
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", rows))
        with pytest.raises(SchemaError, match="dF varies along tau"):
            render_free_energy_curves(table, tmp_path / "dF.png")

    def test_high_t_curve_flatter(self, tmp_path):
        # total variation across U decreases with temperature in the synthetic
        # data, mirroring the physical expectation the figure is meant to show
        table = read_sweep_csv(write_csv(tmp_path / "p.csv", preset_rows()))
        _, us, low = table.panel("comb", 0.2, "exact", "dF")
        _, _, high = table.panel("comb", 20.0, "exact", "dF")
        assert np.ptp(high[:, 0]) <= np.ptp(low[:, 0])


class TestCli:
    def test_end_to_end(self, tmp_path, capsys):
        from figkit.cli import main

        csv = write_csv(tmp_path / "p.csv", preset_rows())
        code = main(["--csv", str(csv), "--quantity", "W_ext", "--out", str(tmp_path / "f")])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("wrote ") == 10

    def test_df_quantity(self, tmp_path, capsys):
        from figkit.cli import main

        csv = write_csv(tmp_path / "p.csv", preset_rows())
        code = main(["--csv", str(csv), "--quantity", "dF", "--out", str(tmp_path / "dF.png")])
        assert code == 0

    def test_schema_error_exit_code(self, tmp_path, capsys):
        from figkit.cli import main

        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n")
        code = main(["--csv", str(bad), "--quantity", "W_ext", "--out", str(tmp_path)])
        assert code == 1
