"""figkit command line: render heatmap grids and dF curves from a sweep CSV."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError, read_sweep_csv
from .render import QUANTITIES, FigureSpec, render_free_energy_curves, render_heatmap_grid


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="figkit", description="Render figures from a hubbard-thermo sweep CSV"
    )
    p.add_argument("--csv", required=True, help="sweep CSV path")
    p.add_argument("--quantity", required=True, choices=QUANTITIES)
    p.add_argument("--out", required=True, help="output directory (heatmaps) or file (dF)")
    p.add_argument("--method", default=None,
                   help="method column to plot (default: exact; rel_err quantities default to exact-ni)")
    p.add_argument("--shared-range", action="store_true",
                   help="one color range across panels instead of per-panel ranges")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        table = read_sweep_csv(args.csv)
        if args.quantity == "dF":
            path = render_free_energy_curves(table, args.out, method=args.method or "exact")
            print(f"wrote {path}")
            return 0
        method = args.method or ("exact-ni" if args.quantity.startswith("rel_err") else "exact")
        spec = FigureSpec(quantity=args.quantity, method=method, shared_range=args.shared_range)
        written = render_heatmap_grid(table, spec, args.out)
        for path in written:
            print(f"wrote {path}")
        return 0
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
