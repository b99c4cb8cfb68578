"""Parallel evaluation of (drive x T x U x tau) grids and CSV persistence.

Work is split into independent groups, one per (drive, U) for the exact
method plus one per drive for the non-interacting evolution (which serves the
NI and exact+NI methods for every U, since their evolution Hamiltonian does
not contain the interaction).  Propagators for all tau values of a group are
built in one batched pass and reused across temperatures; free energies are
computed once per (drive, U, T).

Records are deterministic for a fixed config: every cell is a pure function of
its key, BLAS threading is pinned inside the group evaluators, and the merged
output is sorted by (drive, T, U, tau, method) before writing.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from multiprocessing import get_context
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .approximations import approx_entropy, SCHEME_EXACT_NI, SCHEME_NI
from .drives import DriveProtocol, build_drive, converged_propagate, _make_propagator, _propagate_batch
from .errors import DomainError, SweepFormatError
from .lattice import ChainSpec, assemble_hamiltonian, build_sector_basis
from .metrics import WorkEntropyRecord, average_work, entropy_variation, make_record
from .spectra import diagonalize, free_energy_delta, thermal_state

CSV_COLUMNS = (
    "drive", "T", "U", "tau", "method",
    "W_avg", "W_ext", "dF", "dS", "steps", "clamped_flag", "error_floor_flag",
)
SWEEP_DRIVES = ("comb", "mi", "aef")
SWEEP_METHODS = ("exact", "ni", "exact-ni")


@dataclass(frozen=True)
class SweepConfig:
    L: int
    drives: tuple[str, ...]
    temperatures: tuple[float, ...]
    U_values: tuple[float, ...]
    tau_values: tuple[float, ...]
    steps: int = 2000
    tol: float | None = None
    methods: tuple[str, ...] = SWEEP_METHODS
    output: str | None = None
    workers: int = 0

    def __post_init__(self) -> None:
        if self.L < 2 or self.L % 2:
            raise DomainError(f"sweeps run half-filled chains; L must be even >= 2, got {self.L}")
        if not self.drives or any(d not in SWEEP_DRIVES for d in self.drives):
            raise DomainError(f"drives must be a nonempty subset of {SWEEP_DRIVES}, got {self.drives}")
        if not self.methods or any(m not in SWEEP_METHODS for m in self.methods):
            raise DomainError(f"methods must be a nonempty subset of {SWEEP_METHODS}, got {self.methods}")
        if not self.temperatures or any(t <= 0 for t in self.temperatures):
            raise DomainError("temperatures must be positive (units J/k_B)")
        if not self.U_values:
            raise DomainError("U_values must be nonempty")
        if not self.tau_values or any(t <= 0 for t in self.tau_values):
            raise DomainError("tau_values must be positive (units 1/J)")
        if self.tol is None and self.steps < 1:
            raise DomainError(f"steps must be >= 1, got {self.steps}")
        if self.tol is not None and not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")

    @classmethod
    def paper_preset(
        cls, L: int, output: str | None = None, workers: int = 0
    ) -> "SweepConfig":
        """Production grid: three drives, T in {0.2, 2.5, 20} J/k_B,
        21 U points in [0, 10], 20 tau points in [0.5, 10], 2000 steps."""
        return cls(
            L=L,
            drives=SWEEP_DRIVES,
            temperatures=(0.2, 2.5, 20.0),
            U_values=tuple(np.linspace(0.0, 10.0, 21)),
            tau_values=tuple(np.linspace(0.5, 10.0, 20)),
            steps=2000,
            methods=SWEEP_METHODS,
            output=output,
            workers=workers,
        )

    @classmethod
    def from_mapping(cls, m: dict) -> "SweepConfig":
        m = dict(m)

        def axis(name: str) -> tuple[float, ...]:
            if f"{name}_values" in m:
                return tuple(float(x) for x in m.pop(f"{name}_values"))
            if f"{name}_range" in m:
                lo, hi = m.pop(f"{name}_range")
                count = int(m.pop(f"{name}_count"))
                return tuple(np.linspace(float(lo), float(hi), count))
            raise DomainError(f"config needs {name}_values or {name}_range + {name}_count")

        kwargs = dict(
            L=int(m.pop("L")),
            drives=tuple(m.pop("drives")),
            temperatures=tuple(float(t) for t in m.pop("temperatures")),
            U_values=axis("U"),
            tau_values=axis("tau"),
        )
        if "steps" in m:
            kwargs["steps"] = int(m.pop("steps"))
        if "tol" in m:
            kwargs["tol"] = float(m.pop("tol"))
        for key in ("methods",):
            if key in m:
                kwargs[key] = tuple(m.pop(key))
        for key in ("output",):
            if key in m:
                kwargs[key] = m.pop(key)
        if "workers" in m:
            kwargs["workers"] = int(m.pop("workers"))
        if m:
            raise DomainError(f"unknown config keys: {sorted(m)}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "SweepConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                mapping = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SweepFormatError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_mapping(mapping)

    def to_mapping(self) -> dict:
        m = {
            "L": self.L,
            "drives": list(self.drives),
            "temperatures": list(self.temperatures),
            "U_values": list(self.U_values),
            "tau_values": list(self.tau_values),
            "methods": list(self.methods),
        }
        if self.tol is not None:
            m["tol"] = self.tol
        else:
            m["steps"] = self.steps
        if self.output:
            m["output"] = self.output
        return m

    def config_hash(self) -> str:
        # hash the grid identity only; the output path does not affect the data
        mapping = {k: v for k, v in self.to_mapping().items() if k != "output"}
        payload = json.dumps(mapping, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()

    def n_cells(self) -> int:
        return (
            len(self.drives) * len(self.temperatures)
            * len(self.U_values) * len(self.tau_values) * len(self.methods)
        )


@dataclass(frozen=True)
class SweepResult:
    records: tuple[WorkEntropyRecord, ...]
    provenance: dict = field(default_factory=dict)

    def record_map(self) -> dict[tuple, WorkEntropyRecord]:
        return {r.key(): r for r in self.records}

    def axis(self, name: str) -> tuple[float, ...]:
        values = sorted({getattr(r, name) for r in self.records})
        return tuple(values)

    def grid(self, drive: str, T: float, method: str, fieldname: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(U axis, tau axis, matrix) of one field over the (U, tau) plane."""
        sel = [r for r in self.records if r.drive == drive and r.T == T and r.method == method]
        if not sel:
            raise DomainError(f"no records for (drive={drive}, T={T}, method={method})")
        us = np.array(sorted({r.U for r in sel}))
        taus = np.array(sorted({r.tau for r in sel}))
        mat = np.full((len(us), len(taus)), np.nan)
        ui = {u: i for i, u in enumerate(us)}
        ti = {t: i for i, t in enumerate(taus)}
        for r in sel:
            mat[ui[r.U], ti[r.tau]] = getattr(r, fieldname)
        if np.isnan(mat).any():
            raise DomainError("incomplete (U, tau) grid for the requested slice")
        return us, taus, mat


def _record_sort_key(r: WorkEntropyRecord):
    return (r.drive, r.T, r.U, r.tau, r.method)


def _propagators_for_group(
    spec: ChainSpec,
    basis,
    drive_kind: str,
    config: SweepConfig,
    coldest_T: float,
):
    """One propagator per tau.  Fixed-step mode batches all taus through a
    single pass; auto mode runs the step-doubling ladder per tau, probing at
    the coldest requested temperature."""
    drive0 = build_drive(drive_kind, config.L, tau=float(config.tau_values[0]))
    if config.tol is None:
        mats = _propagate_batch(
            spec, basis, np.asarray(drive0.mu0), np.asarray(drive0.mutau),
            list(config.tau_values), config.steps,
        )
        return [
            _make_propagator(m, config.steps, tau)
            for m, tau in zip(mats, config.tau_values)
        ]
    beta = 1.0 / coldest_T
    props = []
    for tau in config.tau_values:
        drive = replace(drive0, tau=float(tau))
        props.append(converged_propagate(spec, basis, drive, beta, config.tol))
    return props


def _exact_group(config: SweepConfig, drive_kind: str, U: float) -> list[WorkEntropyRecord]:
    """All exact-method records at one (drive, U): every (tau, T) cell."""
    with threadpool_limits(limits=1):
        spec = ChainSpec.half_filling(config.L, U=float(U))
        basis = build_sector_basis(spec)
        drive0 = build_drive(drive_kind, config.L, tau=float(config.tau_values[0]))
        v0 = np.asarray(drive0.mu0)
        vf = v0 + np.asarray(drive0.mutau)
        H0 = assemble_hamiltonian(basis, spec, v0)
        Hf = assemble_hamiltonian(basis, spec, vf)
        s0, sf = diagonalize(H0), diagonalize(Hf)

        coldest = min(config.temperatures)
        props = _propagators_for_group(spec, basis, drive_kind, config, coldest)

        per_T = {}
        for T in config.temperatures:
            beta = 1.0 / T
            per_T[T] = (beta, thermal_state(s0, beta), free_energy_delta(s0, sf, beta))

        records = []
        for tau, prop in zip(config.tau_values, props):
            for T in config.temperatures:
                beta, rho0, dF = per_T[T]
                try:
                    W = average_work(rho0, prop, H0, Hf)
                    dS = entropy_variation(W, dF, beta)
                    records.append(make_record(
                        drive=drive_kind, T=T, U=float(U), tau=float(tau),
                        method="exact", W_avg=W, dF=dF, dS=dS, beta=beta,
                        steps=prop.steps,
                    ))
                except Exception as exc:
                    raise type(exc)(
                        f"cell (drive={drive_kind}, T={T}, U={U}, tau={tau}, method=exact): {exc}"
                    ) from exc
        return records


def _ni_group(config: SweepConfig, drive_kind: str) -> list[WorkEntropyRecord]:
    """Records driven by the non-interacting evolution at one drive.

    Produces NI records for a single reference U (replicated over the U axis
    at merge time; they carry no U dependence), exact+NI records for every U,
    and, when both requested, the exact records at U = 0 (the exact and NI
    evolution Hamiltonians coincide there, so the propagators are shared).
    """
    with threadpool_limits(limits=1):
        ni_spec = ChainSpec.half_filling(config.L, U=0.0)
        basis = build_sector_basis(ni_spec)
        drive0 = build_drive(drive_kind, config.L, tau=float(config.tau_values[0]))
        v0 = np.asarray(drive0.mu0)
        vf = v0 + np.asarray(drive0.mutau)
        H0_ni = assemble_hamiltonian(basis, ni_spec, v0)
        Hf_ni = assemble_hamiltonian(basis, ni_spec, vf)
        s0_ni, sf_ni = diagonalize(H0_ni), diagonalize(Hf_ni)

        coldest = min(config.temperatures)
        props = _propagators_for_group(ni_spec, basis, drive_kind, config, coldest)

        ni_per_T = {}
        for T in config.temperatures:
            beta = 1.0 / T
            ni_per_T[T] = (beta, thermal_state(s0_ni, beta), free_energy_delta(s0_ni, sf_ni, beta))

        records: list[WorkEntropyRecord] = []

        if "ni" in config.methods:
            for tau, prop in zip(config.tau_values, props):
                for T in config.temperatures:
                    beta, rho0_ni, dF_ni = ni_per_T[T]
                    try:
                        W = average_work(rho0_ni, prop, H0_ni, Hf_ni)
                        dS, _ = approx_entropy(SCHEME_NI, W, beta, dF_ni, dF_ni)
                        # U is filled in per requested value at merge time
                        records.append(make_record(
                            drive=drive_kind, T=T, U=float("nan"), tau=float(tau),
                            method="ni", W_avg=W, dF=dF_ni, dS=dS, beta=beta,
                            steps=prop.steps,
                        ))
                    except Exception as exc:
                        raise type(exc)(
                            f"cell (drive={drive_kind}, T={T}, U=all, tau={tau}, method=ni): {exc}"
                        ) from exc

        if "exact" in config.methods and any(u == 0.0 for u in config.U_values):
            # the exact spectra at U = 0 coincide with the NI spectra
            for tau, prop in zip(config.tau_values, props):
                for T in config.temperatures:
                    beta, rho0, dF = ni_per_T[T]
                    try:
                        W = average_work(rho0, prop, H0_ni, Hf_ni)
                        dS = entropy_variation(W, dF, beta)
                        records.append(make_record(
                            drive=drive_kind, T=T, U=0.0, tau=float(tau),
                            method="exact", W_avg=W, dF=dF, dS=dS, beta=beta,
                            steps=prop.steps,
                        ))
                    except Exception as exc:
                        raise type(exc)(
                            f"cell (drive={drive_kind}, T={T}, U=0.0, tau={tau}, method=exact): {exc}"
                        ) from exc

        if "exact-ni" in config.methods:
            for U in config.U_values:
                spec_u = ChainSpec.half_filling(config.L, U=float(U))
                H0_ex = assemble_hamiltonian(basis, spec_u, v0)
                Hf_ex = assemble_hamiltonian(basis, spec_u, vf)
                s0_ex, sf_ex = diagonalize(H0_ex), diagonalize(Hf_ex)
                for T in config.temperatures:
                    beta = 1.0 / T
                    rho0_ex = thermal_state(s0_ex, beta)
                    dF_ex = free_energy_delta(s0_ex, sf_ex, beta)
                    for tau, prop in zip(config.tau_values, props):
                        try:
                            W = average_work(rho0_ex, prop, H0_ni, Hf_ni)
                            dS, clamped = approx_entropy(
                                SCHEME_EXACT_NI, W, beta, dF_ex, ni_per_T[T][2]
                            )
                            records.append(make_record(
                                drive=drive_kind, T=T, U=float(U), tau=float(tau),
                                method="exact-ni", W_avg=W, dF=dF_ex, dS=dS,
                                beta=beta, steps=prop.steps, clamped=clamped,
                            ))
                        except Exception as exc:
                            raise type(exc)(
                                f"cell (drive={drive_kind}, T={T}, U={U}, tau={tau}, "
                                f"method=exact-ni): {exc}"
                            ) from exc
        return records


def _run_group(task: tuple) -> list[WorkEntropyRecord]:
    kind, config, drive_kind, U = task
    if kind == "exact":
        return _exact_group(config, drive_kind, U)
    return _ni_group(config, drive_kind)


def run_sweep(config: SweepConfig, progress=None) -> SweepResult:
    """Evaluate every requested grid cell; see the module docstring for the
    grouping and determinism guarantees."""
    t_start = time.perf_counter()
    need_ni_group = "ni" in config.methods or "exact-ni" in config.methods
    tasks: list[tuple] = []
    for drive in config.drives:
        if need_ni_group:
            tasks.append(("ni-evo", config, drive, 0.0))
        if "exact" in config.methods:
            for U in config.U_values:
                if U == 0.0 and need_ni_group:
                    continue  # served by the NI-evolution group
                tasks.append(("exact", config, drive, float(U)))

    workers = config.workers or os.cpu_count() or 1
    raw_records: list[WorkEntropyRecord] = []
    if workers == 1 or len(tasks) == 1:
        for i, task in enumerate(tasks):
            raw_records.extend(_run_group(task))
            if progress:
                progress(i + 1, len(tasks))
    else:
        ctx = get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = [pool.submit(_run_group, task) for task in tasks]
            for i, fut in enumerate(futures):
                raw_records.extend(fut.result())
                if progress:
                    progress(i + 1, len(tasks))

    # replicate the U-independent NI records across the requested U axis
    records: list[WorkEntropyRecord] = []
    for r in raw_records:
        if r.method == "ni":
            records.extend(replace(r, U=float(U)) for U in config.U_values)
        else:
            records.append(r)

    records.sort(key=_record_sort_key)
    keys = [_record_sort_key(r) for r in records]
    if len(set(keys)) != len(keys):
        raise DomainError("duplicate grid cells produced; config is inconsistent")
    if len(records) != config.n_cells():
        raise DomainError(
            f"incomplete sweep: produced {len(records)} records, expected {config.n_cells()}"
        )

    wall = time.perf_counter() - t_start
    step_counts = {}
    for r in records:
        step_counts[f"{r.drive}:{r.U:.17g}:{r.tau:.17g}"] = r.steps
    provenance = {
        "config": config.to_mapping(),
        "config_hash": config.config_hash(),
        "code_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": wall,
        "workers": workers,
        "cpu_count": os.cpu_count(),
        "propagator_steps": step_counts,
    }
    result = SweepResult(records=tuple(records), provenance=provenance)
    if config.output:
        persist(result, config.output)
    return result


@dataclass(frozen=True)
class SummaryEntry:
    """Extrema of extracted work and entropy over one (drive, T, method) plane.

    Coordinates are (U, tau); the U coordinate is None for the NI method,
    whose values do not depend on U."""

    drive: str
    T: float
    method: str
    w_ext_min: float
    w_ext_max: float
    w_ext_min_at: tuple[float | None, float]
    w_ext_max_at: tuple[float | None, float]
    ds_min: float
    ds_max: float
    ds_min_at: tuple[float | None, float]
    ds_max_at: tuple[float | None, float]


def summarize(result: SweepResult) -> tuple[SummaryEntry, ...]:
    planes: dict[tuple[str, float, str], list[WorkEntropyRecord]] = {}
    for r in result.records:
        planes.setdefault((r.drive, r.T, r.method), []).append(r)

    entries = []
    for (drive, T, method), recs in sorted(planes.items()):
        def coord(rec: WorkEntropyRecord) -> tuple[float | None, float]:
            return (None if method == "ni" else rec.U, rec.tau)

        by_wext = sorted(recs, key=lambda r: (r.W_ext, r.U, r.tau))
        by_ds = sorted(recs, key=lambda r: (r.dS, r.U, r.tau))
        entries.append(SummaryEntry(
            drive=drive, T=T, method=method,
            w_ext_min=by_wext[0].W_ext, w_ext_max=by_wext[-1].W_ext,
            w_ext_min_at=coord(by_wext[0]), w_ext_max_at=coord(by_wext[-1]),
            ds_min=by_ds[0].dS, ds_max=by_ds[-1].dS,
            ds_min_at=coord(by_ds[0]), ds_max_at=coord(by_ds[-1]),
        ))
    return tuple(entries)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".meta.json")


def persist(result: SweepResult, path: str | Path) -> None:
    """Write the CSV (17 significant digits) and the JSON provenance sidecar."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for r in sorted(result.records, key=_record_sort_key):
        lines.append(",".join((
            r.drive, _fmt(r.T), _fmt(r.U), _fmt(r.tau), r.method,
            _fmt(r.W_avg), _fmt(r.W_ext), _fmt(r.dF), _fmt(r.dS),
            str(r.steps), str(int(r.clamped)), str(int(r.error_floored)),
        )))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(result.provenance, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load(path: str | Path) -> SweepResult:
    """Round-trip counterpart of :func:`persist`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows = text.splitlines()
    if not rows:
        raise SweepFormatError(f"{path}: empty file")
    header = tuple(rows[0].split(","))
    for col in CSV_COLUMNS:
        if col not in header:
            raise SweepFormatError(f"{path}: missing column {col!r}")
    if header != CSV_COLUMNS:
        raise SweepFormatError(
            f"{path}: column order must be {','.join(CSV_COLUMNS)}"
        )

    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        parts = row.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise SweepFormatError(
                f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(parts)}"
            )
        try:
            T = float(parts[1])
            records.append(WorkEntropyRecord(
                drive=parts[0], T=T, U=float(parts[2]), tau=float(parts[3]),
                method=parts[4], W_avg=float(parts[5]), W_ext=float(parts[6]),
                dF=float(parts[7]), dS=float(parts[8]), beta=1.0 / T,
                steps=int(parts[9]), clamped=bool(int(parts[10])),
                error_floored=bool(int(parts[11])),
            ))
        except (ValueError, ZeroDivisionError) as exc:
            raise SweepFormatError(f"{path}:{lineno}: {exc}") from exc

    meta = sidecar_path(path)
    if not meta.exists():
        raise SweepFormatError(f"missing provenance sidecar {meta}")
    with open(meta, encoding="utf-8") as fh:
        try:
            provenance = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SweepFormatError(f"{meta}: invalid JSON: {exc}") from exc

    records.sort(key=_record_sort_key)
    return SweepResult(records=tuple(records), provenance=provenance)
