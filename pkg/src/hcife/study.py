"""Convergence-study orchestration and table emission.

A study runs the full pipeline (mesh -> classification -> bases ->
assembly -> solve -> errors) over a range of refinement levels, appends
estimated orders of convergence, and writes CSV and Markdown tables.
Identical configurations produce byte-identical outputs; every emitted
file embeds the fully resolved configuration in a comment header.
"""
from __future__ import annotations

import dataclasses
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .assembly import assemble, solve, write_matrix_market
from .errors import GeometryError, BasisConstructionError, HcifeError, ParameterError, StudyError
from .fields import DiscreteField, build_bases
from .forms import MethodVariant, exact_solution_case1
from .geometry import Side, build_topology
from .mesh import build_uniform_mesh, write_mesh
from .norms import ErrorReport, compute_error_report, eoc

CSV_HEADER = (
    "level,h,dofs,e0,eoc0,einf,eocinf,e1,eoc1,e1inf,eoc1inf,"
    "ebar1,eocbar1,ebar1inf,eocbar1inf,etilde1inf,eoctilde1inf,enrm,eocn"
)
ERROR_COLUMNS = ("e0", "einf", "e1", "e1inf", "ebar1", "ebar1inf", "etilde1inf", "en_inf")
LARGE_LEVEL = 6  # levels from here on sit behind the explicit allow_large flag


@dataclass
class StudyConfig:
    """Resolved experiment parameters (defaults match the benchmark runs)."""

    level_min: int = 1
    level_max: int = 4
    rho_minus: float = 1.0
    rho_plus: float = 1e4
    rho_plus_list: tuple = ()
    gamma: float = 10.0
    gamma_f: float = 10.0
    method: str = "e5"
    basis_variant: str = "midpoint-tangent"
    r0: float = 1.0 / 3.0
    alpha: float = 2.0
    inclusion: str = "minus"
    solver_tol: float = 1e-12
    solver_max_iter: int = 0  # 0 selects the solver default
    out_dir: str = "."
    emit_csv: bool = True
    emit_markdown: bool = True
    emit_mesh: bool = False
    emit_matrix: bool = False
    emit_field: bool = False
    allow_large: bool = False

    def validate(self) -> None:
        if not 1 <= self.level_min <= self.level_max:
            raise ParameterError("need 1 <= level_min <= level_max")
        if not 0.0 < self.rho_minus <= self.rho_plus:
            raise ParameterError("need rho_plus >= rho_minus > 0")
        if self.gamma <= 0.0 or self.gamma_f <= 0.0:
            raise ParameterError("penalty parameters must be positive")
        if self.inclusion not in ("minus", "plus"):
            raise ParameterError("inclusion must be 'minus' or 'plus'")
        if self.level_max >= LARGE_LEVEL and not self.allow_large:
            raise ParameterError(
                f"level {self.level_max} needs --allow-large "
                f"(estimated {memory_estimate_mib(self.level_max):.0f} MiB)"
            )

    def variant(self) -> MethodVariant:
        return MethodVariant(self.method, gamma=self.gamma, gamma_f=self.gamma_f)

    def problem(self, rho_plus: float | None = None):
        return exact_solution_case1(
            self.rho_minus,
            self.rho_plus if rho_plus is None else rho_plus,
            alpha=self.alpha,
            r0=self.r0,
            inclusion=Side.MINUS if self.inclusion == "minus" else Side.PLUS,
        )

    def echo_lines(self) -> list[str]:
        return [
            f"# {f.name} = {getattr(self, f.name)!r}"
            for f in dataclasses.fields(StudyConfig)
        ]


def memory_estimate_mib(level: int) -> float:
    """Rough peak footprint of one level: mesh, matrix, work vectors."""
    n = 2 ** (level + 3)
    nv = (n + 1) ** 2
    nc = 2 * n * n
    matrix = 9 * nv * 20  # ~9 nonzeros per row, value + index + offsets
    return (matrix + 120 * nc + 64 * nv) / 2**20


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def load_config_file(path) -> dict:
    """Parse the flat 'key = value' format with '#' comments."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def config_from(values: dict) -> StudyConfig:
    """Build a StudyConfig from string-valued settings (file or CLI)."""
    cfg = StudyConfig()
    fields = {f.name: f for f in dataclasses.fields(StudyConfig)}
    for key, val in values.items():
        if key == "levels":
            lo, _, hi = str(val).partition("..")
            cfg.level_min = int(lo)
            cfg.level_max = int(hi) if hi else int(lo)
            continue
        if key not in fields:
            raise ParameterError(f"unknown configuration key {key!r}")
        kind = fields[key].type
        if key == "rho_plus_list":
            if isinstance(val, (tuple, list)):
                cfg.rho_plus_list = tuple(float(x) for x in val)
            elif str(val).strip():
                cfg.rho_plus_list = tuple(float(x) for x in str(val).split(","))
            continue
        current = getattr(cfg, key)
        if isinstance(current, bool):
            setattr(cfg, key, _BOOL[str(val).strip().lower()] if isinstance(val, str) else bool(val))
        elif isinstance(current, int):
            setattr(cfg, key, int(val))
        elif isinstance(current, float):
            setattr(cfg, key, float(val))
        else:
            setattr(cfg, key, str(val))
        del kind
    cfg.validate()
    return cfg


@dataclass
class LevelResult:
    report: ErrorReport
    mesh: object
    topo: object
    bases: dict
    u_h: np.ndarray
    system: object = None


def run_level(cfg: StudyConfig, level: int, rho_plus: float | None = None) -> LevelResult:
    """One full pipeline pass; failures carry stage/level/cell provenance."""
    spec = cfg.problem(rho_plus)
    stage = "mesh"
    try:
        mesh = build_uniform_mesh(level)
        stage = "geometry"
        topo = build_topology(mesh, spec.curve)
        stage = "basis"
        bases = build_bases(mesh, topo, spec.rho_minus, spec.rho_plus, cfg.basis_variant)
        stage = "assemble"
        system = assemble(mesh, topo, bases, spec, cfg.variant())
        stage = "solve"
        u_h, rep = solve(
            system,
            tol=cfg.solver_tol,
            max_iter=cfg.solver_max_iter or None,
        )
        stage = "errors"
        report = compute_error_report(mesh, topo, bases, spec, u_h, rep)
    except HcifeError as exc:
        cell = getattr(exc, "cell", -1)
        raise StudyError(str(exc), stage=stage, level=level, cell=cell) from exc
    return LevelResult(report, mesh, topo, bases, u_h, system)


@dataclass
class StudyResult:
    config: StudyConfig
    reports: list
    eoc_table: dict

    def csv_text(self) -> str:
        out = io.StringIO()
        for line in self.config.echo_lines():
            out.write(line + "\n")
        out.write(CSV_HEADER + "\n")
        for i, rep in enumerate(self.reports):
            cells = [str(rep.level), _fmt(rep.h), str(rep.dofs)]
            for col in ERROR_COLUMNS:
                cells.append(_fmt(getattr(rep, col)))
                cells.append("" if i == 0 else _fmt_eoc(self.eoc_table[col][i - 1]))
            out.write(",".join(cells) + "\n")
        return out.getvalue()

    def markdown_text(self) -> str:
        blocks = (
            ("e0", "einf", "e1", "e1inf"),
            ("ebar1", "ebar1inf", "etilde1inf", "en_inf"),
        )
        titles = {
            "e0": "e0", "einf": "einf", "e1": "e1", "e1inf": "e1inf",
            "ebar1": "ebar1", "ebar1inf": "ebar1inf",
            "etilde1inf": "etilde1inf", "en_inf": "en",
        }
        out = io.StringIO()
        for line in self.config.echo_lines():
            out.write(line + "\n")
        for block in blocks:
            out.write("\n| l | " + " | ".join(
                f"{titles[c]} | e.o.c." for c in block) + " |\n")
            out.write("|" + "---|" * (1 + 2 * len(block)) + "\n")
            for i, rep in enumerate(self.reports):
                cells = [str(rep.level)]
                for col in block:
                    cells.append(f"{getattr(rep, col):.2e}")
                    cells.append("-" if i == 0 else _fmt_eoc(self.eoc_table[col][i - 1], "-"))
                out.write("| " + " | ".join(cells) + " |\n")
        return out.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _fmt_eoc(x: float, empty: str = "") -> str:
    return empty if math.isnan(x) else f"{x:.6f}"


def run_convergence_study(cfg: StudyConfig) -> StudyResult:
    """Run all levels, attach e.o.c. columns, emit the configured files."""
    cfg.validate()
    reports = []
    for level in range(cfg.level_min, cfg.level_max + 1):
        result = run_level(cfg, level)
        reports.append(result.report)
        _emit_level_extras(cfg, result)
    hs = [r.h for r in reports]
    table = {col: eoc([getattr(r, col) for r in reports], hs) for col in ERROR_COLUMNS}
    study = StudyResult(cfg, reports, table)
    if cfg.emit_csv:
        _write(cfg, "study.csv", study.csv_text())
    if cfg.emit_markdown:
        _write(cfg, "study.md", study.markdown_text())
    return study


@dataclass
class SweepResult:
    config: StudyConfig
    level: int
    rows: list  # (rho_plus, e0, ebar1inf, e1)

    def csv_text(self) -> str:
        out = io.StringIO()
        for line in self.config.echo_lines():
            out.write(line + "\n")
        out.write("rho_plus,e0,ebar1inf,e1\n")
        for rho, e0, ebar1inf, e1 in self.rows:
            out.write(f"{_fmt(rho)},{_fmt(e0)},{_fmt(ebar1inf)},{_fmt(e1)}\n")
        return out.getvalue()

    def markdown_text(self) -> str:
        out = io.StringIO()
        for line in self.config.echo_lines():
            out.write(line + "\n")
        out.write("\n| rho_plus | e0 | ebar1inf | e1 |\n|---|---|---|---|\n")
        for rho, e0, ebar1inf, e1 in self.rows:
            out.write(f"| {rho:.1e} | {e0:.2e} | {ebar1inf:.2e} | {e1:.2e} |\n")
        return out.getvalue()


def run_contrast_sweep(cfg: StudyConfig) -> SweepResult:
    """Errors versus contrast at one fixed level (level_min == level_max)."""
    cfg.validate()
    if cfg.level_min != cfg.level_max:
        raise ParameterError("contrast sweep needs a fixed level (level_min == level_max)")
    if not cfg.rho_plus_list:
        raise ParameterError("contrast sweep needs a nonempty rho_plus_list")
    rows = []
    for rho_plus in cfg.rho_plus_list:
        if rho_plus < cfg.rho_minus:
            raise ParameterError("sweep values must satisfy rho_plus >= rho_minus")
        result = run_level(cfg, cfg.level_max, rho_plus=rho_plus)
        rep = result.report
        rows.append((rho_plus, rep.e0, rep.ebar1inf, rep.e1))
    sweep = SweepResult(cfg, cfg.level_max, rows)
    if cfg.emit_csv:
        _write(cfg, "sweep.csv", sweep.csv_text())
    if cfg.emit_markdown:
        _write(cfg, "sweep.md", sweep.markdown_text())
    return sweep


def emit_solution_field(result: LevelResult, path, config: StudyConfig | None = None) -> None:
    """Sampled solution field as CSV rows 'x,y,side,value'.

    Three vertex rows per uncut cell, and per cut cell the three vertex
    rows (each on its own side) plus the two crossing points on the
    MINUS branch, matching the on-curve tie-break.  Values are produced
    by the same evaluation path used everywhere else, so re-evaluating a
    parsed row reproduces the value exactly.
    """
    mesh, topo = result.mesh, result.topo
    field = DiscreteField(mesh, topo, result.bases, result.u_h)
    tag = {Side.MINUS: "-", Side.PLUS: "+"}
    try:
        with open(path, "w") as fh:
            if config is not None:
                for line in config.echo_lines():
                    fh.write(line + "\n")
            fh.write("x,y,side,value\n")
            for c in range(mesh.n_cells):
                tri = mesh.cell_vertices(c)
                if topo.is_cut(c):
                    rec = topo.cuts[c]
                    samples = [(tri[k], rec.vertex_sides[k]) for k in range(3)]
                    samples += [(rec.p1, Side.MINUS), (rec.p2, Side.MINUS)]
                else:
                    cls = topo.classification(c)
                    side = Side.MINUS if cls.value < 0 else Side.PLUS
                    samples = [(tri[k], side) for k in range(3)]
                for x, side in samples:
                    val = float(field.cell_values(c, np.asarray(x)[None, :], side)[0])
                    fh.write(f"{x[0]!r},{x[1]!r},{tag[side]},{val!r}\n")
    except OSError as exc:
        raise StudyError(f"cannot write solution field to {path}: {exc}", stage="emit")


def _emit_level_extras(cfg: StudyConfig, result: LevelResult) -> None:
    level = result.report.level
    if cfg.emit_mesh:
        write_mesh(result.mesh, os.path.join(cfg.out_dir, f"mesh_l{level}.txt"))
    if cfg.emit_matrix:
        spec = cfg.problem()
        system = assemble(result.mesh, result.topo, result.bases, spec, cfg.variant())
        write_matrix_market(system.matrix, os.path.join(cfg.out_dir, f"matrix_l{level}.mtx"))
    if cfg.emit_field:
        emit_solution_field(result, os.path.join(cfg.out_dir, f"field_l{level}.csv"), cfg)


def _write(cfg: StudyConfig, name: str, text: str) -> None:
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, name)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise StudyError(f"cannot write {path}: {exc}", stage="emit")
