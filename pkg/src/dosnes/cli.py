"""Command-line driver: ingest -> normalize -> embed -> diagnose -> export.

Settings come from built-in defaults, then an optional ``key = value``
config file (``--config``), then command-line flags, later sources
winning. On failure a single JSON line describing the error is written to
stderr and the process exits with the error's code (2 input, 3
normalization, 4 divergence, 5 I/O).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field

from . import diagnostics
from .errors import DosnesError, InputError
from .experiments import run_figure1_experiment
from .ingest import (
    AffinityConfig,
    build_affinity,
    export_embedding,
    load_bipartite,
    load_edge_list,
    load_vectors,
    render_snapshot,
)
from .matrix_core import symmetrize
from .normalize import SinkhornConfig, random_walk_ds, sinkhorn_knopp
from .sne_engine import KernelKind, OptimizerConfig, run

logger = logging.getLogger("dosnes")

FORMATS = ("edge-list", "bipartite", "vectors")
NORMALIZATIONS = ("auto", "sinkhorn", "random-walk", "none")
DEFAULT_VIEWPOINTS = [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)]


@dataclass
class PipelineConfig:
    input: str | None = None
    format: str = "edge-list"
    normalize: str = "auto"
    kernel: str = "cauchy"
    sphere: bool = True
    dim: int = 3
    iters: int = 1000
    lr: float = 200.0
    seed: int = 0
    perplexity: float = 30.0
    k: int | None = None
    affinity: str = "perplexity"
    sinkhorn_tol: float = 1e-8
    sinkhorn_iters: int = 1000
    exaggeration: float = 4.0
    exaggeration_iters: int = 100
    out_coords: str | None = None
    out_report: str | None = None
    out_snapshot: str | None = None
    viewpoint: list = field(default_factory=lambda: list(DEFAULT_VIEWPOINTS))
    figure1: int | None = None

    def validate(self) -> None:
        if self.format not in FORMATS:
            raise InputError(f"unknown format {self.format!r}")
        if self.normalize not in NORMALIZATIONS:
            raise InputError(f"unknown normalization {self.normalize!r}")
        KernelKind(self.kernel)
        if self.figure1 is None and not self.input:
            raise InputError("--input is required")
        if self.sphere and self.dim != 3:
            raise InputError("sphere mode requires --dim 3")
        if self.normalize == "random-walk" and self.format == "edge-list":
            raise InputError("random-walk normalization needs bipartite or vector input")
        if self.normalize == "sinkhorn" and self.format == "bipartite":
            raise InputError("sinkhorn normalization needs a square symmetric input")
        if self.normalize == "none" and self.format == "bipartite":
            raise InputError("bipartite input must be normalized with random-walk")

    def resolved_normalization(self) -> str:
        if self.normalize != "auto":
            return self.normalize
        return "sinkhorn" if self.format == "edge-list" else "random-walk"

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            dim=self.dim,
            learning_rate=self.lr,
            max_iters=self.iters,
            seed=self.seed,
            sphere_mode=self.sphere,
            exaggeration_factor=self.exaggeration,
            exaggeration_iters=self.exaggeration_iters,
        )


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {s!r}")


def parse_viewpoint(s) -> tuple:
    try:
        v = tuple(float(x) for x in str(s).split(","))
    except ValueError:
        raise InputError(f"bad viewpoint {s!r}") from None
    if len(v) != 3 or not any(v):
        raise InputError(f"viewpoint must be three numbers, not all zero: {s!r}")
    return v


def _optional_int(s):
    return None if str(s).strip().lower() in ("", "none") else int(s)


_CONVERT = {
    "sphere": _bool,
    "dim": int,
    "iters": int,
    "lr": float,
    "seed": int,
    "perplexity": float,
    "k": _optional_int,
    "sinkhorn_tol": float,
    "sinkhorn_iters": int,
    "exaggeration": float,
    "exaggeration_iters": int,
    "figure1": _optional_int,
    "viewpoint": lambda s: [parse_viewpoint(p) for p in str(s).split(";") if p.strip()],
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` comments and blank lines are skipped."""
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in s.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise InputError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _CONVERT.get(key, str)(value)
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(
        prog="dosnes",
        description="Spherical neighbour embedding with doubly stochastic affinities.",
        argument_default=S,
    )
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--input")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--normalize", choices=NORMALIZATIONS)
    p.add_argument("--kernel", choices=[k.value for k in KernelKind])
    p.add_argument("--sphere", action=argparse.BooleanOptionalAction)
    p.add_argument("--dim", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--perplexity", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--affinity", choices=["perplexity", "binary"])
    p.add_argument("--sinkhorn-tol", dest="sinkhorn_tol", type=float)
    p.add_argument("--sinkhorn-iters", dest="sinkhorn_iters", type=int)
    p.add_argument("--exaggeration", type=float)
    p.add_argument("--exaggeration-iters", dest="exaggeration_iters", type=int)
    p.add_argument("--out-coords", dest="out_coords")
    p.add_argument("--out-report", dest="out_report")
    p.add_argument("--out-snapshot", dest="out_snapshot", help="SVG path; one file per viewpoint")
    p.add_argument("--viewpoint", action="append", type=parse_viewpoint, help="x,y,z (repeatable)")
    p.add_argument("--figure1", type=int, metavar="N", help="run the uniform-matrix sphericity experiment")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(argv) -> PipelineConfig:
    ns = vars(build_parser().parse_args(argv))
    ns.pop("verbose", None)
    settings = {}
    path = ns.pop("config", None)
    if path:
        settings.update(read_config_file(path))
    settings.update(ns)
    cfg = PipelineConfig(**settings)
    cfg.validate()
    return cfg


def _open_out(path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    return open(path, "w", newline="")


def snapshot_paths(path: str, count: int) -> list:
    if count == 1:
        return [path]
    root, ext = os.path.splitext(path)
    return [f"{root}_v{k + 1}{ext or '.svg'}" for k in range(count)]


def load_input(cfg: PipelineConfig):
    with open(cfg.input) as fh:
        if cfg.format == "edge-list":
            return load_edge_list(fh)
        if cfg.format == "bipartite":
            return load_bipartite(fh)
        return load_vectors(fh)


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write the requested artifacts; returns the report."""
    data = load_input(cfg)
    method = cfg.resolved_normalization()
    if cfg.format == "vectors":
        data = build_affinity(data, AffinityConfig(cfg.perplexity, cfg.k, cfg.affinity))

    norm_report = None
    if method == "sinkhorn":
        P, norm_report = sinkhorn_knopp(symmetrize(data), SinkhornConfig(cfg.sinkhorn_tol, cfg.sinkhorn_iters))
    elif method == "random-walk":
        P, norm_report = random_walk_ds(data)
    else:
        P = symmetrize(data)

    kernel = KernelKind(cfg.kernel)
    Y, trace = run(P, kernel, cfg.optimizer())

    report = {
        "status": "ok",
        "input": {"path": cfg.input, "format": cfg.format, "n": P.n},
        "normalization": norm_report.to_dict() if norm_report else {"method": "none"},
        "run": {**trace.summary(), "kernel": kernel.value, "sphere": cfg.sphere, "dim": cfg.dim},
        "sphericity": diagnostics.sphericity(Y).to_dict(),
        "q_row_cv": diagnostics.q_row_uniformity(Y, kernel),
        "propositions": diagnostics.proposition_summary(Y),
        "snapshots": [],
    }

    if cfg.out_coords:
        fmt = "json" if cfg.out_coords.endswith(".json") else "csv"
        with _open_out(cfg.out_coords) as fh:
            export_embedding(Y, fh, fmt=fmt)
    if cfg.out_snapshot and cfg.dim == 3:
        for path, v in zip(snapshot_paths(cfg.out_snapshot, len(cfg.viewpoint)), cfg.viewpoint):
            with _open_out(path) as fh:
                render_snapshot(Y, v, fh)
            report["snapshots"].append({"path": path, "viewpoint": list(v)})
    if cfg.out_report:
        with _open_out(cfg.out_report) as fh:
            json.dump(report, fh, indent=1)
            fh.write("\n")
    else:
        json.dump(report, sys.stdout, indent=1)
        sys.stdout.write("\n")
    return report


def run_figure1(cfg: PipelineConfig) -> dict:
    rep = run_figure1_experiment(cfg.figure1, seed=cfg.seed, max_iters=cfg.iters)
    out = rep.to_dict()
    if cfg.out_snapshot:
        root, ext = os.path.splitext(cfg.out_snapshot)
        for tag, svg in (("raw", rep.raw_snapshot), ("ds", rep.ds_snapshot)):
            with _open_out(f"{root}_{tag}{ext or '.svg'}") as fh:
                fh.write(svg)
    if cfg.out_report:
        with _open_out(cfg.out_report) as fh:
            json.dump(out, fh, indent=1)
            fh.write("\n")
    else:
        json.dump(out, sys.stdout, indent=1)
        sys.stdout.write("\n")
    return out


def _fail(kind, code, reason) -> int:
    line = json.dumps({"status": "error", "kind": kind, "exit_code": code, "reason": " ".join(str(reason).split())})
    print(line, file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING)
    try:
        cfg = config_from_args(argv)
        if cfg.figure1 is not None:
            run_figure1(cfg)
        else:
            run_pipeline(cfg)
    except DosnesError as exc:
        return _fail(exc.kind, exc.exit_code, exc)
    except OSError as exc:
        return _fail("io", 5, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
