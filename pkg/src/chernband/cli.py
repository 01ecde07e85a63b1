"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 ambiguous band clustering,
3 band degeneracy, 4 below the large-j threshold, 5 a numerical check
(sum rule, quantization, theorem residual) failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import hamiltonians as hm
from .band_spectrum import (
    band_counts,
    diagonalize,
    is_large_j,
    large_j_threshold,
    theorem_residuals,
)
from .chern_topology import (
    chern_indices,
    husimi_map,
    sum_rule_check,
    triangulate_sphere,
)
from .errors import ChernbandError, ClusteringAmbiguityError, DegeneracyError, SpecError
from .spin_algebra import HalfInt, SpherePoint

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_AMBIGUOUS = 2
EXIT_DEGENERATE = 3
EXIT_SMALL_J = 4
EXIT_CHECK_FAILED = 5

NAMED_MODELS = ("eq1", "tetrahedral", "local")


class ConfigError(ChernbandError):
    pass


@dataclass
class RunConfig:
    model: str
    j: HalfInt
    s: HalfInt
    params: dict = field(default_factory=dict)
    depth: int = 5
    output: Optional[str] = None
    format: str = "csv"
    spec_path: Optional[str] = None
    guided: bool = True

    @property
    def spec_based(self) -> bool:
        return self.spec_path is not None

    def spec(self) -> hm.HamiltonianSpec:
        if self.spec_path is not None:
            return hm.load_spec(self.spec_path)
        return hm.named_model(self.model, self.params, self.j)

    def spec_at(self, value: float) -> hm.HamiltonianSpec:
        if self.spec_path is not None:
            raise ConfigError("a JSON spec has no scan parameter")
        params = dict(self.params)
        params[hm.MODEL_PARAMS[self.model]] = value
        return hm.named_model(self.model, params, self.j)


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"--param {k}: {v!r} is not a number") from None
    return out


def parse_grid(text: str) -> np.ndarray:
    """``a:b:n`` -> n evenly spaced values from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        grid = np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ConfigError(f"--grid expects a:b:n, got {text!r}") from None
    if len(grid) < 1:
        raise ConfigError("--grid needs at least one point")
    return grid


def config_from_args(args) -> RunConfig:
    spec_path = args.spec
    model = args.model
    if model not in NAMED_MODELS and spec_path is None:
        spec_path = model
    if spec_path is not None:
        if not Path(spec_path).is_file():
            raise ConfigError(f"spec file {spec_path!r} not found")
        hm.load_spec(spec_path)  # validates early
        model = "spec"
    try:
        j = HalfInt.of(args.j)
        s = HalfInt.of(args.s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if j.twice < 1 or s.twice < 1:
        raise ConfigError("j and s must be at least 1/2")
    if model == "tetrahedral" and s != HalfInt(1):
        raise ConfigError("the tetrahedral model is a two-level model: use --s 1/2")
    depth = args.depth
    if depth < 0:
        raise ConfigError("--depth must be >= 0")
    return RunConfig(
        model=model,
        j=j,
        s=s,
        params=_parse_params(args.param),
        depth=depth,
        output=args.out,
        format=args.format,
        spec_path=spec_path,
        guided=not args.no_guided,
    )


# -- output helpers -------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return "" if x is None else str(x)


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_rows(header, rows, form: str) -> str:
    if form == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


class Emitter:
    """Routes data to --out (or stdout) and summaries to stdout (or stderr)."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.info_stream = sys.stdout if cfg.output else sys.stderr

    def info(self, text: str) -> None:
        print(text, file=self.info_stream)

    def data(self, text: str) -> None:
        if self.cfg.output:
            write_atomic(self.cfg.output, text)
        else:
            sys.stdout.write(text)


def _labels(s: HalfInt) -> list[str]:
    return [str(HalfInt(2 * k - s.twice)) for k in range(s.dim)]


def _r_labels(j: HalfInt, chern) -> list[str]:
    # R = j + C/2
    return [str(HalfInt(j.twice + c)) for c in chern]


def _field_for(cfg: RunConfig, h, classical: bool) -> Callable:
    if classical and cfg.model == "tetrahedral":
        return hm.tetrahedral_field(cfg.params.get("X", 1.0), cfg.j)
    return hm.semiclassical_field(h, cfg.j, cfg.s)


# -- subcommands -------------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, with_chern: bool = False) -> int:
    out = Emitter(cfg)
    h = hm.build_quantum(cfg.spec(), cfg.j, cfg.s)
    vals = diagonalize(h).values
    try:
        bands = band_counts(h, cfg.j, cfg.s, guided=cfg.guided)
    except ClusteringAmbiguityError as exc:
        out.info(f"ambiguous band clustering: gap {exc.used_gap:.6g} vs {exc.competing_gap:.6g}")
        rows = [(i, e, "") for i, e in enumerate(vals)]
        out.data(render_rows(("index", "energy", "band_g"), rows, cfg.format))
        return EXIT_AMBIGUOUS
    labels = _labels(cfg.s)
    rows = [(i, e, labels[b]) for i, (e, b) in enumerate(zip(vals, bands.band_of_levels()))]
    out.data(render_rows(("index", "energy", "band_g"), rows, cfg.format))
    out.info("N: " + " ".join(str(n) for n in bands.counts))
    if with_chern:
        res = chern_indices(_field_for(cfg, h, False), triangulate_sphere(cfg.depth))
        out.info("C: " + " ".join(str(c) for c in res.indices))
        out.info("R: " + " ".join(_r_labels(cfg.j, res.indices)))
    return EXIT_OK


def cmd_chern(cfg: RunConfig) -> int:
    out = Emitter(cfg)
    h = None if cfg.model == "tetrahedral" else hm.build_quantum(cfg.spec(), cfg.j, cfg.s)
    try:
        res = chern_indices(_field_for(cfg, h, True), triangulate_sphere(cfg.depth))
    except DegeneracyError as exc:
        out.info(f"degeneracy at {exc.point} (gap {exc.gap:.3e}): Chern indices undefined")
        return EXIT_DEGENERATE
    payload = res.to_json()
    payload["g"] = _labels(cfg.s)
    payload["R"] = _r_labels(cfg.j, res.indices)
    payload["sum_rule"] = sum_rule_check(res)
    out.data(json.dumps(payload, indent=1) + "\n")
    out.info("C: " + " ".join(str(c) for c in res.indices))
    if not sum_rule_check(res):
        out.info("sum rule violated")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    out = Emitter(cfg)
    below = not is_large_j(cfg.j, cfg.s)
    if below:
        out.info(f"warning: j = {cfg.j} is below the large-j threshold {large_j_threshold(cfg.s)}")
    h = hm.build_quantum(cfg.spec(), cfg.j, cfg.s)
    try:
        bands = band_counts(h, cfg.j, cfg.s, guided=cfg.guided)
        res = chern_indices(hm.semiclassical_field(h, cfg.j, cfg.s), triangulate_sphere(cfg.depth))
    except ClusteringAmbiguityError as exc:
        out.info(f"ambiguous band clustering: gap {exc.used_gap:.6g} vs {exc.competing_gap:.6g}")
        return EXIT_SMALL_J if below else EXIT_AMBIGUOUS
    except DegeneracyError as exc:
        out.info(f"degeneracy at {exc.point}")
        return EXIT_SMALL_J if below else EXIT_DEGENERATE
    resid = theorem_residuals(bands.counts, res.indices, cfg.j)
    labels = _labels(cfg.s)
    rows = [
        (g, n, c, r, rl)
        for g, n, c, r, rl in zip(labels, bands.counts, res.indices, resid, _r_labels(cfg.j, res.indices))
    ]
    header = ("g", "N_g", "C_g", "residual", "R")
    out.data(render_rows(header, rows, cfg.format))
    out.info("N: " + " ".join(str(n) for n in bands.counts))
    out.info("C: " + " ".join(str(c) for c in res.indices))
    out.info("residual: " + " ".join(str(r) for r in resid))
    if all(r == 0 for r in resid):
        return EXIT_OK
    return EXIT_SMALL_J if below else EXIT_CHECK_FAILED


def cmd_scan(cfg: RunConfig, grid, with_chern: bool = True) -> int:
    out = Emitter(cfg)
    if cfg.model == "local":
        n = int(cfg.params.get("n", 40))
        rows = []
        for tt in grid:
            vals, edge = hm.local_model_levels(hm.LocalModelParams(float(tt), n))
            rows += [(float(tt), i, e, int(f)) for i, (e, f) in enumerate(zip(vals, edge))]
        out.data(render_rows(("t_tilde", "index", "energy", "edge"), rows, cfg.format))
        return EXIT_OK

    labels = _labels(cfg.s)
    rows = []
    last = None
    changes = []
    for t in grid:
        t = float(t)
        h = hm.build_quantum(cfg.spec_at(t), cfg.j, cfg.s)
        try:
            counts = band_counts(h, cfg.j, cfg.s, guided=cfg.guided).counts
            status = "ok"
        except ClusteringAmbiguityError:
            counts, status = None, "ambiguous"
        chern = None
        if with_chern:
            try:
                chern = chern_indices(
                    hm.semiclassical_field(h, cfg.j, cfg.s), triangulate_sphere(cfg.depth)
                ).indices
            except ChernbandError:
                status = "degenerate" if status == "ok" else status + "+degenerate"
        for k, g in enumerate(labels):
            rows.append((t, g, None if counts is None else counts[k], None if chern is None else chern[k], status))
        if counts is not None:
            if last is not None and last[1] != counts:
                changes.append((last[0], t, tuple(b - a for a, b in zip(last[1], counts))))
            last = (t, counts)
    out.data(render_rows(("t", "g", "N_g", "C_g", "status"), rows, cfg.format))
    for lo, hi, delta in changes:
        print(f"change in ({fmt(lo)}, {fmt(hi)}): dN = {' '.join(f'{d:+d}' for d in delta)}", file=sys.stderr)
    if not changes:
        print("no change points", file=sys.stderr)
    elif len(changes) > 1:
        net = np.sum([d for _, _, d in changes], axis=0)
        print(f"net dN = {' '.join(f'{int(d):+d}' for d in net)}", file=sys.stderr)
    return EXIT_OK


def cmd_local_model(cfg: RunConfig) -> int:
    out = Emitter(cfg)
    params = hm.LocalModelParams(cfg.params.get("t_tilde", 0.0), int(cfg.params.get("n", 40)))
    vals, edge = hm.local_model_levels(params)
    rows = [(i, e, int(f)) for i, (e, f) in enumerate(zip(vals, edge))]
    out.data(render_rows(("index", "energy", "edge"), rows, cfg.format))
    analytic = ", ".join(f"{lab}: {fmt(e)}" for lab, e in hm.local_model_spectrum(params)[:5])
    out.info(f"analytic: {analytic}, ...")
    return EXIT_OK


def cmd_husimi(cfg: RunConfig) -> int:
    """Husimi map of the g-th eigenvector of the reduced matrix at (theta, phi)."""
    out = Emitter(cfg)
    p = SpherePoint(cfg.params.get("theta", 0.0), cfg.params.get("phi", 0.0))
    g = HalfInt.of(cfg.params.get("g", -cfg.s.value))
    k = (g.twice + cfg.s.twice) // 2
    if not 0 <= k < cfg.s.dim:
        raise ConfigError(f"band g = {g} outside -s..s")
    if cfg.model == "tetrahedral":
        m = hm.tetrahedral_field(cfg.params.get("X", 1.0), cfg.j).matrix(p.vector)
    else:
        m = hm.semiclassical_reduce(hm.build_quantum(cfg.spec(), cfg.j, cfg.s), cfg.j, cfg.s, p)
    state = np.linalg.eigh(m)[1][:, k]
    tri = triangulate_sphere(cfg.depth)
    hus = husimi_map(state, cfg.s, tri)
    rows = [(q.theta, q.phi, v) for q, v in zip(tri.points, hus)]
    out.data(render_rows(("theta", "phi", "husimi"), rows, cfg.format))
    return EXIT_OK


# -- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="eq1", help="eq1, tetrahedral, local, or a spec file path")
    common.add_argument("--spec", help="JSON Hamiltonian spec file")
    common.add_argument("--j", default="10", help='slow spin, e.g. "10" or "21/2"')
    common.add_argument("--s", default="1/2", help='fast spin, e.g. "1/2"')
    common.add_argument("--param", action="append", metavar="NAME=VALUE", help="model parameter (repeatable)")
    common.add_argument("--depth", type=int, default=5, help="sphere subdivision depth")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--no-guided", action="store_true", help="disable the semiclassical clustering fallback")

    parser = argparse.ArgumentParser(prog="chernband", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("spectrum", parents=[common], help="exact spectrum and band counts")
    sp.add_argument("--with-chern", action="store_true", help="also report C_g and R = j + C_g/2")
    sub.add_parser("chern", parents=[common], help="Chern indices of the semiclassical field")
    sub.add_parser("verify", parents=[common], help="check N_g + C_g = 2j + 1")
    sc = sub.add_parser("scan", parents=[common], help="band counts along a parameter grid")
    sc.add_argument("--grid", required=True, help="a:b:n (write --grid=-4:4:9 for negative starts)")
    sc.add_argument("--no-chern", action="store_true")
    sub.add_parser("local-model", parents=[common], help="truncated oscillator model near a contact")
    sub.add_parser("husimi", parents=[common], help="Husimi map of a reduced eigenvector")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, with_chern=args.with_chern)
        if args.command == "chern":
            return cmd_chern(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "scan":
            return cmd_scan(cfg, parse_grid(args.grid), with_chern=not args.no_chern)
        if args.command == "local-model":
            return cmd_local_model(cfg)
        if args.command == "husimi":
            return cmd_husimi(cfg)
    except (ConfigError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ClusteringAmbiguityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except DegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ChernbandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
