"""Command-line front end: ``subspec <subcommand> [options]``.

Exit codes: 0 success or Discrete, 10 NotDiscrete or a failed certificate,
2 usage or input error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import NoConvergence, SubspecError
from .group_model import GroupModel, center_net, load_group
from .io import coord_header, write_csv, write_json
from .muckenhoupt import (DEFAULT_DELTAS, DEFAULT_SAMPLES, ainfty_check, ap_constant,
                          discreteness_label, doubling_check, integral_growth_check,
                          sublevel_thinness)
from .polynomials import (GroupPolynomial, basis_labels, kernel_to_string, leibman_degree,
                          right_annihilator, witness_check)
from .spectral import BallSpec, Box, sigma_scan, tail_mass_profile
from .verdicts import VerdictConfig
from .weighted import equivalence_check

EXIT_OK = 0
EXIT_FAIL = 10
EXIT_USAGE = 2
EXIT_NOCONV = 3

log = logging.getLogger("subspec")


class UsageError(Exception):
    pass


# -- config helpers -------------------------------------------------------------

def _load_config(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}")
    if not isinstance(data, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    return data


def _require(cfg: dict, key: str):
    if key not in cfg or cfg[key] in (None, ""):
        raise UsageError(f"missing required setting {key!r}")
    return cfg[key]


def _vector(value, n: int, what: str) -> List[float]:
    if isinstance(value, str):
        value = [v for v in value.replace(";", ",").split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        raise UsageError(f"{what} must be a list of {n} numbers")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise UsageError(f"{what} must contain numbers only, got {value!r}")
    if len(out) != n or not all(np.isfinite(out)):
        raise UsageError(f"{what} must have {n} finite entries, got {value!r}")
    return out


def _spacing(value, n: int):
    if isinstance(value, (int, float)):
        if value <= 0:
            raise UsageError("h must be positive")
        return float(value)
    return _vector(value, n, "h")


def _centers(spec, model: GroupModel) -> List[tuple]:
    """``{"ray": [...], "spacing": s, "K": k}``, ``{"net": {"R_max", "spacing"}}`` or ``{"points": [...]}``."""
    if not isinstance(spec, dict):
        raise UsageError("centers must be an object with 'ray', 'net' or 'points'")
    if "points" in spec:
        pts = spec["points"]
        if not isinstance(pts, list) or not pts:
            raise UsageError("centers.points must be a nonempty list")
        return [tuple(_vector(p, model.dim, "center")) for p in pts]
    if "ray" in spec:
        ray = _vector(spec["ray"], model.dim, "ray")
        if not any(ray):
            raise UsageError("ray must be nonzero")
        spacing = float(spec.get("spacing", 1.0))
        K = int(spec.get("K", 8))
        if K < 1 or spacing <= 0:
            raise UsageError("ray needs K >= 1 and spacing > 0")
        return [tuple(float(v) for v in c) for c in center_net(model, K * spacing, spacing, ray)]
    if "net" in spec:
        net = spec["net"]
        try:
            pts = center_net(model, net["R_max"], net["spacing"])
        except (KeyError, TypeError):
            raise UsageError("centers.net needs R_max and spacing")
        return [tuple(float(v) for v in c) for c in pts]
    raise UsageError("centers must contain 'ray', 'net' or 'points'")


def _domain(spec, model: GroupModel):
    if not isinstance(spec, dict):
        raise UsageError("domain must be an object with 'box' or 'ball'")
    if "box" in spec:
        b = spec["box"]
        return Box(_vector(b.get("lo"), model.dim, "box.lo"), _vector(b.get("hi"), model.dim, "box.hi"))
    if "ball" in spec:
        b = spec["ball"]
        return BallSpec(tuple(_vector(b.get("center"), model.dim, "ball.center")), float(b["radius"]))
    raise UsageError("domain must contain 'box' or 'ball'")


class Run:
    """Shared state of one invocation: resolved config, output directory, manifest."""

    def __init__(self, command: str, args, cfg: dict):
        self.command = command
        self.cfg = dict(cfg)
        if args.seed is not None:
            self.cfg["seed"] = args.seed
        self.cfg.setdefault("seed", 0)
        self.seed = int(self.cfg["seed"])
        self.threads = max(1, int(args.threads or self.cfg.get("threads", 1)))
        out = args.out or self.cfg.get("output") or f"subspec-out/{command}"
        self.out = Path(out)
        self.cfg["output"] = str(self.out)
        self.files: List[str] = []
        self.model: Optional[GroupModel] = None

    def load_group(self) -> GroupModel:
        spec = _require(self.cfg, "group")
        self.model = load_group(str(spec))
        return self.model

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def json(self, name, data):
        write_json(self.out / name, data)
        self.files.append(name)

    def manifest(self, status: str, exit_code: int):
        data = {
            "command": self.command,
            "version": __version__,
            "config": self.cfg,
            "seed": self.seed,
            "threads": self.threads,
            "group_hash": None if self.model is None else self.model.content_hash(),
            "group_definition": None if self.model is None else self.model.definition,
            "outputs": sorted(self.files),
            "status": status,
            "exit_code": exit_code,
        }
        write_json(self.out / "manifest.json", data)


# -- subcommands ------------------------------------------------------------------

def cmd_decide_poly(run: Run, args) -> int:
    if args.group:
        run.cfg["group"] = args.group
    if args.potential:
        run.cfg["potential"] = args.potential
    model = run.load_group()
    text = str(_require(run.cfg, "potential"))
    p = GroupPolynomial.parse(text, model)
    res = right_annihilator(model, p)
    labels = basis_labels(model)
    kernel = [kernel_to_string(v, labels) for v in res.kernel_basis]
    report: Dict[str, Any] = {
        "group": run.cfg["group"],
        "potential": text,
        "polynomial": p.to_string(model.names),
        "verdict": res.verdict,
        "criterion": "right-invariant annihilator of the polynomial",
        "kernel_basis": [[str(c) for c in v] for v in res.kernel_basis],
        "kernel": kernel,
    }
    if not p.is_zero():
        report["leibman_degree"] = leibman_degree(model, p)
    print(f"verdict: {res.verdict}")
    print("kernel: {" + ", ".join(kernel) + "}" if kernel else "kernel: {0}")
    if res.witness is not None:
        wr = witness_check(model, p, res.witness, samples=int(run.cfg.get("witness_samples", 4)),
                           points=int(run.cfg.get("witness_points", 2048)), seed=run.seed)
        report["witness"] = {
            "direction": kernel[0],
            "identity_holds": wr.identity_holds,
            "centers": [[str(c) for c in cc] for cc in wr.centers],
            "sup_abs_on_unit_balls": wr.sup_abs,
            "uniformly_bounded": wr.uniformly_bounded,
        }
        print(f"witness: p(exp(sX) y) = p(y) for X = {kernel[0]}; "
              f"sup|p| on B(exp(kX), 1), k=1..{len(wr.sup_abs)}: "
              + ", ".join(f"{s:.6g}" for s in wr.sup_abs))
    run.json("report.json", report)
    return EXIT_OK if res.discrete else EXIT_FAIL


def cmd_eigen_scan(run: Run, args) -> int:
    model = run.load_group()
    cfg = run.cfg
    V = str(_require(cfg, "potential"))
    r = float(_require(cfg, "r"))
    h = _spacing(_require(cfg, "h"), model.dim)
    bc = str(cfg.get("bc", "Dirichlet"))
    centers = _centers(_require(cfg, "centers"), model)
    eigs = cfg.get("eigs", {}) or {}
    tol = float(eigs.get("tol", 1e-8))
    vcfg = VerdictConfig(**(cfg.get("verdict", {}) or {}))
    res = sigma_scan(model, V, centers, r, h, bc, vcfg, tol, run.threads)
    hcols = list(res.h)
    header = coord_header("center", model.dim) + ["sigma", "bc", "r"] + \
        coord_header("h", model.dim) + ["residual"]
    run.csv("scan.csv", header,
            ([*c, v, res.bc, res.r, *hcols, rr] for c, v, rr in zip(res.centers, res.values, res.residuals)))
    data = {"verdict": res.verdict, "verdict_config": vcfg.to_dict(), "bc": res.bc, "r": res.r,
            "h": hcols, "centers": [list(c) for c in res.centers], "sigma": res.values,
            "residuals": res.residuals, "group_hash": model.content_hash(), "seed": run.seed,
            "potential": V}
    tail = cfg.get("tail")
    if tail:
        dom = _domain(_require(tail, "domain"), model)
        th = _spacing(tail.get("h", cfg["h"]), model.dim)
        radii = [float(x) for x in _require(tail, "radii")]
        vals = tail_mass_profile(model, V, dom, th, radii, tail.get("bc", "Dirichlet"))
        run.csv("tail.csv", ["tail_radius", "tail_mass_sup"], zip(radii, vals))
        data["tail"] = {"radii": radii, "values": vals,
                        "strictly_decreasing": bool(all(b < a for a, b in zip(vals, vals[1:])))}
    run.json("scan.json", data)
    print(f"verdict: {res.verdict}")
    for c, v in zip(res.centers, res.values):
        print("  " + ", ".join(f"{x:g}" for x in c) + f": sigma = {v:.8g}")
    return EXIT_OK


_BALL_FIELDS = ["radius", "mu_B", "muw_B", "avg_w", "avg_w_neg_power", "p", "min_w",
                "max_inv_w", "quadrature_error", "samples"]


def _ball_rows(model, check: str, balls, deltas):
    for b in balls:
        yield [check, *b.center, *[("" if getattr(b, f) is None else getattr(b, f)) for f in _BALL_FIELDS],
               *[b.sublevel.get(d, "") for d in deltas]]


def cmd_muck_check(run: Run, args) -> int:
    model = run.load_group()
    cfg = run.cfg
    w = str(_require(cfg, "weight"))
    R = float(cfg.get("R", 1.0))
    net = _centers(_require(cfg, "centers"), model)
    radii = cfg.get("radii")
    samples = int(cfg.get("samples", DEFAULT_SAMPLES))
    checks = cfg.get("checks", ["ap", "ainfty", "doubling"])
    caps = cfg.get("caps", {}) or {}
    deltas = [float(d) for d in cfg.get("delta_grid", DEFAULT_DELTAS)]
    common = dict(samples=samples, seed=run.seed, threads=run.threads)
    verdicts = {}
    balls_by_check = {}
    if "ap" in checks:
        v = ap_constant(model, w, float(cfg.get("p", 2.0)), R, net, radii,
                        cap=float(caps.get("ap", 100.0)), **common)
        verdicts["ap"], balls_by_check["ap"] = v, v.balls
    if "ainfty" in checks or "integral" in checks:
        v = ainfty_check(model, w, R, net, radii, deltas, float(caps.get("c_min", 0.5)), **common)
        verdicts["ainfty"], balls_by_check["ainfty"] = v, v.balls
    if "doubling" in checks or "integral" in checks:
        v = doubling_check(model, w, R, net, radii, float(caps.get("doubling", 1e3)), **common)
        verdicts["doubling"], balls_by_check["doubling"] = v, v.balls
    out: Dict[str, Any] = {"weight": w, "R": R, "group_hash": model.content_hash(),
                           "seed": run.seed,
                           "certificates": {k: v.summary() for k, v in verdicts.items()}}
    all_pass = all(v.passed for v in verdicts.values())
    if "integral" in checks:
        rays = [_vector(r, model.dim, "ray") for r in _require(cfg, "rays")]
        g = integral_growth_check(model, w, R, rays, int(cfg.get("K", 8)),
                                  float(cfg.get("spacing", 1.0)),
                                  config=VerdictConfig(**(cfg.get("verdict", {}) or {})), **common)
        label = discreteness_label(g, verdicts["doubling"], verdicts["ainfty"])
        out["integral_growth"] = {"verdict": g.verdict, "label": label,
                                  "rays": [{"ray": list(s.ray), "verdict": s.verdict,
                                            "centers": [list(c) for c in s.centers],
                                            "M": s.values} for s in g.rays]}
        run.csv("growth.csv", ["ray"] + coord_header("center", model.dim) + ["M", "verdict"],
                ([" ".join(f"{x:g}" for x in row["ray"]), *row["center"], row["M"], row["verdict"]]
                 for row in g.rows()))
        print(f"integral growth: {g.verdict}; label: {label}")
    if "thinness" in checks:
        th_cfg = cfg.get("thinness", {}) or {}
        th = sublevel_thinness(model, w, [float(m) for m in _require(th_cfg, "M_grid")],
                               float(th_cfg.get("r", R)), net,
                               float(th_cfg.get("tolerance", 1e-3)), **common)
        out["sublevel_thinness"] = {
            "pass": th.passed, "criterion": "sublevel-thinness sufficient condition",
            "label": ("sublevel-thinness sufficient condition passed" if th.passed
                      else "sublevel-thinness sufficient condition not met"),
            "M_grid": th.M_grid, "tolerance": th.tolerance}
        run.csv("thinness.csv", ["M"] + coord_header("center", model.dim) + ["norm", "measure", "fraction"],
                ([row["M"], *row["center"], row["norm"], row["measure"], row["fraction"]]
                 for row in th.rows()))
        print(out["sublevel_thinness"]["label"])
    header = ["check"] + coord_header("center", model.dim) + _BALL_FIELDS + \
        [f"sublevel_{d:.6g}" for d in deltas]
    rows = []
    for name in sorted(balls_by_check):
        rows.extend(_ball_rows(model, name, balls_by_check[name], deltas))
    run.csv("balls.csv", header, rows)
    run.json("verdict.json", out)
    for k, v in verdicts.items():
        print(f"{v.class_name}: constant {v.constant_estimate:.6g} -> {'pass' if v.passed else 'fail'}")
    return EXIT_OK if all_pass else EXIT_FAIL


def cmd_weight_transform(run: Run, args) -> int:
    model = run.load_group()
    cfg = run.cfg
    w = str(_require(cfg, "weight"))
    dom = _domain(_require(cfg, "domain"), model)
    h = _spacing(_require(cfg, "h"), model.dim)
    k = int(cfg.get("k", 5))
    lower = cfg.get("declared_lower")
    rep = equivalence_check(model, w, dom, h, k, cfg.get("bc", "Dirichlet"),
                            None if lower is None else float(lower),
                            tol=float(cfg.get("tol", 1e-9)))
    data = rep.to_dict()
    data.update({"weight": w, "group_hash": model.content_hash(), "k": k})
    run.json("report.json", data)
    print(f"V_w = {rep.potential}")
    print(f"sampled lower bound of V_w: {rep.lower_bound:.6g}")
    for a, b in zip(rep.weighted, rep.schrodinger):
        print(f"  {a:.8g}  {b:.8g}  diff {a - b:.3g}")
    for msg in rep.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "decide-poly": cmd_decide_poly,
    "eigen-scan": cmd_eigen_scan,
    "muck-check": cmd_muck_check,
    "weight-transform": cmd_weight_transform,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for scans")
    common.add_argument("--out", help="output directory (default subspec-out/<command>)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="subspec", parents=[common],
                                     description="Spectral discreteness tools for Schrodinger "
                                                 "operators on nilpotent Lie groups.")
    parser.add_argument("--version", action="version", version=f"subspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    dp = sub.add_parser("decide-poly", parents=[common],
                        help="exact discreteness decision for a polynomial potential")
    dp.add_argument("--group", help="preset (heisenberg:1, euclidean:2, engel) or definition file")
    dp.add_argument("--potential", help="polynomial, e.g. 'x^2+y^2' or a vector 'x, y'")
    for name, text in [("eigen-scan", "sigma scans along centres and tail-mass profile"),
                       ("muck-check", "local Muckenhoupt certificates and integral growth"),
                       ("weight-transform", "weighted sub-Laplacian vs Schrodinger equivalence")]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = None
    try:
        run = Run(args.command, args, _load_config(args.config))
        code = COMMANDS[args.command](run, args)
        run.manifest("ok", code)
        return code
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        _safe_manifest(run, f"no convergence: {exc}", EXIT_NOCONV)
        return EXIT_NOCONV
    except (UsageError, SubspecError, ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        _safe_manifest(run, f"input error: {msg}", EXIT_USAGE)
        return EXIT_USAGE


def _safe_manifest(run: Optional[Run], status: str, code: int) -> None:
    if run is None:
        return
    try:
        run.manifest(status, code)
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
