"""Command-line front end: ``wulffcurv {wulff,identities,variation,stability,all}``.

Every command writes ``report.json`` (schema version 1) and ``report.csv`` into
``--out``; ``wulff`` and ``stability`` also write OBJ meshes.  Exit codes:
0 all checks pass, 2 some tolerance check failed, 3 a precondition failed
(non-convex anisotropy, non-critical surface), 4 the command line or a
description string could not be parsed.

``WULFFCURV_THREADS`` caps the worker threads used for independent pieces
(per r, per variation field); results are always collected in input order.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from ._sphere import sample_sphere
from .curvature import newton_kronecker, sigma_kronecker, trace_identities
from .errors import (ConvexityViolation, ImmersionLoss, NotCritical, SpecParseError,
                     WulffCurvError)
from .functionals import (NormalField, constant_field, divergence_lemma_residuals,
                          euler_lagrange_residual, first_variation_sweep, functional_report,
                          minkowski_residual, random_vector_field)
from .geometry import Sphere, WulffSurface, build_grid
from .mesh import build_mesh, write_obj, write_vertex_scalars
from .specs import parse_anisotropy, parse_surface
from .stability import constrained_spectrum, assemble_form, test_function

SCHEMA_VERSION = 1
EXIT_OK, EXIT_TOL, EXIT_PRECONDITION, EXIT_PARSE = 0, 2, 3, 4


@dataclass
class RunConfig:
    command: str = "all"
    F: str = "const:c=1"
    surface: str | None = None
    r: list = field(default_factory=lambda: [0, 1])
    level: int = 4
    subdiv: int = 5
    conv_levels: list | None = None
    seed: int = 0
    fields: int = 3
    modes: int = 16
    export_modes: int = 0
    fd_h: float = 1e-3
    tol_identity: float = 1e-10
    tol_wulff: float = 1e-6
    tol_minkowski: float = 1e-8
    tol_variation: float = 1e-5
    tol_volume: float = 1e-6
    tol_order: float = 1.8
    tol_stab: float = 1e-2
    tol_kernel: float = 1e-2
    tol_el: float = 1e-6
    tol_oracle: float = 1e-5
    out: str = "wulffcurv_out"

    def validate(self):
        for name, value in asdict(self).items():
            if name.startswith("tol_") and not value > 0:
                raise SpecParseError(f"--{name.replace('_', '-')} must be positive")
        if self.fd_h <= 0:
            raise SpecParseError("--fd-h must be positive")
        if self.level < 1 or self.subdiv < 0:
            raise SpecParseError("--level must be >= 1 and --subdiv >= 0")
        if any(r < 0 for r in self.r):
            raise SpecParseError("--r values must be non-negative")

    def echo(self):
        """Configuration as recorded in the report (output location omitted)."""
        d = asdict(self)
        d.pop("out")
        return d


# ---------------------------------------------------------------------------
# report document
# ---------------------------------------------------------------------------
def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


class Report:
    def __init__(self, cfg):
        self.doc = {"schema": "wulffcurv.report", "version": SCHEMA_VERSION,
                    "config": cfg.echo(), "functionals": [], "checks": [], "spectra": [],
                    "test_functions": [], "oracles": [], "wulff": None, "notes": []}
        self.timings = {}
        self.precondition_failed = False

    def check(self, section, name, value, tolerance, passed, r=None, **extra):
        row = dict(section=section, name=name, r=r, value=value, tolerance=tolerance,
                   passed=bool(passed))
        row.update(extra)
        self.doc["checks"].append(row)

    def timed(self, key):
        report = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                report.timings[key] = report.timings.get(key, 0.0) + time.perf_counter() - self.t

        return _Timer()

    @property
    def all_passed(self):
        return all(row["passed"] for row in self.doc["checks"]) and all(
            o["passed"] for o in self.doc["oracles"])

    def canonical(self):
        """Deterministic JSON text of everything except timings."""
        return json.dumps(_clean(self.doc), sort_keys=True, indent=1)

    def write(self, out):
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        doc = dict(_clean(self.doc))
        doc["timings"] = {k: round(v, 6) for k, v in sorted(self.timings.items())}
        (out / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        with open(out / "report.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["section", "name", "r", "value", "tolerance", "passed"])
            for row in _clean(self.doc["checks"]):
                w.writerow([row["section"], row["name"], "" if row["r"] is None else row["r"],
                            repr(row["value"]), repr(row["tolerance"]), row["passed"]])
            for spec in _clean(self.doc["spectra"]):
                for i, mu in enumerate(spec.get("eigenvalues", [])):
                    w.writerow(["spectrum", f"mode_{i}", spec["r"], repr(mu), "", ""])


def _threads():
    try:
        return max(1, int(os.environ.get("WULFFCURV_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    workers = min(_threads(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------
def _setup(cfg):
    surface = parse_surface(cfg.surface or f"wulff:F={cfg.F}")
    model = parse_anisotropy(cfg.F, n=surface.n)
    if model.dim != surface.n:
        raise SpecParseError(f"anisotropy lives on S^{model.dim}, surface on S^{surface.n}")
    return surface, model


def _require_convex(model):
    rep = model.check_convexity(2)
    if not rep.passed:
        raise ConvexityViolation(f"{model.label} is not convex", argmin=rep.argmin_point,
                                 min_eigenvalue=rep.min_eigenvalue_of_A_F)
    return rep


def _is_wulff_of(surface, model):
    return isinstance(surface, WulffSurface) and surface.model == model


def _is_unit_round(surface, model):
    unit = (isinstance(surface, Sphere) and surface.R == 1.0) or (
        isinstance(surface, WulffSurface) and surface.model.kind == "const"
        and surface.model.c == 1.0)
    return unit and surface.n == 2 and model.kind == "const" and model.c == 1.0


def run_wulff(cfg, rep):
    model = parse_anisotropy(cfg.F)
    with rep.timed("wulff"):
        conv = model.check_convexity(2)
        rep.doc["convexity"] = conv.as_dict()
        rep.check("wulff", "convexity of D^2F + F", conv.min_eigenvalue_of_A_F, 0.0, conv.passed)
        if not conv.passed:
            raise ConvexityViolation(f"{model.label} is not convex", argmin=conv.argmin_point,
                                     min_eigenvalue=conv.min_eigenvalue_of_A_F)
        surface = WulffSurface(model)
        info = dict(F=model.label)
        if surface.n == 2:
            mesh = build_mesh(surface, cfg.subdiv)
            Path(cfg.out).mkdir(parents=True, exist_ok=True)
            write_obj(mesh, Path(cfg.out) / "wulff.obj")
            info.update(vertices=len(mesh.vertices), faces=len(mesh.faces),
                        centroid=mesh.vertices.mean(axis=0), bbox_min=mesh.vertices.min(axis=0),
                        bbox_max=mesh.vertices.max(axis=0), mesh_area=mesh.area)
        grid = build_grid(surface, cfg.level)
        info["area"] = grid.area
        info["anisotropic_area"] = functional_report(grid, model, 0).value
        rep.doc["wulff"] = info


def run_identities(cfg, rep):
    surface, model = _setup(cfg)
    _require_convex(model)
    n = surface.n
    with rep.timed("identities"):
        grid = build_grid(surface, cfg.level)
        b = grid.bundle(model)
        ti = trace_identities(b)
        for key, label in (("trace_PS", "tr(P_r s) = (r+1) sigma_{r+1}"),
                           ("trace_P", "tr(P_r) = (n-r) sigma_r"),
                           ("trace_PS2", "tr(P_r s^2) = sigma_1 sigma_{r+1} - (r+2) sigma_{r+2}")):
            for r in range(n + 1):
                v = float(np.max(ti[key][:, r]))
                rep.check("identities", label, v, cfg.tol_identity, v <= cfg.tol_identity, r)
        scale = 1.0 + np.max(np.abs(b.s), axis=(-2, -1))
        for r in range(n + 1):
            sk = sigma_kronecker(b.s, r)
            v = float(np.max(np.abs(sk - b.sigma[:, r]) / scale ** max(r, 1)))
            rep.check("identities", "sigma_r: Kronecker sum vs eigenvalues", v,
                      cfg.tol_identity, v <= cfg.tol_identity, r)
            pk = newton_kronecker(b.s, r)
            v = float(np.max(np.abs(pk - b.P[:, r]) / scale[:, None, None] ** max(r, 1)))
            rep.check("identities", "P_r: Kronecker sum vs recursion", v,
                      cfg.tol_identity, v <= cfg.tol_identity, r)
        if _is_wulff_of(surface, model):
            v = float(np.max(np.abs(b.s - np.eye(n))))
            rep.check("identities", "Wulff shape: s = identity", v, cfg.tol_wulff,
                      v <= cfg.tol_wulff)
        for r in range(n):
            v = minkowski_residual(grid, model, r, relative=True)
            rep.check("identities", "Minkowski formula (relative)", v, cfg.tol_minkowski,
                      v <= cfg.tol_minkowski, r)
        rep.doc["functionals"] = [functional_report(grid, model, r).as_dict()
                                  for r in range(n)]
    with rep.timed("divergence_lemma"):
        levels = cfg.conv_levels or [max(1, cfg.level - 1), cfg.level]
        rs = [r for r in cfg.r if r <= n - 1]

        def sweep(r):
            out = []
            for L in levels:
                g = grid if L == cfg.level else build_grid(surface, L)
                resF, resX = divergence_lemma_residuals(g, model, r)
                out.append((float(np.max(np.abs(resF))), float(np.max(np.abs(resX)))))
            return out

        for r, table in zip(rs, _pmap(sweep, rs)):
            for k, label in ((0, "divergence of P_r grad F(nu)"), (1, "divergence of P_r X^T")):
                errs = [row[k] for row in table]
                orders = [math.log2(errs[i] / errs[i + 1]) if errs[i + 1] > 0 else math.inf
                          for i in range(len(errs) - 1)]
                converged = errs[-1] <= 1e-8
                ok = converged or (len(orders) > 0 and min(orders) >= cfg.tol_order)
                rep.check("identities", label + ": observed order",
                          min(orders) if orders else None, cfg.tol_order, ok, r,
                          levels=levels, sup_residuals=errs)


def _fields(cfg, surface):
    n = surface.n
    out = [(f"random(seed={cfg.seed + k})", random_vector_field(n, cfg.seed + k))
           for k in range(cfg.fields)]
    a = np.zeros(n + 1)
    a[0] = 0.4
    a[-1] = -0.3
    out.append(("translation", constant_field(a)))
    out.append(("unit normal", NormalField(surface, lambda q: np.ones(len(np.atleast_2d(q))))))
    return out


def run_variation(cfg, rep):
    surface, model = _setup(cfg)
    _require_convex(model)
    n = surface.n
    rs = [r for r in cfg.r if r <= n - 1]
    with rep.timed("variation"):
        grid = build_grid(surface, cfg.level)
        lam, sup = euler_lagrange_residual(grid, model, rs[0] if rs else 0)
        fields = _fields(cfg, surface)

        def one(item):
            tag, W = item
            try:
                return tag, first_variation_sweep(grid, model, W, rs, h=cfg.fd_h), None
            except ImmersionLoss as exc:
                return tag, None, str(exc)

        for tag, results, err in _pmap(one, fields):
            if err is not None:
                rep.check("variation", "immersion lost", None, None, True, field=tag,
                          immersion_loss=True, message=err)
                continue
            vol = results[0]
            rep.check("variation", "volume derivative = int psi", vol.volume_mismatch,
                      cfg.tol_volume, vol.volume_mismatch <= cfg.tol_volume, field=tag,
                      fd=vol.volume_fd, formula=vol.volume_formula)
            for fv in results:
                rep.check("variation", "first variation = -(r+1) int psi sigma_{r+1}",
                          fv.mismatch, cfg.tol_variation, fv.mismatch <= cfg.tol_variation,
                          fv.r, field=tag, fd=fv.fd_derivative, formula=fv.formula_value)
                lam_r, sup_r = euler_lagrange_residual(grid, model, fv.r)
                if sup_r <= cfg.tol_el * max(1.0, abs(lam_r)):
                    size = max(abs(fv.fd_derivative), abs(lam_r * fv.volume_fd), 1e-3 * fv.scale)
                    v = abs(fv.lagrangian_fd) / size
                    rep.check("variation", "critical point: d/dt (A_r + Lambda V) = 0", v,
                              cfg.tol_variation, v <= cfg.tol_variation, fv.r, field=tag)
    with rep.timed("oracles"):
        if n == 1:
            rep.doc["oracles"].append(oracle.curve_case(surface, model).as_dict())
        else:
            u = sample_sphere(n, 12, cfg.seed)
            for tag, W in fields:
                try:
                    g = oracle.gauss_map_variation_check(surface, W, u, tol=cfg.tol_oracle)
                    a = oracle.area_element_variation_check(surface, W, min(cfg.level, 4),
                                                            tol=cfg.tol_oracle)
                except ImmersionLoss:
                    continue
                for o in (g, a):
                    d = o.as_dict()
                    d["field"] = tag
                    rep.doc["oracles"].append(d)


def run_stability(cfg, rep):
    surface, model = _setup(cfg)
    _require_convex(model)
    n = surface.n
    if n != 2:
        raise SpecParseError("stability needs a surface in R^3")
    rs = [r for r in cfg.r if r <= n - 1]
    with rep.timed("stability_mesh"):
        grid = build_grid(surface, cfg.level)
        mesh = build_mesh(surface, cfg.subdiv)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        write_obj(mesh, Path(cfg.out) / "mesh.obj")

    def one(r):
        lam, sup = euler_lagrange_residual(grid, model, r)
        if sup > cfg.tol_el * max(1.0, abs(lam)):
            return r, None, None, sup
        form = assemble_form(mesh, model, r)
        spec = constrained_spectrum(form, cfg.modes, kernel_rel=cfg.tol_kernel,
                                    stab_tol=cfg.tol_stab,
                                    return_vectors=cfg.export_modes > 0)
        diag = test_function(grid, mesh, model, r, el_tol=cfg.tol_el, form=form)
        return r, spec, diag, sup

    with rep.timed("stability"):
        for r, spec, diag, sup in _pmap(one, rs):
            if spec is None:
                rep.precondition_failed = True
                rep.doc["spectra"].append(dict(r=r, status="not_critical", sup_residual=sup))
                rep.doc["notes"].append(f"r={r}: H_{r + 1} not constant, sup residual {sup:.3e}")
                continue
            block = spec.as_dict()
            block.update(r=r, status="ok", el_sup_residual=sup)
            rep.doc["spectra"].append(block)
            rep.check("stability", "lowest constrained eigenvalue >= -stab_tol",
                      float(spec.eigenvalues[0]), cfg.tol_stab, spec.verdict == "stable", r)
            rep.check("stability", "near-kernel dimension = n+1 (translations)",
                      spec.kernel_dim, n + 1, spec.kernel_dim == n + 1, r)
            d = diag.as_dict()
            d["r"] = r
            rep.doc["test_functions"].append(d)
            v = abs(diag.psi_star_integral) / grid.area
            rep.check("stability", "test function has zero mean", v, 1e-8, v <= 1e-8, r)
            for name, val in (("gap term 1", diag.gap_term_1), ("gap term 2", diag.gap_term_2)):
                rep.check("stability", name + " >= 0", val, 1e-10, val >= -1e-10, r)
            if _is_unit_round(surface, model):
                ref = (r + 1) * oracle.expand_spectrum(oracle.harmonic_spectrum(3))
                m = min(len(ref), len(spec.eigenvalues))
                dev = float(np.max(np.abs(spec.eigenvalues[:m] - ref[:m])) / ref[3])
                rep.doc["oracles"].append(dict(
                    name="harmonic_spectrum", digest=f"r={r},subdiv={cfg.subdiv}",
                    oracle=dict(values=ref[:m]), main=dict(values=spec.eigenvalues[:m]),
                    deviation=dev, tolerance=0.02, passed=dev <= 0.02))
            for i in range(min(cfg.export_modes, spec.eigenvectors.shape[1]
                               if spec.eigenvectors is not None else 0)):
                write_vertex_scalars(Path(cfg.out) / f"mode_r{r}_{i}.txt",
                                     spec.eigenvectors[:, i], f"r={r} mode {i}")


COMMANDS = {
    "wulff": [run_wulff],
    "identities": [run_identities],
    "variation": [run_variation],
    "stability": [run_stability],
    "all": [run_wulff, run_identities, run_variation, run_stability],
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    d = RunConfig()
    p = _Parser(prog="wulffcurv", description="Anisotropic r-th mean curvature checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--F", default=d.F, help="anisotropy, e.g. norm:B=[2,1,1]")
        s.add_argument("--surface", default=None,
                       help="surface, e.g. ellipsoid:a=1,b=1,c=2 (default: Wulff shape of F)")
        s.add_argument("--r", type=_int_list, default=d.r, help="comma-separated r values")
        s.add_argument("--level", type=int, default=d.level, help="quadrature grid level")
        s.add_argument("--conv-levels", type=_int_list, default=None,
                       help="grid levels of the convergence study (default: level-1,level)")
        s.add_argument("--subdiv", type=int, default=d.subdiv, help="icosphere subdivisions")
        s.add_argument("--out", default=d.out, help="output directory")
        s.add_argument("--seed", type=int, default=d.seed)
        s.add_argument("--fields", type=int, default=d.fields,
                       help="number of random variation fields")
        s.add_argument("--modes", type=int, default=d.modes, help="eigenvalues to compute")
        s.add_argument("--export-modes", type=int, default=d.export_modes,
                       help="write this many eigenmodes as vertex scalar files")
        s.add_argument("--fd-h", type=float, default=d.fd_h, help="variation step")
        for key, value in asdict(d).items():
            if key.startswith("tol_"):
                s.add_argument("--" + key.replace("_", "-"), type=float, default=value)
    return p


def config_from_args(args):
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__})
    cfg.validate()
    return cfg


def run(cfg):
    """Run a command; returns ``(exit_code, Report)``."""
    rep = Report(cfg)
    code = EXIT_OK
    try:
        for step in COMMANDS[cfg.command]:
            step(cfg, rep)
    except SpecParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE, rep
    except ConvexityViolation as exc:
        argmin = None if exc.argmin is None else np.round(np.asarray(exc.argmin), 6).tolist()
        print(f"convexity violation: {exc}; argmin {argmin}, "
              f"min eigenvalue {exc.min_eigenvalue}", file=sys.stderr)
        rep.doc["notes"].append(f"convexity violation at {argmin}")
        rep.precondition_failed = True
    except NotCritical as exc:
        rep.doc["notes"].append(str(exc))
        rep.precondition_failed = True
    if rep.precondition_failed:
        code = EXIT_PRECONDITION
    elif not rep.all_passed:
        code = EXIT_TOL
    rep.doc["exit_code"] = code
    rep.write(cfg.out)
    return code, rep


def _summary(rep):
    lines = []
    for row in rep.doc["checks"]:
        tag = "PASS" if row["passed"] else "FAIL"
        r = "" if row["r"] is None else f" r={row['r']}"
        lines.append(f"[{tag}] {row['section']}: {row['name']}{r} -> {row['value']}")
    for o in rep.doc["oracles"]:
        tag = "PASS" if o["passed"] else "FAIL"
        lines.append(f"[{tag}] oracle {o['name']}: deviation {o['deviation']:.3e}")
    return "\n".join(lines)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except SpecParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        code, rep = run(cfg)
    except WulffCurvError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TOL
    if code == EXIT_PARSE:
        return code
    print(_summary(rep))
    print(f"report written to {Path(cfg.out) / 'report.json'} (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
