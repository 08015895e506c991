"""Command-line front end ``wavecli``.

Every subcommand writes its data files, a gnuplot script where a plot makes
sense, and ``manifest.txt`` into ``--out``.  Exit codes: 0 on success, 1 on
invalid input or configuration, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bandsolve import NonConvergence
from .dispersion import (
    PhysicalParams,
    c_fun,
    derived_constants,
    g_tilde,
    kappa,
    kappa_min,
    theta_min,
    t_fun,
    verify_no_nonzero_roots,
)
from .flatops import ITEMS, multiplier_const_checks
from .io import ConfigError, RunManifest, fmt, parse_config, read_field, write_field, write_table_csv
from .lumps import (
    kp_residual_normalized,
    kp_residual_physical,
    kp_residual_pointwise,
    lump_field,
    lump_u,
    matched_grid,
    nondegeneracy_report,
    normalization_map,
)
from .reconstruct import reconstruct_eta, reconstruction_report, trivial_flow
from .solver import SolverConfig, continuation_in_eps, reference_solution, solve
from .spectral import make_grid

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2
COMMANDS = ("dispersion", "lump", "flatops-check", "solve", "continue", "nondegen", "reconstruct", "selftest")


class UsageError(ValueError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Outcome:
    """What a subcommand produced."""

    code: int = EXIT_OK
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    status: str = "ok"


# argument types ----------------------------------------------------------------


def _beta(text: str):
    if text.strip().lower() == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"beta must be a number or 'auto', got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _even_int(text: str) -> int:
    n = int(text)
    if n <= 0 or n % 2:
        raise argparse.ArgumentTypeError(f"expected a positive even integer, got {text!r}")
    return n


def _add_physics(p, eps: float | None = 0.0, delta: bool = False):
    p.add_argument("--alpha", type=float, default=0.0, help="Beltrami constant, |alpha| < pi/2")
    p.add_argument("--beta", type=_beta, default=1.0, help="Bond number or 'auto' (= beta_star + 0.1)")
    if eps is not None:
        p.add_argument("--eps", type=float, default=eps, help="amplitude parameter")
    if delta:
        p.add_argument("--delta", type=float, default=0.3, help="band half-width")


def _add_grid(p, n: int = 256, L: float = 40.0):
    p.add_argument("--n", type=_even_int, default=n, help="modes per direction")
    p.add_argument("--L", type=float, default=L, help="half-period in lump variables")


def build_parser() -> tuple[_Parser, dict]:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file supplying option defaults")
    common.add_argument("--out", default="wavecli_out", help="output directory")
    common.add_argument("--binary", action="store_true", help="write fields in the little-endian binary format")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="wavecli", description="Full-dispersion KP-I numerical laboratory.")
    parser.add_argument("--version", action="version", version=f"wavecli {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    subs = {}

    p = sub.add_parser("dispersion", parents=[common], help="dispersion function scan and root report")
    _add_physics(p)
    p.add_argument("--mu-max", type=float, default=100.0)
    p.add_argument("--npoints", type=int, default=10_000)
    p.add_argument("--k1-max", type=float, default=1.0)
    p.add_argument("--m-max", type=float, default=1.0)
    p.add_argument("--nscan", type=int, default=101)
    subs["dispersion"] = p

    p = sub.add_parser("lump", parents=[common], help="sample a lump and report its residuals")
    p.add_argument("--k", type=int, choices=(1, 2), default=1)
    _add_physics(p, eps=None)
    p.add_argument("--physical", action="store_true", help="map to the physical KP equation")
    _add_grid(p)
    p.add_argument("--points", type=int, default=200, help="random points for the pointwise residual")
    p.add_argument("--nondegen", action="store_true", help="also run the nondegeneracy report")
    subs["lump"] = p

    p = sub.add_parser("flatops-check", parents=[common], help="constant-limit decay report")
    _add_physics(p, eps=None)
    p.add_argument("--bands", type=_float_list, default=[0.2, 0.1, 0.05])
    _add_grid(p)
    subs["flatops-check"] = p

    for name, help_ in (("solve", "solve the reduced equation"), ("continue", "continuation in eps")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--k", type=int, choices=(1, 2), default=1)
        _add_physics(p, eps=0.1 if name == "solve" else None, delta=True)
        if name == "continue":
            p.add_argument("--eps", type=_float_list, default=[0.2, 0.1, 0.05])
            p.add_argument("--save-fields", action="store_true")
        _add_grid(p)
        p.add_argument("--method", choices=("pipeline", "newton", "petviashvili"), default="pipeline")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--max-iter", type=int, default=30)
        p.add_argument("--krylov-tol", type=float, default=1e-8)
        p.add_argument("--theta", type=float, default=0.75)
        p.add_argument("--symmetry", choices=("even", "full"), default="even")
        p.add_argument("--sign", type=float, choices=(1.0, -1.0), default=1.0, help="sign of the initial lump")
        if name == "solve":
            p.add_argument("--init", choices=("lump", "zero", "file"), default="lump")
            p.add_argument("--input", help="initial field file for --init file")
        subs[name] = p

    p = sub.add_parser("nondegen", parents=[common], help="kernel of the linearisation at a lump")
    p.add_argument("--k", type=int, choices=(1, 2), default=1)
    _add_grid(p)
    p.add_argument("--symmetry", choices=("full", "even", "both"), default="both")
    p.add_argument("--n-eigs", type=int, default=8)
    subs["nondegen"] = p

    p = sub.add_parser("reconstruct", parents=[common], help="physical surface from a scaled field")
    p.add_argument("--input", help="field file written by solve (required)")
    _add_physics(p, eps=0.1, delta=True)
    p.add_argument("--nx", type=_even_int, default=256)
    p.add_argument("--ny", type=_even_int, default=256)
    p.add_argument("--Lx", type=float, default=None, help="physical half-period (default: full cell)")
    p.add_argument("--Ly", type=float, default=None)
    p.add_argument("--nz", type=int, default=65, help="heights for the trivial-flow profile")
    subs["reconstruct"] = p

    p = sub.add_parser("selftest", parents=[common], help="fast invariant checks of every module")
    subs["selftest"] = p
    return parser, subs


def _apply_config(sub: _Parser, path: str) -> None:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        if key in ("config", "help") or key not in actions:
            raise ConfigError(f"unknown config key {key!r} for {sub.prog}")
        act = actions[key]
        if act.nargs == 0:
            low = val.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{key}: expected a boolean, got {val!r}")
            defaults[key] = low in ("true", "1", "yes")
        else:
            defaults[key] = val
    sub.set_defaults(**defaults)


def parse_args(argv) -> argparse.Namespace:
    parser, subs = build_parser()
    argv = list(argv)
    if not argv:
        raise UsageError("missing subcommand; choose one of " + ", ".join(COMMANDS))
    if argv[0] not in COMMANDS and not argv[0].startswith("-"):
        raise UsageError(f"unknown subcommand {argv[0]!r}; choose one of " + ", ".join(COMMANDS))
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError("missing subcommand")
    if ns.config:
        _apply_config(subs[ns.command], ns.config)
        ns = parser.parse_args(argv)
    return ns


# helpers -------------------------------------------------------------------------


def _params(ns, eps: float = 0.0) -> PhysicalParams:
    return PhysicalParams(ns.alpha, ns.beta, eps, getattr(ns, "delta", 0.3))


def _ext(ns) -> str:
    return ".bin" if ns.binary else ".csv"


def _field_plot(path: Path, data: Path, title: str, binary: bool) -> Path:
    if binary:
        body = f"# {data.name} is binary; convert with beltrami_kp.io.read_field first\n"
    else:
        body = (
            "set datafile separator ','\n"
            "set view map\nset size ratio -1\n"
            f"set title '{title}'\n"
            f"plot '{data.name}' every ::1 using 1:2:3 with image notitle\n"
        )
    path.write_text("# gnuplot script\n" + body)
    return path


def _lines_plot(path: Path, data: Path, title: str, xcol: int, ycols: list, logscale: str = "") -> Path:
    plots = ", ".join(f"'{data.name}' every ::1 using {xcol}:{c} with linespoints title columnhead({c})" for c in ycols)
    text = "# gnuplot script\nset datafile separator ','\nset key autotitle columnhead\n"
    if logscale:
        text += f"set logscale {logscale}\n"
    text += f"set title '{title}'\nplot {plots}\n"
    path.write_text(text)
    return path


def _write_text(path: Path, lines) -> Path:
    path.write_text("\n".join(lines) + "\n")
    return path


def _solver_cfg(ns) -> SolverConfig:
    return SolverConfig(
        method=ns.method,
        max_iter=ns.max_iter,
        tol_residual=ns.tol,
        krylov_tol=ns.krylov_tol,
        theta=ns.theta,
        symmetry=ns.symmetry,
    )


# subcommands ---------------------------------------------------------------------


def cmd_dispersion(ns, out: Path) -> Outcome:
    params = _params(ns, ns.eps)
    k1 = np.linspace(-ns.k1_max, ns.k1_max, ns.nscan)
    m = np.linspace(-ns.m_max, ns.m_max, ns.nscan)
    K1, M = np.meshgrid(k1, m, indexing="ij")
    G = g_tilde(K1, M, params)
    model = (params.beta - params.beta0) * K1**2 + params.sec2_half * M**2
    scan = write_table_csv(
        out / "gtilde_scan.csv", ["k1", "m", "g_tilde", "quadratic_model"],
        zip(K1.ravel(), M.ravel(), G.ravel(), model.ravel()),
    )
    rep = verify_no_nonzero_roots(params, ns.mu_max, ns.npoints)
    dc = derived_constants(params.alpha)
    lines = [
        f"c0 = {fmt(dc.c0)}",
        f"c0_vec = {fmt(dc.c0_vec[0])}, {fmt(dc.c0_vec[1])}",
        f"beta0 = {fmt(dc.beta0)}",
        f"d_alpha = {fmt(dc.d_alpha)}",
        *rep.lines(),
    ]
    if rep.violations:
        lines.append("violating mu (first 10) = " + ", ".join(fmt(v) for v in rep.violations))
    report = _write_text(out / "roots_report.txt", lines)
    print("\n".join(lines))
    mu = np.linspace(0.0, ns.mu_max, 401)
    curves = write_table_csv(
        out / "c_kappa.csv", ["mu", "c", "kappa_min"], zip(mu, c_fun(mu, params.alpha), kappa_min(mu, params))
    )
    gp = _lines_plot(out / "plot_c_kappa.gp", curves, "c(mu) and kappa_min(mu)", 1, [2, 3])
    gp2 = (out / "plot_gtilde.gp")
    gp2.write_text(
        "# gnuplot script\nset datafile separator ','\nset view map\n"
        "plot 'gtilde_scan.csv' every ::1 using 1:2:3 with image notitle\n"
    )
    return Outcome(EXIT_OK, params.as_dict(), {}, [], [scan, report, curves, gp, gp2],
                   "ok" if rep.ok else "root scan violation")


def cmd_lump(ns, out: Path) -> Outcome:
    params = _params(ns) if ns.physical else None
    grid = matched_grid(params, ns.n, ns.L)
    u = lump_field(ns.k, grid, params)
    fpath = write_field(out / f"lump_k{ns.k}{_ext(ns)}", u, ns.binary)
    rng = np.random.default_rng(ns.seed)
    pts = rng.uniform(-5.0, 5.0, size=(ns.points, 2))
    pw = max((abs(kp_residual_pointwise(ns.k, x, y)) for x, y in pts), default=0.0)
    lines = [
        f"k = {ns.k}",
        f"u(0,0) normalised = {fmt(lump_u(ns.k, 0.0, 0.0))}",
        f"max pointwise residual at {ns.points} points = {pw:.3e}",
    ]
    if params is None:
        _, rn = kp_residual_normalized(u)
        lines.append(f"spectral residual (premultiplied, L2) = {fmt(rn)}")
    else:
        nm = normalization_map(params)
        _, rn = kp_residual_physical(u, params)
        lines += [f"A = {fmt(nm.A)}", f"a = {fmt(nm.a)}", f"b = {fmt(nm.b)}",
                  f"physical residual (divided, L2) = {fmt(rn)}"]
    outputs = [fpath]
    if ns.nondegen:
        for sym in ("full", "even"):
            rep = nondegeneracy_report(ns.k, make_grid(ns.n, ns.n, ns.L, ns.L), sym)
            lines += rep.lines()
    report = _write_text(out / "lump_report.txt", lines)
    print("\n".join(lines))
    outputs += [report, _field_plot(out / "plot_lump.gp", fpath, f"lump k={ns.k}", ns.binary)]
    return Outcome(EXIT_OK, {"k": ns.k, **(params.as_dict() if params else {})}, grid.as_dict(), [], outputs)


def cmd_flatops(ns, out: Path) -> Outcome:
    params = _params(ns)
    rep = multiplier_const_checks(params, tuple(ns.bands), ns.n, ns.L)
    verdict = rep.check()
    header = ["item", *[f"ratio_b{b:g}" for b in rep.bands], "exponent", "advertised", "expected_family", "pass"]
    rows = [r + [verdict[r[0]]] for r in rep.rows()]
    table = write_table_csv(out / "flatops_report.csv", header, rows)
    lines = [f"{it}: exponent {rep.exponents[it]:.3f} advertised {rep.advertised[it]:g} "
             f"family {rep.expected_family[it]:g} {'PASS' if verdict[it] else 'FAIL'}" for it in ITEMS]
    lines.append(f"limit of m = {fmt(rep.constants['m'])}, d_alpha = {fmt(params.d_alpha)}")
    report = _write_text(out / "flatops_report.txt", lines)
    print("\n".join(lines))
    return Outcome(EXIT_OK, {**params.as_dict(), "bands": list(ns.bands)}, {"n": ns.n, "L": ns.L}, [],
                   [table, report], "ok" if all(verdict.values()) else "some items off the expected order")


def _history_rows(history):
    rows, n = [], 0
    for rec in history:
        for i, r in enumerate(rec.residuals):
            rows.append([rec.method, i, n, r])
            n += 1
    return rows


def cmd_solve(ns, out: Path) -> Outcome:
    params = _params(ns, ns.eps)
    cfg = _solver_cfg(ns)
    grid = matched_grid(params.with_eps(0.0), ns.n, ns.L)
    inputs = []
    if ns.init == "file":
        if not ns.input:
            raise UsageError("--init file needs --input")
        z0 = read_field(ns.input)
        inputs.append(ns.input)
        grid = z0.grid
    elif ns.init == "zero":
        z0 = grid.zeros()
    else:
        z0 = lump_field(ns.k, grid, params.with_eps(0.0)) * ns.sign
    ref = reference_solution(ns.k, grid, params, cfg).zeta * ns.sign
    res = solve(z0, params, cfg, reference=ref)
    fpath = write_field(out / f"zeta{_ext(ns)}", res.zeta, ns.binary)
    hist = write_table_csv(out / "residual_history.csv", ["stage", "iteration", "total_iteration", "residual"],
                           _history_rows(res.history))
    lines = [
        f"converged = {res.converged}",
        f"residual = {fmt(res.residual_norm)}",
        f"iterations = {res.iterations}",
        *[f"distance {k} = {fmt(v)}" for k, v in res.distance_to_lump.items()],
        f"max|zeta| = {fmt(res.zeta.max_abs())}",
    ]
    if res.message:
        lines.append(f"message = {res.message}")
    report = _write_text(out / "solve_report.txt", lines)
    print("\n".join(lines))
    outputs = [fpath, hist, report,
               _field_plot(out / "plot_zeta.gp", fpath, f"zeta eps={ns.eps:g}", ns.binary),
               _lines_plot(out / "plot_residuals.gp", hist, "residual history", 3, [4], "y")]
    code = EXIT_OK if res.converged else EXIT_NUMERICAL
    return Outcome(code, {**params.as_dict(), "k": ns.k, **vars_cfg(cfg)}, grid.as_dict(), inputs, outputs,
                   "converged" if res.converged else "not converged")


def vars_cfg(cfg: SolverConfig) -> dict:
    return {f"solver_{k}": v for k, v in cfg.__dict__.items()}


def cmd_continue(ns, out: Path) -> Outcome:
    params = _params(ns, 0.0)
    cfg = _solver_cfg(ns)
    grid = matched_grid(params, ns.n, ns.L)
    cont = continuation_in_eps(ns.k, ns.eps, params, cfg, grid, sign=ns.sign)
    th = f"Y{1 + cfg.theta:g}"
    table = write_table_csv(
        out / "continuation.csv", ["eps", "converged", "iterations", "residual", "dist_Y1", f"dist_{th}"], cont.rows()
    )
    lines = [
        f"reference residual (eps = 0) = {fmt(cont.reference_residual)}",
        *[f"eps = {fmt(r[0])} converged = {r[1]} its = {r[2]} residual = {r[3]:.3e} "
          f"Y1 = {fmt(r[4])} {th} = {fmt(r[5])}" for r in cont.rows()],
        f"exponent Y1 = {fmt(cont.exponent_y1)} +- {fmt(cont.exponent_y1_stderr)}",
        f"exponent {th} = {fmt(cont.exponent_y1theta)}",
        f"complete = {cont.complete}",
    ]
    outputs = [table]
    if ns.save_fields:
        for e, r in zip(cont.eps_values, cont.results):
            outputs.append(write_field(out / f"zeta_eps{e:g}{_ext(ns)}", r.zeta, ns.binary))
    report = _write_text(out / "continuation_report.txt", lines)
    print("\n".join(lines))
    outputs += [report, _lines_plot(out / "plot_continuation.gp", table, "distance to the eps = 0 solution",
                                    1, [5, 6], "xy")]
    code = EXIT_OK if cont.complete else EXIT_NUMERICAL
    return Outcome(code, {**params.as_dict(), "k": ns.k, "eps_list": list(ns.eps), **vars_cfg(cfg)},
                   grid.as_dict(), [], outputs, "complete" if cont.complete else "partial")


def cmd_nondegen(ns, out: Path) -> Outcome:
    grid = make_grid(ns.n, ns.n, ns.L, ns.L)
    syms = ("full", "even") if ns.symmetry == "both" else (ns.symmetry,)
    lines, rows, conclusive = [], [], True
    for sym in syms:
        rep = nondegeneracy_report(ns.k, grid, sym, n_eigs=ns.n_eigs)
        expected = 2 if sym == "full" else 0
        lines += rep.lines() + [f"verdict = {'PASS' if rep.passed(expected) else 'FAIL'}", ""]
        rows += [[sym, i, v] for i, v in enumerate(rep.eigenvalues)]
        conclusive &= rep.conclusive
    table = write_table_csv(out / "nondegen.csv", ["symmetry", "index", "eigenvalue"], rows)
    report = _write_text(out / "nondegen_report.txt", lines)
    print("\n".join(lines))
    return Outcome(EXIT_OK if conclusive else EXIT_NUMERICAL, {"k": ns.k, "symmetry": ns.symmetry},
                   grid.as_dict(), [], [table, report], "ok" if conclusive else "inconclusive")


def cmd_reconstruct(ns, out: Path) -> Outcome:
    if not ns.input:
        raise UsageError("reconstruct needs --input")
    params = _params(ns, ns.eps)
    zeta = read_field(ns.input)
    e = params.eps
    Lx = ns.Lx if ns.Lx is not None else (zeta.grid.Lx / e if e > 0 else zeta.grid.Lx)
    Ly = ns.Ly if ns.Ly is not None else (zeta.grid.Ly / e**2 if e > 0 else zeta.grid.Ly)
    phys = make_grid(ns.nx, ns.ny, Lx, Ly)
    eta = reconstruct_eta(zeta, params, phys)
    fpath = write_field(out / f"eta{_ext(ns)}", eta, ns.binary)
    rep = reconstruction_report(zeta, eta, params)
    z = np.linspace(-1.0, 0.0, ns.nz)
    u = trivial_flow(params.alpha, params.c_vec, z)
    flow = write_table_csv(out / "trivial_flow.csv", ["z", "u1", "u2", "u3"], np.column_stack([z, u]))
    lines = rep.lines() + [f"trivial flow speed |c| = {fmt(float(np.hypot(*params.c_vec)))}"]
    report = _write_text(out / "reconstruct_report.txt", lines)
    print("\n".join(lines))
    outputs = [fpath, flow, report, _field_plot(out / "plot_eta.gp", fpath, "eta_1", ns.binary)]
    return Outcome(EXIT_OK, params.as_dict(), phys.as_dict(), [ns.input], outputs)


# self test -------------------------------------------------------------------------


def _selftest_checks():
    from .flatops import M0_apply, VectorField2D
    from .spectral import RealField2D, inverse, symmetrize, transform

    def spectral_roundtrip():
        g = make_grid(32, 16, 3.0, 2.0)
        f = RealField2D(g, np.random.default_rng(1).standard_normal(g.shape))
        return np.max(np.abs(inverse(transform(f)).values - f.values)) < 1e-12 * f.max_abs()

    def spectral_symmetrize():
        g = make_grid(16, 16, 1.0, 1.0)
        f = RealField2D(g, np.random.default_rng(2).standard_normal(g.shape))
        s = symmetrize(f)
        return np.max(np.abs(symmetrize(s).values - s.values)) < 1e-15

    def dispersion_constants():
        dc = derived_constants(0.0)
        return abs(dc.beta0 - 1 / 3) < 1e-12 and abs(dc.beta_star - 1 / 3) < 1e-12 and abs(dc.d_alpha - 1.5) < 1e-12

    def dispersion_t_times_c():
        mu = np.linspace(0.0, 100.0, 1001)
        return all(np.max(np.abs(t_fun(mu, a) * c_fun(mu, a) - 1)) < 1e-12 for a in (0.0, 0.7, 1.2))

    def dispersion_kappa_argmin():
        p = PhysicalParams(1.0, 1.0)
        th = np.linspace(-1.5, 1.5, 100_001)
        return abs(np.min(kappa(2.0, th, p)) - kappa_min(2.0, p)) < 1e-8 and abs(
            kappa(2.0, theta_min(2.0, p), p) - kappa_min(2.0, p)) < 1e-12

    def lumps_pointwise():
        return abs(kp_residual_pointwise(1, 0.7, -1.3)) < 1e-12 and abs(kp_residual_pointwise(2, 0.3, 0.9)) < 1e-12

    def lumps_values():
        return abs(lump_u(1, 0.0, 0.0) + 4 / 3) < 1e-15

    def flatops_gradient():
        g = make_grid(32, 32, 8.0, 8.0)
        X, Y = g.mesh
        phi = np.exp(-(X**2 + Y**2) / 4)
        gx = np.real(np.fft.ifft2(1j * g.kmesh[0] * np.fft.fft2(phi)))
        gy = np.real(np.fft.ifft2(1j * g.kmesh[1] * np.fft.fft2(phi)))
        r = M0_apply(VectorField2D(RealField2D(g, gx), RealField2D(g, gy)), PhysicalParams(0.5, 1.0))
        return r.max_abs() < 1e-12

    def solver_zero_branch():
        p = PhysicalParams(0.0, 1.0, 0.0)
        g = matched_grid(p, 32, 20.0)
        return solve(g.zeros(), p, SolverConfig(method="newton")).converged

    return [
        ("spectral", "transform round trip", spectral_roundtrip),
        ("spectral", "symmetrize idempotent", spectral_symmetrize),
        ("dispersion", "constants at alpha = 0", dispersion_constants),
        ("dispersion", "t c = 1", dispersion_t_times_c),
        ("dispersion", "kappa_min is the minimum", dispersion_kappa_argmin),
        ("kp-lumps", "pointwise residual", lumps_pointwise),
        ("kp-lumps", "u1(0,0) = -4/3", lumps_values),
        ("flatops", "M0 annihilates gradients", flatops_gradient),
        ("reduced-solver", "zero is a solution", solver_zero_branch),
    ]


def cmd_selftest(ns, out: Path) -> Outcome:
    rows, ok = [], True
    for module, name, fn in _selftest_checks():
        try:
            passed = bool(fn())
        except Exception as exc:  # a crashing check is a failing check
            logger.debug("selftest %s raised %r", name, exc)
            passed = False
        ok &= passed
        rows.append([module, name, "PASS" if passed else "FAIL"])
    width = max(len(r[0]) + len(r[1]) for r in rows) + 3
    for r in rows:
        print(f"{r[0]}: {r[1]}".ljust(width) + r[2])
    table = write_table_csv(out / "selftest.csv", ["module", "check", "result"], rows)
    return Outcome(EXIT_OK if ok else EXIT_NUMERICAL, {}, {}, [], [table], "ok" if ok else "failures")


HANDLERS = {
    "dispersion": cmd_dispersion,
    "lump": cmd_lump,
    "flatops-check": cmd_flatops,
    "solve": cmd_solve,
    "continue": cmd_continue,
    "nondegen": cmd_nondegen,
    "reconstruct": cmd_reconstruct,
    "selftest": cmd_selftest,
}


def run_subcommand(argv) -> int:
    """Run one subcommand and return its exit code."""
    try:
        ns = parse_args(argv)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(ns.out)
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        outcome = HANDLERS[ns.command](ns, out)
    except NonConvergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    opts = {k: v for k, v in vars(ns).items() if k not in ("command",)}
    manifest = RunManifest(
        command=ns.command,
        params={**opts, **outcome.params},
        grid=outcome.grid,
        version=__version__,
        inputs=[str(p) for p in outcome.inputs],
        outputs=[str(p) for p in outcome.outputs] + [str(out / "manifest.txt")],
        wall_time=time.perf_counter() - t0,
        seed=ns.seed,
        threads=1,
        status=outcome.status,
    )
    manifest.write(out / "manifest.txt")
    return outcome.code


def main(argv=None) -> int:
    return run_subcommand(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
