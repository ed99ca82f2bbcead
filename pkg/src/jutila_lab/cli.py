"""Command-line driver: `jutila-lab <subcommand> [flags]`.

Exit codes: 0 success, 2 invalid input, 3 budget exceeded, 4 unsupported twist.
Every run writes CSV (default) or JSON headed by the package version and a
hash of the effective configuration.  Thread count is excluded from the
hash and never changes the output.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .arithforms import coefficients, get_form
from .farey import FareyParams, build_farey_system
from .lfunction import (afe_evaluate, completed_record, default_m0, subconvexity_scan)
from .sieve import (ResonanceQuery, SieveBudgetError, SieveBand, band_members, gk_bound,
                    resonance_count_B)
from .special import CutoffG, QuadratureBudgetError
from .statphase import block_phase_data, check_stationary_phase, mid_support_ells
from .voronoi import (MAX_TWIST_MODULUS, TestFunction, UnsupportedTwist, VoronoiSpec,
                      additive_twist_decompose, verify_twist_identity, voronoi_lhs, voronoi_rhs)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_TWIST = 0, 2, 3, 4
_NOT_HASHED = {"out", "threads", "config", "command", "handler"}


@dataclass
class RunConfig:
    """Validated settings for one run; `values` holds every flag after precedence."""

    subcommand: str
    values: dict[str, Any] = field(default_factory=dict)

    @property
    def threads(self) -> int:
        return int(self.values.get("threads") or 1)

    @property
    def fmt(self) -> str:
        return self.values.get("format", "csv")

    def config_hash(self) -> str:
        items = sorted((k, repr(v)) for k, v in self.values.items() if k not in _NOT_HASHED)
        blob = self.subcommand + "\n" + "\n".join(f"{k}={v}" for k, v in items)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- formatting

def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render(cfg: RunConfig, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    if cfg.fmt == "json":
        doc = {"version": __version__, "config_hash": cfg.config_hash(), "subcommand": cfg.subcommand,
               "rows": [dict(zip(columns, (_jsonable(v) for v in r))) for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    lines = [f"# jutila-lab v{__version__}, config-hash={cfg.config_hash()}", ",".join(columns)]
    lines += [",".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return v


def _pool_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- subcommands

def cmd_coeffs(cfg: RunConfig):
    v = cfg.values
    if v["limit"] < 1:
        raise ValueError("--limit must be positive")
    tab = coefficients(v["form"], v["limit"])
    rows = [(n, int(tab.raw[n]), float(tab.lam[n])) for n in range(1, v["limit"] + 1)]
    return ("n", "a_n", "lambda_n"), rows


def _t_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_lvalue(cfg: RunConfig):
    v = cfg.values
    ts = _t_list(v["t"])
    if v["method"] == "afe":
        cut = CutoffG(power=v["cutoff_power"])
        recs = _pool_map(lambda t: afe_evaluate(v["form"], t, cut), ts, cfg.threads)
    else:
        recs = _pool_map(lambda t: completed_record(v["form"], t), ts, cfg.threads)
    rows = [(r.t, r.L_half.real, r.L_half.imag, abs(r.L_half), r.method, r.truncation, r.error_estimate)
            for r in recs]
    return ("t", "re_L", "im_L", "abs_L", "method", "truncation", "error_estimate"), rows


def cmd_afe_check(cfg: RunConfig):
    v = cfg.values
    ts = _t_list(v["t"])

    def one(t):
        a = afe_evaluate(v["form"], t, CutoffG(power=v["cutoff_power"]))
        c = completed_record(v["form"], t)
        diff = abs(a.L_half - c.L_half)
        bound = v["tol"] * max(1.0, abs(c.L_half))
        return (t, a.L_half.real, a.L_half.imag, c.L_half.real, c.L_half.imag, diff,
                a.error_estimate, diff <= bound)

    rows = _pool_map(one, ts, cfg.threads)
    return ("t", "afe_re", "afe_im", "completed_re", "completed_im", "abs_diff", "afe_error_scale", "pass"), rows


def cmd_twist_check(cfg: RunConfig):
    v = cfg.values
    s = complex(v["s_re"], v["s_im"])
    dec = additive_twist_decompose(v["form"], Fraction(v["a"], v["q"]), v["max_modulus"])
    res = verify_twist_identity(dec, s, v["X"])
    row = (v["a"], v["q"], len(dec.terms), s.real, s.imag, res.residual, res.tail_bound,
           res.residual <= res.tail_bound)
    return ("a", "q", "terms", "s_re", "s_im", "residual", "tail_bound", "pass"), [row]


def _support(text: str) -> tuple[float, float]:
    try:
        A, B = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"--support must look like A:B, got {text!r}") from None
    if not 0 < A < B:
        raise ValueError("--support needs 0 < A < B")
    return A, B


def cmd_voronoi_check(cfg: RunConfig):
    v = cfg.values
    A, B = _support(v["support"])
    ramp = v["ramp"] if v["ramp"] > 0 else (B - A) / 4
    F = TestFunction(A, B, ramp, v["kind"])
    quad = VoronoiSpec(tol=v["tol"], max_terms=v["max_terms"], points_per_cycle=v["points_per_cycle"],
                       threads=cfg.threads)
    lhs = voronoi_lhs(coefficients(v["form"], int(B) + 1), v["a"], v["q"], F)
    rhs = voronoi_rhs(v["form"], v["a"], v["q"], F, quad)
    err = abs(lhs - rhs.value)
    rel = err / abs(lhs) if lhs != 0 else math.inf
    row = (lhs.real, lhs.imag, rhs.value.real, rhs.value.imag, err, rel, rhs.truncation)
    return ("lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_err", "rel_err", "ell_truncation"), [row]


def _farey_params(v) -> FareyParams:
    M0 = v["M0"] if v["M0"] > 0 else default_m0(v["t"])
    M = v["M"] if v["M"] > 0 else M0
    M1 = v["M1"] if v["M1"] > 0 else M
    M2 = v["M2"] if v["M2"] > 0 else 2 * M1
    return FareyParams(v["t"], M, M0, M1, M2, v["s"])


def cmd_farey(cfg: RunConfig):
    v = cfg.values
    system = build_farey_system(_farey_params(v), v["level"])
    lines = system.to_csv().strip().splitlines()
    return tuple(lines[0].split(",")), [ln.split(",") for ln in lines[1:]]


def cmd_statphase_check(cfg: RunConfig):
    v = cfg.values
    spec = get_form(v["form"])
    system = build_farey_system(_farey_params(v), spec.level)
    blocks = range(1, system.J + 1) if v["j"] == 0 else [v["j"]]
    if v["j"] and not 1 <= v["j"] <= system.J:
        raise ValueError(f"--j must lie in 1..{system.J}")
    signs = ("+", "-") if v["sign"] == "both" else (v["sign"],)
    n = v["points"]
    positions = [(i + 1) / (n + 1) for i in range(n)]
    jobs = []
    for j in blocks:
        data = block_phase_data(system, j, 1, spec.weight)
        for sign in signs:
            jobs += [(data, ell, sign) for ell in mid_support_ells(data, sign, positions) if ell <= v["lmax"]]
    checks = _pool_map(lambda job: (job[0].j, check_stationary_phase(*job)), jobs, cfg.threads)
    rows = [(j, c.ell, c.sign, c.x_star, c.direct.real, c.direct.imag, c.main.real, c.main.imag, c.rel_err)
            for j, c in checks]
    return ("j", "ell", "sign", "x_star", "direct_re", "direct_im", "main_re", "main_im", "rel_err"), rows


def _band(text: str) -> tuple[int, int, int]:
    try:
        L, U, V = (int(x) for x in text.split(","))
    except ValueError:
        raise ValueError(f"--band must look like L,U,V, got {text!r}") from None
    return L, U, V


def cmd_sieve_count(cfg: RunConfig):
    v = cfg.values
    system = build_farey_system(_farey_params(v), v["level"])
    beta = Fraction(v["beta"])
    L, U, V = _band(v["band"])
    band = SieveBand(L // 2 + 1, L, U // 2 + 1, U, V // 2 + 1, V, v["r"], system.params.t,
                     beta.numerator, beta.denominator, L, U, V)
    items = band_members(system, band)
    A, C = band.gk_params()
    if v["gk_grid"]:
        grid = [(d1, d2) for d1 in (0.01, 0.03, 0.1, 0.3, 0.5) for d2 in (0.001, 0.01, 0.1, 1.0)]
    else:
        grid = [(v["delta1"], v["delta2"])]
    rows = []
    for d1, d2 in grid:
        B = resonance_count_B(ResonanceQuery(d1, d2), items, U, V, threads=cfg.threads)
        gk = gk_bound(d1, d2, A, C)
        rows.append((d1, d2, A, C, len(items), B, gk, B / gk))
    return ("delta1", "delta2", "A", "C", "members", "count_B", "gk_bound", "ratio"), rows


def cmd_scan(cfg: RunConfig):
    v = cfg.values
    if v["t_step"] <= 0:
        raise ValueError("--t-step must be positive")
    n = int(math.floor((v["t_max"] - v["t_min"]) / v["t_step"] + 1e-9)) + 1
    grid = [v["t_min"] + i * v["t_step"] for i in range(n)]
    rows = subconvexity_scan(v["form"], grid, threads=cfg.threads, cutoff=CutoffG(power=v["cutoff_power"]))
    out = [(r.t, r.L.real, r.L.imag, r.abs_L, r.weyl_ratio, r.convexity_ratio, r.C, r.X_trunc) for r in rows]
    return ("t", "re_L", "im_L", "abs_L", "weyl_ratio", "convexity_ratio", "C", "X_trunc"), out


# ---------------------------------------------------------------- parser

def _farey_flags(p, t_default: float):
    p.add_argument("--t", type=float, default=t_default, help="height t (default: %(default)s)")
    p.add_argument("--M", type=int, default=0, help="block scale M; 0 means M0 (default: %(default)s)")
    p.add_argument("--M0", type=int, default=0, help="Farey scale M0; 0 means ceil(t^(2/3)) (default: %(default)s)")
    p.add_argument("--M1", type=int, default=0, help="range start; 0 means M (default: %(default)s)")
    p.add_argument("--M2", type=int, default=0, help="range end; 0 means 2*M1 (default: %(default)s)")
    p.add_argument("--s", type=int, default=6, help="window smoothness order (default: %(default)s)")


def _form_flag(p):
    p.add_argument("--form", default="1.12.a", help="form label (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output path, '-' for stdout (default: %(default)s)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default: %(default)s)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads; output does not depend on it (default: logical cores)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites (default: %(default)s)")
    common.add_argument("--config", default=None, help="flat key=value file; flags override it (default: none)")

    parser = argparse.ArgumentParser(prog="jutila-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jutila-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, handler, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("coeffs", cmd_coeffs, "Dump a(n) and lambda(n) for n <= limit.")
    _form_flag(p)
    p.add_argument("--limit", type=int, default=100, help="largest n (default: %(default)s)")

    p = add("lvalue", cmd_lvalue, "L(1/2 + it) at one or more heights.")
    _form_flag(p)
    p.add_argument("--t", default="0", help="comma-separated heights (default: %(default)s)")
    p.add_argument("--method", choices=("afe", "completed"), default="afe", help="evaluation route (default: %(default)s)")
    p.add_argument("--cutoff-power", type=float, default=1.0, help="cutoff shape parameter (default: %(default)s)")

    p = add("afe-check", cmd_afe_check, "Compare the two-sum evaluation with the completed-function route.")
    _form_flag(p)
    p.add_argument("--t", default="0,5,10", help="comma-separated heights (default: %(default)s)")
    p.add_argument("--tol", type=float, default=1e-6, help="pass threshold relative to max(1,|L|) (default: %(default)s)")
    p.add_argument("--cutoff-power", type=float, default=1.0, help="cutoff shape parameter (default: %(default)s)")

    p = add("twist-check", cmd_twist_check, "Verify the additive-twist decomposition of lambda(n) e(an/q).")
    _form_flag(p)
    p.add_argument("--a", type=int, default=1, help="numerator (default: %(default)s)")
    p.add_argument("--q", type=int, default=2, help="denominator (default: %(default)s)")
    p.add_argument("--s-re", type=float, default=2.0, help="Re s (default: %(default)s)")
    p.add_argument("--s-im", type=float, default=0.0, help="Im s (default: %(default)s)")
    p.add_argument("--X", type=int, default=10**5, help="series length (default: %(default)s)")
    p.add_argument("--max-modulus", type=int, default=MAX_TWIST_MODULUS, help="cap on q (default: %(default)s)")

    p = add("voronoi-check", cmd_voronoi_check, "Both sides of the Voronoi formula for one fraction and bump.")
    _form_flag(p)
    p.add_argument("--a", type=int, default=1, help="numerator (default: %(default)s)")
    p.add_argument("--q", type=int, default=1, help="denominator (default: %(default)s)")
    p.add_argument("--support", default="500:900", help="bump support A:B (default: %(default)s)")
    p.add_argument("--ramp", type=float, default=0.0, help="ramp width; 0 means (B-A)/4 (default: %(default)s)")
    p.add_argument("--kind", choices=("cinf", "smoothstep"), default="cinf", help="bump profile (default: %(default)s)")
    p.add_argument("--tol", type=float, default=1e-9, help="dual-series tolerance (default: %(default)s)")
    p.add_argument("--max-terms", type=int, default=200000, help="dual-series term budget (default: %(default)s)")
    p.add_argument("--points-per-cycle", type=float, default=10.0,
                   help="quadrature nodes per Bessel oscillation (default: %(default)s)")

    p = add("farey", cmd_farey, "Dump a Farey block system.")
    _farey_flags(p, 1e5)
    p.add_argument("--level", type=int, default=1, help="level used for the q/d split (default: %(default)s)")

    p = add("statphase-check", cmd_statphase_check, "Stationary-phase main term against the direct block integral.")
    _form_flag(p)
    _farey_flags(p, 1e5)
    p.add_argument("--j", type=int, default=0, help="block index; 0 means all (default: %(default)s)")
    p.add_argument("--lmax", type=int, default=10**9, help="largest l tested (default: %(default)s)")
    p.add_argument("--sign", choices=("+", "-", "both"), default="both", help="branch (default: %(default)s)")
    p.add_argument("--points", type=int, default=4, help="l values per block and branch (default: %(default)s)")

    p = add("sieve-count", cmd_sieve_count, "Resonance count B against the five-term bound.")
    _farey_flags(p, 1e6)
    p.add_argument("--level", type=int, default=1, help="level used for the q/d split (default: %(default)s)")
    p.add_argument("--r", type=int, default=1, help="dual modulus r (default: %(default)s)")
    p.add_argument("--beta", default="0", help="beta = c/d (default: %(default)s)")
    p.add_argument("--band", default="64,128,8", help="dyadic sizes L,U,V (default: %(default)s)")
    p.add_argument("--delta1", type=float, default=0.1, help="fraction threshold (default: %(default)s)")
    p.add_argument("--delta2", type=float, default=0.01, help="product threshold (default: %(default)s)")
    p.add_argument("--gk-grid", action="store_true", help="sweep a fixed 5x4 threshold grid (default: off)")
    # R = M/M0 > 1 is what populates the bands with many fractions
    p.set_defaults(M=10000, M0=100)

    p = add("scan", cmd_scan, "L(1/2 + it) along an arithmetic grid with normalized ratios.")
    _form_flag(p)
    p.add_argument("--t-min", type=float, default=2.0, help="first height (default: %(default)s)")
    p.add_argument("--t-max", type=float, default=2000.0, help="last height (default: %(default)s)")
    p.add_argument("--t-step", type=float, default=2.0, help="grid step (default: %(default)s)")
    p.add_argument("--cutoff-power", type=float, default=1.0, help="cutoff shape parameter (default: %(default)s)")
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            k, val = line.split("=", 1)
            out[k.strip().replace("-", "_")] = val.strip()
    return out


def parse(argv: Sequence[str]) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        sub = parser._subparsers._group_actions[0].choices[ns.command]  # noqa: SLF001
        conf = read_config(ns.config)
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(conf) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        # file values become defaults, so explicit flags still win
        sub.set_defaults(**conf)
        ns = parser.parse_args(argv)
    values = {k: v for k, v in vars(ns).items() if k != "handler"}
    if values.get("threads", 1) < 1:
        raise ValueError("--threads must be at least 1")
    return RunConfig(ns.command, values), ns.handler


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg, handler = parse(argv)
        columns, rows = handler(cfg)
        text = render(cfg, columns, rows)
    except SystemExit as exc:  # argparse: usage errors and --help
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    except UnsupportedTwist as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TWIST
    except (SieveBudgetError, QuadratureBudgetError) as exc:
        print(f"error: BudgetExceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, ArithmeticError, KeyError, IndexError, OSError) as exc:
        reason = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {reason}".replace("\n", " "), file=sys.stderr)
        return EXIT_INVALID
    if cfg.values["out"] == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.values["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
