"""Command-line interface: ``maxreg check-conditions | solve | verify | example``.

Settings come from three layers: built-in defaults, an optional flat
``key=value`` file (``--config``) and command-line flags, later layers
winning.  Exit codes: 0 success/PASS, 1 verification FAIL, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jsonio
from .conditions import check_conditions
from .errors import (
    DomainError,
    MaxRegError,
    ModelError,
    NumericalError,
    ParseError,
    PreconditionError,
    ShapeError,
    UsageError,
)
from .examples import EXAMPLES, Kernel, build_example, bump, spatial_setup
from .regularity import build_report
from .solver import EvolutionaryProblem, Solution, original_unknown, relative_error, solve_spectral, solve_time_stepping
from .spatial import SpatialOperator, load_operator
from .symbols import MaterialLaw
from .weighted_time import TimeGrid, WeightedSignal, load_signal, save_signal

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULTS = {
    "example": None,
    "law_file": None,
    "operator": None,
    "nu": None,
    "beta": None,
    "m": 200,
    "dim": 1,
    "k_coeff": None,
    "A": None,
    "B": None,
    "kernel": None,
    "tmax": 20.0,
    "nt": 2048,
    "pad": None,
    "t0": 0.0,
    "rhs": "builtin:manufactured",
    "rhs_g": None,
    "oracle": False,
    "substeps": 10,
    "c0_check": True,
    "workers": 1,
    "refine": True,
    "samples_k": 9,
    "nu_steps": 9,
    "out": "out",
    "dir": None,
    "beta_check": None,
    "residual_tol": 1e-6,
}

PROBLEM_KEYS = ("example", "law_file", "operator", "nu", "beta", "m", "dim", "k_coeff", "A", "B", "kernel",
                "tmax", "nt", "pad", "t0")
SOLVE_KEYS = ("rhs", "rhs_g", "oracle", "substeps", "c0_check", "workers", "refine", "samples_k", "out",
              "residual_tol")
ALLOWED = {
    "check-conditions": PROBLEM_KEYS + ("samples_k", "nu_steps", "out"),
    "solve": PROBLEM_KEYS + SOLVE_KEYS,
    "example": PROBLEM_KEYS + SOLVE_KEYS,
    "verify": ("dir", "beta_check", "samples_k", "out", "residual_tol"),
}


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _coeff(s):
    """Scalar or comma-separated diagonal."""
    if s is None or isinstance(s, (int, float, complex)):
        return s
    parts = [p for p in str(s).split(",") if p.strip()]
    vals = [complex(p.strip().replace(" ", "")) for p in parts]
    vals = [v.real if v.imag == 0 else v for v in vals]
    return vals[0] if len(vals) == 1 else vals


def _opt_int(s):
    return None if s in (None, "", "none") else int(s)


def _opt_float(s):
    return None if s in (None, "", "none") else float(s)


CONVERT = {
    "nu": _opt_float, "beta": _opt_float, "beta_check": _opt_float, "m": int, "dim": int, "tmax": float,
    "nt": int, "pad": _opt_int, "t0": float, "substeps": int, "workers": int, "samples_k": int,
    "nu_steps": int, "residual_tol": float, "oracle": _bool, "c0_check": _bool, "refine": _bool,
    "k_coeff": _coeff, "A": _coeff, "B": _coeff,
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def problem_dict(self) -> dict:
        return {k: self.values[k] for k in PROBLEM_KEYS}


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxreg", description=__doc__.splitlines()[0],
                                 argument_default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def problem_flags(p, positional_example=False):
        if not positional_example:
            p.add_argument("--example", choices=EXAMPLES)
        p.add_argument("--law-file", help="JSON file with constant blocks M, N00, N01, N10, N11 (and beta)")
        p.add_argument("--operator", help="spatial operator in the sparse triplet format")
        p.add_argument("--nu", help="exponential weight")
        p.add_argument("--beta", help="order of the fractional example / exponent of a custom law")
        p.add_argument("--m", help="spatial interior points per direction")
        p.add_argument("--dim", help="spatial dimension, 1 or 2")
        p.add_argument("--k-coeff", help="heat conductivity: scalar or comma-separated diagonal")
        p.add_argument("--A", help="coefficient A: scalar or comma-separated diagonal")
        p.add_argument("--B", help="coefficient B: scalar or comma-separated diagonal")
        p.add_argument("--kernel", help="exp:a[:K] or a two-column CSV file t,k")
        p.add_argument("--tmax", help="window length")
        p.add_argument("--nt", help="time samples, a power of two")
        p.add_argument("--pad", help="zero padding (default nt)")
        p.add_argument("--t0", help="window start")

    def solve_flags(p):
        p.add_argument("--rhs", help="builtin:manufactured|bump|rough or a signal CSV for f")
        p.add_argument("--rhs-g", help="signal CSV for g (default zero)")
        p.add_argument("--oracle", action="store_const", const=True, help="also run implicit Euler")
        p.add_argument("--substeps", help="implicit Euler steps per grid step")
        p.add_argument("--no-c0-check", dest="c0_check", action="store_const", const=False,
                       help="solve even if the node matrices are not uniformly positive")
        p.add_argument("--workers", help="threads for the per-frequency solves")
        p.add_argument("--no-refine", dest="refine", action="store_const", const=False,
                       help="skip the half-step solve used for the membership test")
        p.add_argument("--samples-k", help="2**k frequency magnitudes per side for certification")
        p.add_argument("--residual-tol", help="literal residual threshold for PASS")
        p.add_argument("--out", help="output directory")

    for name in ("check-conditions", "solve", "verify", "example"):
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat key=value file")
        if name == "check-conditions":
            problem_flags(p)
            p.add_argument("--samples-k")
            p.add_argument("--nu-steps")
            p.add_argument("--out")
        elif name == "solve":
            problem_flags(p)
            solve_flags(p)
        elif name == "example":
            p.add_argument("example", choices=EXAMPLES)
            problem_flags(p, positional_example=True)
            solve_flags(p)
        else:
            p.add_argument("dir", help="output directory of a previous solve")
            p.add_argument("--beta-check", help="order to test membership for (default: the law's)")
            p.add_argument("--samples-k")
            p.add_argument("--residual-tol")
            p.add_argument("--out", help="where to write report.json (default: the solve directory)")
    return ap


def read_config_file(path: str | Path, allowed) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value in {path}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in allowed:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Merge defaults, the ``--config`` file and flags; validate."""
    ns = vars(_build_parser().parse_args(argv))
    cmd = ns.pop("subcommand")
    allowed = ALLOWED[cmd]
    merged = {k: DEFAULTS[k] for k in allowed}
    if cmd == "verify":
        merged["out"] = None
    cfg = ns.pop("config", None)
    if cfg is not None:
        merged.update(read_config_file(cfg, allowed))
    merged.update(ns)
    for key, value in list(merged.items()):
        conv = CONVERT.get(key)
        if conv is not None and value is not None and isinstance(value, str):
            try:
                merged[key] = conv(value)
            except ValueError as exc:
                raise UsageError(f"{_flag(key)}: {exc}") from exc
    _validate(cmd, merged)
    return RunConfig(cmd, merged)


def _validate(cmd: str, v: dict) -> None:
    if cmd == "verify":
        if v.get("beta_check") is not None and not v["beta_check"] > 0:
            raise UsageError("--beta-check must be positive")
    else:
        if v["example"] is None and v["law_file"] is None:
            raise UsageError("one of --example or --law-file is required")
        if v["example"] is not None and v["law_file"] is not None:
            raise UsageError("--example and --law-file are mutually exclusive")
        if v["example"] is not None and v["example"] not in EXAMPLES:
            raise UsageError(f"--example must be one of {', '.join(EXAMPLES)}")
        nt = v["nt"]
        if nt < 1 or nt & (nt - 1):
            raise UsageError(f"--nt must be a power of two, got {nt}")
        if v["nu"] is not None and not v["nu"] > 0:
            raise UsageError(f"--nu must be positive, got {v['nu']}")
        if not v["tmax"] > 0:
            raise UsageError(f"--tmax must be positive, got {v['tmax']}")
    if "residual_tol" in v and not v["residual_tol"] > 0:
        raise UsageError("--residual-tol must be positive")
    if "substeps" in v and v["substeps"] < 1:
        raise UsageError("--substeps must be >= 1")
    if "workers" in v and v["workers"] < 1:
        raise UsageError("--workers must be >= 1")


# -- problem assembly ------------------------------------------------------------------

def _parse_kernel(spec, d1: int) -> Kernel | None:
    if spec is None:
        return None
    spec = str(spec)
    if spec.startswith("exp:"):
        parts = spec[4:].split(":")
        try:
            a = float(parts[0])
            K = float(parts[1]) if len(parts) > 1 else 1.0
        except (ValueError, IndexError) as exc:
            raise UsageError(f"--kernel: cannot parse {spec!r}") from exc
        return Kernel.exponential(a, K, d1)
    path = Path(spec[4:] if spec.startswith("csv:") else spec)
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ParseError(f"kernel file {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ParseError(f"kernel file {path} must have two columns t,k")
    return Kernel.sampled(data[:, 0], data[:, 1][:, None, None] * np.eye(d1))


def _matrix(entry, name: str) -> np.ndarray:
    try:
        a = np.array([[complex(x) for x in row] for row in entry], dtype=np.complex128) if len(entry) else \
            np.zeros((0, 0), dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"law block {name}: {exc}") from exc
    return a


def load_law(path: str | Path, beta: float | None = None) -> MaterialLaw:
    """Custom law from JSON: constant blocks ``M, N00, N01, N10, N11`` plus optional ``beta``, ``name``.

    Entries are numbers or strings such as ``"1+2j"``.  A given ``beta``
    overrides the file.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"law file {path}: {exc}") from exc
    missing = [k for k in ("M", "N11") if k not in data]
    if missing:
        raise ParseError(f"law file {path}: missing blocks {missing}")
    M = _matrix(data["M"], "M")
    N11 = _matrix(data["N11"], "N11")
    d0, d1 = M.shape[0], N11.shape[0]
    N00 = _matrix(data["N00"], "N00") if "N00" in data else np.zeros((d0, d0))
    N01 = _matrix(data["N01"], "N01") if "N01" in data else np.zeros((d0, d1))
    N10 = _matrix(data["N10"], "N10") if "N10" in data else np.zeros((d1, d0))
    for name, a, shape in (("M", M, (d0, d0)), ("N00", N00, (d0, d0)), ("N01", N01, (d0, d1)),
                           ("N10", N10, (d1, d0)), ("N11", N11, (d1, d1))):
        if a.size and a.shape != shape:
            raise ShapeError(f"law block {name} has shape {a.shape}, expected {shape}")
    return MaterialLaw.constant(M, N00, N01.reshape(d0, d1), N10.reshape(d1, d0), N11,
                                beta=float(data.get("beta", 1.0) if beta is None else beta),
                                name=str(data.get("name", "custom")))


@dataclass
class Setup:
    problem: EvolutionaryProblem
    f: WeightedSignal
    g: WeightedSignal
    exact: WeightedSignal | None
    builtin: bool


def _rhs_kind(rhs: str) -> str | None:
    return rhs[len("builtin:"):] if rhs.startswith("builtin:") else None


def _load_rhs(path, grid: TimeGrid, nu: float, dim: int, name: str) -> WeightedSignal:
    s = load_signal(path)
    if s.grid != grid or s.nu != nu:
        raise ShapeError(f"{name} file {path} is not sampled on the problem grid with nu = {nu}")
    if s.dim != dim:
        raise ShapeError(f"{name} file {path} has dimension {s.dim}, expected {dim}")
    return s


def build_setup(cfg: dict, with_rhs: bool = True) -> Setup:
    """Problem and right-hand side described by a merged configuration."""
    rhs = cfg.get("rhs", DEFAULTS["rhs"])
    kind = _rhs_kind(rhs)
    if cfg["example"] is not None:
        if cfg["operator"] is not None:
            raise UsageError("--operator applies to --law-file problems only")
        kernel = None
        if cfg["kernel"] is not None:
            if cfg["example"] != "integro":
                raise UsageError("--kernel applies to the integro example only")
            d1 = spatial_setup(cfg["m"], cfg["dim"])[0].d1
            kernel = _parse_kernel(cfg["kernel"], d1)
        case = build_example(cfg["example"], m=cfg["m"], nt=cfg["nt"], tmax=cfg["tmax"], nu=cfg["nu"],
                             beta=cfg["beta"], rhs=kind if kind is not None else "bump", dim=cfg["dim"],
                             pad=cfg["pad"], k_coeff=cfg["k_coeff"], A=cfg["A"], B=cfg["B"], kernel=kernel,
                             t0=cfg["t0"])
        p = case.problem
        f, g, exact = case.f, case.g, case.exact
    else:
        law = load_law(cfg["law_file"], beta=cfg["beta"])
        C = load_operator(cfg["operator"]) if cfg["operator"] is not None else SpatialOperator.zero(law.d1, law.d0)
        nu = 1.0 if cfg["nu"] is None else cfg["nu"]
        grid = TimeGrid.from_window(cfg["tmax"], cfg["nt"], t0=cfg["t0"], pad=cfg["pad"])
        p = EvolutionaryProblem(law, C, nu, grid, name=law.name)
        exact = None
        if kind is None:
            f = None
        elif kind in ("bump", "manufactured"):
            # no exact solution is known for a custom law, so both mean the bump
            f = WeightedSignal(grid, nu, np.outer(bump(grid.times)[0], np.ones(p.d0)))
        else:
            raise UsageError(f"--rhs builtin:{kind} is only defined for the built-in examples; use builtin:bump or a CSV")
        g = WeightedSignal.zeros(grid, nu, p.d1)
    if with_rhs:
        if kind is None:
            f = _load_rhs(rhs, p.grid, p.nu, p.d0, "f")
            exact = None
        elif kind not in ("manufactured", "bump", "rough"):
            raise UsageError(f"--rhs: unknown built-in {kind!r}")
        if cfg.get("rhs_g") is not None:
            g = _load_rhs(cfg["rhs_g"], p.grid, p.nu, p.d1, "g")
    return Setup(p, f, g, exact, kind is not None and cfg.get("rhs_g") is None)


# -- subcommands -------------------------------------------------------------------------

def _conditions(p: EvolutionaryProblem, k: int, nu_steps: int = 9):
    return check_conditions(p.law, p.nu, k=k, nu_steps=nu_steps, xi_arc=p.grid.xi)


def _write_solution(out: Path, sol: Solution, p: EvolutionaryProblem) -> None:
    out.mkdir(parents=True, exist_ok=True)
    save_signal(out / "u.csv", sol.u)
    save_signal(out / "v.csv", sol.v)
    if p.integrate_u:
        save_signal(out / "theta.csv", original_unknown(p, sol))


def cmd_check_conditions(cfg: RunConfig) -> int:
    s = build_setup(cfg.values, with_rhs=False)
    rep = _conditions(s.problem, cfg.samples_k, cfg.nu_steps)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    d = rep.to_dict()
    jsonio.write(out / "conditions.json", d)
    print(jsonio.dumps(d))
    return EXIT_OK if rep.passed else EXIT_FAIL


def _solve_pipeline(cfg: RunConfig) -> int:
    start = time.perf_counter()
    v = cfg.values
    s = build_setup(v)
    p = s.problem
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    constants = _conditions(p, cfg.samples_k)
    jsonio.write(out / "conditions.json", constants.to_dict())
    sol = solve_spectral(p, s.f, s.g, require_c0=cfg.c0_check, workers=cfg.workers)
    _write_solution(out, sol, p)
    save_signal(out / "f.csv", s.f)
    save_signal(out / "g.csv", s.g)
    refined = None
    if cfg.refine and s.builtin:
        rcfg = dict(v, nt=2 * v["nt"], pad=None if v["pad"] is None else 2 * v["pad"])
        rs = build_setup(rcfg)
        refined = solve_spectral(rs.problem, rs.f, rs.g, require_c0=cfg.c0_check, workers=cfg.workers)
        _write_solution(out / "refined", refined, rs.problem)
    run = {"subcommand": "solve", "config": cfg.problem_dict(), "rhs": v["rhs"], "rhs_g": v["rhs_g"],
           "refined": refined is not None, "residual_tol": v["residual_tol"]}
    jsonio.write(out / "run.json", run)
    extra = {}
    if s.exact is not None:
        extra["exact_error_rel"] = relative_error(original_unknown(p, sol), s.exact)
    if cfg.oracle:
        extra["oracle"] = _oracle(p, s, sol, cfg.substeps)
    report = build_report(p, sol, s.f, s.g, constants=constants, refined=refined, k=cfg.samples_k,
                          residual_tol=v["residual_tol"])
    report.extra.update(extra)
    report.timing_ms = (time.perf_counter() - start) * 1e3
    return _emit_report(out, report)


def _oracle(p: EvolutionaryProblem, s: Setup, sol: Solution, substeps: int) -> dict:
    a = solve_time_stepping(p, s.f, s.g, substeps=substeps)
    b = solve_time_stepping(p, s.f, s.g, substeps=2 * substeps)
    e1 = relative_error(original_unknown(p, a), original_unknown(p, sol))
    e2 = relative_error(original_unknown(p, b), original_unknown(p, sol))
    return {"substeps": substeps, "dt_step": p.grid.dt / substeps, "rel_error": e1, "rel_error_half_step": e2,
            "ratio": e2 / e1 if e1 > 0 else None, "ok": e1 <= 0.05}


def _emit_report(out: Path, report) -> int:
    d = report.to_dict()
    jsonio.write(out / "report.json", d)
    status = "PASS" if d["pass"] else "FAIL"
    print(f"MAXIMAL REGULARITY: {status}  residual={d['residual_rel']:.3e}  member={d['membership']['member']}  "
          f"cu_bound={d['cu_bound']['ok']}  apriori={d['apriori']['ok']}  -> {out / 'report.json'}")
    return EXIT_OK if d["pass"] else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    start = time.perf_counter()
    src = Path(cfg.dir)
    try:
        run = json.loads((src / "run.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{src / 'run.json'}: {exc}") from exc
    pcfg = dict(DEFAULTS)
    pcfg.update(run["config"])
    s = build_setup(pcfg, with_rhs=False)
    p = s.problem
    f = _load_rhs(src / "f.csv", p.grid, p.nu, p.d0, "f")
    g = _load_rhs(src / "g.csv", p.grid, p.nu, p.d1, "g")
    sol = Solution(_load_rhs(src / "u.csv", p.grid, p.nu, p.d0, "u"), _load_rhs(src / "v.csv", p.grid, p.nu, p.d1, "v"))
    refined = None
    if (src / "refined" / "u.csv").exists():
        rgrid = p.grid.refined()
        ru = load_signal(src / "refined" / "u.csv")
        rv = load_signal(src / "refined" / "v.csv")
        if ru.grid != rgrid or rv.grid != rgrid:
            raise ShapeError("refined solution is not on the half-step grid")
        refined = Solution(ru, rv)
    constants = _conditions(p, cfg.samples_k)
    report = build_report(p, sol, f, g, constants=constants, refined=refined, beta=cfg.beta_check,
                          k=cfg.samples_k, residual_tol=cfg.residual_tol)
    report.timing_ms = (time.perf_counter() - start) * 1e3
    out = src if cfg.out is None else Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return _emit_report(out, report)


COMMANDS = {
    "check-conditions": cmd_check_conditions,
    "solve": _solve_pipeline,
    "example": _solve_pipeline,
    "verify": cmd_verify,
}


def run(cfg: RunConfig) -> int:
    """Execute a parsed configuration and map failures to exit codes."""
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except (UsageError, DomainError, ModelError, ParseError, ShapeError, PreconditionError, OSError) as exc:
        print(f"maxreg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"maxreg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MaxRegError as exc:
        print(f"maxreg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (UsageError, ParseError, OSError) as exc:
        print(f"maxreg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
