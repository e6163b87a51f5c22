"""Command line interface.

Five subcommands:

  mcd critical-points --q 3
  mcd drift --q 3 --lambda 2.7725887 --grid 0.34:0.70:0.02 [--fixed-points]
  mcd simulate --kind sw --n 1000 --q 3 --lambda 2.7725887 --steps 200
  mcd experiment one_step_exit --n 200:800:200 --q 3 --lambda 2.7725887 ...
  mcd oracle stationarity --kind glauber --n 4 --q 2 --lambda 1

Conventions shared by all subcommands: exactly one of --lambda/--beta fixes
the edge intensity (beta is converted through lam = n(1 - exp(-beta/n)) and
therefore needs a single n); grids are written start:stop:step, a comma
list, or a single number; --config names a flat JSON object whose keys are
the long flag names, with explicit flags taking precedence; the master
seed defaults to the MCD_SEED environment variable. Exit codes: 0 success
or check passed, 1 usage error, 2 oracle check failed, 3 parameter regime
unsupported. Wall-clock timings go to stderr, never into result files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

from . import __version__
from .analytic import (
    RegimeError,
    a_fixed_point,
    cm_drift,
    critical_points,
    drift_fixed_points,
    sw_drift,
)
from .dynamics import run_chain, sample_gnp
from .experiments import (
    balanced_spins,
    bimodality_scan,
    cluster_tail_bound,
    cm_drift_map,
    escape_time,
    giant_concentration,
    one_step_exit,
    ordered_spins,
    sm_tail,
    sw_drift_map,
)
from .model import EdgeConfig, ModelParams, SpinConfig
from .oracle import (
    bgj_coloring_check,
    build_kernel,
    detailed_balance_violation,
    dump_kernel_csv,
    es_coupling_check,
    exhaustive_min_ratio,
    iterated_coloring_check,
    min_bottleneck_ratio,
    mixing_time_exact,
    spectral_gap,
    stationarity_residual,
)
from .report import write_report


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for
    # failed oracle checks, so route everything through CliError
    def error(self, message):
        raise CliError(1, f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# option plumbing

def _parse_grid(value, kind: str = "float") -> list:
    conv = int if kind == "int" else float
    if isinstance(value, (int, float)):
        vals = [value]
    elif isinstance(value, list):
        vals = value
    else:
        s = str(value).strip()
        if ":" in s:
            parts = s.split(":")
            if len(parts) != 3:
                raise CliError(1, f"bad grid {s!r}, expected start:stop:step")
            a, b, h = (float(x) for x in parts)
            if h <= 0 or b < a:
                raise CliError(1, f"bad grid {s!r}: need step > 0, stop >= start")
            count = int(math.floor((b - a) / h + 1e-9)) + 1
            vals = [a + i * h for i in range(count)]
        elif "," in s:
            vals = [float(x) for x in s.split(",")]
        else:
            vals = [float(s)]
    out = []
    for v in vals:
        c = conv(round(float(v))) if kind == "int" else float(v)
        if kind == "int" and abs(c - float(v)) > 1e-6:
            raise CliError(1, f"grid value {v!r} is not an integer")
        out.append(c)
    return out


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        loaded = json.load(fh)
    if not isinstance(loaded, dict):
        raise CliError(1, "--config must contain a flat JSON object")
    cfg = {}
    for key, val in loaded.items():
        dest = "lam" if key == "lambda" else str(key).replace("-", "_")
        cfg[dest] = val
    return cfg


def _merged_options(ns: argparse.Namespace) -> dict:
    """Config-file values overridden by anything given on the command line."""
    opts = _load_config(getattr(ns, "config", None))
    for key, val in vars(ns).items():
        if key in ("func", "config"):
            continue
        if val is not None:
            opts[key] = val
    return opts


def _opt(opts: dict, dest: str, default=None, conv=None):
    val = opts.get(dest, default)
    if val is None or conv is None:
        return val
    return conv(val)


def _master_seed(opts: dict) -> int:
    if opts.get("seed") is not None:
        return int(opts["seed"])
    return int(os.environ.get("MCD_SEED", "0"))


def _resolve_lambda(opts: dict, n_values: list[int] | None) -> float:
    lam, beta = opts.get("lam"), opts.get("beta")
    if (lam is None) == (beta is None):
        raise CliError(1, "exactly one of --lambda / --beta is required")
    if lam is not None:
        lam = float(lam)
    else:
        if not n_values or len(n_values) != 1:
            raise CliError(1, "--beta conversion needs a single --n")
        n = n_values[0]
        lam = -n * math.expm1(-float(beta) / n)
    if lam <= 0:
        raise CliError(1, f"edge intensity must be positive, got {lam!r}")
    return lam


def _require_integer_q(q: float, what: str) -> int:
    if q != int(q):
        raise CliError(1, f"{what} requires integer q, got {q!r}")
    return int(q)


# ---------------------------------------------------------------------------
# run configuration echoed into the report sidecar

@dataclasses.dataclass
class RunConfig:
    """Effective parameters of one CLI invocation, as written to the
    sidecar. to_dict/from_dict round-trip exactly through JSON."""

    command: str
    experiment: str | None = None
    kind: str | None = None
    n: list | None = None
    q: float | None = None
    lam: float | None = None
    rho: float | None = None
    start: str | None = None
    replicas: int | None = None
    seed: int | None = None
    threads: int | None = None
    grid: list | None = None
    m_threshold: int | None = None
    epsilon: float | None = None
    burn: int | None = None
    samples: int | None = None
    cap: int | None = None
    steps: int | None = None
    observe_every: int | None = None
    init: str | None = None
    alpha: float | None = None
    out: str | None = None

    def to_dict(self) -> dict:
        raw = dataclasses.asdict(self)
        return {("lambda" if k == "lam" else k): v for k, v in raw.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        kwargs = {("lam" if k == "lambda" else k): v for k, v in data.items()}
        return cls(**kwargs)


def _emit(report, rc: RunConfig, default_name: str) -> int:
    out = rc.out or default_name
    rc.out = out
    write_report(report, out, rc.to_dict(), __version__)
    print(out)
    print(f"wall clock: {report.wall_clock_s:.2f}s", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_critical_points(ns) -> int:
    opts = _merged_options(ns)
    q = _opt(opts, "q", conv=float)
    if q is None:
        raise CliError(1, "--q is required")
    cp = critical_points(q)
    print(json.dumps(dataclasses.asdict(cp), indent=2, sort_keys=True))
    return 0


def _cmd_drift(ns) -> int:
    opts = _merged_options(ns)
    q = _opt(opts, "q", conv=float)
    if q is None:
        raise CliError(1, "--q is required")
    n_vals = _parse_grid(opts["n"], "int") if opts.get("n") is not None else None
    lam = _resolve_lambda(opts, n_vals)
    if opts.get("fixed_points"):
        fp = drift_fixed_points(lam, q)
        print(json.dumps(dataclasses.asdict(fp), indent=2, sort_keys=True))
        return 0
    grid = _parse_grid(_opt(opts, "grid", default="0.0:1.0:0.02"))
    lines = ["z,F,f,g"]
    for z in grid:
        fz = sw_drift(z, lam, q) if z >= 1.0 / q else float("nan")
        cz = cm_drift(z, lam, q)
        lines.append(f"{z!r},{fz!r},{cz!r},{cz - z!r}")
    text = "\n".join(lines) + "\n"
    out = opts.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_simulate(ns) -> int:
    opts = _merged_options(ns)
    kind = _opt(opts, "kind", default="sw")
    if kind not in ("sw", "cm", "glauber"):
        raise CliError(1, f"--kind must be sw, cm or glauber, got {kind!r}")
    n = _opt(opts, "n", conv=int)
    q = _opt(opts, "q", conv=float)
    if n is None or q is None:
        raise CliError(1, "--n and --q are required")
    lam = _resolve_lambda(opts, [n])
    if kind == "sw":
        q = float(_require_integer_q(q, "sw"))
    params = ModelParams(n=n, q=q, lam=lam)
    steps = _opt(opts, "steps", default=100, conv=int)
    every = _opt(opts, "observe_every", default=1, conv=int)
    seed = _master_seed(opts)
    init_name = _opt(opts, "init", default="balanced" if kind == "sw" else "empty")
    from .rng import RngStream
    rng = RngStream(seed, f"simulate:{kind}", 0).generator()
    init: SpinConfig | EdgeConfig
    if kind == "sw":
        if init_name == "balanced":
            init = balanced_spins(n, int(q))
        elif init_name == "ordered":
            init = ordered_spins(n, int(q), a_fixed_point(lam, int(q)))
        elif init_name == "random":
            init = SpinConfig(rng.integers(1, int(q) + 1, n), int(q))
        else:
            raise CliError(1, f"sw --init must be balanced, ordered or random,"
                              f" got {init_name!r}")
    else:
        if init_name == "empty":
            init = EdgeConfig.empty(n)
        elif init_name == "gnp":
            init = sample_gnp(n, params.p, rng)
        else:
            raise CliError(1, f"{kind} --init must be empty or gnp, got "
                              f"{init_name!r}")
    t0 = time.perf_counter()
    traj = run_chain(kind, init, params, steps, rng, observe_every=every,
                     m_threshold=_opt(opts, "m_threshold", conv=int))
    lines = ["step,l1_frac,sm_frac,edge_count,counts"]
    for rec in traj.records:
        counts = "|".join(str(c) for c in rec.counts_sorted) \
            if rec.counts_sorted is not None else ""
        lines.append(f"{rec.step},{rec.l1_frac!r},{rec.sm_frac!r},"
                     f"{rec.edge_count},{counts}")
    text = "\n".join(lines) + "\n"
    out = opts.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(out)
    else:
        sys.stdout.write(text)
    print(f"wall clock: {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return 0


_EXPERIMENTS = ("one_step_exit", "escape_time", "sw_drift_map", "cm_drift_map",
                "sm_tail", "cluster_tail_bound", "giant_concentration",
                "bimodality_scan")


def _cmd_experiment(ns) -> int:
    opts = _merged_options(ns)
    name = ns.name.replace("-", "_")
    if name not in _EXPERIMENTS:
        raise CliError(1, f"unknown experiment {ns.name!r}; choose from "
                          + ", ".join(_EXPERIMENTS))
    if opts.get("n") is None:
        raise CliError(1, "--n is required")
    n_vals = _parse_grid(opts["n"], "int")
    q = _opt(opts, "q", default=1.0, conv=float)
    lam = _resolve_lambda(opts, n_vals)
    seed = _master_seed(opts)
    threads = _opt(opts, "threads", default=1, conv=int)
    rc = RunConfig(command="experiment", experiment=name, n=n_vals, q=q,
                   lam=lam, seed=seed, threads=threads)

    if name in ("one_step_exit", "escape_time"):
        qi = _require_integer_q(q, "this experiment (it runs sw)")
        rho = _opt(opts, "rho", default=0.08, conv=float)
        start = _opt(opts, "start", default="balanced")
        rc.rho, rc.start = rho, start
        if name == "one_step_exit":
            rc.replicas = _opt(opts, "replicas", default=500, conv=int)
            rep = one_step_exit(n_vals, lam, qi, rho, start, rc.replicas,
                                seed, threads)
        else:
            rc.replicas = _opt(opts, "replicas", default=200, conv=int)
            rc.cap = _opt(opts, "cap", default=10 ** 6, conv=int)
            rep = escape_time(n_vals, lam, qi, rho, start, rc.replicas, seed,
                              rc.cap, threads)
    elif name == "sw_drift_map":
        qi = _require_integer_q(q, "sw_drift_map")
        if len(n_vals) != 1:
            raise CliError(1, "sw_drift_map takes a single --n")
        if opts.get("grid") is None:
            raise CliError(1, "sw_drift_map needs --grid of majority fractions")
        rc.grid = _parse_grid(opts["grid"])
        rc.replicas = _opt(opts, "replicas", default=200, conv=int)
        rep = sw_drift_map(n_vals[0], lam, qi, rc.grid, rc.replicas, seed,
                           threads)
    elif name == "cm_drift_map":
        if len(n_vals) != 1:
            raise CliError(1, "cm_drift_map takes a single --n")
        if opts.get("grid") is None:
            raise CliError(1, "cm_drift_map needs --grid of cluster fractions")
        rc.grid = _parse_grid(opts["grid"])
        rc.replicas = _opt(opts, "replicas", default=200, conv=int)
        rep = cm_drift_map(n_vals[0], lam, q, rc.grid, rc.replicas, seed,
                           threads)
    elif name == "sm_tail":
        rc.m_threshold = _opt(opts, "m_threshold", default=20, conv=int)
        rc.rho = _opt(opts, "rho", default=0.2, conv=float)
        rc.replicas = _opt(opts, "replicas", default=50000, conv=int)
        rep = sm_tail(n_vals, lam, rc.m_threshold, rc.rho, rc.replicas, seed,
                      threads)
        rc.q = rep.q
    elif name == "cluster_tail_bound":
        if len(n_vals) != 1:
            raise CliError(1, "cluster_tail_bound takes a single --n")
        rc.grid = _parse_grid(_opt(opts, "grid", default="20:60:20"))
        rc.replicas = _opt(opts, "replicas", default=100000, conv=int)
        rep = cluster_tail_bound(n_vals[0], lam, [int(k) for k in rc.grid],
                                 rc.replicas, seed, threads)
        rc.q = rep.q
    elif name == "giant_concentration":
        if len(n_vals) != 1:
            raise CliError(1, "giant_concentration takes a single --n")
        rc.epsilon = _opt(opts, "epsilon", default=0.01, conv=float)
        rc.replicas = _opt(opts, "replicas", default=100, conv=int)
        rep = giant_concentration(n_vals[0], lam, rc.epsilon, rc.replicas,
                                  seed, threads)
        rc.q = rep.q
    else:  # bimodality_scan
        qi = _require_integer_q(q, "bimodality_scan")
        if len(n_vals) != 1:
            raise CliError(1, "bimodality_scan takes a single --n")
        rc.burn = _opt(opts, "burn", default=200, conv=int)
        rc.samples = _opt(opts, "samples", default=1000, conv=int)
        rep = bimodality_scan(n_vals[0], lam, qi, rc.burn, rc.samples, seed)

    rc.out = opts.get("out")
    return _emit(rep, rc, f"mcd_{name}.csv")


_ORACLE_CHECKS = ("stationarity", "detailed-balance", "gap", "cheeger",
                  "mixing", "bgj", "iterated-coloring", "es-coupling", "dump")


def _cmd_oracle(ns) -> int:
    opts = _merged_options(ns)
    check = ns.check
    if check not in _ORACLE_CHECKS:
        raise CliError(1, f"unknown oracle check {check!r}; choose from "
                          + ", ".join(_ORACLE_CHECKS))
    n = _opt(opts, "n", conv=int)
    q = _opt(opts, "q", conv=float)
    if n is None or q is None:
        raise CliError(1, "--n and --q are required")
    lam = _resolve_lambda(opts, [n])
    kind = _opt(opts, "kind", default="glauber")

    if check == "bgj":
        tol = _opt(opts, "tol", default=1e-10, conv=float)
        alpha = _opt(opts, "alpha", default=1.0 / 3.0, conv=float)
        dev = bgj_coloring_check(n, lam, q, alpha)
        return _verdict("bgj restriction total variation", dev, tol)
    if check == "iterated-coloring":
        tol = _opt(opts, "tol", default=1e-10, conv=float)
        dev = iterated_coloring_check(n, lam, q)
        return _verdict("iterated coloring deviation", dev, tol)
    if check == "es-coupling":
        tol = _opt(opts, "tol", default=1e-10, conv=float)
        dev = max(es_coupling_check(n, lam, _require_integer_q(q, "es-coupling")))
        return _verdict("edge/spin coupling deviation", dev, tol)

    if kind == "sw":
        _require_integer_q(q, "sw")
    kernel = build_kernel(kind, n, q, lam)
    if check == "dump":
        out = opts.get("out") or f"mcd_kernel_{kind}_n{n}.csv"
        dump_kernel_csv(kernel, out)
        print(out)
        return 0
    if check == "stationarity":
        tol = _opt(opts, "tol", default=1e-10, conv=float)
        return _verdict("stationarity residual",
                        stationarity_residual(kernel), tol)
    if check == "detailed-balance":
        tol = _opt(opts, "tol", default=1e-12, conv=float)
        return _verdict("detailed balance violation",
                        detailed_balance_violation(kernel), tol)
    gap = spectral_gap(kernel)
    if check == "gap":
        print(f"spectral gap = {gap!r}")
        return 0
    if check == "mixing":
        tmix = mixing_time_exact(kernel)
        pi_min = float(kernel.measure.probs.min())
        lo = 1.0 / gap - 1.0
        hi = math.log(2.0 * math.e / pi_min) / gap
        ok = lo <= tmix <= hi
        print(f"t_mix = {tmix}, bounds [{lo!r}, {hi!r}]: "
              + ("PASS" if ok else "FAIL"))
        return 0 if ok else 2
    # cheeger
    if kernel.size <= 16:
        phi, _ = exhaustive_min_ratio(kernel)
        label = "exhaustive"
    else:
        phi, _ = min_bottleneck_ratio(kernel)
        label = "family"
    # gap <= Phi(S) holds for every cut, so the family minimum certifies
    # the exact conductance sandwich whenever phi^2/2 <= gap
    lower_ok = phi * phi / 2.0 <= gap + 1e-12
    upper_ok = gap <= phi + 1e-12
    ok = lower_ok and upper_ok
    print(f"cheeger ({label}): phi = {phi!r}, gap = {gap!r}, "
          f"phi^2/2 <= gap: {lower_ok}, gap <= phi: {upper_ok}: "
          + ("PASS" if ok else "FAIL"))
    return 0 if ok else 2


def _verdict(label: str, value: float, tol: float) -> int:
    value = float(value)
    ok = value <= tol
    print(f"{label} = {value!r} (tolerance {tol!r}): "
          + ("PASS" if ok else "FAIL"))
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# parser assembly

def _add_common(p: _Parser, *names: str) -> None:
    spec = {
        "n": dict(flags=["--n"], help="number of vertices, or a grid"),
        "q": dict(flags=["--q"], type=float, help="number of colors"),
        "lam": dict(flags=["--lambda"], dest="lam", type=float,
                    help="edge intensity lambda"),
        "beta": dict(flags=["--beta"], type=float,
                     help="inverse temperature (converted to lambda)"),
        "seed": dict(flags=["--seed"], type=int,
                     help="master seed (default: MCD_SEED or 0)"),
        "threads": dict(flags=["--threads"], type=int,
                        help="worker processes (default 1)"),
        "replicas": dict(flags=["--replicas"], type=int),
        "rho": dict(flags=["--rho"], type=float,
                    help="stability-set margin"),
        "start": dict(flags=["--start"], choices=["balanced", "ordered"]),
        "grid": dict(flags=["--grid"], help="start:stop:step or comma list"),
        "m_threshold": dict(flags=["--m-threshold"], dest="m_threshold",
                            type=int, help="large-cluster size cutoff"),
        "epsilon": dict(flags=["--epsilon"], type=float),
        "burn": dict(flags=["--burn"], type=int),
        "samples": dict(flags=["--samples"], type=int),
        "cap": dict(flags=["--cap"], type=int, help="escape-time cap"),
        "steps": dict(flags=["--steps"], type=int),
        "observe_every": dict(flags=["--observe-every"], dest="observe_every",
                              type=int),
        "init": dict(flags=["--init"]),
        "kind": dict(flags=["--kind"], choices=["sw", "cm", "glauber"]),
        "alpha": dict(flags=["--alpha"], type=float,
                      help="restriction density for the bgj check"),
        "tol": dict(flags=["--tol"], type=float),
        "out": dict(flags=["--out"], help="output path"),
        "config": dict(flags=["--config"], help="flat JSON option file"),
    }
    for name in names:
        entry = dict(spec[name])
        flags = entry.pop("flags")
        p.add_argument(*flags, default=None, **entry)


def build_parser() -> _Parser:
    parser = _Parser(prog="mcd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"mcd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("critical-points",
                       help="print lambda_s, lambda_c, lambda_S for q")
    _add_common(p, "q", "config")
    p.set_defaults(func=_cmd_critical_points)

    p = sub.add_parser("drift", help="tabulate the one-step drift functions")
    _add_common(p, "q", "lam", "beta", "n", "grid", "out", "config")
    p.add_argument("--fixed-points", dest="fixed_points", action="store_true",
                   default=None, help="print the drift fixed points as JSON")
    p.set_defaults(func=_cmd_drift)

    p = sub.add_parser("simulate", help="run one chain and dump the trajectory")
    _add_common(p, "kind", "n", "q", "lam", "beta", "steps", "observe_every",
                "init", "m_threshold", "seed", "out", "config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="run a replicated experiment")
    p.add_argument("name", help="one of " + ", ".join(_EXPERIMENTS))
    _add_common(p, "n", "q", "lam", "beta", "rho", "start", "replicas",
                "grid", "m_threshold", "epsilon", "burn", "samples", "cap",
                "seed", "threads", "out", "config")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("oracle", help="exact small-system checks")
    p.add_argument("check", help="one of " + ", ".join(_ORACLE_CHECKS))
    _add_common(p, "kind", "n", "q", "lam", "beta", "alpha", "tol", "out",
                "config")
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except RegimeError as err:
        print(f"regime error: {err}", file=sys.stderr)
        return 3
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
