"""Command-line front end.

Subcommands: ``mqc``, ``teleclone``, ``sweep``, ``optimize`` and ``verify``.
Every file written is accompanied by ``<file>.manifest.json`` recording the
command, its resolved parameters, the seed, the package version and a
timestamp.  The timestamp lives only in the sidecar, so reports are
byte-identical across runs with the same parameters.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric or
degenerate-port error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__, core, mqc, optimizer, protocol
from .errors import DegeneratePortError, InvalidArgumentError, NumericalDegeneracyError, TelecloneError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_TOL = 1e-10


class UsageError(Exception):
    """Bad flag values detected after argparse has run."""


# --- output helpers ------------------------------------------------------------


def _plain(obj):
    """Convert numpy containers and scalars into JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    # json writes floats with repr, the shortest string that round-trips exactly
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def fmt_float(v) -> str:
    return "%.17g" % v


def write_manifest(path: Path, command: str, parameters: dict, seed: int | None = None) -> Path:
    manifest = {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "artifact_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    side = path.with_name(path.name + ".manifest.json")
    side.write_text(dumps(manifest))
    return side


def _write_output(path: str | None, text: str, command: str, parameters: dict, seed=None):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    out = Path(path)
    out.write_text(text)
    write_manifest(out, command, parameters, seed)


def _write_csv(path: str | None, header: list[str], rows: list[list], command: str, parameters: dict, seed=None):
    def render(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])

    if path is None or path == "-":
        render(sys.stdout)
        return
    out = Path(path)
    with out.open("w", newline="") as fh:
        render(fh)
    write_manifest(out, command, parameters, seed)


# --- flag parsing helpers --------------------------------------------------------


def parse_seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(63)
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}")
    if seed < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return seed


def parse_int_range(text: str) -> list[int]:
    """``"2..10"`` (inclusive), ``"2,3,5"`` or a single integer."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse integer range {text!r}")


def parse_float_range(text: str) -> list[float]:
    """``"lo:hi:count"`` (inclusive, evenly spaced), ``"a,b,c"`` or a single value."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            num = int(num)
            if num < 1:
                return []
            return [float(v) for v in np.linspace(float(lo), float(hi), num)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse float range {text!r}")


def _parse_modes(text: str | None) -> list[int] | None:
    if text is None:
        return None
    return parse_int_range(text)


# --- mqc ---------------------------------------------------------------------------


def cmd_mqc(args) -> int:
    if args.spec:
        spec = mqc.MqcSpec.from_dict(json.loads(Path(args.spec).read_text()))
    else:
        spec = mqc.MqcSpec(M=args.M, theta0=args.theta0, s=args.s)
    state = mqc.build_mqc(spec)
    db1, db2 = spec.source_db
    print(f"M = {spec.M}, theta0 = {spec.theta0:.10g} rad, s = {spec.s:.10g}")
    print(f"r1 = {spec.r1:.10g}  ({abs(db1):.4f} dB)")
    print(f"r2 = {spec.r2:.10g}  ({abs(db2):.4f} dB)")
    print(f"total source squeezing: {abs(db1) + abs(db2):.4f} dB")
    if args.out:
        params = spec.to_dict()
        _write_output(args.out, dumps(state.to_dict()), "mqc", params)
        print(f"state written to {args.out}")
    return EXIT_OK


# --- teleclone ------------------------------------------------------------------------


def _input_spec(args) -> protocol.InputSpec:
    kind = "squeezed" if args.s_in != 0.0 else "coherent"
    return protocol.InputSpec(kind=kind, x0=args.x0, p0=args.p0, s_in=args.s_in)


def cmd_teleclone(args) -> int:
    inp = _input_spec(args)
    receivers = _parse_modes(args.receivers)
    params = {"input": inp.to_dict(), "method": args.method, "port": args.port}
    if args.state:
        state = core.GaussianState.from_json(Path(args.state).read_text())
        params["state_file"] = str(args.state)
    else:
        if args.M is None:
            raise UsageError("give either --M or --state")
        spec = mqc.MqcSpec(M=args.M, theta0=args.theta0, s=args.s)
        state = mqc.build_mqc(spec)
        params["mqc"] = spec.to_dict()
    if receivers is not None:
        params["receivers"] = receivers
    if args.method == "analytic":
        report = protocol.teleclone_analytic(state, inp, port=args.port, receivers=receivers)
        seed = None
    else:
        if args.trials < 2:
            raise UsageError("--trials must be at least 2")
        seed = args.seed
        params.update(trials=args.trials, seed=seed)
        report = protocol.run_teleclone_mc(state, inp, trials=args.trials, seed=seed, port=args.port, receivers=receivers)
    _write_output(args.out, dumps(report.to_dict()), "teleclone", params, seed)
    if args.out:
        print(f"fidelity per clone: {report.fidelity_per_clone!r} (optimum {report.optimal_fidelity!r})")
    return EXIT_OK


# --- sweep ---------------------------------------------------------------------------

SWEEP_HEADER = ["M", "theta0", "s", "lambda_x", "lambda_p", "fidelity", "optimal_fidelity", "method", "r1_db", "r2_db", "r"]


def sweep_rows(Ms, theta0s, ss, rs=None, s_in_matched: bool = True) -> list[list]:
    """One row per grid point.  With ``rs`` the symmetric 2M-mode channel is swept instead of ``theta0``."""
    rows = []
    for M in Ms:
        for s in ss:
            inp = protocol.InputSpec("squeezed" if (s_in_matched and s != 0) else "coherent", s_in=s if s_in_matched else 0.0)
            if rs is not None:
                for r in rs:
                    spec = mqc.SymmetricMqcSpec(M, r, s)
                    state = mqc.build_symmetric_mqc(spec)
                    rep = protocol.teleclone_analytic(state, inp, port=0, receivers=list(range(M, 2 * M)))
                    lx, lp = rep.excess_noise
                    db = mqc.squeezing_db(r)
                    rows.append([M, "", s, lx, lp, rep.fidelity_per_clone, rep.optimal_fidelity, "analytic", db, db, r])
            else:
                for th in theta0s:
                    spec = mqc.MqcSpec(M, th, s)
                    rep = protocol.teleclone_analytic(mqc.build_mqc(spec), inp)
                    lx, lp = rep.excess_noise
                    db1, db2 = spec.source_db
                    rows.append([M, th, s, lx, lp, rep.fidelity_per_clone, rep.optimal_fidelity, "analytic", db1, db2, ""])
    return rows


def cmd_sweep(args) -> int:
    Ms = parse_int_range(args.M)
    ss = parse_float_range(args.s)
    rs = parse_float_range(args.r) if args.r is not None else None
    theta0s = parse_float_range(args.theta0) if args.theta0 is not None else [math.pi / 4]
    if not Ms or not ss or not theta0s or (rs is not None and not rs):
        raise UsageError("sweep range is empty")
    rows = sweep_rows(Ms, theta0s, ss, rs)
    params = {"M": Ms, "theta0": theta0s if rs is None else None, "s": ss, "r": rs}
    _write_csv(args.out, SWEEP_HEADER, rows, "sweep", params)
    return EXIT_OK


# --- optimize ---------------------------------------------------------------------------

_GA_FLAGS = ("population", "generations", "mutation_sigma", "penalty_weight", "tolerance", "patience", "target", "s")


def cmd_optimize(args) -> int:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
    for name in _GA_FLAGS:
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    data["seed"] = args.seed
    if args.no_repair:
        data["repair"] = False
    config = optimizer.SearchConfig.from_dict(data)

    def progress(entry):
        if args.verbose and entry["generation"] % 25 == 0:
            print(
                f"gen {entry['generation']:5d}  objective {entry['best_objective']:.6g}  "
                f"total {entry['best_total_db']:.4f} dB  residual {entry['residual']:.3g}",
                file=sys.stderr,
            )

    result = optimizer.genetic_search(args.M, config, progress=progress)
    analysis = optimizer.analyze_solution(result)
    params = {"M": args.M, "config": config.to_dict()}
    payload = result.to_dict()
    payload["analysis"] = analysis.to_dict()
    payload["version"] = __version__
    if args.out:
        _write_output(args.out, dumps(payload), "optimize", params, config.seed)
    if args.history:
        rows = [[h["generation"], h["best_objective"], h["best_total_db"], h["residual"]] for h in result.history]
        _write_csv(args.history, ["generation", "best_objective", "best_total_db", "residual"], rows, "optimize", params, config.seed)
    print(analysis.summary(args.M))
    print(f"generations run: {result.generations_run}")
    return EXIT_OK


# --- verify -------------------------------------------------------------------------------


def _tolerance() -> float:
    raw = os.environ.get("TELECLONE_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"TELECLONE_TOL must be a number, got {raw!r}")
    if not tol > 0:
        raise UsageError("TELECLONE_TOL must be positive")
    return tol


def run_checks(Ms, tol: float, mc_trials: int = 20_000) -> list[tuple[str, int | None, float, float, bool]]:
    """Invariant suite.  Each entry is ``(check, M, error, threshold, passed)``."""
    checks = []

    def add(name, M, err, thr):
        err = float(err)
        checks.append((name, M, err, thr, bool(err <= thr)))

    for M in Ms:
        spec = mqc.MqcSpec(M)
        n = M + 1
        parts = [
            core.squeezer(n, 0, spec.r1),
            core.squeezer(n, 1, -spec.r2),
            core.beam_splitter(n, 0, 1, spec.theta0),
            core.m_splitter(M).embed(n, range(1, n)),
        ]
        add("symplectic identity", M, max(p.deviation() for p in parts), tol)
        state = mqc.build_mqc(spec)
        nu = core.symplectic_eigenvalues(state)
        add("physicality", M, max(0.0, float(np.max(core.VACUUM_VARIANCE - nu))), tol)
        add("purity", M, float(np.max(np.abs(nu - core.VACUUM_VARIANCE))), tol)
        closed = mqc.closed_form_covariance(spec)
        add("closed form vs circuit", M, np.max(np.abs(closed.cov - state.cov)), tol)

        ens = protocol.derive_ensemble_channel(state)
        out = ens.output_state(core.coherent(0.7, -0.3))
        _, worst = protocol.verify_output_symmetry(out.cov, atol=tol)
        add("output symmetry", M, worst, tol)
        lam = protocol.mqc_excess_noise(M)
        lx, lp = ens.clones[0].excess_noise
        add("excess noise", M, max(abs(lx - lam), abs(lp - lam)), tol)

        rep = protocol.teleclone_analytic(state, protocol.InputSpec())
        f_formula = protocol.clone_fidelity(lx, lp)
        f_opt = protocol.optimal_fidelity(M)
        add("fidelity paths", M, max(abs(rep.fidelity_per_clone - f_formula), abs(rep.fidelity_per_clone - f_opt)), tol)
        add("squeezing budget", M, abs(spec.source_db[0] - mqc.equal_squeezing_db(M)), tol)

    # determinism and Monte Carlo agreement on the smallest channel
    M0 = min(Ms)
    state = mqc.build_mqc(mqc.MqcSpec(M0))
    a = protocol.run_teleclone_mc(state, protocol.InputSpec(), trials=mc_trials, seed=11)
    b = protocol.run_teleclone_mc(state, protocol.InputSpec(), trials=mc_trials, seed=11)
    identical = dumps(a.to_dict()) == dumps(b.to_dict())
    checks.append(("determinism", M0, 0.0 if identical else 1.0, 0.0, identical))
    z = abs(a.fidelity_per_clone - protocol.optimal_fidelity(M0)) / a.fidelity_stderr
    # statistical check: compared in standard errors, not against the tolerance
    add("monte carlo vs analytic (sigmas)", M0, z, 4.0)
    return checks


def cmd_verify(args) -> int:
    tol = _tolerance()
    Ms = parse_int_range(args.M) if args.M else [2, 3, 4, 5]
    if not Ms:
        raise UsageError("--M list is empty")
    for M in Ms:
        if M < 2:
            raise UsageError(f"M = {M} is degenerate: need at least 2 receivers")
    print(f"tolerance {tol:g}" + (" (from TELECLONE_TOL)" if "TELECLONE_TOL" in os.environ else ""))
    print()
    print(f"{'M':>3} {'fidelity':>12} {'M/(2M-1)':>12} {'lambda_x':>12} {'lambda_p':>12} {'dB/source':>10}")
    for M in Ms:
        spec = mqc.MqcSpec(M)
        rep = protocol.teleclone_analytic(mqc.build_mqc(spec), protocol.InputSpec())
        lx, lp = rep.excess_noise
        print(
            f"{M:>3} {rep.fidelity_per_clone:>12.8f} {rep.optimal_fidelity:>12.8f} "
            f"{lx:>12.8f} {lp:>12.8f} {mqc.equal_squeezing_db(M):>10.4f}"
        )
    print()
    checks = run_checks(Ms, tol)
    print(f"{'check':<34} {'M':>3} {'error':>12} {'threshold':>10}  result")
    failed = []
    for name, M, err, thr, ok in checks:
        print(f"{name:<34} {M:>3} {err:>12.3e} {thr:>10.1e}  {'PASS' if ok else 'FAIL'}")
        if not ok:
            failed.append(f"{name} (M={M})")
    print()
    if failed:
        print("FAILED: " + "; ".join(failed))
        return EXIT_VERIFY
    print("all checks passed")
    return EXIT_OK


# --- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvteleclone", description="Continuous-variable telecloning simulator and optimizer.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mqc", help="build the multiuser channel state and report its squeezing budget")
    p.add_argument("--M", type=int, default=2, help="number of receivers (>= 2)")
    p.add_argument("--theta0", type=float, default=math.pi / 4, help="mixing angle in radians")
    p.add_argument("--s", type=float, default=0.0, help="extra squeezing matched to squeezed inputs")
    p.add_argument("--spec", help='JSON spec document {"M": ..., "theta0": ..., "s": ...}')
    p.add_argument("--out", help="write the state JSON here")
    p.set_defaults(func=cmd_mqc)

    p = sub.add_parser("teleclone", help="run the telecloning protocol")
    p.add_argument("--M", type=int)
    p.add_argument("--state", help="channel state JSON (as written by `mqc --out`)")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--receivers", help="receiver modes, e.g. 1,2 or 3..5 (default: all but the port)")
    p.add_argument("--theta0", type=float, default=math.pi / 4)
    p.add_argument("--s", type=float, default=0.0, help="channel squeezing offset")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--s-in", dest="s_in", type=float, default=0.0, help="input squeezing (0 for coherent)")
    p.add_argument("--method", choices=["analytic", "mc"], default="analytic")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=parse_seed, default=0, help="integer or 'random'")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_teleclone)

    p = sub.add_parser("sweep", help="tabulate excess noise and fidelity over a parameter grid")
    p.add_argument("--M", default="2", help="e.g. 2..10 or 2,3,5")
    p.add_argument("--theta0", help="lo:hi:count or comma list (default pi/4)")
    p.add_argument("--s", default="0", help="lo:hi:count or comma list; inputs are squeezed to match")
    p.add_argument("--r", help="sweep the symmetric 2M-mode channel over these EPR squeezings")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="genetic search for a minimal-squeezing channel")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--config", help="JSON SearchConfig; flags override its entries")
    p.add_argument("--seed", type=parse_seed, default=0)
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--mutation-sigma", dest="mutation_sigma", type=float)
    p.add_argument("--penalty-weight", dest="penalty_weight", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--target", choices=["symmetric_noise", "fidelity"])
    p.add_argument("--s", type=float)
    p.add_argument("--no-repair", action="store_true", help="disable the constraint-repair step")
    p.add_argument("--out", help="result JSON path")
    p.add_argument("--history", help="convergence history CSV path")
    p.add_argument("--verbose", action="store_true", help="print a generation counter to stderr")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--M", help="receiver counts, e.g. 2,3,4,5")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DegeneratePortError, NumericalDegeneracyError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, InvalidArgumentError, ValueError, OSError) as exc:
        # DomainError is a ValueError, so a violated theta0 bound lands here too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TelecloneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
