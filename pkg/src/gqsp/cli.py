"""Command-line front end: complete -> angles -> plan -> verify pipeline with
JSON I/O, synthesis commands, and a scaling benchmark (CSV + plot).

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 verification
failure. Errors are emitted as one-line JSON {"error": kind, "stage": name}
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .angles import GqspAngles, compute_angles
from .circuit import (
    CircuitPlan,
    plan_circuit,
    random_unitary,
    simulate,
    unitary_from_json_dict,
    verify_block,
)
from .completion import (
    CompletionConfig,
    _Objective,
    complete_via_optimization,
    complete_via_roots,
    completion_objective,
)
from .errors import (
    GqspError,
    InvalidInputError,
    NonConvergenceError,
    VerificationError,
)
from .poly import LaurentPoly, eval_unit_circle
from .transforms import (
    CirculantSpec,
    FourierFitConfig,
    fit_fourier_series,
    jacobi_anger_cos,
    jacobi_anger_sin,
    named_function,
    synth_circulant,
    synth_diagonal,
)

DEFAULT_SCALAR_GRID = 256
DEFAULT_VERIFY_TOL = 1e-8
DEFAULT_PIPELINE_OBJECTIVE_TOL = 1e-20


class _Stage:
    """Names the pipeline stage for error reporting."""

    def __init__(self, name: str):
        self.name = name


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_json(directory: Path, name: str, obj) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / name).write_text(_dump(obj))


def _load_poly(path: str) -> LaurentPoly:
    return LaurentPoly.from_json(Path(path).read_text())


def _dense_window(p: LaurentPoly):
    """Min-degree-0 coefficient window plus the conjugate-signal count."""
    if p.min_degree >= 0:
        return np.concatenate([np.zeros(p.min_degree, dtype=complex), p.coeffs]), 0
    return p.coeffs.copy(), -p.min_degree


def _resolve_unitary(spec: str, seed: int):
    """--unitary forms: random:N:seed, scalar-grid:m, or a JSON matrix path."""
    if spec.startswith("random:"):
        parts = spec.split(":")
        if len(parts) not in (2, 3):
            raise InvalidInputError(f"bad unitary spec {spec!r}; expected random:N[:seed]")
        n = int(parts[1])
        u_seed = int(parts[2]) if len(parts) == 3 else seed
        return ("matrix", random_unitary(n, u_seed))
    if spec.startswith("scalar-grid:"):
        m = int(spec.split(":", 1)[1])
        if m < 1:
            raise InvalidInputError("scalar-grid size must be >= 1")
        return ("scalar-grid", m)
    obj = json.loads(Path(spec).read_text())
    return ("matrix", unitary_from_json_dict(obj))


def _verify_max_error(plan: CircuitPlan, unitary, target: LaurentPoly) -> float:
    kind, payload = unitary
    if kind == "scalar-grid":
        ts = 2.0 * np.pi * np.arange(payload) / payload
        target_vals = eval_unit_circle(target, ts)
        errs = [
            abs(simulate(plan, np.array([[np.exp(1j * t)]])).top_left[0, 0] - v)
            for t, v in zip(ts, target_vals)
        ]
        return float(max(errs))
    return verify_block(plan, payload, target)


def _completion_config(args, default_tol: float = 1e-12) -> CompletionConfig:
    return CompletionConfig(
        max_iters=args.max_iters,
        objective_tol=args.tol if args.tol is not None else default_tol,
        restarts=args.restarts,
        seed=args.seed,
    )


def _run_completion(a: np.ndarray, args, default_tol: float = 1e-12):
    """Shared complete stage: returns (b, report_dict). Raises on nonconvergence."""
    if getattr(args, "oracle", False):
        t0 = time.perf_counter()
        b = complete_via_roots(a)
        wall = time.perf_counter() - t0
        report = {
            "final_objective": completion_objective(a, b),
            "iterations": 0,
            "wall_time_s": wall,
        }
        return b, report
    cfg = _completion_config(args, default_tol)
    b, rep = complete_via_optimization(a, cfg, parallel=args.parallel_restarts)
    if rep.final_objective > cfg.objective_tol:
        raise NonConvergenceError(
            f"objective stalled at {rep.final_objective:.3e} > tol {cfg.objective_tol:.3e}"
        )
    report = {
        "final_objective": rep.final_objective,
        "iterations": rep.iterations,
        "wall_time_s": rep.wall_time,
    }
    return b, report


def _cmd_complete(args, stage: _Stage) -> int:
    stage.name = "load"
    p = _load_poly(args.poly)
    if p.min_degree != 0:
        raise InvalidInputError("complete expects a min_degree 0 polynomial")
    stage.name = "complete"
    b, report = _run_completion(p.coeffs, args)
    stage.name = "write"
    out = Path(args.output_dir or ".")
    _write_json(out, "q.json", LaurentPoly(b).to_json_dict())
    _write_json(out, "report.json", report)
    sys.stdout.write(_dump(report))
    return 0


def _cmd_angles(args, stage: _Stage) -> int:
    stage.name = "load"
    p = _load_poly(args.p)
    q = _load_poly(args.q)
    stage.name = "angles"
    tol = args.tol if args.tol is not None else 1e-8
    ang = compute_angles(p, q, tol=tol)
    sys.stdout.write(_dump(ang.to_json_dict()))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "angles.json", ang.to_json_dict())
    if args.k_negative is not None:
        stage.name = "plan"
        plan = plan_circuit(ang, k_negative=args.k_negative)
        _write_json(Path(args.output_dir or "."), "circuit.json", plan.to_json_dict())
    return 0


def _cmd_plan(args, stage: _Stage) -> int:
    stage.name = "load"
    ang = GqspAngles.from_json(Path(args.angles).read_text())
    stage.name = "plan"
    plan = plan_circuit(ang, k_negative=args.k_negative)
    sys.stdout.write(_dump(plan.to_json_dict()))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "circuit.json", plan.to_json_dict())
    return 0


def _cmd_verify(args, stage: _Stage) -> int:
    stage.name = "load"
    plan = CircuitPlan.from_json(Path(args.circuit).read_text())
    target = _load_poly(args.target)
    unitary = _resolve_unitary(args.unitary, args.seed)
    stage.name = "verify"
    max_error = _verify_max_error(plan, unitary, target)
    result = {"max_error": max_error}
    sys.stdout.write(_dump(result))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "verify.json", result)
    tol = args.tol if args.tol is not None else DEFAULT_VERIFY_TOL
    if max_error > tol:
        raise VerificationError(f"max_error {max_error:.3e} exceeds tol {tol:.3e}")
    return 0


def _cmd_pipeline(args, stage: _Stage) -> int:
    stage.name = "load"
    p = _load_poly(args.poly)
    a, k_negative = _dense_window(p)
    unitary = _resolve_unitary(
        args.unitary if args.unitary else f"scalar-grid:{args.grid or DEFAULT_SCALAR_GRID}",
        args.seed,
    )
    out = Path(args.output_dir or ".")

    stage.name = "complete"
    b, _report = _run_completion(a, args, DEFAULT_PIPELINE_OBJECTIVE_TOL)
    stage.name = "angles"
    ang = compute_angles(a, b)
    stage.name = "plan"
    plan = plan_circuit(ang, k_negative=k_negative)
    stage.name = "verify"
    max_error = _verify_max_error(plan, unitary, p)

    stage.name = "write"
    _write_json(out, "q.json", LaurentPoly(b).to_json_dict())
    _write_json(out, "angles.json", ang.to_json_dict())
    _write_json(out, "circuit.json", plan.to_json_dict())
    _write_json(out, "verify.json", {"max_error": max_error})
    sys.stdout.write(_dump({"max_error": max_error}))
    stage.name = "accept"
    if max_error > args.accept_tol:
        raise VerificationError(
            f"max_error {max_error:.3e} exceeds accept tol {args.accept_tol:.3e}"
        )
    return 0


def _cmd_synth_diag(args, stage: _Stage) -> int:
    stage.name = "load"
    p = _load_poly(args.filter)
    stage.name = "synth"
    cfg = _completion_config(args, DEFAULT_PIPELINE_OBJECTIVE_TOL)
    plan, scale = synth_diagonal(p, args.n_qubits, cfg)
    sys.stdout.write(_dump({"plan": plan.to_json_dict(), "scale": scale}))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "circuit.json", plan.to_json_dict())
        _write_json(Path(args.output_dir), "scale.json", {"scale": scale})
    return 0


def _cmd_synth_circulant(args, stage: _Stage) -> int:
    stage.name = "load"
    p = _load_poly(args.filter)
    spec = CirculantSpec(n=args.n, filter=p)
    stage.name = "synth"
    cfg = _completion_config(args, DEFAULT_PIPELINE_OBJECTIVE_TOL)
    synthesis = synth_circulant(spec, cfg)
    sys.stdout.write(_dump(synthesis.to_json_dict()))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "circulant.json", synthesis.to_json_dict())
    return 0


def _cmd_jacobi_anger(args, stage: _Stage) -> int:
    stage.name = "generate"
    fn = jacobi_anger_cos if args.kind == "cos" else jacobi_anger_sin
    poly = fn(args.t, args.eps)
    sys.stdout.write(_dump(poly.to_json_dict()))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "poly.json", poly.to_json_dict())
    return 0


def _cmd_fourier_fit(args, stage: _Stage) -> int:
    stage.name = "fit"
    cfg = FourierFitConfig(m=args.m, delta=args.delta, grid_size=args.grid)
    fit = fit_fourier_series(named_function(args.function), cfg)
    result = {
        "m": fit.m,
        "delta": fit.delta,
        "max_residual": fit.max_residual,
        "coeffs": LaurentPoly(fit.coeffs, min_degree=-fit.m).to_json_dict(),
    }
    sys.stdout.write(_dump(result))
    if args.output_dir is not None:
        _write_json(Path(args.output_dir), "fit.json", result)
    return 0


@dataclass(frozen=True)
class BenchRecord:
    degree: int
    kind: str  # real | complex
    objective_eval_ms: float
    full_opt_ms: float
    iterations: int

    def __post_init__(self):
        if self.objective_eval_ms < 0 or self.full_opt_ms < 0:
            raise InvalidInputError("times must be >= 0")
        if self.kind not in ("real", "complex"):
            raise InvalidInputError("kind must be real or complex")


def _bench_target(degree: int, kind: str, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, degree, 0 if kind == "real" else 1])
    a = rng.standard_normal(degree + 1)
    if kind == "complex":
        a = a + 1j * rng.standard_normal(degree + 1)
    # sup-norm 0.5 keeps every instance comfortably admissible
    p = LaurentPoly(a.astype(complex))
    from .poly import sup_norm_sq

    return p.coeffs * (0.5 / np.sqrt(sup_norm_sq(p)))


def _time_objective_eval(a: np.ndarray, repeats: int, seed: int) -> float:
    """Median per-call ms of the fused objective+gradient, adaptively batched."""
    prob = _Objective(a)
    rng = np.random.default_rng([seed, len(a)])
    x = rng.standard_normal(2 * len(a)) * 0.1
    prob.value_and_grad(x)  # warm the FFT plan
    samples = []
    for _ in range(repeats):
        batch, elapsed = 1, 0.0
        while True:
            t0 = time.perf_counter()
            for _i in range(batch):
                prob.value_and_grad(x)
            elapsed = time.perf_counter() - t0
            if elapsed >= 5e-3 or batch >= 4096:
                break
            batch *= 4
        samples.append(1e3 * elapsed / batch)
    return float(statistics.median(samples))


def run_bench(degrees, kinds=("real", "complex"), repeats: int = 3,
              opt_iters: int = 150, tol: float = 1e-8, seed: int = 0,
              parallel: bool = False) -> list[BenchRecord]:
    """Timing records per (degree, kind); median over repeats.

    full_opt_ms probes optimization throughput under an iteration cap
    (opt_iters); at benchmark degrees a run to convergence would dominate
    the session. opt_iters=0 skips the probe.
    """
    if list(degrees) != sorted(degrees):
        raise InvalidInputError("degrees must be sorted ascending")
    records = []
    for degree in degrees:
        for kind in kinds:
            if kind not in ("real", "complex"):
                raise InvalidInputError(f"unknown kind {kind!r}")
            a = _bench_target(degree, kind, seed)
            eval_ms = _time_objective_eval(a, repeats, seed)
            opt_samples, iters = [], 0
            for _ in range(repeats if opt_iters > 0 else 0):
                cfg = CompletionConfig(
                    max_iters=opt_iters, objective_tol=tol, restarts=1, seed=seed
                )
                t0 = time.perf_counter()
                _b, rep = complete_via_optimization(a, cfg, parallel=parallel)
                opt_samples.append(1e3 * (time.perf_counter() - t0))
                iters = rep.iterations
            full_ms = float(statistics.median(opt_samples)) if opt_samples else 0.0
            records.append(BenchRecord(degree, kind, eval_ms, full_ms, iters))
    return records


def _render_bench_plot(records: list[BenchRecord], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for kind, color in (("real", "tab:blue"), ("complex", "tab:red")):
        rows = [r for r in records if r.kind == kind]
        if not rows:
            continue
        xs = [r.degree for r in rows]
        ax.loglog(xs, [r.objective_eval_ms for r in rows], "o-", color=color,
                  label=f"{kind}: objective eval")
        if any(r.full_opt_ms > 0 for r in rows):
            ax.loglog(xs, [r.full_opt_ms for r in rows], "s--", color=color,
                      alpha=0.6, label=f"{kind}: capped optimization")
    ax.set_xlabel("degree")
    ax.set_ylabel("time (ms)")
    ax.set_title("completion cost vs degree")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _cmd_bench(args, stage: _Stage) -> int:
    stage.name = "bench"
    degrees = [int(x) for x in args.degrees.split(",") if x]
    kinds = [x for x in args.kinds.split(",") if x]
    records = run_bench(
        degrees, kinds, repeats=args.repeats, opt_iters=args.opt_iters,
        tol=args.tol if args.tol is not None else 1e-8, seed=args.seed,
        parallel=args.parallel_restarts,
    )
    stage.name = "write"
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "bench.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "kind", "objective_eval_ms", "full_opt_ms", "iterations"])
        for r in records:
            writer.writerow([r.degree, r.kind,
                             f"{r.objective_eval_ms:.6f}", f"{r.full_opt_ms:.6f}",
                             r.iterations])
    if not args.no_plot:
        _render_bench_plot(records, out / "bench.png")
    by_kind = {k: [r.objective_eval_ms for r in records if r.kind == k] for k in kinds}
    summary = {"csv": str(csv_path), "rows": len(records)}
    if "real" in by_kind and "complex" in by_kind and by_kind["real"]:
        ratios = [c / r for c, r in zip(by_kind["complex"], by_kind["real"]) if r > 0]
        if ratios:
            summary["complex_over_real_eval_ratio"] = float(statistics.median(ratios))
    sys.stdout.write(_dump(summary))
    return 0


def _add_completion_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--max-iters", type=int, default=60000)
    sub.add_argument("--restarts", type=int, default=3)
    sub.add_argument("--parallel-restarts", action="store_true",
                     help="run completion restarts concurrently")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None,
                        help="command-specific tolerance (completion objective, "
                             "angle cancellation, or verification error)")
    common.add_argument("--grid", type=int, default=None,
                        help="evaluation grid size where one applies")
    common.add_argument("--output-dir", default=None,
                        help="directory for artifact files")

    parser = argparse.ArgumentParser(
        prog="gqsp",
        description="Compile polynomials on the unit circle into GQSP circuit "
                    "plans and verify them by dense simulation.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("complete", parents=[common],
                        help="find Q with |P|^2 + |Q|^2 = 1 on the unit circle")
    p.add_argument("poly", help="polynomial JSON file for P")
    p.add_argument("--oracle", action="store_true",
                   help="use the root-finding construction (degree <= 32)")
    _add_completion_flags(p)
    p.set_defaults(func=_cmd_complete)

    p = subs.add_parser("angles", parents=[common],
                        help="compute rotation angles from a (P, Q) pair")
    p.add_argument("p", help="polynomial JSON file for P")
    p.add_argument("q", help="polynomial JSON file for Q")
    p.add_argument("--k-negative", type=int, default=None,
                   help="also write circuit.json with this many conjugate signal slots")
    p.set_defaults(func=_cmd_angles)

    p = subs.add_parser("plan", parents=[common],
                        help="expand angles JSON into a gate-list circuit JSON")
    p.add_argument("angles", help="angles JSON file")
    p.add_argument("--k-negative", type=int, default=0)
    p.set_defaults(func=_cmd_plan)

    p = subs.add_parser("verify", parents=[common],
                        help="simulate a circuit JSON and compare its top-left "
                             "block against a target polynomial")
    p.add_argument("circuit", help="circuit JSON file")
    p.add_argument("--target", required=True, help="target polynomial JSON file")
    p.add_argument("--unitary", required=True,
                   help="random:N[:seed] | scalar-grid:m | path to matrix JSON")
    p.set_defaults(func=_cmd_verify)

    p = subs.add_parser("pipeline", parents=[common],
                        help="complete -> angles -> plan -> verify; writes "
                             "q.json, angles.json, circuit.json, verify.json")
    p.add_argument("poly", help="polynomial JSON file for P")
    p.add_argument("--accept-tol", type=float, default=1e-8)
    p.add_argument("--unitary", default=None,
                   help="verification unitary (default scalar-grid:256)")
    p.add_argument("--oracle", action="store_true")
    _add_completion_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    p = subs.add_parser("synth-diag", parents=[common],
                        help="circuit plan over the root-of-unity operator "
                             "realizing diag(P(w^j))/scale")
    p.add_argument("filter", help="polynomial JSON file")
    p.add_argument("--n-qubits", type=int, required=True)
    _add_completion_flags(p)
    p.set_defaults(func=_cmd_synth_diag)

    p = subs.add_parser("synth-circulant", parents=[common],
                        help="DFT-conjugated plan realizing a circulant / scale")
    p.add_argument("filter", help="filter polynomial JSON file")
    p.add_argument("--n", type=int, required=True, help="dimension (power of two)")
    _add_completion_flags(p)
    p.set_defaults(func=_cmd_synth_circulant)

    p = subs.add_parser("jacobi-anger", parents=[common],
                        help="Bessel-coefficient expansion of e^{it cos} / e^{it sin}")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--kind", choices=("cos", "sin"), required=True)
    p.set_defaults(func=_cmd_jacobi_anger)

    p = subs.add_parser("fourier-fit", parents=[common],
                        help="least-squares Fourier series fit of a named function")
    p.add_argument("--m", type=int, required=True, help="series half-width M")
    p.add_argument("--delta", type=float, required=True, help="domain margin")
    p.add_argument("--function", required=True,
                   help="const1 | exp-arcsin:<t> | exp-sqrt:<t>")
    p.set_defaults(func=_cmd_fourier_fit)

    p = subs.add_parser("bench", parents=[common],
                        help="objective-eval and capped-optimization timings; "
                             "writes bench.csv and bench.png")
    p.add_argument("--degrees", default="1024,2048,4096")
    p.add_argument("--kinds", default="real,complex")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--opt-iters", type=int, default=150,
                   help="iteration cap for the optimization probe (0 skips it)")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--parallel-restarts", action="store_true")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    stage = _Stage(args.command)
    try:
        return args.func(args, stage)
    except GqspError as err:
        sys.stderr.write(json.dumps(
            {"error": err.kind, "stage": stage.name, "detail": str(err)}) + "\n")
        return err.exit_code
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        sys.stderr.write(json.dumps(
            {"error": "invalid", "stage": stage.name, "detail": str(err)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
