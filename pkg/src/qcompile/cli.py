"""Command-line operator surface.

Subcommands: train, compile, eval, fit, oracle, compare-policies.  All
randomness is controlled by explicit seeds (or the QCOMPILE_SEED override),
so every command is reproducible byte-for-byte apart from wall-clock columns
in training logs.  QCOMPILE_THREADS / --threads cap worker counts globally
(the bundled engine runs single-threaded, which trivially respects any cap).

Exit codes: 0 success, 2 usage/configuration/input errors, 3 search budget
exhausted (compile), 4 oracle found no sequence within its depth bound.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import analysis, oracle, search
from .config import ConfigError, load_config
from .env import sample_targets
from .gatesets import UnknownGateSetError, build
from .linalg import parse_unitary, unitary
from .qnet import load_model, save_model, train_curriculum

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_BUDGET = 3
EXIT_NOT_FOUND = 4


class CliError(Exception):
    pass


def _env_int(name: str):
    raw = os.environ.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"environment variable {name} must be an integer, got {raw!r}") from None


def builtin_target(name: str) -> np.ndarray:
    """Named targets: 'xz-rot:<alpha>' = exp(-i*alpha/2 * X(x)Z), 'identity:<dim>'."""
    kind, _, arg = name.partition(":")
    if kind == "xz-rot":
        try:
            alpha = float(arg)
        except ValueError:
            raise CliError(f"xz-rot needs a numeric angle, got {arg!r}") from None
        x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        z = np.diag([1.0, -1.0]).astype(np.complex128)
        xz = np.kron(x, z)
        return unitary(math.cos(alpha / 2) * np.eye(4) - 1j * math.sin(alpha / 2) * xz)
    if kind == "identity":
        if arg not in ("2", "4"):
            raise CliError(f"identity target needs dimension 2 or 4, got {arg!r}")
        return unitary(np.eye(int(arg), dtype=np.complex128))
    raise CliError(f"unknown builtin target {name!r}; expected xz-rot:<alpha> or identity:<dim>")


def _load_target(args) -> np.ndarray:
    if args.target_builtin:
        return builtin_target(args.target_builtin)
    try:
        with open(args.target, encoding="utf-8") as fh:
            return parse_unitary(fh.read())
    except OSError as exc:
        raise CliError(f"cannot read target file: {exc}") from None
    except ValueError as exc:
        raise CliError(f"malformed target file {args.target}: {exc}") from None


def _add_target_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--target", help="path to a unitary in the text format")
    group.add_argument("--target-builtin", help="builtin target, e.g. xz-rot:1")


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed_override = _env_int("QCOMPILE_SEED")
    if args.seed is not None or seed_override is not None:
        seed = args.seed if args.seed is not None else seed_override
        cfg = type(cfg)(**{**cfg.__dict__, "seed": seed})
    gs = build(cfg.gate_set)
    print(f"training on {gs.name} (|A|={len(gs)}), depths {cfg.d_start}..{cfg.d_max}")

    def progress(row):
        flag = " (budget exhausted)" if row.budget_exhausted else ""
        print(
            f"depth {row.depth}: {row.steps} steps, loss {row.loss:.4g}, "
            f"{row.wall_time:.1f}s{flag}"
        )

    result = train_curriculum(gs, cfg.net_config(gs), cfg.train_config(), on_depth=progress)
    save_model(result.net, gs, args.model)
    with open(args.log, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth", "steps", "loss", "budget_exhausted", "wall_time"])
        for row in result.log:
            writer.writerow([row.depth, row.steps, repr(row.loss), int(row.budget_exhausted), f"{row.wall_time:.3f}"])
    print(f"model written to {args.model}, log to {args.log}")
    return EXIT_OK


def cmd_compile(args) -> int:
    net, gs = load_model(args.model)
    target = _load_target(args)
    result = search.aq_star(target, gs, net, eps=args.eps, node_budget=args.budget)
    print(search.format_sequence(result))
    return EXIT_OK if result.success else EXIT_BUDGET


def cmd_eval(args) -> int:
    net, gs = load_model(args.model)
    seed = args.seed if _env_int("QCOMPILE_SEED") is None else _env_int("QCOMPILE_SEED")
    targets = sample_targets(gs, args.mode, args.depth, args.n, seed=seed)
    eps_list = [float(tok) for tok in args.eps_list.split(",") if tok]
    rows = analysis.batch_evaluate(net, gs, targets, eps_list, node_budget=args.budget)
    paths = analysis.emit_report(rows, {}, args.out)
    for row in rows:
        print(
            f"eps={row.eps:g}: success {row.n_success}/{row.n_targets}, "
            f"mean length {row.mean_length:.3f}, mean fidelity {row.mean_fidelity:.6f}"
        )
    print(f"report written to {paths['runs']}")
    return EXIT_OK


def cmd_fit(args) -> int:
    points = _read_fit_points(args.points)
    fits = {label: analysis.fit_scaling(pts) for label, pts in points.items()}
    for label, fit in fits.items():
        print(f"{label}: a={fit.a!r} c={fit.c!r} r_squared={fit.r_squared!r}")
    if args.out:
        analysis.emit_report([], fits, args.out)
        print(f"fit tables written to {args.out}")
    return EXIT_OK


def _read_fit_points(path) -> dict[str, list[tuple[float, float]]]:
    """Accept points.csv (label,epsilon,mean_length) or bare (epsilon,mean_length)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CliError(f"{path}: empty points file")
        header = [h.strip() for h in header]
        if header == ["label", "epsilon", "mean_length"]:
            labeled = True
        elif header == ["epsilon", "mean_length"]:
            labeled = False
        else:
            raise CliError(
                f"{path}: expected columns label,epsilon,mean_length or epsilon,mean_length; got {header}"
            )
        out: dict[str, list[tuple[float, float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if labeled:
                    out.setdefault(row[0], []).append((float(row[1]), float(row[2])))
                else:
                    out.setdefault("fit", []).append((float(row[0]), float(row[1])))
            except (IndexError, ValueError):
                raise CliError(f"{path}:{lineno}: malformed point row {row}") from None
    if not out:
        raise CliError(f"{path}: no data rows")
    return out


def cmd_oracle(args) -> int:
    try:
        gs = build(args.gate_set)
    except UnknownGateSetError as exc:
        raise CliError(str(exc)) from None
    target = _load_target(args)
    found = oracle.bfs_shortest(target, gs, eps=args.eps, max_depth=args.max_depth)
    if found is None:
        print(f"no sequence of length <= {args.max_depth} within eps={args.eps:g}")
        return EXIT_NOT_FOUND
    length, labels = found
    print(" ".join([str(length)] + labels))
    return EXIT_OK


def cmd_compare_policies(args) -> int:
    net, gs = load_model(args.model)
    seed = args.seed if _env_int("QCOMPILE_SEED") is None else _env_int("QCOMPILE_SEED")
    targets = sample_targets(gs, args.mode, args.depth, args.n, seed=seed)
    budgets = search.PolicyBudgets(
        node_budget=args.budget,
        max_steps=args.max_steps,
        boltzmann_kt=args.kt,
        boltzmann_maximize=not args.printed_sign,
        seed=seed,
    )
    stats = search.evaluate_policies(targets, gs, net, eps=args.eps, budgets=budgets)
    search.write_comparison_csv(stats, args.out)
    for s in stats:
        print(
            f"{s.strategy}: success {s.n_success}/{s.n_targets}, "
            f"mean fidelity {s.mean_fidelity:.6f}, variance {s.var_fidelity:.3e}"
        )
    print(f"comparison written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcompile", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None, help="global worker-count cap (>= 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--log", required=True, help="output training-log CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compile", help="compile one target with a trained model")
    p.add_argument("--model", required=True)
    _add_target_args(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--budget", type=int, default=100_000)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="batch-compile sampled targets and report metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("product", "haar"), default="product")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--eps-list", default="1e-3")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory for the report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fit", help="fit the length scaling law to (epsilon, mean_length) points")
    p.add_argument("--points", required=True, help="CSV of points")
    p.add_argument("--out", default=None, help="optional output directory for fit tables")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("oracle", help="exhaustive shortest sequence for a target")
    p.add_argument("--gate-set", required=True)
    _add_target_args(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--max-depth", type=int, default=7)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare-policies", help="AQ* vs greedy vs Boltzmann on sampled targets")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("product", "haar"), default="product")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--max-steps", type=int, default=40)
    p.add_argument("--kt", type=float, default=1.0)
    p.add_argument("--printed-sign", action="store_true",
                   help="use the minimizing Boltzmann sign instead of the maximizing one")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_compare_policies)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else _env_int("QCOMPILE_THREADS")
        if threads is not None and threads < 1:
            raise CliError(f"--threads must be >= 1, got {threads}")
        return args.func(args)
    except (CliError, ConfigError, UnknownGateSetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
