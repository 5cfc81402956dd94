"""fiberstrat command line: dag, moves, canonical, sample, analyze, spaces, verify."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import dag as dagmod
from .flow import FlowError, verify_fundamental_theorem
from .moves import find_all_moves, moves_to_json
from .network import (WeightVector, load_csv_matrix, load_weights, random_rank_matrix,
                      ranklist_of, sample_on_stratum, weights_to_json)
from .ranklist import (EmptyFiberError, NetworkShape, dimension_ledger, leq, load_ranklist,
                       omega_of, ranklist_to_json, validate_ranklist)
from .subspace import Tolerances
from .tangent import nullspace_dmu, normal_space, rowspace_dmu, tangent_space, verify_geometry

EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class CliConfig:
    command: str
    seed: int
    tol: Tolerances
    out: str | None
    fmt: str


def _shape(text: str) -> NetworkShape:
    try:
        return NetworkShape(tuple(int(x) for x in text.split(",")))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad layer sizes {text!r}: {exc}")


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--rank-tol", type=float, default=1e-10)
    common.add_argument("--angle-tol", type=float, default=1e-8)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=["dot", "json", "table"], default=None)

    p = _Parser(prog="fiberstrat", description="Rank stratification of linear-network fibers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("dag", parents=[common], help="enumerate strata and edges")
    s.add_argument("--d", type=_shape, required=True, help="layer sizes d_0,...,d_L")
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--bfs", action="store_true", help="grow the dag from the minimal stratum")

    s = sub.add_parser("moves", parents=[common], help="plan rank-one moves between rank lists")
    s.add_argument("--from", dest="src", required=True)
    s.add_argument("--to", dest="dst", required=True)

    s = sub.add_parser("canonical", parents=[common], help="canonical weight vector of a rank list")
    s.add_argument("--ranklist", required=True)

    s = sub.add_parser("sample", parents=[common], help="random point on a stratum")
    s.add_argument("--ranklist", required=True)
    s.add_argument("--target", default=None, help="W as JSON nested list or CSV; random if absent")

    for name, hlp in (("analyze", "rank list, multiplicities, ledger, flow report"),
                      ("spaces", "emit a basis of one of the fundamental spaces"),
                      ("verify", "run all geometry checks")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("weights", nargs="?", default=None)
        s.add_argument("--d", type=_shape, default=None, help="layer sizes, needed with --wN CSV files")
        if name == "spaces":
            s.add_argument("--emit", choices=["tangent", "normal", "nulldmu", "rowdmu"], required=True)
    return p


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FIBERSTRAT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"FIBERSTRAT_SEED must be an integer, got {env!r}")
    return 0


def _split_csv_flags(argv):
    """Pull --w1 FILE ... --wL FILE out of argv."""
    rest, mats = [], {}
    it = iter(argv)
    for tok in it:
        m = re.fullmatch(r"--w(\d+)(?:=(.*))?", tok)
        if m:
            val = m.group(2) if m.group(2) is not None else next(it, None)
            if val is None:
                raise UsageError(f"{tok} needs a file argument")
            mats[int(m.group(1))] = val
        else:
            rest.append(tok)
    return rest, mats


def _load_theta(args, csvs) -> WeightVector:
    if args.weights and csvs:
        raise UsageError("give either a weights file or --wN CSV files, not both")
    if args.weights:
        return load_weights(args.weights)
    if not csvs:
        raise UsageError("no weights given")
    L = max(csvs)
    if sorted(csvs) != list(range(1, L + 1)):
        raise UsageError("CSV factors must be --w1 ... --wL without gaps")
    mats = [load_csv_matrix(csvs[j]) for j in range(1, L + 1)]
    theta = WeightVector.from_factors(mats)
    if args.d is not None and args.d != theta.shape:
        raise DomainError(f"CSV factors have layer sizes {theta.shape.d}, expected {args.d.d}")
    return theta


def _load_matrix(path) -> np.ndarray:
    if path.endswith(".csv"):
        return load_csv_matrix(path)
    with open(path) as fh:
        return np.atleast_2d(np.array(json.load(fh), dtype=float))


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _load_valid_ranklist(path):
    r = load_ranklist(path)
    v = validate_ranklist(r)
    if not v:
        raise DomainError("invalid rank list: " + "; ".join(v.reasons))
    return r


def cmd_dag(args, cfg: CliConfig) -> int:
    build = dagmod.build_dag_bfs if args.bfs else dagmod.build_dag
    g = build(args.d, args.rank)
    fmt = cfg.fmt or "table"
    text = {"dot": dagmod.export_dot, "json": dagmod.export_json, "table": dagmod.export_table}[fmt](g)
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_moves(args, cfg: CliConfig) -> int:
    r, s = _load_valid_ranklist(args.src), _load_valid_ranklist(args.dst)
    if r.shape != s.shape:
        raise DomainError("rank lists have different shapes")
    if not leq(r, s):
        raise DomainError("no move sequence: the source rank list is not below the target")
    seq = find_all_moves(r, s)
    if cfg.fmt == "table":
        lines = [f"{m.label} {m.kind:<10s} -> S{t.label()}" for t, m in seq]
        _emit("\n".join(lines) + ("\n" if lines else ""), cfg.out)
    else:
        _emit(_dumps(moves_to_json(seq)), cfg.out)
    return EXIT_OK


def cmd_canonical(args, cfg: CliConfig) -> int:
    from .flow import canonical_weight_vector
    r = _load_valid_ranklist(args.ranklist)
    _emit(_dumps(weights_to_json(canonical_weight_vector(r))), cfg.out)
    return EXIT_OK


def cmd_sample(args, cfg: CliConfig) -> int:
    r = _load_valid_ranklist(args.ranklist)
    d = r.shape.d
    rng = np.random.default_rng(cfg.seed)
    if args.target:
        W = _load_matrix(args.target)
    else:
        W = random_rank_matrix(d[-1], d[0], r.rank_W, rng)
    try:
        theta = sample_on_stratum(W, r, seed=cfg.seed, tol=cfg.tol)
    except ValueError as exc:
        raise DomainError(str(exc))
    _emit(_dumps(weights_to_json(theta)), cfg.out)
    return EXIT_OK


def cmd_analyze(args, cfg: CliConfig, csvs) -> int:
    theta = _load_theta(args, csvs)
    r = ranklist_of(theta, cfg.tol)
    m = omega_of(r)
    rep = verify_fundamental_theorem(theta, cfg.tol)
    led = dimension_ledger(r) if validate_ranklist(r) else None
    if cfg.fmt == "json":
        obj = {
            "ranks": ranklist_to_json(r),
            "omega": [{"k": k, "i": i, "w": w} for k, i, w in m.intervals()],
            "ledger": led.as_dict() if led else None,
            "fundamental_theorem": [c.__dict__ for c in rep.checks],
        }
        _emit(_dumps(obj), cfg.out)
    else:
        lines = [f"shape {','.join(map(str, theta.shape.d))}",
                 f"rank list S{r.label()}  (order " +
                 ",".join(f"r{k}{i}" for k, i in r.display_order()) + ")",
                 "multiplicities " + " ".join(f"w{k}{i}={w}" for k, i, w in m.intervals() if w)]
        if led:
            lines.append(f"dim {led.dim}  dof {led.dof}  rdof {led.rdof}  rk dmu {led.rank_dmu}")
            lines += [f"  {k} = {v}" for k, v in led.as_dict().items()]
        lines += rep.lines()
        _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_spaces(args, cfg: CliConfig, csvs) -> int:
    from .flow import build_flow_prebases
    theta = _load_theta(args, csvs)
    fs = build_flow_prebases(theta, cfg.tol)
    S = {"tangent": tangent_space, "normal": normal_space,
         "nulldmu": nullspace_dmu, "rowdmu": rowspace_dmu}[args.emit](fs)
    obj = {"d": list(theta.shape.d), "space": args.emit, "dim": S.dim,
           "basis": [S.basis[:, c].tolist() for c in range(S.dim)]}
    _emit(_dumps(obj), cfg.out)
    return EXIT_OK


def cmd_verify(args, cfg: CliConfig, csvs) -> int:
    theta = _load_theta(args, csvs)
    ft = verify_fundamental_theorem(theta, cfg.tol)
    geo = verify_geometry(theta, cfg.tol) if ft.passed else None
    lines = ft.lines() + (geo.lines() if geo else ["SKIP  geometry (flow bases failed)"])
    ok = ft.passed and geo is not None and geo.passed
    lines.append("ALL PASS" if ok else "FAILED")
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_VERIFY


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, csvs = _split_csv_flags(argv)
        args = _build_parser().parse_args(argv)
        try:
            tol = Tolerances(args.rank_tol, args.angle_tol)
        except ValueError as exc:
            raise UsageError(str(exc))
        cfg = CliConfig(args.command, _seed(args), tol, args.out, args.format)
        if csvs and args.command not in ("analyze", "spaces", "verify"):
            raise UsageError("--wN CSV factors only apply to analyze, spaces and verify")
        if args.command == "dag":
            return cmd_dag(args, cfg)
        if args.command == "moves":
            return cmd_moves(args, cfg)
        if args.command == "canonical":
            return cmd_canonical(args, cfg)
        if args.command == "sample":
            return cmd_sample(args, cfg)
        handler = {"analyze": cmd_analyze, "spaces": cmd_spaces, "verify": cmd_verify}[args.command]
        return handler(args, cfg, csvs)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        _build_parser().print_help(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (EmptyFiberError, DomainError, FlowError, ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DOMAIN


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
