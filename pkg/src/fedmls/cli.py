"""Command-line client for the experiment service.

The CLI is a thin HTTP client: every subcommand builds a request, posts it to
the service, and writes the returned metrics to local CSV/JSON files. With no
--server the app runs in-process over an ASGI transport (no socket); with
--server URL it talks to a remote instance. `fedmls serve` starts one.

A JSON config file may supply any flag (keys use the flag's dest name);
command-line flags override file values.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .metrics import record_from_dict, write_aggregate, write_metrics
from .metrics import AggregateRow


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--problem-kind",
        dest="problem_kind",
        default="wisconsin",
        choices=["csv", "wisconsin", "synthetic_two_cluster", "analytic"],
    )
    p.add_argument("--csv", dest="csv_path", default=None, help="path to a labeled CSV")
    p.add_argument("--label-column", dest="label_column", default=None)
    p.add_argument("--positive-label", dest="positive_label", default=None)
    p.add_argument("--n-clients", dest="n_clients", type=int, default=10)
    p.add_argument("--batch-fraction", dest="batch_fraction", type=float, default=0.1)
    p.add_argument("--partition-seed", dest="partition_seed", type=int, default=0)
    p.add_argument("--d", dest="d", type=int, default=2)
    p.add_argument("--per-cluster-m", dest="per_cluster_m", type=int, default=40)
    p.add_argument("--separation", dest="separation", type=float, default=3.0)
    p.add_argument("--data-seed", dest="data_seed", type=int, default=0)
    p.add_argument(
        "--kmeans-partition",
        dest="heterogeneous",
        action="store_false",
        help="synthetic problems: split by k-means instead of one blob per client group",
    )
    p.add_argument("--analytic", dest="analytic_name", default="abs")
    p.add_argument("--dim", dest="dim", type=int, default=1)


def _add_params_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--schedule-mode", dest="schedule_mode", default="decaying", choices=["decaying", "fixed"])
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--inner-steps", dest="inner_steps", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--dist0", type=float, default=None)
    p.add_argument("--eta0", type=float, default=0.1)
    p.add_argument("--eta-global", dest="eta_global", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)


def _problem_payload(args) -> dict:
    return {
        "kind": args.problem_kind,
        "n_clients": args.n_clients,
        "batch_fraction": args.batch_fraction,
        "partition_seed": args.partition_seed,
        "csv_path": args.csv_path,
        "label_column": args.label_column,
        "positive_label": args.positive_label,
        "d": args.d,
        "per_cluster_m": args.per_cluster_m,
        "separation": args.separation,
        "data_seed": args.data_seed,
        "heterogeneous": args.heterogeneous,
        "analytic_name": args.analytic_name,
        "dim": args.dim,
    }


def _params_payload(args) -> dict:
    return {
        "rounds": args.rounds,
        "schedule_mode": args.schedule_mode,
        "lambda0": args.lambda0,
        "t0": args.t0,
        "lam": args.lam,
        "inner_steps": args.inner_steps,
        "radius": args.radius,
        "epsilon": args.epsilon,
        "dist0": args.dist0,
        "eta0": args.eta0,
        "eta_global": args.eta_global,
        "max_iters": args.max_iters,
    }


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())

        async def go():
            async with httpx.AsyncClient(
                transport=transport, base_url="http://fedmls", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(go())
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        print(f"error: {path} -> {resp.status_code}: {detail}", file=sys.stderr)
        raise SystemExit(2)
    return resp.json()


def _write_outcome(out_dir: Path, outcome: dict, metadata: dict) -> bool:
    """Write per-seed and aggregate CSVs; returns True when all seeds passed."""
    out_dir.mkdir(parents=True, exist_ok=True)
    algorithm = outcome["algorithm"]
    for seed_result in outcome["per_seed"]:
        records = [record_from_dict(r) for r in seed_result["records"]]
        path = out_dir / f"{algorithm}_seed{seed_result['seed']}.csv"
        write_metrics(path, records, {**metadata, "seed": seed_result["seed"]})
    rows = [AggregateRow(**row) for row in outcome["aggregate"]]
    agg_meta = dict(metadata)
    if outcome["failures"]:
        agg_meta["warning"] = f"failed seeds: {sorted(outcome['failures'])}"
    write_aggregate(out_dir / f"{algorithm}_aggregate.csv", rows, agg_meta)
    ok = not outcome["failures"]
    final = rows[-1].subopt_mean if rows else float("nan")
    print(
        f"{algorithm}: {len(outcome['per_seed'])} seed(s), "
        f"final mean subopt {final:.6g}"
        + ("" if ok else f", FAILED seeds {sorted(outcome['failures'])}")
    )
    return ok


def cmd_reference(args) -> int:
    payload = {
        "problem": _problem_payload(args),
        "target_accuracy": args.target_accuracy,
        "seed": args.solver_seed,
        "radius": args.radius,
        "cross_check": args.cross_check,
    }
    data = _post(args.server, "/reference", payload)
    text = json.dumps(data, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    print(f"f_star = {data['f_star']!r} (certificate {data['certificate']:.3g})")
    if data.get("warning"):
        print("warning: certificate above target; value is best-effort", file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    payload = {
        "problem": _problem_payload(args),
        "algorithm": args.algorithm,
        "params": _params_payload(args),
        "seeds": args.seeds,
        "f_star": args.f_star,
    }
    data = _post(args.server, "/run", payload)
    ok = _write_outcome(Path(args.out_dir), data["outcome"], data["metadata"])
    return 0 if ok else 1


def cmd_compare(args) -> int:
    payload = {
        "problem": _problem_payload(args),
        "params": _params_payload(args),
        "seeds": args.seeds,
        "algorithms": args.algorithms,
        "f_star": args.f_star,
    }
    data = _post(args.server, "/compare", payload)
    all_ok = True
    for name, outcome in data["outcomes"].items():
        meta = dict(data["metadata"])
        meta["algorithm"] = name
        all_ok &= _write_outcome(Path(args.out_dir), outcome, meta)
    return 0 if all_ok else 1


def cmd_sweep(args) -> int:
    payload = {
        "problem": _problem_payload(args),
        "algorithm": args.algorithm,
        "params": _params_payload(args),
        "seeds": args.seeds,
        "parameter": args.parameter,
        "grid": args.grid,
        "f_star": args.f_star,
    }
    data = _post(args.server, "/sweep", payload)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{data['parameter']}.csv"
    with open(path, "w", newline="") as fh:
        fh.write("value,mean_final_subopt,excluded,reason\n")
        for p in data["points"]:
            fh.write(
                f"{p['value']!r},{p['mean_final_subopt']!r},{int(p['excluded'])},{p['reason']}\n"
            )
    print(f"best {data['parameter']} = {data['best_value']}")
    for w in data["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {path}")
    return 0


def cmd_partition(args) -> int:
    payload = {"problem": _problem_payload(args), "seed": args.partition_seed}
    data = _post(args.server, "/partition", payload)
    with open(args.out, "w", newline="") as fh:
        fh.write("row_index,client_id\n")
        for r, cid in enumerate(data["assignment"]):
            fh.write(f"{r},{cid}\n")
    print(f"wrote {args.out} ({data['n_clients']} clients, sizes {data['client_sizes']})")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedmls", description="federated non-smooth optimization experiments"
    )
    parser.add_argument("--server", default=None, help="service URL; default runs in-process")
    parser.add_argument("--config", default=None, help="JSON file of default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reference", help="compute the ground-truth objective value")
    _add_problem_flags(p)
    p.add_argument("--target-accuracy", dest="target_accuracy", type=float, default=1e-6)
    p.add_argument("--solver-seed", dest="solver_seed", type=int, default=0)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--cross-check", dest="cross_check", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("run", help="run one algorithm over seeds")
    _add_problem_flags(p)
    _add_params_flags(p)
    p.add_argument("--algorithm", default="fedmls", choices=["fedmls", "fedavg", "scaffold", "scaffnew"])
    p.add_argument("--seeds", type=_parse_seeds, default=list(range(20)))
    p.add_argument("--f-star", dest="f_star", type=float, default=None)
    p.add_argument("--out-dir", dest="out_dir", default="results")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all four algorithms on one problem")
    _add_problem_flags(p)
    _add_params_flags(p)
    p.add_argument(
        "--algorithms",
        nargs="+",
        default=["fedmls", "scaffold", "scaffnew", "fedavg"],
        choices=["fedmls", "fedavg", "scaffold", "scaffnew"],
    )
    p.add_argument("--seeds", type=_parse_seeds, default=list(range(20)))
    p.add_argument("--f-star", dest="f_star", type=float, default=None)
    p.add_argument("--out-dir", dest="out_dir", default="results")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="tune one hyper-parameter over a grid")
    _add_problem_flags(p)
    _add_params_flags(p)
    p.add_argument("--algorithm", default="fedmls", choices=["fedmls", "fedavg", "scaffold", "scaffnew"])
    p.add_argument("--parameter", required=True, choices=["eta0", "lambda0", "t0"])
    p.add_argument("--grid", type=lambda s: [float(v) for v in s.split(",")], required=True)
    p.add_argument("--seeds", type=_parse_seeds, default=[0])
    p.add_argument("--f-star", dest="f_star", type=float, default=None)
    p.add_argument("--out-dir", dest="out_dir", default="results")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("partition", help="emit the k-means row-to-client assignment")
    _add_problem_flags(p)
    p.add_argument("--out", default="partition.csv")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    peek = argparse.ArgumentParser(add_help=False)
    peek.add_argument("--config", default=None)
    known, _ = peek.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        with open(known.config) as fh:
            file_defaults = json.load(fh)
        if "seeds" in file_defaults and isinstance(file_defaults["seeds"], str):
            file_defaults["seeds"] = _parse_seeds(file_defaults["seeds"])
        parser.set_defaults(**file_defaults)
        for action in parser._subparsers._group_actions[0].choices.values():
            action.set_defaults(**{
                k: v for k, v in file_defaults.items()
                if k in {a.dest for a in action._actions}
            })
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
