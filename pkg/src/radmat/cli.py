"""``radmat`` command line.

Exit status: 0 when every check passed, 1 when a check or certificate
failed, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from radmat.campaign import (
    CampaignConfig,
    UsageError,
    campaign_passed,
    configs_from_items,
    parse_config_text,
    render,
    run_items,
)
from radmat.decomp import block_cover
from radmat.patterns import build_pattern

_SUBCOMMAND_QUANTITIES = {
    "norm": ["norm", "expected-norm"],
    "bounds": ["bounds"],
    "decompose": ["decompose"],
    "verify": ["verify"],
}


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    g.add_argument("--samples", type=int, default=200, help="Monte Carlo samples (default 200)")
    g.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    g.add_argument("--tol", type=float, default=1e-10, help="relative tolerance of the norm solver")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--out", help="write the report here instead of stdout")
    g.add_argument("--timing", action="store_true", help="fill runtime_ms (reports are then not reproducible)")
    return g


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(prog="radmat", description="Norm bounds for random sign matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[flags], help="write a pattern in 'rows cols nnz' + 'i j w' text form")
    gen.add_argument("pattern")

    for name, text in (
        ("norm", "operator norm of the pattern and the Monte Carlo expected norm of its randomization"),
        ("bounds", "evaluate the bound formulas that apply to the pattern"),
        ("decompose", "certified block cover of a circulant graph"),
        ("verify", "run the invariant and certificate checks"),
    ):
        p = sub.add_parser(name, parents=[flags], help=text)
        p.add_argument("pattern")
        if name == "decompose":
            p.add_argument("--blocks-dir", help="also write every B_k and the certificate to this directory")
        if name == "bounds":
            p.add_argument("--p", type=float, default=None, help="moment order for graph N_p bounds (default 2)")

    rad = sub.add_parser("radnorm", parents=[flags], help="certified lower estimate of the Rademacher p-norm")
    rad.add_argument("pattern")
    rad.add_argument("--p", type=float, action="append", required=True, help="moment order (repeatable)")

    run = sub.add_parser("run", parents=[flags], help="arbitrary quantities on one pattern, or a config file")
    run.add_argument("pattern", nargs="?")
    run.add_argument("--quantity", action="append", default=[], help="expected-norm, radnorm:P, bounds[:P], decompose, verify, norm")
    run.add_argument("--config", help="file of [item] sections with key = value lines")

    cal = sub.add_parser("calibrate", parents=[flags], help="recompute the ratio-window data file")
    cal.add_argument("--hitczenko-count", type=int, default=None)
    cal.add_argument("--mc-samples", type=int, default=None)
    cal.add_argument("--hypercube-max-d", type=int, default=None)
    return parser


def _config(args, pattern, quantities) -> CampaignConfig:
    return CampaignConfig(
        pattern=pattern,
        quantities=tuple(quantities),
        samples=args.samples,
        seed=args.seed,
        tol=args.tol,
        threads=args.threads,
        out=args.out,
        format=args.format,
        timing=args.timing,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_failures(records) -> None:
    for r in records:
        if r.get("pass") is False:
            named = r.get("failed") or []
            extra = f" ({', '.join(map(str, named))})" if named else ""
            print(f"FAILED: {r['quantity']}{extra}", file=sys.stderr)


def _run_calibrate(args) -> int:
    from radmat.calibration import calibrate, write_calibration

    params = {"seed": args.seed}
    for key in ("hitczenko_count", "mc_samples", "hypercube_max_d"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    data = calibrate(params)
    path = write_calibration(data, args.out)
    print(json.dumps({"written": str(path), "envelopes": data["envelopes"]}, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            _emit(build_pattern(args.pattern).matrix.dumps(), args.out)
            return 0
        if args.command == "calibrate":
            return _run_calibrate(args)
        if args.command == "run":
            defaults = _config(args, args.pattern or "", args.quantity)
            if args.config:
                with open(args.config) as fh:
                    configs = configs_from_items(parse_config_text(fh.read()), defaults)
            else:
                if not args.pattern:
                    raise UsageError("run needs a pattern or --config")
                configs = [defaults]
        else:
            quantities = _SUBCOMMAND_QUANTITIES.get(args.command)
            if args.command == "bounds" and args.p is not None:
                quantities = [f"bounds:{args.p}"]
            elif args.command == "radnorm":
                quantities = [f"radnorm:{p}" for p in args.p]
            configs = [_config(args, args.pattern, quantities)]
        results = run_items(configs, args.threads)
        if args.command == "decompose" and args.blocks_dir:
            spec = build_pattern(args.pattern).offsets
            block_cover(spec).write(args.blocks_dir)
    except UsageError as exc:
        parser.error(str(exc))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    status = 0
    merged_out: dict[str | None, list] = {}
    for cfg, recs in zip(configs, results):
        merged_out.setdefault((cfg.out, cfg.format), []).extend(recs)
        _report_failures(recs)
        if not campaign_passed(recs):
            status = 1
    for (out, fmt), recs in merged_out.items():
        _emit(render(recs, fmt), out)
    return status


if __name__ == "__main__":
    sys.exit(main())
