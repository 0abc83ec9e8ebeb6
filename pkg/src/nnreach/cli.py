"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 resource refusal (ESIP
memory forecast above budget).
"""
from __future__ import annotations

import argparse
import sys

from . import activations, bench, esip, mm, network, oracle
from .interval import width

EXIT_OK, EXIT_INPUT, EXIT_REFUSED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive(s):
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _dims(s):
    try:
        d = [int(v) for v in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {s!r}") from None
    if len(d) < 2 or any(v <= 0 for v in d):
        raise argparse.ArgumentTypeError("dims need at least two positive widths")
    return d


def _run(net, engine, args):
    if engine == "mm":
        return mm.analyze_mm(net, epsilon=args.epsilon)
    return esip.analyze_esip(net, budget_bytes=args.budget_bytes, epsilon=args.epsilon)


def _print_bounds(name, res):
    print(f"[{name}]")
    for i, (lo, hi) in enumerate(zip(res.output.lo, res.output.hi)):
        print(f"  x[{i}]: [{float(lo)!r}, {float(hi)!r}]")
    print(f"  width: {res.width!r}")
    print(f"  time_s: {res.stats['time_s']:.4g}  mem_bytes: {res.stats['mem_bytes']}")


def cmd_generate(args):
    dims = args.dims if args.dims else None
    if dims is None:
        if args.L is None or args.n is None:
            raise UsageError("generate needs --L and --n, or --dims")
        dims = [args.n] * (args.L + 1)
    net = network.random_network(len(dims) - 1, dims, (args.bound_lo, args.bound_hi), args.seed, args.activation)
    network.save(net, args.output)
    print(f"wrote {args.output} dims={list(net.dims)} activation={net.activation}")
    return EXIT_OK


def cmd_analyze(args):
    net = network.load(args.network)
    engines = ["mm", "esip"] if args.engine == "both" else [args.engine]
    for e in engines:
        _print_bounds(e, _run(net, e, args))
    return EXIT_OK


def cmd_compare(args):
    net = network.load(args.network)
    a = mm.analyze_mm(net, epsilon=args.epsilon)
    b = esip.analyze_esip(net, budget_bytes=args.budget_bytes, epsilon=args.epsilon)
    wa, wb = width(a.output), width(b.output)
    print(f"mm width:   {wa!r}")
    print(f"esip width: {wb!r}")
    d = abs(wa - wb)
    if d <= 1e-9:
        print("widths equal (Δ ≤ 1e-9)")
    else:
        print(f"width difference: {d:.6g} ({'mm' if wa < wb else 'esip'} tighter)")
    if a.output.subset_of(b.output):
        rel = "mm ⊆ esip"
    elif b.output.subset_of(a.output):
        rel = "esip ⊆ mm"
    else:
        rel = "neither contains the other"
    print(f"containment: {rel}")
    return EXIT_OK


def cmd_check(args):
    net = network.load(args.network)
    engines = ["mm", "esip"] if args.engine == "both" else [args.engine]
    sound = True
    for e in engines:
        rep = oracle.check_soundness(net, _run(net, e, args), args.samples, args.seed, args.slack)
        print(f"[{e}] samples: {rep.samples}")
        print(f"[{e}] violations: {rep.violations}")
        print(f"[{e}] worst excess: {rep.worst_excess:.3g}")
        sound &= rep.sound
    return EXIT_OK if sound else EXIT_INPUT


def cmd_bench(args):
    cfg = bench.CampaignConfig.load(args.config)
    records = bench.run_campaign(cfg)
    text = bench.emit(records, args.format, args.output)
    if args.output is None:
        print(text, end="")
    return EXIT_OK


def cmd_tables(args):
    print(" ".join(f"L={L}:{esip.max_width_for_limit(L)}" for L in range(1, 7)))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="nnreach", description="Reachability of neural networks with interval inputs, weights and biases")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, engine_default="mm"):
        sp.add_argument("--engine", choices=["mm", "esip", "both"], default=engine_default)
        sp.add_argument("--budget-bytes", type=int, default=esip.DEFAULT_BUDGET_BYTES)
        sp.add_argument("--epsilon", type=float, default=0.0, help="outward inflation of the final bounds")

    g = sub.add_parser("generate", help="write a random uncertain network")
    g.add_argument("--L", type=_positive)
    g.add_argument("--n", type=_positive)
    g.add_argument("--dims", type=_dims, help="comma-separated widths n0,...,nL")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--activation", choices=activations.names(), default="relu")
    g.add_argument("--bound-lo", type=float, default=-1.0)
    g.add_argument("--bound-hi", type=float, default=1.0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="print output bounds")
    a.add_argument("network")
    common(a)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", help="run both engines and compare widths")
    c.add_argument("network")
    common(c)
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("check", help="Monte Carlo soundness check")
    k.add_argument("network")
    common(k)
    k.add_argument("--samples", type=_positive, default=10_000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--slack", type=float, default=1e-9)
    k.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="run a campaign from a JSON config")
    b.add_argument("config")
    b.add_argument("-o", "--output")
    b.add_argument("--format", choices=["csv", "markdown"], default="csv")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("tables", help="maximum ESIP width per depth under the 2^48-1 element cap")
    t.set_defaults(func=cmd_tables)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except esip.ResourceRefusal as e:
        print(f"refused: {e}", file=sys.stderr)
        print(f"forecast: {e.forecast.peak_bytes:,} bytes ({e.forecast.peak_bytes / 1e9:.1f} GB)")
        return EXIT_REFUSED
    except activations.UnsupportedActivation as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (network.NetworkFormatError, OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
