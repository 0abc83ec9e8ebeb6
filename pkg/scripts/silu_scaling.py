"""Time and memory of the mixed-monotonicity engine on SiLU networks versus depth and width."""
import argparse
from pathlib import Path

from nnreach.bench import CampaignConfig, emit, run_campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, nargs="+", default=list(range(1, 11)))
    ap.add_argument("--n", type=int, nargs="+", default=[20, 40])
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    cfg = CampaignConfig(engines=["mm"], L=args.L, n=args.n, N=args.N, activation="silu")
    records = run_campaign(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    emit(records, "csv", args.out / "silu_scaling.csv")

    ns = sorted(set(args.n))
    print("time (s)   " + "".join(f"n={n:<10}" for n in ns))
    by = {(r.L, r.n): r for r in records}
    for L in sorted(set(args.L)):
        print(f"L={L:<8} " + "".join(f"{by[L, n].mean_time_s:<12.3g}" for n in ns))
    print("memory (MB)" + "".join(f"n={n:<10}" for n in ns))
    for L in sorted(set(args.L)):
        print(f"L={L:<8} " + "".join(f"{by[L, n].mean_mem_bytes / 1e6:<12.3g}" for n in ns))


if __name__ == "__main__":
    main()
