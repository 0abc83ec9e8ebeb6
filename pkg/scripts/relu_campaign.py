"""Width / time / memory of both engines on random ReLU networks.

Default grid is desk-sized; ``--full`` runs the n=20 grid up to L=10 (ESIP
cells beyond the budget come out as refusals).
"""
import argparse
from pathlib import Path

from nnreach.bench import TABLE2, CampaignConfig, emit, run_campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--N", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    if args.full:
        cfg = CampaignConfig(**{**TABLE2.__dict__, "L": [1, 2, 3, 4, 5, 6, 10]})
    else:
        cfg = CampaignConfig(engines=["mm", "esip"], L=[1, 2, 3], n=[5, 10, 20])
    cfg.N, cfg.seed, cfg.workers = args.N, args.seed, args.workers

    records = run_campaign(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    emit(records, "csv", args.out / "relu_campaign.csv")
    print(emit(records, "markdown", args.out / "relu_campaign.md"))


if __name__ == "__main__":
    main()
