"""Storage limits of the dense symbolic equation.

Prints the largest uniform width per depth that fits in 2^48-1 elements and
the forecast for a 3-layer, width-20 network.
"""
import argparse

from nnreach.esip import MATLAB_MAX_ELEMENTS, forecast, max_width_for_limit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-depth", type=int, default=6)
    ap.add_argument("--limit", type=int, default=MATLAB_MAX_ELEMENTS)
    args = ap.parse_args()

    print("| L | max n |")
    print("|---|---|")
    for L in range(1, args.max_depth + 1):
        print(f"| {L} | {max_width_for_limit(L, args.limit)} |")

    fc = forecast([20] * 4)
    print()
    print(f"L=3, n=20: n_S per layer = {[f'{c:,}' for c in fc.per_layer_cols]}")
    print(f"peak elements {fc.peak_elements:,}, {fc.peak_bytes:,} bytes ({fc.peak_bytes / 1e9:.1f} GB)")


if __name__ == "__main__":
    main()
