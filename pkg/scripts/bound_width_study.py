"""How the width of the uncertainty intervals decides which engine is tighter.

Intervals drawn as two ordered uniforms in [-1, 1] mostly straddle zero, and
the vertex bound on a bilinear term w*x is then looser than plain interval
arithmetic. With narrow intervals around random centers the ordering flips
from depth 2 on.
"""
import argparse

import numpy as np

from nnreach import analyze_esip, analyze_mm, random_network
from nnreach.interval import IntervalMatrix, IntervalVector
from nnreach.network import UncertainNetwork


def narrowed(net, radius, rng):
    def shrink(box, cls):
        c = rng.uniform(-1, 1, box.shape)
        return cls(c - radius, c + radius)

    return UncertainNetwork(
        net.dims,
        [shrink(W, IntervalMatrix) for W in net.weights],
        [shrink(b, IntervalVector) for b in net.biases],
        net.activation,
        shrink(net.input_bounds, IntervalVector),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--N", type=int, default=10)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.001, 0.01, 0.1])
    args = ap.parse_args()

    print(f"{'bounds':<14}{'L':<4}{'mm width':<14}{'esip width':<14}{'mm <= esip'}")
    for L in (1, 2):
        for label in ["[-1,1] draws"] + [f"radius {r:g}" for r in args.radii]:
            wm, we = [], []
            for seed in range(args.N):
                net = random_network(L, args.n, seed=seed)
                if label.startswith("radius"):
                    net = narrowed(net, float(label.split()[1]), np.random.default_rng(seed))
                wm.append(analyze_mm(net).width)
                we.append(analyze_esip(net).width)
            wm, we = np.array(wm), np.array(we)
            print(f"{label:<14}{L:<4}{wm.mean():<14.6g}{we.mean():<14.6g}{int((wm <= we + 1e-9).sum())}/{args.N}")


if __name__ == "__main__":
    main()
