"""Compare the compiled and numpy recurrent kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""
import argparse
import csv
import importlib
import sys
import time

import numpy as np


def _backends():
    out = {"python": importlib.import_module("waveseq.net._pykernels")}
    try:
        out["cython"] = importlib.import_module("waveseq.net._kernels")
    except ImportError:
        print("compiled extension not built; timing the numpy backend only", file=sys.stderr)
    return out


def _lstm_case(T, B, d, h, seed=0):
    rng = np.random.default_rng(seed)
    Wx = rng.normal(0, 0.1, (d, 4 * h))
    Wh = rng.normal(0, 0.1, (h, 4 * h))
    b = np.zeros(4 * h)
    X = rng.normal(size=(T, B, d))
    return Wx, Wh, b, X, np.zeros((B, h)), np.zeros((B, h))


def time_lstm(mod, case, repeat):
    Wx, Wh, b, X, h0, s0 = case
    dH = np.ones((X.shape[0], X.shape[1], Wh.shape[0]))
    best_f = best_b = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        H, S, G = mod.lstm_forward(Wx, Wh, b, X, h0, s0, 0)
        t1 = time.perf_counter()
        dWx, dWh, db = np.zeros_like(Wx), np.zeros_like(Wh), np.zeros_like(b)
        mod.lstm_backward(Wx, Wh, X, h0, s0, H, S, G, dH, np.zeros_like(h0), np.zeros_like(s0), 0, dWx, dWh, db)
        t2 = time.perf_counter()
        best_f, best_b = min(best_f, t1 - t0), min(best_b, t2 - t1)
    return best_f, best_b


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--csv", help="also write results to this CSV file")
    args = p.parse_args(argv)

    shapes = [(10, 1, 1, 64), (10, 16, 1, 64), (10, 16, 10, 64), (30, 64, 10, 64), (60, 256, 13, 64)]
    backends = _backends()
    rows = []
    print(f"{'T':>4} {'B':>4} {'d':>3} {'h':>3}  {'backend':<7} {'fwd ms':>9} {'bwd ms':>9} {'speedup':>8}")
    for T, B, d, h in shapes:
        case = _lstm_case(T, B, d, h)
        base = None
        for name, mod in backends.items():
            f, b = time_lstm(mod, case, args.repeat)
            total = f + b
            base = total if name == "python" else base
            speed = base / total if base else 1.0
            rows.append({"T": T, "B": B, "d": d, "h": h, "backend": name, "fwd_ms": 1e3 * f, "bwd_ms": 1e3 * b,
                         "speedup": speed})
            print(f"{T:4d} {B:4d} {d:3d} {h:3d}  {name:<7} {1e3 * f:9.3f} {1e3 * b:9.3f} {speed:8.2f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
