"""Compiled vs numpy kernels on a synthetic fleet.

    python3 benchmarks/bench_kernels.py [--n 10000] [--repeat 5] [--train]

Times the three hot kernels on the encoded default fleet and, with
``--train``, one full training run per backend. Both backends must give
identical results; the script checks that too.
"""
import argparse
import time

import numpy as np

from tfclead.gbdt import Hyperparams, dumps_model, kernels, train
from tfclead.ingest import RawTable
from tfclead.labeling import scheme_for
from tfclead.pipeline import prepare, split_dataset
from tfclead.synthgen import GeneratorConfig, generate_fleet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main() -> None:
    ap = argparse.ArgumentParser(description="benchmark kernel backends")
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--train", action="store_true", help="also time a full training run")
    args = ap.parse_args()

    table = RawTable(tuple(generate_fleet(GeneratorConfig(n_vehicles=args.n))))
    ds = prepare(table, "unlimited", scheme_for(3)).dataset
    indptr = ds.indptr.astype(np.int64)
    indices = ds.indices.astype(np.int32)
    rng = np.random.default_rng(0)
    rows = np.arange(ds.n_rows, dtype=np.int32)
    half = np.sort(rng.choice(ds.n_rows, ds.n_rows // 2, replace=False)).astype(np.int32)
    g, h = rng.normal(size=ds.n_rows), rng.random(ds.n_rows)
    nf = ds.n_features
    feature = int(np.argmax(ds.column_counts()))
    # a random 32-leaf tree for traversal
    n_int = 31
    feat = np.full(2 * n_int + 1, -1, dtype=np.int32)
    feat[:n_int] = rng.integers(0, nf, n_int)
    left = np.full_like(feat, -1)
    right = np.full_like(feat, -1)
    left[:n_int] = 2 * np.arange(n_int) + 1
    right[:n_int] = 2 * np.arange(n_int) + 2

    cases = {
        "histogram (all rows)": lambda k: k.build_histogram(rows, indptr, indices, g, h, nf),
        "histogram (half rows)": lambda k: k.build_histogram(half, indptr, indices, g, h, nf),
        "row_has_feature": lambda k: k.row_has_feature(rows, indptr, indices, feature),
        "predict_leaves (32 leaves)": lambda k: k.predict_leaves(indptr, indices, feat, left, right),
    }
    names = list(kernels.BACKENDS)
    print(f"{ds.n_rows} rows x {nf} features, {len(indices)} non-zeros; backends: {', '.join(names)}")
    print(f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names) + (f"{'speed-up':>10}" if len(names) > 1 else ""))
    for label, fn in cases.items():
        timings, outs = [], []
        for n in names:
            sec, out = best_of(lambda: fn(kernels.BACKENDS[n]), args.repeat)
            timings.append(sec)
            outs.append(out if isinstance(out, tuple) else (out,))
        for a, b in zip(outs[0], outs[-1]):
            assert np.array_equal(a, b), f"{label}: backends disagree"
        cells = "".join(f"{1e3 * s:>10.2f}ms" for s in timings)
        speed = f"{timings[0] / timings[-1]:>9.1f}x" if len(names) > 1 else ""
        print(f"{label:<28}{cells}{speed}")

    if args.train:
        _, tr, va, _ = split_dataset(ds)
        hp = Hyperparams()
        dumps = []
        for n in names:
            t = time.perf_counter()
            model, rep = train(tr, va, hp, workers=1, backend=n)
            print(f"train [{n}]: {time.perf_counter() - t:.2f} s, {rep.rounds_trained} rounds")
            dumps.append(dumps_model(model))
        assert all(d == dumps[0] for d in dumps), "backends produced different models"
        print("models identical across backends")


if __name__ == "__main__":
    main()
