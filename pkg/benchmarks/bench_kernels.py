"""Time one training epoch with each available kernel backend.

    python benchmarks/bench_kernels.py --corpus-size 2000 --repeat 3
"""
import argparse
import time

import numpy as np

from bicvm import kernels
from bicvm.synthbench import SyntheticSpec, gen_bijective_pair
from bicvm.trainer import TrainConfig, train


def time_backend(corpus, cfg, backend, repeat):
    best = float("inf")
    model = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = train(corpus, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
        model = result.model
    # epoch seconds exclude the monitored-loss pass
    epoch = min(rec.seconds for rec in result.log[1:])
    return best, epoch, model


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--corpus-size", type=int, default=2000)
    p.add_argument("--vocab-size", type=int, default=500)
    p.add_argument("--dim", type=int, default=40)
    p.add_argument("--noise-count", type=int, default=50)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    corpus = gen_bijective_pair(
        SyntheticSpec(vocab_size=args.vocab_size, corpus_size=args.corpus_size)
    ).corpus
    cfg = TrainConfig(dim=args.dim, noise_count=args.noise_count, epochs=args.epochs)
    print(f"pairs={len(corpus)} d={cfg.dim} k={cfg.noise_count} epochs={cfg.epochs}")

    results = {}
    for backend in kernels.available_backends():
        total, epoch, model = time_backend(corpus, cfg, backend, args.repeat)
        results[backend] = (epoch, model)
        print(f"{backend:8s} epoch {epoch:8.3f}s  total {total:8.3f}s  {len(corpus) / epoch:10.0f} pairs/s")

    if len(results) == 2:
        (ep, mp), (ec, mc) = results["python"], results["cython"]
        diff = max(float(np.max(np.abs(mp[t].rows - mc[t].rows))) for t in mp.tables)
        print(f"speedup {ep / ec:.1f}x  max |python - cython| = {diff:.2e}")


if __name__ == "__main__":
    main()
