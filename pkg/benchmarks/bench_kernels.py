"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the median time per call for each backend, the speedup, and the
largest absolute difference between the two outputs.
"""
import argparse
import statistics
import timeit

import numpy as np

from beem import _kernels_py

try:
    from beem import _kernels
except ImportError:  # pragma: no cover - only when the extension was not built
    _kernels = None


def hmm_inputs(rng, n_seqs=60, S=4, lo=20, hi=50):
    lengths = rng.integers(lo, hi + 1, size=n_seqs)
    starts = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    log_pi = np.log(rng.dirichlet(np.ones(S)))
    log_A = np.log(rng.dirichlet(np.ones(S), size=S))
    log_b = rng.normal(-2.0, 1.0, size=(starts[-1], S))
    weights = rng.random(n_seqs)
    return log_pi, np.ascontiguousarray(log_A), log_b, starts, weights


def cases(rng):
    log_pi, log_A, log_b, starts, w = hmm_inputs(rng)
    probs = rng.dirichlet(np.ones(8), size=1000)
    u = rng.random(1000)
    return {
        "hmm_forward (60 seqs, L 20-50, S 4)": ("hmm_forward", (log_pi, log_A, log_b, starts)),
        "hmm_estep   (60 seqs, L 20-50, S 4)": ("hmm_estep", (log_pi, log_A, log_b, starts, w)),
        "sample_rows (N 1000, K 8)": ("sample_rows", (probs, u)),
    }


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(o) for o in out])
    return np.ravel(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; run `pip install -e . --no-build-isolation` first")
        return
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for label, (name, inputs) in cases(rng).items():
        py, cy = getattr(_kernels_py, name), getattr(_kernels, name)
        timings = {}
        for tag, fn in (("py", py), ("cy", cy)):
            t = timeit.Timer(lambda fn=fn: fn(*inputs))
            n, _ = t.autorange()
            timings[tag] = statistics.median(x / n for x in t.repeat(args.repeat, n)) * 1e3
        diff = float(np.max(np.abs(_flat(py(*inputs)) - _flat(cy(*inputs)))))
        print(f"{label:40s} {timings['py']:10.3f} {timings['cy']:10.3f} "
              f"{timings['py'] / timings['cy']:7.1f}x {diff:11.2e}")


if __name__ == "__main__":
    main()
