"""Compare the compiled operator kernel against the pure-Python fallback.

Micro benchmarks time the kernel primitives directly (both modules import
side by side). The end-to-end benchmark re-runs this script in a subprocess
with POISONRING_KERNEL forced, timing an exhaustive ring campaign.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --draws 2000000 --states 3125
"""

import argparse
import os
import subprocess
import sys
import time


def _time(fn, *args):
    started = time.perf_counter()
    fn(*args)
    return time.perf_counter() - started


def bench_clean_binop(kernel, n):
    code = kernel.OP_MUL
    f = kernel.clean_binop
    for i in range(n):
        f(code, i & 0xFFFF, 3)


def bench_deviation(kernel, n):
    f = kernel.apply_deviation
    kind = kernel.DEV_SCALE
    for i in range(n):
        f(kind, i & 0xFFFF, 101, 100)


def bench_bernoulli(kernel, n):
    f = kernel.bernoulli
    state = kernel.stream_seed(2024, 0)
    for _ in range(n):
        state, _fired = f(state, 0.25)


def campaign(states):
    """Exhaustive fault-free convergence sweep, like the acceptance suite."""
    from collections import deque

    from poisonring import EvalContext, Injection, RingConfig, run

    count = 0
    vector = [0] * 5
    while count < states:
        injections = [Injection(node=i, at_round=0, new_status=v) for i, v in enumerate(vector)]
        run(RingConfig(5, 5, 10), injections, EvalContext(event_sink=deque(maxlen=0)))
        count += 1
        for i in reversed(range(5)):
            vector[i] += 1
            if vector[i] < 5:
                break
            vector[i] = 0
        else:
            break


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--draws", type=int, default=1_000_000, help="micro-benchmark iterations")
    parser.add_argument("--states", type=int, default=3125, help="campaign initial states")
    parser.add_argument("--campaign-only", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.campaign_only:
        from poisonring import kernel_backend

        elapsed = _time(campaign, args.states)
        print(f"{kernel_backend()} {elapsed:.3f}")
        return 0

    from poisonring import _kernel_py

    backends = [("py", _kernel_py)]
    try:
        from poisonring import _opkernel

        backends.append(("c", _opkernel))
    except ImportError:
        print("compiled kernel not built; micro benchmarks cover py only", file=sys.stderr)

    n = args.draws
    print(f"micro benchmarks, {n:,} iterations each:")
    print(f"{'primitive':<16}" + "".join(f"{name:>10}" for name, _ in backends) + "   speedup")
    for label, fn in [
        ("clean_binop", bench_clean_binop),
        ("apply_deviation", bench_deviation),
        ("bernoulli", bench_bernoulli),
    ]:
        times = [_time(fn, kernel, n) for _, kernel in backends]
        row = f"{label:<16}" + "".join(f"{t:>9.3f}s" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"   {times[0] / times[1]:>6.2f}x"
        print(row)

    print(f"\nend-to-end ring campaign, {args.states} initial states:")
    results = {}
    for name, _ in backends:
        env = dict(os.environ, POISONRING_KERNEL=name)
        proc = subprocess.run(
            [sys.executable, __file__, "--campaign-only", "--states", str(args.states)],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        backend, elapsed = proc.stdout.split()
        assert backend == name, f"expected backend {name}, child ran {backend}"
        results[name] = float(elapsed)
        print(f"  {name:<3} {results[name]:.3f}s")
    if len(results) == 2:
        print(f"  speedup {results['py'] / results['c']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
