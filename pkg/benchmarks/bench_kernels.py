"""Time the compiled and pure-numpy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Prints the best-of-repeat time per call for each backend and the speedup,
after checking that both backends agree to 1e-12.
"""
import argparse
import timeit

import numpy as np

from chshmagic import available_backends
from chshmagic.ensembles import enumerate_clifford, haar_states, haar_unitaries, worker_rng
from chshmagic.twirling import core_unitary


def workloads(n, rng):
    psi = haar_states(n, rng)
    z = (rng.standard_normal((n, 4, 4)) + 1j * rng.standard_normal((n, 4, 4))) / np.sqrt(2)
    core = core_unitary("w:pi/4")
    g4 = haar_unitaries(n, 4, rng)
    g2 = haar_unitaries(n, 2, rng)
    return {
        "pauli_expectations": lambda k: k.pauli_expectations(psi),
        "state_features": lambda k: k.state_features(psi),
        "orthonormalize": lambda k: k.orthonormalize(z),
        "twirled_states[4x4]": lambda k: k.twirled_states(core, g4, 0),
        "twirled_states[A]": lambda k: k.twirled_states(core, g2, 1),
        "twirled_states[clifford]": lambda k: k.twirled_states(core, enumerate_clifford(2), 0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    jobs = workloads(args.n, worker_rng(args.seed))
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy kernels only")
    names = list(backends)
    print(f"{'kernel':<26}" + "".join(f"{b:>12}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for label, job in jobs.items():
        outs = [job(backends[b]) for b in names]
        for other in outs[1:]:
            if not np.allclose(outs[0], other, atol=1e-12, rtol=0):
                raise SystemExit(f"{label}: backends disagree")
        times = [min(timeit.repeat(lambda: job(backends[b]), number=1, repeat=args.repeat)) for b in names]
        line = f"{label:<26}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[1]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
