#!/usr/bin/env python3
"""Smoke test for the agrf_py extension module.

Builds nothing by default: it expects `cargo build -p agrf-py --release`
(or debug) to have produced libagrf_py.so. Pass --build to run cargo first.

Usage:
    python3 python/smoke_test.py [--build]
"""

import argparse
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

PASSED = 0


def check(name: str, condition: bool, detail: str = "") -> None:
    global PASSED
    if not condition:
        print(f"[smoke] {name}: FAIL {detail}")
        sys.exit(1)
    PASSED += 1
    print(f"[smoke] {name}: PASS {detail}")


def locate_module() -> Path:
    candidates = [
        REPO_ROOT / "target" / "release" / "libagrf_py.so",
        REPO_ROOT / "target" / "debug" / "libagrf_py.so",
    ]
    for candidate in candidates:
        if candidate.exists():
            return candidate
    sys.exit(
        "libagrf_py.so not found; run `cargo build -p agrf-py --release` "
        "or pass --build"
    )


def import_module():
    source = locate_module()
    staging = Path(tempfile.mkdtemp(prefix="agrf_py_"))
    shutil.copy2(source, staging / "agrf_py.so")
    sys.path.insert(0, str(staging))
    import agrf_py  # noqa: E402

    return agrf_py


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--build", action="store_true", help="run cargo build first")
    args = parser.parse_args()
    if args.build:
        subprocess.run(
            ["cargo", "build", "-p", "agrf-py", "--release"],
            cwd=REPO_ROOT,
            check=True,
        )

    agrf = import_module()

    # Kernel derivatives: closed-form identities.
    check(
        "kernel value at coincidence",
        agrf.kernel_derivative(1.0, 1.0, 0, 0, 0.3, 0.3) == 1.0,
    )
    v11 = agrf.kernel_derivative(1.0, 1.0, 1, 1, 0.7, 0.7)
    check("first cross derivative at coincidence", abs(v11 - 1.0) < 1e-14)
    v22 = agrf.kernel_derivative(2.0, 0.5, 2, 2, -1.0, -1.0)
    check("second cross derivative at coincidence", abs(v22 - 192.0) < 1e-9)
    forward = agrf.kernel_derivative(1.3, 0.8, 2, 1, 0.2, 0.9)
    reverse = agrf.kernel_derivative(1.3, 0.8, 1, 2, 0.9, 0.2)
    check("derivative symmetry", forward == reverse, f"({forward})")

    # Benchmark truth functions.
    check(
        "composite second derivative at zero",
        abs(agrf.composite_truth(0.0, 2) - 2.0 * math.sin(-6.0)) < 1e-14,
    )
    check(
        "oscillator initial velocity",
        abs(agrf.oscillator_truth(0.0, 1) - math.sqrt(0.99) * 22.0) < 1e-12,
    )

    # Log-likelihood hand value: single datum y=0 at x=0, a=l=1.
    obs1 = agrf.ObservationSet([[0.0]], [[0.0]])
    ll = agrf.log_likelihood(obs1, 1.0, 1.0)
    check(
        "single-datum log-likelihood",
        abs(ll + 0.5 * math.log(2.0 * math.pi)) < 1e-12,
        f"({ll:.6f})",
    )

    # Fit on the composite benchmark (observable + both derivatives).
    xs0 = [0.0, 0.4, 0.6, 1.0]
    xs1 = [0.2, 0.5, 0.8]
    xs2 = [0.1, 0.5, 0.9]
    obs = agrf.ObservationSet(
        [xs0, xs1, xs2],
        [
            [agrf.composite_truth(x, 0) for x in xs0],
            [agrf.composite_truth(x, 1) for x in xs1],
            [agrf.composite_truth(x, 2) for x in xs2],
        ],
    )
    check("observation container", len(obs) == 10 and obs.max_order == 2)
    model = agrf.Model.fit(obs, mode="noiseless", seed=7)
    check(
        "fit produces finite likelihood",
        math.isfinite(model.log_likelihood()),
        f"(a={model.amplitude:.4f}, l={model.length_scale:.4f})",
    )

    worst = 0.0
    for order, x, value in obs.rows():
        mean, variance, _, _ = model.posterior(x, order)
        worst = max(worst, abs(mean - value) / (1.0 + abs(value)))
    check("noiseless interpolation", worst < 1e-6, f"(worst rel err {worst:.2e})")

    # Prior reversion far from the data.
    mean, variance, lo, hi = model.posterior(60.0, 0)
    prior_var = model.amplitude**2
    check(
        "prior reversion far from data",
        abs(mean) < 1e-8 and abs(variance - prior_var) < 1e-8 * prior_var,
    )
    check("band symmetry", abs((hi - mean) - (mean - lo)) < 1e-12)

    grid = [i / 200.0 for i in range(201)]
    rows = model.predict_curve(grid, [0, 1, 2])
    check("predict_curve shape", len(rows) == 603)
    truth0 = [agrf.composite_truth(x, 0) for x in grid]
    means0 = [r[2] for r in rows if r[0] == 0]
    rle = agrf.relative_l2_error(truth0, means0)
    check("composite case-4 RLE sane", 0.0 < rle < 1.0, f"({rle:.4f})")

    # Error mapping.
    try:
        agrf.kernel_derivative(1.0, 1.0, 5, 5, 0.0, 1.0)
        check("order overflow raises", False)
    except ValueError:
        check("order overflow raises", True)

    # PDE solver: quick Burgers run on a coarse grid.
    solution = agrf.solve_burgers(grid_size=256, time=0.25)
    u = solution.values(0)
    check(
        "burgers odd symmetry",
        max(abs(u[j] + u[256 - j]) for j in range(1, 256)) < 1e-8,
    )
    interp = solution.truth(solution.grid()[37], 0)
    check("spectral interpolation matches grid", abs(interp - u[37]) < 1e-9)
    sampled = solution.sample([5, 5, 5], noise_fraction=0.1, seed=3, noise_seed=4)
    check("pde sampling", len(sampled) == 15 and sampled.max_order == 2)

    noisy_model = agrf.Model.fit(
        sampled, mode="noisy-multi-delta", restarts=4, max_evals=400, seed=1
    )
    check(
        "noisy fit recovers positive noise",
        all(d > 0.0 for d in noisy_model.noise),
        f"(deltas {[f'{d:.3g}' for d in noisy_model.noise]})",
    )

    print(f"[smoke] all {PASSED} checks passed")


if __name__ == "__main__":
    main()
