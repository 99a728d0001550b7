#!/usr/bin/env python3
"""Smoke test for the Python bindings.

Locates the compiled extension in target/, imports it, and replays a few
hand-checked values: the unit-quadratic iterates, a Lyapunov value, the
rate envelope, formulation agreement, and the continuous-time rate bound.

Build the extension first:  cargo build -p nagcert-py  (or --release)
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_extension() -> Path:
    candidates = [
        REPO / "target" / profile / "libnagcert_py.so"
        for profile in ("release", "debug")
    ]
    built = [p for p in candidates if p.is_file()]
    if not built:
        sys.exit("extension not found; run `cargo build -p nagcert-py` first")
    return max(built, key=lambda p: p.stat().st_mtime)


def import_module():
    src = locate_extension()
    stage = Path(tempfile.mkdtemp(prefix="nagcert-py-"))
    shutil.copy2(src, stage / "nagcert_py.so")
    sys.path.insert(0, str(stage))
    import nagcert_py

    return nagcert_py


def main() -> None:
    nag = import_module()

    # Hand-checked run: f(x) = x^2/2, r = 2, s = 1/2, x0 = 1.
    obj = nag.Objective.preset("quadratic-1d")
    assert obj.dim == 1 and obj.lipschitz == 1.0
    assert obj.minimizer == [0.0] and obj.optimal_value == 0.0
    trace = nag.run(obj, "two-sequence", r=2.0, max_iter=4, step_size=0.5, x0=[1.0])
    assert len(trace) == 5
    assert trace.lookahead(2) == [0.1875]
    assert trace.iterate(2) == [0.25]
    assert trace.lyapunov(0, "unified") == 2.0
    assert trace.lyapunov(1, "unified") == 1.25
    for form in ("gradient-correction", "implicit-velocity", "unified"):
        assert abs(trace.lyapunov(3, form) - 0.1396484375) < 1e-15, form
    assert abs(trace.monotone_slack(1) - 0.28125) < 1e-15
    assert trace.envelope_holds("objective-y")
    assert trace.envelope_holds("gradnorm-x")
    lhs, budget = trace.series_budget()
    assert lhs <= budget
    assert trace.to_csv().startswith("k,")

    # The three formulations stay together to machine precision.
    ill = nag.Objective.preset("quadratic-ill")
    assert nag.compare_schemes(ill, r=3.0, max_iter=300) < 1e-12

    # Synthetic objectives: analytic gradients and certified smoothness.
    lse = nag.Objective.log_sum_exp(8, 2, seed=7)
    assert lse.minimizer is None
    assert lse.gradient_check([0.3, -0.7]) < 1e-8
    assert lse.smoothness_certificate(num_samples=32, seed=1) > -1e-12
    f_hat = nag.estimate_optimal_value(lse, iters=50_000)
    tail = nag.run(lse, "implicit-velocity", r=3.0, max_iter=200)
    gaps = [v - f_hat for v in map(lse.value, map(tail.lookahead, range(len(tail))))]
    assert min(gaps) >= 0.0 and gaps[-1] < gaps[0]

    # Continuous-time certificate on a known-minimizer problem.
    report = nag.integrate_ode(nag.Objective.quadratic([1.0, 4.0]), r=2.0, s=1e-2, t_end=5.0)
    assert report.all_bounds_satisfied()
    increase, allowance = report.worst_lyapunov_increase()
    assert increase <= allowance
    assert report.origin == 4.0 * math.sqrt(1e-2)
    assert report.to_csv().startswith("t,")

    print("smoke test passed")


if __name__ == "__main__":
    main()
