#!/usr/bin/env python3
"""Smoke test for the qlc_py extension module.

Builds the cdylib if needed, stages it under an importable name, then checks
a handful of closed-form values through the Python surface.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def stage_module() -> Path:
    """Build (if needed) and copy the extension into a temp dir as qlc_py.so."""
    release = ROOT / "target" / "release"
    candidates = [release / "libqlc_py.so", release / "libqlc_py.dylib"]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        subprocess.run(
            ["cargo", "build", "-p", "qlc-py", "--release"], cwd=ROOT, check=True
        )
        lib = next(p for p in candidates if p.exists())
    stage = Path(tempfile.mkdtemp(prefix="qlc_py_"))
    shutil.copy2(lib, stage / "qlc_py.so")
    return stage


sys.path.insert(0, str(stage_module()))
import qlc_py  # noqa: E402

checks = 0


def close(got, want, tol, label):
    global checks
    checks += 1
    assert abs(got - want) <= tol, f"{label}: got {got!r}, want {want!r} +/- {tol}"


def equal(got, want, label):
    global checks
    checks += 1
    assert got == want, f"{label}: got {got!r}, want {want!r}"


# Construction: complex entries round-trip, bad traces are rejected.
rho = qlc_py.State([[0.7, 0.1 + 0.2j], [0.1 - 0.2j, 0.3]])
equal(rho.dim, 2, "dim")
close(rho.matrix()[0][1].imag, 0.2, 1e-15, "entry round trip")
try:
    qlc_py.State([[1.0, 0.0], [0.0, 1.0]])
except ValueError as e:
    equal("trace" in str(e), True, "trace rejection message")
else:
    raise AssertionError("trace-2 matrix was accepted")

# Reference curve: vertices of the two-distribution example.
p1 = qlc_py.State.from_probs([0.5, 0.25, 0.25, 0.0])
p2 = qlc_py.State.from_probs([1 / 6, 1 / 6, 1 / 3, 1 / 3])
curve = qlc_py.lorenz_curve(p1, p2, points=512)
for x0, y0 in [(1 / 6, 1 / 2), (1 / 3, 3 / 4), (2 / 3, 1.0)]:
    y = max(y for _, x, y in curve if abs(x - x0) <= 1e-9)
    close(y, y0, 1e-12, f"curve vertex at x={x0:.3f}")

# Divergences: pure-vs-mixed closed forms and self-distances.
ground = qlc_py.State.from_probs([1.0, 0.0])
mixed = qlc_py.State.from_probs([0.5, 0.5])
close(qlc_py.hilbert_alpha(ground, mixed, math.inf), 1.0, 1e-12, "H_inf = D_max")
close(qlc_py.d_max(ground, mixed), 1.0, 1e-12, "D_max pure vs mixed")
close(qlc_py.d_min(ground, mixed), 1.0, 1e-12, "D_min pure vs mixed")
close(qlc_py.trace_distance(rho, rho), 0.0, 1e-15, "self trace distance")
close(qlc_py.hilbert_metric(mixed, mixed), 0.0, 1e-12, "self projective metric")
excited = qlc_py.State.from_probs([0.0, 1.0])
close(qlc_py.hilbert_alpha(ground, excited, 2.0), 2.0, 1e-12,
      "disjoint supports saturate the finite-order bound")
equal(qlc_py.hilbert_alpha(ground, excited, math.inf), math.inf,
      "disjoint supports diverge in the limit")

# Hypothesis testing on the reference pair.
rep = qlc_py.q_epsilon(p1, p2, 0.5)
close(rep["q_value"], 1 / 6, 1e-9, "Q^0.5 on reference pair")
close(rep["dh_bits"], math.log2(6), 1e-7, "hypothesis-testing bits")

# Majorization: every pair reaches itself.
rep = qlc_py.relative_majorizes(p1, p2, p1, p2)
equal(rep["verdict"], "Holds", "self majorization")

# Thermal conversion at infinite temperature: mixing toward uniform is free.
plus = qlc_py.State([[0.5, 0.5], [0.5, 0.5]])
d34 = qlc_py.State.from_probs([0.75, 0.25])
rep = qlc_py.gibbs_convertible(plus, d34, [0.0, 1.0], 0.0)
equal(rep["verdict"], "Holds", "thermal mixing forward")
rep = qlc_py.gibbs_convertible(d34, plus, [0.0, 1.0], 0.0)
equal(rep["verdict"], "Fails", "thermal mixing reverse")

# Test-and-prepare channels: reachable target holds, sharper target fails.
rep = qlc_py.tap_exists(plus, mixed, d34, mixed)
equal(rep["verdict"], "Holds", "tap reachable")
equal(rep["W"] >= 0.0, True, "tap witness sign on success")
rep = qlc_py.tap_exists(p1, p2, ground, qlc_py.State.from_probs([1 / 3, 2 / 3]))
equal(rep["verdict"], "Fails", "tap refuted")
equal(rep["W"] < 0.0, True, "tap witness sign on failure")

# Probabilistic conversion: window and certainty at q = 1.
lo, hi = qlc_py.q_window(plus, mixed, d34, mixed)
close(lo, 0.0, 1e-9, "window lower edge")
close(hi, 4 / 3, 1e-9, "window upper edge")
equal(qlc_py.prob_feasible(plus, mixed, d34, mixed), "Holds", "window feasible")
close(qlc_py.p_max(plus, mixed, d34, mixed, 1.0), 1.0, 1e-6, "certain success at q=1")

# Seeded generation is deterministic.
a = qlc_py.State.random(3, 7)
b = qlc_py.State.random(3, 7)
equal(a.matrix(), b.matrix(), "seeded state reproducibility")
close(qlc_py.trace_distance(a, b), 0.0, 1e-15, "identical seeds, identical states")

print(f"ok: {checks} checks passed")
