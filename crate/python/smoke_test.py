#!/usr/bin/env python3
"""Smoke test for the hdhi_py extension module.

Builds nothing itself: run `cargo build -p hdhi-py --release` (or debug)
first, then `python3 python/smoke_test.py`.
"""

import math
import pathlib
import shutil
import sys
import tempfile


def load_module():
    root = pathlib.Path(__file__).resolve().parents[1]
    candidates = [
        root / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libhdhi_py.so", "hdhi_py.so", "libhdhi_py.dylib", "hdhi_py.pyd")
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("hdhi_py cdylib not found; run `cargo build -p hdhi-py` first")
    staging = pathlib.Path(tempfile.mkdtemp(prefix="hdhi_py_"))
    target = staging / "hdhi_py.so"
    shutil.copy2(built, target)
    sys.path.insert(0, str(staging))
    import hdhi_py

    return hdhi_py


def main():
    m = load_module()
    checks = 0

    def ok(name, cond):
        nonlocal checks
        assert cond, f"FAIL: {name}"
        checks += 1
        print(f"  ok: {name}")

    # Special functions.
    ok("gamma(5) = 24", abs(m.gamma(5.0) - 24.0) < 1e-12)
    ok("gamma(1/2) = sqrt(pi)", abs(m.gamma(0.5) - math.sqrt(math.pi)) < 1e-13)
    ok("zeta(2) = pi^2/6", abs(m.riemann_zeta(2.0) - math.pi**2 / 6) < 1e-12)
    ok(
        "hurwitz telescoping",
        abs(m.hurwitz_zeta(2.5, 1.25) - m.hurwitz_zeta(2.5, 2.25) - 1.25**-2.5) < 1e-13,
    )
    try:
        m.riemann_zeta(1.0)
        raise SystemExit("FAIL: zeta(1) should raise")
    except ValueError:
        ok("zeta(1) raises ValueError", True)

    # The pi^2/6 configuration, both constant routes.
    s = m.Scheme.preset("cor54")
    closed, quadr = s.kernel_constant()
    ok("closed form = pi^2/6", abs(closed - math.pi**2 / 6) < 1e-12)
    ok("quadrature agrees", abs(closed - quadr) < 1e-9)
    ok("kernel value h(1)", abs(s.h(1.0) - 2.0 / (math.e**2 - 1.0)) < 1e-12)
    ok("theta in (0,1)", 0.0 < s.theta(1.0) < 1.0)

    # Weight bounds at one grid point.
    rep = s.weight_report(1.5, 3)
    ok("omega < k", rep["omega"] < rep["k"])
    ok("weight verdicts true", all(
        rep[key] == "true" for key in ("upper_bound", "varpi_bound", "lower_bound")
    ))

    # Forward verification.
    v = s.verify(2.0)
    ok("forward relations all true", v["relations"] == ["true"] * 3)
    ok("forward slack below one", all(0.0 < x < 1.0 for x in v["slack"]))

    # Reverse-negative verification on the unshifted preset.
    r = m.Scheme.preset("remark55").verify(-1.0)
    ok("reverse relations all true", r["relations"] == ["true"] * 3)
    ok("reverse slack above one", all(x > 1.0 for x in r["slack"]))

    # A short extremal trace and a coarse operator-norm estimate.
    tr = s.sharpness_trace([0.2, 0.1], p=2.0)
    ok("trace below k and increasing", tr["points"][0][1] < tr["points"][1][1] < tr["k"])
    est = s.opnorm(p=2.0, x_count=200, n_max=500, iterations=1000)
    ok("opnorm in (0.8 k, k]", 0.8 * tr["k"] < est <= tr["k"])

    # Invalid parameters are rejected.
    try:
        m.Scheme(1.0, 1.0, 0.9, 0.5)
        raise SystemExit("FAIL: inadmissible parameters should raise")
    except ValueError:
        ok("inadmissible parameters raise ValueError", True)

    print(f"smoke test passed ({checks} checks)")


if __name__ == "__main__":
    main()
