"""Smoke test for the wavestat_py extension.

Build and install first, e.g. `maturin build --release -m crates/py/Cargo.toml`
followed by `pip install target/wheels/wavestat_py-*.whl`, then run this script.
"""

import cmath
import math
import tempfile

import numpy as np

import wavestat_py as ws


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    if not ok:
        raise SystemExit(1)


lat = ws.Lattice(1, 16)
check("lattice", lat.n_modes == 16 and lat.wavevectors()[lat.zero_mode] == [0.0, 0.0, 0.0])

cap = ws.System.capillary(1.0, 0.05)
check("capillary dispersion", abs(cap.dispersion([4.0, 0.0, 0.0]) - 8.0) < 1e-12)
check("order", cap.order == "three-wave" and ws.System.nls(0.1).order == "four-wave")

scale = [0.0 if k == lat.zero_mode else 0.3 for k in range(lat.n_modes)]
a = ws.rpa_field(lat, scale, seed=4, law="deterministic")
check("deterministic amplitudes", all(abs(abs(x) ** 2 - s) < 1e-12 for x, s in zip(a, scale)))

# A lone NLS mode keeps its modulus and turns at eps |a|^2 in the interaction frame.
eps, t = 0.1, 2.0
single = [0j] * lat.n_modes
single[lat.zero_mode + 3] = 0.8 * cmath.exp(0.4j)
out = ws.integrate(lat, ws.System.nls(eps), single, t)
want = single[lat.zero_mode + 3] * cmath.exp(1j * eps * 0.64 * t)
check("single NLS mode", abs(out[lat.zero_mode + 3] - want) < 1e-10, f"|err| = {abs(out[lat.zero_mode + 3] - want):.1e}")

b = ws.rpa_field(lat, scale, seed=5)
h0 = ws.hamiltonian(lat, cap, b)
h1 = ws.hamiltonian(lat, cap, ws.integrate(lat, cap, b, 5.0), time=5.0)
check("three-wave Hamiltonian", abs(h1 - h0) < 1e-8 * abs(h0), f"drift {abs(h1 - h0) / abs(h0):.1e}")

eta, gamma = ws.kinetic_rates(lat, cap, [0.0] * lat.n_modes, 2.0)
check("zero spectrum has zero rates", max(map(abs, eta + gamma)) == 0.0)

n, flux = 1.0, -0.02
s = np.geomspace(1e-8, 30.0, 20001)
p = np.array(ws.steady_pdf(list(s), n, flux, 1.0, 30.0))
mass = np.trapezoid(p, s) + p[0] * s[0]
check("steady PDF normalised", abs(mass - 1.0) < 1e-5, f"mass {mass:.8f}")
x = 20.0
ei_part = -flux * math.exp(-x) * float(np.sum([math.factorial(k) / x ** (k + 1) for k in range(12)])) * math.exp(x)
check("tail series", abs(ws.tail_series(x, flux, 1.0, 1.0) - ei_part) < 3 * abs(ei_part) / x**2)

cfg = ws.validate_config('kind = "onemode-pdf"')
check("defaults", cfg["onemode"]["cells"] == 400 and cfg["seed"] == 1)
try:
    ws.validate_config('kind = "onemode-pdf"\nfoo = 1')
    check("unknown key rejected", False)
except ValueError as e:
    check("unknown key rejected", "foo" in str(e))

with tempfile.TemporaryDirectory() as d:
    summary = ws.run_experiment('kind = "onemode-pdf"', d)
    check("onemode experiment", summary["passed"], f"{len(summary['files']['files'])} files")

verdicts = ws.verify(["1", "4", "11"])
for v in verdicts:
    check(f"criterion {v['id']}", v["passed"], v["detail"])
print("all smoke checks passed")
