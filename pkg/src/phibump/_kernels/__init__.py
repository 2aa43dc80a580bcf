"""Kernel backend selection.

The compiled extension is used when it imported cleanly and the generator is
one of the parametric families; otherwise the pure numpy backend runs.  Set
PHIBUMP_PURE=1 to force the pure backend (useful for benchmarks and parity
tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure

try:
    if os.environ.get("PHIBUMP_PURE"):
        _fast = None
    else:
        from . import _fast
except ImportError:  # extension not built on this platform
    _fast = None

_KIND_CODES = {"power": 0, "exp_growth": 1, "power_gamma": 2, "p_log": 3, "two_power": 4}


def backend_name() -> str:
    return "compiled" if _fast is not None else "pure"


def have_compiled() -> bool:
    return _fast is not None


def _codes(spec):
    code = _KIND_CODES[spec.kind]
    p = spec.params
    p0 = p[0] if len(p) > 0 else 0.0
    p1 = p[1] if len(p) > 1 else 0.0
    return code, float(p0), float(p1)


def _c1(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def energy_and_gradient(u, lam, grid, spec, fk, want_grad=True):
    """(energy, gradient-or-None) for nodal values u; see _pure for semantics."""
    if _fast is None or spec.kind == "custom":
        return _pure.energy_and_gradient(u, lam, grid, spec, fk, want_grad)
    fx, fy, Fy, f0, cut, Fcut = fk
    code, p0, p1 = _codes(spec)
    return _fast.energy_and_gradient(
        _c1(u), float(lam), _c1(grid.h), _c1(grid.cell_mass), _c1(grid.node_weight),
        code, p0, p1, _c1(fx), _c1(fy), _c1(Fy), float(f0), float(cut), float(Fcut),
        bool(want_grad),
    )


def shoot_batch(d, lam, N, R, n_steps, spec, farr, series_steps=3):
    """(u, slope, H, status) arrays for a batch of center values d."""
    if _fast is None or spec.kind == "custom":
        return _pure.shoot_batch(d, lam, N, R, n_steps, spec, farr, series_steps)
    fx, fy, f0, cut, right_mode = farr
    code, p0, p1 = _codes(spec)
    return _fast.shoot_batch(
        _c1(np.atleast_1d(d)), float(lam), int(N), float(R), int(n_steps),
        code, p0, p1, _c1(fx), _c1(fy), float(f0), float(cut),
        int(right_mode), int(series_steps),
    )
