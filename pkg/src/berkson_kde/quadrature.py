"""Adaptive Simpson quadrature for smooth, rapidly decaying spectral integrands.

Panels are refined level by level so each level costs one vectorized call of
the integrand. Accepted panels are summed in panel order, which keeps the
result bit-reproducible.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np

from .errors import DivergenceError

ABS_TOL = 1e-12
REL_TOL = 1e-10
ENVELOPE_FLOOR = 1e-16


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    initial_panels: int = 64,
    max_levels: int = 40,
) -> float:
    """Integrate a vectorized ``f`` over ``[a, b]``.

    A panel is accepted once its two half-panel Simpson sums agree with the
    whole-panel sum within 15 times its share of the tolerance; accepted
    panels get the Richardson correction.
    """
    if b == a:
        return 0.0
    length = b - a
    x = np.linspace(a, b, 2 * initial_panels + 1)
    fx = np.asarray(f(x), dtype=float)
    lo, mid, hi = x[:-2:2], x[1:-1:2], x[2::2]
    flo, fmid, fhi = fx[:-2:2], fx[1:-1:2], fx[2::2]
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    tol = max(abs_tol, rel_tol * abs(float(np.sum(whole))))

    total = 0.0
    for level in range(max_levels):
        ql, qr = 0.5 * (lo + mid), 0.5 * (mid + hi)
        fq = np.asarray(f(np.concatenate([ql, qr])), dtype=float)
        fql, fqr = fq[: ql.size], fq[ql.size:]
        left = (mid - lo) / 6.0 * (flo + 4.0 * fql + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * fqr + fhi)
        err = left + right - whole
        ok = np.abs(err) <= 15.0 * tol * (hi - lo) / length
        if level == max_levels - 1:
            if not np.all(ok):
                warnings.warn("adaptive_simpson hit its refinement limit", RuntimeWarning)
            ok[:] = True
        refined = left + right + err / 15.0
        total += float(np.sum(refined[ok]))
        keep = ~ok
        if not np.any(keep):
            break
        # interleave so the next level keeps left-to-right panel order
        lo = np.column_stack([lo[keep], mid[keep]]).ravel()
        hi = np.column_stack([mid[keep], hi[keep]]).ravel()
        new_mid = np.column_stack([ql[keep], qr[keep]]).ravel()
        flo_n = np.column_stack([flo[keep], fmid[keep]]).ravel()
        fhi = np.column_stack([fmid[keep], fhi[keep]]).ravel()
        fmid = np.column_stack([fql[keep], fqr[keep]]).ravel()
        whole = np.column_stack([left[keep], right[keep]]).ravel()
        flo, mid = flo_n, new_mid
    return total


def gaussian_radius(decay: float, floor: float = ENVELOPE_FLOOR) -> float:
    """Smallest ``R`` past which ``(1 + ω⁴) exp(-decay ω²) < floor`` for all ``ω > R``."""
    if decay <= 0:
        raise DivergenceError("integrand has no Gaussian decay")
    log_floor = math.log(floor)

    def g(w):
        return math.log1p(w**4) - decay * w * w - log_floor

    # the envelope is decreasing for w >= sqrt(2 / decay)
    w0 = max(1.0, math.sqrt(2.0 / decay))
    if g(w0) <= 0:
        return w0
    lo, hi = w0, 2.0 * w0
    while g(hi) > 0:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        m = 0.5 * (lo + hi)
        if g(m) > 0:
            lo = m
        else:
            hi = m
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def check_tail_decay(g: Callable[[float], float], limit: float = 1e6, floor: float = 1e-2) -> None:
    """Raise ``DivergenceError`` unless ``ω³ g(ω)`` has fallen below ``floor`` by ``limit``.

    That is enough for ``∫ ω² g(ω) dω`` to converge for the regularly varying
    spectra met in practice; a point-mass error (``g ≡ 1``) fails it.
    """
    if not limit**3 * abs(float(g(limit))) < floor:
        raise DivergenceError("integrand does not decay; error spectrum is not square integrable")


def half_line_integral(f: Callable[[np.ndarray], np.ndarray], **kw) -> float:
    """``∫_0^∞ f`` through the map ``ω = t / (1 - t)``, ``t ∈ [0, 1)``."""

    def mapped(t):
        # the endpoint takes the limiting value, approximated just inside it
        t = np.minimum(np.asarray(t, dtype=float), 1.0 - 1e-9)
        return np.asarray(f(t / (1.0 - t)), dtype=float) / (1.0 - t) ** 2

    return adaptive_simpson(mapped, 0.0, 1.0, **kw)


def even_integral(f, radius: float, **kw) -> float:
    """``∫_{-R}^{R} f`` for an even integrand, as twice the half-line integral."""
    return 2.0 * adaptive_simpson(f, 0.0, radius, **kw)
