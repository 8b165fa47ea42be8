"""Complex root finding by argument-principle counting plus Newton polish."""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .errors import DomainError

Box = Tuple[float, float, float, float]


def _boundary(box: Box, n: int) -> np.ndarray:
    x0, x1, y0, y1 = box
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    return np.concatenate([
        x0 + (x1 - x0) * t + 1j * y0,
        x1 + 1j * (y0 + (y1 - y0) * t),
        x1 - (x1 - x0) * t + 1j * y1,
        x0 + 1j * (y1 - (y1 - y0) * t),
    ])


def winding_number(func: Callable, box: Box, n: int = 64, max_points: int = 1 << 14) -> int:
    """Zeros minus poles of ``func`` inside ``box`` = (x0, x1, y0, y1).

    The boundary is refined until no phase step exceeds pi/4.
    """
    while True:
        z = _boundary(box, n)
        w = np.array([complex(func(zz)) for zz in z])
        if np.any(w == 0) or not np.all(np.isfinite(w)):
            raise DomainError("function vanishes or is singular on the contour")
        steps = np.angle(np.roll(w, -1) / w)
        if np.max(np.abs(steps)) < math.pi / 4 or 4 * n >= max_points:
            return int(round(np.sum(steps) / (2.0 * math.pi)))
        n *= 2


def newton(func: Callable, z0: complex, h_scale: float, tol: float = 1e-13, max_iter: int = 100):
    """Newton iteration with a central-difference derivative."""
    z = complex(z0)
    for _ in range(max_iter):
        fz = complex(func(z))
        h = h_scale * 1e-6
        d = (complex(func(z + h)) - complex(func(z - h))) / (2 * h)
        if d == 0 or not np.isfinite(d):
            return z, False
        step = fz / d
        z -= step
        if abs(step) <= tol * max(abs(z), h_scale):
            return z, True
    return z, False


def _inside(z, box, pad=0.0):
    x0, x1, y0, y1 = box
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


def find_roots(func: Callable, box: Box, *, tol: float = 1e-10, max_depth: int = 14) -> Tuple[List[complex], int]:
    """Locate all zeros of an analytic function inside a rectangle.

    Parameters
    ----------
    func : callable
        Analytic (in the box) function of a complex variable. Poles inside the
        box reduce the count; keep them outside.
    box : tuple
        (x0, x1, y0, y1).
    tol : float
        Residual tolerance passed on to callers; Newton itself runs to
        machine precision.

    Returns
    -------
    roots : list of complex
    expected : int
        The argument-principle count for the full box.
    """
    x0, x1, y0, y1 = box
    if not (x1 > x0 and y1 > y0):
        raise DomainError("search box must have positive width and height")
    scale = max(x1 - x0, y1 - y0)
    expected = winding_number(func, box)
    roots: List[complex] = []

    def recurse(b: Box, count: int, depth: int):
        if count <= 0:
            return
        bx0, bx1, by0, by1 = b
        centre = complex(0.5 * (bx0 + bx1), 0.5 * (by0 + by1))
        if count == 1 or depth >= max_depth:
            z, ok = newton(func, centre, scale)
            if ok and _inside(z, b, pad=1e-9 * scale):
                roots.append(z)
                return
            if depth >= max_depth:
                return
        # split along the longer side; nudge the cut off any root on it
        for frac in (0.5, 0.4717, 0.5371):
            if bx1 - bx0 >= by1 - by0:
                cut = bx0 + frac * (bx1 - bx0)
                halves = ((bx0, cut, by0, by1), (cut, bx1, by0, by1))
            else:
                cut = by0 + frac * (by1 - by0)
                halves = ((bx0, bx1, by0, cut), (bx0, bx1, cut, by1))
            try:
                counts = [winding_number(func, hb) for hb in halves]
            except DomainError:
                continue
            for hb, c in zip(halves, counts):
                recurse(hb, c, depth + 1)
            return

    recurse(box, expected, 0)
    uniq: List[complex] = []
    for z in roots:
        if all(abs(z - u) > 1e-9 * scale for u in uniq):
            uniq.append(z)
    uniq.sort(key=lambda z: (z.real, z.imag))
    return uniq, expected
