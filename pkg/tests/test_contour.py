import numpy as np
import pytest

from dipole_vacuum.contour import find_roots, newton, winding_number


def test_winding_number_counts_zeros_minus_poles():
    f = lambda z: (z - 0.3j) * (z + 0.5) / (z - 0.1)
    assert winding_number(f, (-1, 1, -1, 1)) == 1
    assert winding_number(lambda z: z**3 - 0.001, (-1, 1, -1, 1)) == 3


def test_find_roots_polynomial():
    true = [0.3 + 0.2j, -0.7 + 0.1j, 0.5 - 0.6j, 1e-3 + 0j]
    f = lambda z: np.prod([z - r for r in true])
    roots, expected = find_roots(f, (-1, 1, -1, 1))
    assert expected == 4
    assert sorted(roots, key=lambda z: (z.real, z.imag)) == pytest.approx(
        sorted(true, key=lambda z: (z.real, z.imag)), abs=1e-10)


def test_find_roots_transcendental():
    roots, expected = find_roots(lambda z: np.sin(z), (-4, 4, -1, 1.3))
    assert expected == 3
    assert sorted(r.real for r in roots) == pytest.approx([-np.pi, 0.0, np.pi], abs=1e-10)


def test_newton_converges():
    z = newton(lambda z: z * z - 2, 1.0, 1.0)
    z = z[0] if isinstance(z, tuple) else z
    assert z == pytest.approx(2**0.5, abs=1e-12)
