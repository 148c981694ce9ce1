import numpy as np
import pytest

from holeburn import MinimizeOptions, minimize


def test_quadratic_1d():
    res = minimize(lambda x: (x[0] - 3.0) ** 2, [0.0])
    assert res.converged
    assert res.x[0] == pytest.approx(3.0, abs=1e-6)


def test_rosenbrock():
    def rosen(p):
        x, y = p
        return (1 - x) ** 2 + 100 * (y - x**2) ** 2

    res = minimize(rosen, [-1.2, 1.0])
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-4)


def test_anisotropic_quadratic():
    res = minimize(lambda p: p[0] ** 2 + 10 * p[1] ** 2, [5.0, 5.0])
    assert res.converged
    assert np.allclose(res.x, [0.0, 0.0], atol=1e-6)


def test_never_worse_than_start():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x0 = rng.normal(size=3) * 10
        res = minimize(lambda p: np.sum(np.abs(p) ** 1.5) + np.sin(p[0]),
                       x0, MinimizeOptions(max_iter=15))
        f0 = np.sum(np.abs(x0) ** 1.5) + np.sin(x0[0])
        assert res.fun <= f0


def test_iteration_cap_flags_nonconvergence():
    res = minimize(lambda p: (p[0] - 3.0) ** 2, [0.0],
                   MinimizeOptions(max_iter=2))
    assert not res.converged
    assert res.iterations == 2


def test_nonfinite_start_rejected():
    with pytest.raises(ValueError):
        minimize(lambda p: np.inf, [0.0])
