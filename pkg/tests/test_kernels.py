import numpy as np
import pytest

from codachart import kernels
from codachart.kernels import compiled_available, get_backend

from oracles import special_grid

needs_compiled = pytest.mark.skipif(not compiled_available(), reason="compiled extension not built")

SIM_CASES = [
    # dims, r, H, w, h_S, h_L, delta
    (2, 0.2, 9.65, 9.65, 1.0, 1.0, 0.0),
    (2, 0.1, 8.0, 1.5, 0.1, 1.6, 1.0),
    (3, 0.5, 12.0, 2.0, 0.5, 1.8, 0.5),
    (1, 1.0, 7.88, 3.0, 0.2, 1.3, 2.0),
]


def test_python_backend_always_available():
    assert get_backend("python").BACKEND == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_default_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


@needs_compiled
@pytest.mark.parametrize("case", SIM_CASES)
def test_simulation_bit_identical(case):
    args = case + (12345, 100, 400, 10 ** 6)
    ct, cc, cx = get_backend("compiled").simulate_runs(*args)
    pt, pc, px = get_backend("python").simulate_runs(*args)
    np.testing.assert_array_equal(cc, pc)
    np.testing.assert_array_equal(ct, pt)
    np.testing.assert_array_equal(cx, px)


@needs_compiled
def test_ncx2_backends_agree():
    grid = special_grid()
    x = np.array([g[0] for g in grid])
    lam = np.array([g[2] for g in grid])
    for df in (1, 2, 5):
        a, ba, _ = get_backend("compiled").ncx2_cdf(x, df, lam)
        b, bb, _ = get_backend("python").ncx2_cdf(x, df, lam)
        np.testing.assert_allclose(a, b, atol=1e-13)
        assert ba < 1e-13 and bb < 1e-13


@pytest.mark.parametrize("name", ["python", "compiled"])
def test_truncation_flag(name):
    if name == "compiled" and not compiled_available():
        pytest.skip("compiled extension not built")
    times, counts, trunc = get_backend(name).simulate_runs(2, 0.2, 1e9, 1e9, 1.0, 1.0, 0.0, 1, 0, 5, 50)
    assert trunc.all() and (counts == 50).all()
    np.testing.assert_array_equal(times, 50.0)


def test_replication_streams_are_independent_of_batching():
    k = get_backend("python")
    whole = k.simulate_runs(2, 0.3, 9.0, 2.0, 0.1, 1.5, 0.5, 99, 0, 60, 10 ** 6)
    parts = [k.simulate_runs(2, 0.3, 9.0, 2.0, 0.1, 1.5, 0.5, 99, s, 20, 10 ** 6) for s in (0, 20, 40)]
    np.testing.assert_array_equal(whole[1], np.concatenate([p[1] for p in parts]))
