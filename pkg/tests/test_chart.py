import numpy as np
import pytest
from scipy.stats import ortho_group

from codachart.chart import (ChartDesign, Region, classify, estimate_parameters, init_chart,
                             run_chart, update)
from codachart.designer import calibrate_H, solve_hL
from codachart.errors import ChartStateError, DesignError, DomainError
from codachart.simplex import IlrBasis, closure, ilr, ilr_inv, ilr_inv_rows, sbp_basis

from conftest import EXAMPLE_ILR, EXAMPLE_PARTS


def _reduced(p=3, r=0.2, H=9.0, w=2.0, h_S=0.1, h_L=1.5, n=1):
    return ChartDesign.reduced(p, r, H, w, h_S, h_L, n=n)


class TestDesign:
    def test_collects_violations(self):
        with pytest.raises(DesignError) as err:
            ChartDesign.reduced(3, 1.5, 5.0, 6.0, 0.5, 0.1)
        assert len(err.value.context["violations"]) == 3

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(DesignError):
            ChartDesign(p=3, n=1, r=0.2, H=9, w=2, h_S=0.1, h_L=1.5, mu0=[1, 1, 1],
                        sigma_star=np.diag([1.0, -1.0]), basis=sbp_basis(3))

    def test_dict_roundtrip(self):
        d = ChartDesign(p=3, n=2, r=0.2, H=9, w=2, h_S=0.1, h_L=1.5, mu0=[0.2, 0.3, 0.5],
                        sigma_star=np.array([[1.0, 0.2], [0.2, 0.5]]), basis=sbp_basis(3))
        assert ChartDesign.from_dict(d.to_dict()) == d

    def test_missing_fields(self):
        with pytest.raises(DesignError):
            ChartDesign.from_dict({"p": 3, "n": 1})


class TestRuntime:
    def test_init(self):
        d = _reduced()
        s = init_chart(d)
        assert s.Q == 0 and s.region is Region.SAFE and s.next_interval == d.h_L
        assert init_chart(d) == s

    def test_one_step(self):
        d = _reduced(w=2.0, H=9.0)
        state, rep = update(init_chart(d), d, ilr_inv([1.0, 0.0]))
        np.testing.assert_allclose(rep.W, [0.2, 0.0], atol=1e-15)
        assert rep.Q == pytest.approx(0.36, abs=1e-12)
        assert rep.region is Region.SAFE and rep.t == d.h_L

    def test_centre_forever(self):
        d = _reduced()
        state = init_chart(d)
        for _ in range(200):
            state, rep = update(state, d, d.mu0)
            assert rep.Q == pytest.approx(0.0, abs=1e-24) and rep.region is Region.SAFE
        assert state.t == pytest.approx(200 * d.h_L)

    def test_shewhart_statistic(self, rng):
        d = _reduced(r=1.0, H=10.0, w=3.0)
        x = rng.normal(size=2)
        _, rep = update(init_chart(d), d, ilr_inv(x))
        assert rep.Q == pytest.approx(x @ x, rel=1e-12)

    def test_regions_and_times(self):
        assert classify(1.0, 2.0, 9.0) is Region.SAFE
        assert classify(2.0, 2.0, 9.0) is Region.SAFE
        assert classify(5.0, 2.0, 9.0) is Region.WARNING
        assert classify(9.0, 2.0, 9.0) is Region.WARNING
        assert classify(9.1, 2.0, 9.0) is Region.SIGNAL
        d = _reduced(r=1.0, H=9.0, w=2.0, h_S=0.25, h_L=2.0)
        s = init_chart(d)
        s, a = update(s, d, ilr_inv([2.0, 0.0]))   # Q = 4: warning
        s, b = update(s, d, ilr_inv([0.0, 0.0]))   # Q = 0: safe
        s, c = update(s, d, ilr_inv([3.5, 0.0]))   # Q = 12.25: signal
        assert [a.region, b.region, c.region] == [Region.WARNING, Region.SAFE, Region.SIGNAL]
        assert [a.t, b.t, c.t] == [2.0, 2.25, 4.25]
        assert c.next_interval is None
        with pytest.raises(ChartStateError):
            update(s, d, ilr_inv([0.0, 0.0]))

    def test_period_size(self):
        d = _reduced(n=2)
        with pytest.raises(DomainError):
            update(init_chart(d), d, [[0.2, 0.3, 0.5]])
        with pytest.raises(DomainError):
            update(init_chart(d), d, [[0.2, 0.3, 0.5], [0.2, 0.0, 0.8]])
        _, rep = update(init_chart(d), d, [[0.2, 0.3, 0.5], [0.5, 0.3, 0.2]])
        np.testing.assert_allclose(rep.xbar_star, ilr(np.array([[0.2, 0.3, 0.5], [0.5, 0.3, 0.2]])).mean(0))

    def test_basis_invariance(self, rng):
        p = 5
        B = sbp_basis(p).contrast
        Rot = ortho_group.rvs(p - 1, random_state=3)
        L = rng.normal(size=(p - 1, p - 1))
        S = L @ L.T + np.eye(p - 1)
        mu0 = closure(rng.random(p) + 0.1)
        d1 = ChartDesign(p=p, n=1, r=0.3, H=14, w=4, h_S=0.1, h_L=1.4, mu0=mu0, sigma_star=S,
                         basis=sbp_basis(p))
        d2 = ChartDesign(p=p, n=1, r=0.3, H=14, w=4, h_S=0.1, h_L=1.4, mu0=mu0,
                         sigma_star=Rot @ S @ Rot.T, basis=IlrBasis(Rot @ B))
        data = np.exp(rng.normal(size=(60, p)))
        data /= data.sum(axis=1, keepdims=True)
        q1 = [r.Q for r in run_chart(d1, [[x] for x in data])]
        q2 = [r.Q for r in run_chart(d2, [[x] for x in data])]
        np.testing.assert_allclose(q1, q2, rtol=1e-9)

    def test_large_shift_signals_fast(self):
        # delta = 2 reference design with h_S = 0.1, (r*, H*) re-derived
        r = 0.374
        H = calibrate_H(3, r).H
        w = 3.6
        d = _reduced(r=r, H=H, w=w, h_S=0.1, h_L=solve_hL(3, r, H, w, 0.1))
        rng = np.random.default_rng(11)
        shift = np.array([2.0, 0.0])
        lengths = []
        for _ in range(400):
            z = rng.normal(size=(500, 2)) + shift
            reports = list(run_chart(d, [[x] for x in ilr_inv_rows(z)]))
            assert reports[-1].region is Region.SIGNAL
            lengths.append(reports[-1].i)
        assert np.median(lengths) <= 5


class TestEstimation:
    def test_example_centre(self):
        mu0, S = estimate_parameters(EXAMPLE_PARTS)
        oracle = ilr_inv(EXAMPLE_ILR.mean(axis=0))
        # printed coordinates carry +-0.005 rounding
        np.testing.assert_allclose(ilr(mu0), ilr(oracle), atol=0.005)
        np.testing.assert_allclose(S, np.cov(EXAMPLE_ILR, rowvar=False), atol=0.02)

    def test_constant_data(self):
        with pytest.raises(DomainError):
            estimate_parameters([[0.2, 0.3, 0.5]] * 10)

    def test_too_few_rows(self):
        with pytest.raises(DomainError):
            estimate_parameters([[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]])

    def test_recovers_centre(self):
        rng = np.random.default_rng(4)
        mu = np.array([0.4, -1.2, 0.7])
        n = 20000
        X = ilr_inv_rows(rng.normal(size=(n, 3)) + mu)
        mu0, S = estimate_parameters(X)
        assert np.all(np.abs(ilr(mu0) - mu) <= 3 / np.sqrt(n))
        np.testing.assert_allclose(S, np.eye(3), atol=0.05)
