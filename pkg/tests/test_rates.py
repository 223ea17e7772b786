import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhwalk.integrate import IntegratorConfig, evolve_chain, integrate
from nhwalk.lattice import LatticeParams, make_rho_system
from nhwalk.rates import (
    HoppingRates,
    RateError,
    RateState,
    hopping_rates,
    incoherent_displacement,
    integrate_rate,
    integrate_rate_selfconsistent,
    quasi_static_coherence,
    rate_rhs,
)

couplings = st.floats(0, 2, allow_nan=False)


class TestHoppingRates:
    def test_symmetric(self):
        r = hopping_rates(0.5, 0.5, 2.0, 0.0)
        assert r.rate_v == r.rate_vp == pytest.approx(0.125)
        assert r.rate0 == pytest.approx(0.25)
        assert r.rate0p == pytest.approx(2.25)

    def test_zero_coupling(self):
        assert hopping_rates(0.0, 0.5, 2.0).rate_v == 0

    def test_detuned(self):
        # denominator 4 * 0.36 + 4 = 5.44
        r = hopping_rates(0.25, 0.5, 2.0, 0.6)
        assert r.rate_v == pytest.approx(0.125 / 5.44, rel=1e-12)
        assert r.rate_vp == pytest.approx(0.5 / 5.44, rel=1e-12)
        assert r.rate_v == pytest.approx(0.0229779, abs=1e-7)
        assert r.rate_vp == pytest.approx(0.0919118, abs=1e-7)

    def test_gamma_zero_rejected(self):
        with pytest.raises(RateError):
            hopping_rates(0.5, 0.5, 0.0)

    @given(v=couplings, vp=couplings, delta=st.floats(-3, 3))
    def test_ratio_independent_of_detuning(self, v, vp, delta):
        r0 = hopping_rates(v, vp, 2.0)
        r1 = hopping_rates(v, vp, 2.0, delta)
        assert r1.rate_v * r0.rate_vp == pytest.approx(r1.rate_vp * r0.rate_v, abs=1e-15)
        assert r1.rate0p >= r1.rate0 >= 0


class TestIncoherentDisplacement:
    def test_examples(self):
        assert incoherent_displacement(0.3, 0.3) == 0.5
        assert incoherent_displacement(0.0, 0.4) == 1.0
        assert incoherent_displacement(0.25, 0.5) == pytest.approx(0.8, abs=1e-15)

    def test_both_zero(self):
        with pytest.raises(RateError):
            incoherent_displacement(0.0, 0.0)

    @given(v=couplings, vp=couplings)
    def test_swap_symmetry(self, v, vp):
        if v * v + vp * vp == 0:
            return
        assert incoherent_displacement(v, vp) + incoherent_displacement(vp, v) == pytest.approx(1.0, abs=1e-15)


class TestRateRhs:
    rates = HoppingRates(0.1, 0.3, 2.0)

    def test_localized(self):
        dpp, dpm, dd = rate_rhs(RateState.localized(6), self.rates)
        assert dpp[0] == pytest.approx(-0.4)
        assert dpm[0] == pytest.approx(0.1)
        assert dpm[1] == pytest.approx(0.3)
        assert np.count_nonzero(dpm) == 2 and np.count_nonzero(dpp) == 1
        assert not np.any(dd)

    def test_zero(self):
        z = RateState(np.zeros(5), np.zeros(5), np.zeros(5))
        assert not any(np.any(d) for d in rate_rhs(z, self.rates))

    def test_uniform(self):
        u, w = 0.3, 0.2
        s = RateState(np.full(5, u), np.full(5, w), np.zeros(5))
        dpp, dpm, dd = rate_rhs(s, self.rates)
        np.testing.assert_allclose(dpp, -0.4 * u + 0.4 * w)
        np.testing.assert_allclose(dpm, -2.4 * w + 0.4 * u)
        np.testing.assert_allclose(dd, 2.0 * w)

    @given(seed=st.integers(0, 2**32 - 1))
    def test_conserves_probability(self, seed):
        rng = np.random.default_rng(seed)
        s = RateState(rng.random(7), rng.random(7), rng.random(7))
        r = HoppingRates(*rng.random(3))
        total = sum(d.sum() for d in rate_rhs(s, r))
        assert abs(total) < 1e-13


class TestIntegrateRate:
    def test_everything_decays_and_dm_is_rate_ratio(self):
        r = hopping_rates(0.25, 0.5, 2.0, 0.6)
        s = integrate_rate(RateState.localized(23), r)
        assert s.final_decayed.sum() == pytest.approx(1.0, abs=1e-6)
        assert s.dm_final == pytest.approx(r.rate_vp / r.rate0, abs=1e-4)

    def test_positive_and_balanced(self):
        s = integrate_rate(RateState.localized(23), hopping_rates(0.4, 0.2, 2.0))
        assert s.balance_error < 1e-9
        assert s.rho00.min() >= -1e-12
        assert s.decayed_snapshot.min() >= -1e-12
        n = 23
        cfg = IntegratorConfig()
        traj = integrate(
            lambda t, y: np.concatenate(rate_rhs(RateState.from_vector(y, n), hopping_rates(0.4, 0.2, 2.0))),
            RateState.localized(n).to_vector(), cfg, lambda y: y[:2 * n].sum())
        assert traj.states.min() >= -1e-12

    def test_selfconsistent_reduces_to_constant_rates(self):
        cfg = IntegratorConfig(t_final=50, n_samples=51, stop_survival=None)
        a = integrate_rate(RateState.localized(23), hopping_rates(0.25, 0.5, 2.0), cfg)
        b = integrate_rate_selfconsistent(RateState.localized(23), 0.25, 0.5, 2.0, 0.0, cfg)
        np.testing.assert_array_equal(a.rho00, b.rho00)
        np.testing.assert_array_equal(a.dm_t, b.dm_t)

    @pytest.mark.parametrize("g", [0.0, 0.5, 4.0])
    def test_selfconsistent_dm_is_g_independent(self, g):
        s = integrate_rate_selfconsistent(RateState.localized(23), 0.25, 0.5, 2.0, g)
        assert s.dm_final == pytest.approx(0.8, abs=1e-4)
        assert s.balance_error < 1e-9

    def test_selfconsistent_decay_is_nonexponential(self):
        cfg = IntegratorConfig(t_final=150, n_samples=1501, stop_survival=None)
        nl = integrate_rate_selfconsistent(RateState.localized(23), 0.25, 0.5, 2.0, 4.0, cfg)
        lin = integrate_rate(RateState.localized(23), hopping_rates(0.25, 0.5, 2.0), cfg)
        rate_nl = -np.gradient(np.log(nl.rho00), nl.times)
        rate_lin = -np.gradient(np.log(lin.rho00), lin.times)
        i_late = np.argmax(4.0 * nl.rho00 < 0.05)
        assert i_late > 0
        # slope grows while the detuning g * rho00 melts away
        early = rate_nl[5:i_late]
        assert np.all(np.diff(early) > -1e-6)
        assert rate_nl[i_late] > 5 * rate_nl[10]
        # ... and ends on the slope of the undetuned rate model
        assert rate_nl[i_late] == pytest.approx(rate_lin[i_late], rel=0.05)

    def test_negative_g_rejected(self):
        with pytest.raises(RateError):
            integrate_rate_selfconsistent(RateState.localized(5), 0.2, 0.2, 2.0, -1.0)


class TestQuasiStaticCoherence:
    def test_examples(self):
        assert quasi_static_coherence(0.3, 0.3, 0.5, 2.0, 0.6) == 0
        z = quasi_static_coherence(1.0, 0.0, 0.5, 2.0, 0.6)
        assert z == pytest.approx(-0.25 / (0.6 + 1j), abs=1e-15)
        assert z.real == pytest.approx(-0.1103, abs=1e-4)
        assert z.imag == pytest.approx(0.1838, abs=1e-4)

    def test_singular(self):
        with pytest.raises(RateError):
            quasi_static_coherence(1.0, 0.0, 0.5, 0.0, 0.0)

    def test_against_full_density_matrix(self):
        p = LatticeParams(v=0.25, v_prime=0.5, gamma=2.0, delta_offset=0.6, n_cells=9)
        n2 = 2 * p.n_cells
        cfg = IntegratorConfig(t_final=30, n_samples=301, stop_survival=None)
        rho0 = np.zeros((n2, n2), complex)
        rho0[0, 0] = 1
        traj = integrate(make_rho_system(p), rho0.reshape(-1).view(float), cfg)
        rho = traj.states.view(complex).reshape(-1, n2, n2)
        full = rho[:, 0, 1]
        estimate = quasi_static_coherence(rho[:, 0, 0].real, rho[:, 1, 1].real, p.v_prime, p.gamma, 0.6)
        after = traj.times > 2.0
        rel = np.mean(np.abs(full - estimate)[after]) / np.mean(np.abs(full)[after])
        assert rel < 0.3
        # the chain form gives the same coherence
        s, _ = evolve_chain(p, cfg)
        np.testing.assert_allclose(rho[:, 0, 0].real, s.rho00, atol=1e-8)
