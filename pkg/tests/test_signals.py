import numpy as np
import pytest

from gclms import (
    Scenario,
    SystemPhase,
    gen_input,
    gen_noise,
    gen_observation,
    make_sparse_system,
    realize,
    run_rng,
    tap_dot,
    tap_windows,
)


class TestMakeSparseSystem:
    def test_single_active_tap(self):
        w0 = make_sparse_system(16, 1, 1.0, "all-positive")
        assert w0[0] == 1.0
        assert np.count_nonzero(w0) == 1

    def test_fully_dense_alternating(self):
        w0 = make_sparse_system(16, 16, 1.0, "alternating")
        expected = np.array([(-1.0) ** i for i in range(16)])
        np.testing.assert_array_equal(w0, expected)
        assert np.count_nonzero(w0) == 16

    def test_even_spacing(self):
        w0 = make_sparse_system(4, 2, 0.5, "all-positive")
        np.testing.assert_array_equal(w0, [0.5, 0.0, 0.5, 0.0])

    def test_half_active_support(self):
        w0 = make_sparse_system(16, 8, 1.0, "all-positive")
        np.testing.assert_array_equal(np.flatnonzero(w0), np.arange(0, 16, 2))

    def test_too_many_active(self):
        with pytest.raises(ValueError):
            make_sparse_system(16, 17, 1.0, "alternating")

    def test_random_pattern_magnitudes(self):
        w0 = make_sparse_system(12, 5, 0.7, "random", rng=np.random.default_rng(3))
        support = np.flatnonzero(w0)
        assert support.size == 5
        np.testing.assert_allclose(np.abs(w0[support]), 0.7)

    def test_sparsity_accounting_property(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            k = int(rng.integers(0, n + 1))
            w0 = make_sparse_system(n, k, 1.0, "alternating")
            assert np.count_nonzero(w0) == k
            again = make_sparse_system(n, k, 1.0, "alternating")
            np.testing.assert_array_equal(np.flatnonzero(w0), np.flatnonzero(again))


class TestGenerators:
    def test_input_moments_at_one_million(self):
        x = gen_input(10**6, 1.0, np.random.default_rng(42))
        assert abs(x.mean()) < 0.004
        assert abs(x.var() - 1.0) < 0.01

    def test_input_rejects_bad_args(self):
        with pytest.raises(ValueError):
            gen_input(0, 1.0, np.random.default_rng(0))
        with pytest.raises(ValueError):
            gen_input(5, 0.0, np.random.default_rng(0))

    def test_input_deterministic(self):
        a = gen_input(512, 2.0, np.random.default_rng(7))
        b = gen_input(512, 2.0, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_noise_variance_and_zero_case(self):
        v = gen_noise(10**6, 0.25, np.random.default_rng(8))
        assert abs(v.var() - 0.25) < 0.25 * 0.01
        z = gen_noise(64, 0.0, np.random.default_rng(8))
        np.testing.assert_array_equal(z, np.zeros(64))

    def test_observation_inner_product(self):
        assert gen_observation([1.0, 0.0], [0.5, 9.9], 0.0) == 0.5
        assert gen_observation(np.zeros(6), np.arange(6.0), 0.3) == 0.3
        np.testing.assert_allclose(
            gen_observation([0.5, -0.2], [1.0, 1.0], 0.1), 0.4, atol=1e-15
        )

    def test_observation_length_mismatch(self):
        with pytest.raises(ValueError):
            gen_observation([1.0, 2.0], [1.0, 2.0, 3.0], 0.0)


class TestTapWindows:
    def test_zero_prehistory(self):
        x = np.array([1.5, -2.0, 0.25])
        win = tap_windows(x, 3)
        np.testing.assert_array_equal(
            win, [[1.5, 0.0, 0.0], [-2.0, 1.5, 0.0], [0.25, -2.0, 1.5]]
        )

    def test_window_matches_manual_dot(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=40)
        w = rng.normal(size=4)
        win = tap_windows(x, 4)
        manual = [
            sum(w[k] * (x[n - k] if n - k >= 0 else 0.0) for k in range(4))
            for n in range(40)
        ]
        np.testing.assert_allclose(tap_dot(w, win), manual, atol=1e-12)


class TestScenario:
    def _phase(self, n_taps=4, duration=10):
        return SystemPhase(w0=make_sparse_system(n_taps, 1, 1.0, "all-positive"), duration=duration)

    def test_invariants(self):
        with pytest.raises(ValueError):
            Scenario(n_taps=4, sigma_x2=0.0, sigma_v2=0.0, phases=(self._phase(),), ensemble=1, seed=0)
        with pytest.raises(ValueError):
            Scenario(n_taps=4, sigma_x2=1.0, sigma_v2=-1e-9, phases=(self._phase(),), ensemble=1, seed=0)
        with pytest.raises(ValueError):
            Scenario(n_taps=4, sigma_x2=1.0, sigma_v2=0.0, phases=(), ensemble=1, seed=0)
        with pytest.raises(ValueError):
            Scenario(n_taps=4, sigma_x2=1.0, sigma_v2=0.0, phases=(self._phase(),), ensemble=0, seed=0)
        with pytest.raises(ValueError):
            Scenario(n_taps=8, sigma_x2=1.0, sigma_v2=0.0, phases=(self._phase(n_taps=4),), ensemble=1, seed=0)

    def test_phase_bounds(self):
        sc = Scenario(
            n_taps=4,
            sigma_x2=1.0,
            sigma_v2=0.0,
            phases=(self._phase(duration=10), self._phase(duration=20)),
            ensemble=1,
            seed=0,
        )
        assert sc.total_iterations == 30
        assert sc.phase_bounds() == [(0, 10), (10, 30)]

    def test_equals(self):
        a = Scenario(n_taps=4, sigma_x2=1.0, sigma_v2=0.0, phases=(self._phase(),), ensemble=2, seed=9)
        b = Scenario(n_taps=4, sigma_x2=1.0, sigma_v2=0.0, phases=(self._phase(),), ensemble=2, seed=9)
        c = Scenario(n_taps=4, sigma_x2=1.0, sigma_v2=0.0, phases=(self._phase(),), ensemble=2, seed=10)
        assert a.equals(b)
        assert not a.equals(c)


class TestRealize:
    def _scenario(self, seed=13):
        phases = (
            SystemPhase(w0=make_sparse_system(3, 1, 1.0, "all-positive"), duration=6),
            SystemPhase(w0=make_sparse_system(3, 3, 1.0, "alternating"), duration=4),
        )
        return Scenario(n_taps=3, sigma_x2=1.0, sigma_v2=0.01, phases=phases, ensemble=4, seed=seed)

    def test_bit_identical_across_calls(self):
        sc = self._scenario()
        a = realize(sc, 2)
        b = realize(sc, 2)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.noise, b.noise)
        np.testing.assert_array_equal(a.d, b.d)

    def test_runs_draw_distinct_streams(self):
        sc = self._scenario()
        assert not np.array_equal(realize(sc, 0).x, realize(sc, 1).x)

    def test_observations_follow_phase_systems(self):
        sc = self._scenario()
        r = realize(sc, 1)
        win = tap_windows(r.x, 3)
        expected = np.concatenate(
            [
                tap_dot(sc.phases[0].w0, win[:6]),
                tap_dot(sc.phases[1].w0, win[6:]),
            ]
        ) + r.noise
        np.testing.assert_array_equal(r.d, expected)

    def test_run_rng_streams_are_stable(self):
        a = run_rng(77, 3).normal(size=8)
        b = run_rng(77, 3).normal(size=8)
        c = run_rng(77, 4).normal(size=8)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)
