import numpy as np
import pytest

from gclms import (
    Algorithm,
    DivergenceError,
    FilterParams,
    FilterState,
    gate,
    gc_lms_step,
    lms_step,
    make_sparse_system,
    realize,
    run_filter,
    sgn,
    static_scenario,
    step_fn,
    za_lms_step,
)


class TestSgn:
    def test_definition(self):
        np.testing.assert_array_equal(sgn([-3.2, 0.0, 7.7]), [-1.0, 0.0, 1.0])

    def test_all_zero(self):
        np.testing.assert_array_equal(sgn(np.zeros(5)), np.zeros(5))

    def test_no_epsilon_threshold(self):
        np.testing.assert_array_equal(sgn([1e-300]), [1.0])
        np.testing.assert_array_equal(sgn([-1e-300]), [-1.0])


class TestGate:
    def test_hand_example(self):
        np.testing.assert_array_equal(gate(0.1, [1.0, 1.0], [0.5, -0.2]), [0.0, 1.0])

    def test_zero_error_gives_halves(self):
        np.testing.assert_array_equal(
            gate(0.0, [2.0, -3.0, 0.5], [0.5, -0.2, 1.0]), [0.5, 0.5, 0.5]
        )

    def test_zero_weight_gives_half(self):
        np.testing.assert_array_equal(gate(1.0, [1.0], [0.0]), [0.5])

    def test_both_signs_zero_gives_zero(self):
        np.testing.assert_array_equal(gate(0.0, [1.0], [0.0]), [0.0])
        np.testing.assert_array_equal(gate(1.0, [0.0], [0.0]), [0.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            gate(0.1, [1.0, 2.0], [1.0, 2.0, 3.0])

    def test_domain_property(self):
        rng = np.random.default_rng(21)
        e = rng.normal(size=500)
        e[::7] = 0.0
        x = rng.normal(size=(500, 6))
        x[rng.random((500, 6)) < 0.1] = 0.0
        w = rng.normal(size=(500, 6))
        w[rng.random((500, 6)) < 0.1] = 0.0
        d = gate(e, x, w)
        assert np.isin(d, [0.0, 0.5, 1.0]).all()

    def test_selectivity_property(self):
        # Never attract a tap whose instantaneous gradient sign already
        # matches the weight sign.
        rng = np.random.default_rng(22)
        e = rng.normal(size=400)
        x = rng.normal(size=(400, 5))
        w = rng.normal(size=(400, 5))
        d = gate(e, x, w)
        grad_sgn = np.sign(e[:, None] * x)
        agree = (grad_sgn == np.sign(w)) & (grad_sgn != 0)
        assert (d[agree] == 0.0).all()


def _state(w):
    return FilterState(w=np.asarray(w, dtype=float), n=0)


class TestSteps:
    def test_lms_hand_example(self):
        params = FilterParams(mu=0.1, algorithm=Algorithm.LMS)
        rec = lms_step(_state([0.5, -0.2]), params, np.array([1.0, 1.0]), 0.4)
        np.testing.assert_allclose(rec.y, 0.3, atol=1e-15)
        np.testing.assert_allclose(rec.e, 0.1, atol=1e-15)
        np.testing.assert_allclose(rec.w_next, [0.51, -0.19], atol=1e-15)

    def test_lms_zero_error_keeps_weights(self):
        params = FilterParams(mu=0.1, algorithm=Algorithm.LMS)
        w = np.array([0.25, -1.5])
        rec = lms_step(_state(w), params, np.array([2.0, 1.0]), float(w @ [2.0, 1.0]))
        assert rec.e == 0.0
        np.testing.assert_array_equal(rec.w_next, w)

    def test_za_hand_example(self):
        params = FilterParams(mu=0.1, rho=0.01, algorithm=Algorithm.ZA_LMS)
        rec = za_lms_step(_state([0.5, -0.2]), params, np.array([1.0, 1.0]), 0.4)
        np.testing.assert_allclose(rec.w_next, [0.50, -0.18], atol=1e-15)

    def test_za_zero_weights_stay_put(self):
        params = FilterParams(mu=0.1, rho=0.01, algorithm=Algorithm.ZA_LMS)
        rec = za_lms_step(_state([0.0, 0.0]), params, np.array([1.0, -1.0]), 0.0)
        np.testing.assert_array_equal(rec.w_next, [0.0, 0.0])

    def test_gc_hand_example(self):
        params = FilterParams(mu=0.1, rho=0.01, algorithm=Algorithm.GC_LMS)
        rec = gc_lms_step(_state([0.5, -0.2]), params, np.array([1.0, 1.0]), 0.4)
        np.testing.assert_array_equal(rec.gate, [0.0, 1.0])
        np.testing.assert_allclose(rec.w_next, [0.51, -0.18], atol=1e-15)

    def test_rho_zero_reductions_are_bit_exact(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            w = rng.normal(size=4)
            x = rng.normal(size=4)
            d = rng.normal()
            base = lms_step(_state(w), FilterParams(mu=0.2, algorithm=Algorithm.LMS), x, d)
            za = za_lms_step(
                _state(w), FilterParams(mu=0.2, rho=0.0, algorithm=Algorithm.ZA_LMS), x, d
            )
            gc = gc_lms_step(
                _state(w), FilterParams(mu=0.2, rho=0.0, algorithm=Algorithm.GC_LMS), x, d
            )
            np.testing.assert_array_equal(base.w_next, za.w_next)
            np.testing.assert_array_equal(base.w_next, gc.w_next)

    def test_open_gate_matches_za(self):
        # e > 0 with x opposing w on every tap opens the whole gate.
        params_gc = FilterParams(mu=0.05, rho=0.02, algorithm=Algorithm.GC_LMS)
        params_za = FilterParams(mu=0.05, rho=0.02, algorithm=Algorithm.ZA_LMS)
        w = np.array([0.5, -0.4])
        x = np.array([-1.0, 1.0])
        d = float(w @ x) + 1.0
        rec_gc = gc_lms_step(_state(w), params_gc, x, d)
        np.testing.assert_array_equal(rec_gc.gate, [1.0, 1.0])
        rec_za = za_lms_step(_state(w), params_za, x, d)
        np.testing.assert_array_equal(rec_gc.w_next, rec_za.w_next)

    def test_attractor_bound_property(self):
        rng = np.random.default_rng(31)
        rho = 0.05
        for algorithm, step in (
            (Algorithm.ZA_LMS, za_lms_step),
            (Algorithm.GC_LMS, gc_lms_step),
        ):
            params = FilterParams(mu=0.1, rho=rho, algorithm=algorithm)
            params_lms = FilterParams(mu=0.1, algorithm=Algorithm.LMS)
            for _ in range(25):
                w = rng.normal(size=6)
                x = rng.normal(size=6)
                d = rng.normal()
                attracted = step(_state(w), params, x, d).w_next
                plain = lms_step(_state(w), params_lms, x, d).w_next
                assert np.max(np.abs(attracted - plain)) <= rho + 1e-15

    def test_attractor_alone_never_flips_large_taps(self):
        rng = np.random.default_rng(32)
        rho = 0.05
        for _ in range(25):
            w = rng.normal(size=6)
            g = gate(float(rng.normal()), rng.normal(size=6), w)
            shrunk = w - rho * g * sgn(w)
            big = np.abs(w) > rho
            assert (np.sign(shrunk[big]) == np.sign(w[big])).all()

    def test_batched_rows_match_scalar_steps(self):
        rng = np.random.default_rng(33)
        w = rng.normal(size=(3, 4))
        x = rng.normal(size=(3, 4))
        d = rng.normal(size=3)
        params = FilterParams(mu=0.1, rho=0.01, algorithm=Algorithm.GC_LMS)
        rec = gc_lms_step(_state(w), params, x, d)
        for r in range(3):
            single = gc_lms_step(_state(w[r]), params, x[r], float(d[r]))
            np.testing.assert_array_equal(rec.w_next[r], single.w_next)
            np.testing.assert_array_equal(rec.gate[r], single.gate)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            FilterParams(mu=0.0, algorithm=Algorithm.LMS)
        with pytest.raises(ValueError):
            FilterParams(mu=0.1, rho=-0.01, algorithm=Algorithm.ZA_LMS)
        with pytest.raises(ValueError):
            FilterParams(mu=float("inf"), algorithm=Algorithm.LMS)

    def test_algorithm_names(self):
        assert Algorithm.from_name("za-lms") is Algorithm.ZA_LMS
        assert Algorithm.from_name("zalms") is Algorithm.ZA_LMS
        assert Algorithm.from_name("gclms") is Algorithm.GC_LMS
        with pytest.raises(ValueError):
            Algorithm.from_name("nlms")
        assert step_fn(Algorithm.LMS) is lms_step


class TestRunFilter:
    def test_noiseless_convergence(self):
        scenario = static_scenario(1, duration=3000, ensemble=1, seed=101, sigma_v2=0.0)
        r = realize(scenario, 0)
        params = FilterParams(mu=0.05, algorithm=Algorithm.LMS)
        traj = run_filter(params, r)
        w0 = scenario.phases[0].w0
        assert float(np.sum((traj.w_final - w0) ** 2)) < 1e-10

    def test_fixed_point_is_exact(self):
        # Noiseless data at w = w0 gives e = 0 exactly, so plain LMS never
        # moves; the attractor variants would still fire at w0.
        scenario = static_scenario(2, duration=200, ensemble=1, seed=102, sigma_v2=0.0)
        r = realize(scenario, 0)
        w0 = scenario.phases[0].w0
        params = FilterParams(mu=0.05, algorithm=Algorithm.LMS)
        traj = run_filter(params, r, w_init=w0)
        np.testing.assert_array_equal(traj.e, np.zeros(200))
        np.testing.assert_array_equal(traj.w_final, w0)

    def test_attractor_moves_off_the_true_system(self):
        # With e = 0 and w = w0 the gate is 1/2 on active taps, so the gated
        # attractor leaves the true system; this is the bias the mean-limit
        # formula prices.
        scenario = static_scenario(2, duration=200, ensemble=1, seed=102, sigma_v2=0.0)
        r = realize(scenario, 0)
        w0 = scenario.phases[0].w0
        params = FilterParams(mu=0.05, rho=1e-3, algorithm=Algorithm.GC_LMS)
        traj = run_filter(params, r, w_init=w0)
        assert float(np.abs(traj.e).max()) > 0.0
        assert not np.array_equal(traj.w_final, w0)

    def test_rho_zero_trajectories_identical(self):
        scenario = static_scenario(1, duration=500, ensemble=1, seed=103)
        r = realize(scenario, 0)
        trajs = [
            run_filter(FilterParams(mu=0.05, rho=0.0, algorithm=alg), r)
            for alg in (Algorithm.LMS, Algorithm.ZA_LMS, Algorithm.GC_LMS)
        ]
        np.testing.assert_array_equal(trajs[0].e, trajs[1].e)
        np.testing.assert_array_equal(trajs[0].e, trajs[2].e)
        np.testing.assert_array_equal(trajs[0].w_final, trajs[1].w_final)
        np.testing.assert_array_equal(trajs[0].w_final, trajs[2].w_final)

    def test_snapshots_and_gates(self):
        scenario = static_scenario(1, duration=120, ensemble=1, seed=104)
        r = realize(scenario, 0)
        params = FilterParams(mu=0.05, rho=1e-3, algorithm=Algorithm.GC_LMS)
        traj = run_filter(params, r, snapshot_stride=50, record_gates=True)
        np.testing.assert_array_equal(traj.snapshot_iters, [0, 50, 100])
        assert traj.w_snapshots.shape == (3, scenario.n_taps)
        # Weights start at zero, and snapshots are taken before the update.
        np.testing.assert_array_equal(traj.w_snapshots[0], np.zeros(scenario.n_taps))
        assert traj.gates.shape == (120, scenario.n_taps)
        assert np.isin(traj.gates, [0.0, 0.5, 1.0]).all()
        np.testing.assert_array_equal(traj.sq_err, traj.e**2)

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    def test_divergence_carries_iteration(self):
        scenario = static_scenario(1, duration=400, ensemble=1, seed=5)
        r = realize(scenario, 1)
        params = FilterParams(mu=50.0, algorithm=Algorithm.LMS)
        with pytest.raises(DivergenceError) as info:
            run_filter(params, r)
        err = info.value
        assert isinstance(err.iteration, int)
        assert 0 <= err.iteration < 400
        assert "diverged at iteration" in str(err)


def test_sparse_identification_recovers_support():
    # End to end: the gated attractor identifies a sparse system from noisy
    # observations, zero taps landing well below the active one.
    scenario = static_scenario(1, duration=2000, ensemble=1, seed=105)
    r = realize(scenario, 0)
    params = FilterParams(mu=0.05, rho=5e-4, algorithm=Algorithm.GC_LMS)
    traj = run_filter(params, r)
    w0 = scenario.phases[0].w0
    active = np.flatnonzero(w0)
    zeros = np.flatnonzero(w0 == 0)
    assert np.abs(traj.w_final[active] - w0[active]).max() < 0.1
    assert np.abs(traj.w_final[zeros]).max() < 0.05
