import numpy as np
import pytest

from obfgame import (
    GameParams,
    MfgRegime,
    NoiseProfile,
    ResponseKind,
    best_response,
    best_response_oracle,
    br_curve,
    cascade_simulate,
    fixed_point_check,
    gamma,
    mfg_equilibria,
    user_utility,
)
from obfgame.mfg import _user_utility_grid


def make_params(**overrides):
    base = dict(A_L=2.0, C_L=1.0, A_S=1.0, P_S=2.0, C_S=1.0,
                rho=1.0, N=100, M=50.0)
    base.update(overrides)
    return GameParams(**base)


# Bistable worked example: at sigma_L=1 both all-zero and all-M are fixed
# points, and a one-percent seed tips the population over.
BISTABLE = dict(A_S=1.0, C_S=0.2, P_S=1.8, rho=1.0, N=100, M=100.0)


class TestBestResponse:
    def test_low_pressure_abstains(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0)
        resp = best_response(params, 0.0, 0.0)
        assert resp.kind is ResponseKind.ZERO
        assert resp.value_set == (0.0, 0.0)

    def test_high_pressure_obfuscates(self):
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0)
        resp = best_response(params, 0.0, 0.0)
        assert resp.kind is ResponseKind.MAX
        assert resp.value_set == (params.M, params.M)

    def test_exact_tie_is_indifferent(self):
        # at sigma_L = 0 pressure is exactly P_S and the abstain value is
        # exactly A_S + C_S
        params = make_params(A_S=1.0, P_S=2.0, C_S=1.0)
        resp = best_response(params, 0.0, 0.0)
        assert resp.kind is ResponseKind.INDIFFERENT
        assert resp.value_set == (0.0, params.M)

    def test_at_most_one_transition_in_crowd_level(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            params = make_params(
                A_S=rng.uniform(0.3, 2.0), P_S=rng.uniform(0.2, 5.0),
                C_S=rng.uniform(0.0, 1.5), rho=rng.uniform(0.5, 2.0),
                N=int(rng.integers(2, 500)), M=rng.uniform(5.0, 80.0))
            sigma_L = rng.uniform(0.0, params.M)
            kinds = [best_response(params, sigma_L, float(s)).kind
                     for s in np.linspace(0, params.M, 101)]
            # Zero* -> Indifferent* -> Max*: no regression to an earlier stage
            stage = {ResponseKind.ZERO: 0, ResponseKind.INDIFFERENT: 1,
                     ResponseKind.MAX: 2}
            stages = [stage[k] for k in kinds]
            assert stages == sorted(stages)


class TestBestResponseOracle:
    def test_abstain_regime(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0, N=1, M=10.0)
        assert list(best_response_oracle(params, 0.0, 0.0, 10_000)) == [0.0]

    def test_obfuscation_regime(self):
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0, N=1, M=10.0)
        assert list(best_response_oracle(params, 0.0, 0.0, 10_000)) == [10.0]

    def test_interior_optimum_flags_approximation_violation(self):
        # cheap own noise (large N) plus live accuracy value: partial
        # obfuscation beats both corners, disagreeing with the corner rule
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0, N=100, M=200.0)
        points = best_response_oracle(params, 0.0, 0.0, 10_000)
        assert best_response(params, 0.0, 0.0).kind is ResponseKind.MAX
        assert all(0.0 < p < params.M for p in points)

    def test_matches_scalar_utility(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            params = make_params(
                A_S=rng.uniform(0.3, 2.0), P_S=rng.uniform(0.2, 5.0),
                C_S=rng.uniform(0.0, 1.5), N=int(rng.integers(1, 300)))
            sigma_L = rng.uniform(0, params.M)
            sigma_bar = rng.uniform(0, params.M)
            grid = rng.uniform(0, params.M, size=9)
            vec = _user_utility_grid(params, sigma_L, sigma_bar, grid)
            scalar = [user_utility(params, NoiseProfile(sigma_L, sigma_bar, s))
                      for s in grid]
            assert np.allclose(vec, scalar, rtol=1e-12, atol=1e-15)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            best_response_oracle(make_params(), 0.0, 0.0, 1)


class TestMfgEquilibria:
    def test_no_obfuscation_regime(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0, N=100, M=5.0)
        eq = mfg_equilibria(params, 0.0)
        assert eq.regime is MfgRegime.NO_OBFUSCATION
        assert eq.equilibria == (0.0,)
        assert eq.selected == 0.0

    def test_bistable_selects_zero(self):
        params = make_params(**BISTABLE)
        eq = mfg_equilibria(params, 1.0)
        assert eq.regime is MfgRegime.BISTABLE
        assert eq.equilibria == (0.0, params.M)
        assert eq.selected == 0.0

    def test_full_obfuscation(self):
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0, M=100.0)
        eq = mfg_equilibria(params, 0.0)
        assert eq.regime is MfgRegime.FULL_OBFUSCATION
        assert eq.equilibria == (params.M,)
        assert eq.selected == params.M

    def test_every_equilibrium_is_a_fixed_point(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            params = make_params(
                A_S=rng.uniform(0.3, 2.0), P_S=rng.uniform(0.2, 5.0),
                C_S=rng.uniform(0.0, 1.5), rho=rng.uniform(0.5, 2.0),
                N=int(rng.integers(1, 500)), M=rng.uniform(5.0, 80.0))
            sigma_L = rng.uniform(0.0, params.M)
            eq = mfg_equilibria(params, sigma_L)
            assert eq.selected in eq.equilibria
            for point in eq.equilibria:
                assert fixed_point_check(params, sigma_L, point)


class TestGamma:
    def test_status_quo_promise_free(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0)
        assert gamma(params, 0.0) == 0.0

    def test_high_surplus_triggers_obfuscation(self):
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0)
        assert gamma(params, 0.0) == params.M

    def test_promise_at_tau_hat_deters(self):
        from obfgame import tau_hat

        params = make_params(A_S=0.5, P_S=2.0, C_S=1.0)
        assert gamma(params, tau_hat(params)) == 0.0

    def test_single_downward_jump(self):
        params = make_params(A_S=0.5, P_S=2.0, C_S=1.0)
        values = [gamma(params, float(s))
                  for s in np.linspace(0, params.M, 500)]
        drops = sum(1 for a, b in zip(values, values[1:]) if b < a)
        assert values[0] == params.M and values[-1] == 0.0 and drops == 1


class TestFixedPointCheck:
    def test_max_is_not_fixed_in_abstain_regime(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0, N=100, M=5.0)
        assert not fixed_point_check(params, 0.0, params.M)

    def test_indifference_accepts_anything(self):
        # with N=1 the crowd term vanishes, so the tie P_S == A_S + C_S makes
        # the user indifferent at every crowd level
        params = make_params(A_S=1.0, P_S=2.0, C_S=1.0, N=1)
        for sigma_bar in (0.0, 12.3, params.M):
            assert fixed_point_check(params, 0.0, sigma_bar)


class TestCascade:
    def test_abstain_regime_collapses_from_any_seed(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0, N=100, M=5.0)
        trace = cascade_simulate(params, 0.0, 0.5, rng_seed=3, max_rounds=20)
        assert trace.converged
        assert trace.adoption_fraction[-1] == 0.0
        assert trace.final_mean_variance == 0.0

    def test_bistable_seed_tips_the_population(self):
        params = make_params(**BISTABLE)
        up = cascade_simulate(params, 1.0, 0.01, rng_seed=1, max_rounds=20)
        assert up.converged and up.adoption_fraction[-1] == 1.0
        down = cascade_simulate(params, 1.0, 0.0, rng_seed=1, max_rounds=20)
        assert down.converged and down.adoption_fraction[-1] == 0.0

    def test_full_obfuscation_in_one_pass(self):
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0, M=100.0)
        trace = cascade_simulate(params, 0.0, 0.0, rng_seed=0, max_rounds=20)
        assert trace.converged
        assert trace.adoption_fraction[1] == 1.0

    def test_absorbing_states_are_never_left(self):
        params = make_params(**BISTABLE)
        stay_up = cascade_simulate(params, 1.0, 1.0, rng_seed=5, max_rounds=10)
        assert stay_up.adoption_fraction == [1.0, 1.0]
        stay_down = cascade_simulate(params, 1.0, 0.0, rng_seed=5, max_rounds=10)
        assert stay_down.adoption_fraction == [0.0, 0.0]

    def test_sync_schedule_converges_too(self):
        params = make_params(**BISTABLE)
        trace = cascade_simulate(params, 1.0, 0.01, schedule="sync",
                                 rng_seed=0, max_rounds=20)
        assert trace.converged and trace.adoption_fraction[-1] == 1.0

    def test_deterministic_given_seed(self):
        params = make_params(**BISTABLE)
        a = cascade_simulate(params, 1.0, 0.3, rng_seed=17, max_rounds=20)
        b = cascade_simulate(params, 1.0, 0.3, rng_seed=17, max_rounds=20)
        assert a.adoption_fraction == b.adoption_fraction
        assert all(np.array_equal(x, y) for x, y in zip(a.rounds, b.rounds))

    def test_converged_means_last_two_rounds_identical(self):
        params = make_params(**BISTABLE)
        trace = cascade_simulate(params, 1.0, 0.01, rng_seed=1, max_rounds=20)
        assert np.array_equal(trace.rounds[-1], trace.rounds[-2])

    def test_non_convergence_is_flagged_not_raised(self):
        params = make_params(**BISTABLE)
        trace = cascade_simulate(params, 1.0, 0.01, rng_seed=1, max_rounds=1)
        assert not trace.converged

    def test_rejects_bad_arguments(self):
        params = make_params()
        with pytest.raises(ValueError):
            cascade_simulate(params, 0.0, 1.5)
        with pytest.raises(ValueError):
            cascade_simulate(params, 0.0, 0.5, max_rounds=0)
        with pytest.raises(ValueError):
            cascade_simulate(params, 0.0, 0.5, schedule="wave")


class TestBrCurve:
    def test_abstain_everywhere(self):
        params = make_params(A_S=1.0, P_S=1.5, C_S=1.0, N=100, M=5.0)
        curve = br_curve(params, 0.0, 50)
        assert all(r.kind is ResponseKind.ZERO for _, r in curve)

    def test_switching_curve(self):
        params = make_params(**BISTABLE)
        kinds = [r.kind for _, r in br_curve(params, 1.0, 200)]
        assert kinds[0] is ResponseKind.ZERO
        assert kinds[-1] is ResponseKind.MAX
        transitions = sum(1 for a, b in zip(kinds, kinds[1:]) if a is not b)
        assert transitions <= 2  # Zero -> (Indifferent) -> Max

    def test_obfuscate_everywhere(self):
        params = make_params(A_S=1.0, P_S=4.0, C_S=1.0, M=100.0)
        curve = br_curve(params, 0.0, 50)
        assert all(r.kind is ResponseKind.MAX for _, r in curve)

    def test_two_points_minimum(self):
        assert len(br_curve(make_params(), 0.0, 2)) == 2
        with pytest.raises(ValueError):
            br_curve(make_params(), 0.0, 1)
