import math

import numpy as np
import pytest

from remlab.conditions import (
    EventEstimate,
    check_sphere_condition,
    combined_search,
    estimate_event_ahat,
    estimate_event_mainassump,
    estimate_event_RE1,
    estimate_levy_event,
    gauss_condition_integrals,
    gauss_mixing_decay,
    levy_search_M,
    select_subsequence,
    sphere_mesh,
)
from remlab.env import (
    BrownianLaw,
    DeterministicLaw,
    Environment1D,
    JumpLaw,
    Kernel,
    LevyTriplet,
    product_environment,
    register_kernel,
    sample_brownian_2sided,
)
from remlab.sde import mollify


def abs_law(r):
    return DeterministicLaw(r=r, func=np.abs, label="abs")


class TestEventEstimates:
    def test_zero_law_fails_re1(self):
        est = estimate_event_RE1(DeterministicLaw(), 1.5, 1000, 0)
        assert est.successes == 0 and not est.positive

    @pytest.mark.parametrize("r, holds", [(1.2, True), (1.5, False)])
    def test_abs_law_re1(self, r, holds):
        # sup w(1, r^2) = r^2, inf w(0, 1) = 0, inf w(1, r^2) = 1: holds iff r^2 < 2
        est = estimate_event_RE1(abs_law(r), r, 1000, 0)
        assert est.p_hat == (1.0 if holds else 0.0)

    def test_abs_law_mainassump(self):
        r = 1.5
        est = estimate_event_mainassump(abs_law(r), r, 0.5, r * r + 1, 1000, 0)
        assert est.p_hat == 1.0

    def test_mainassump_precondition(self):
        with pytest.raises(ValueError):
            estimate_event_mainassump(BrownianLaw(), 1.5, 3.0, 3.0, 1000, 0)

    def test_min_trials(self):
        with pytest.raises(ValueError):
            estimate_event_RE1(BrownianLaw(), 1.5, 10, 0)

    def test_brownian_mainassump_positive(self):
        est = estimate_event_mainassump(BrownianLaw(), 1.5, 0.1, 3.0, 20_000, 0)
        assert est.positive

    def test_ahat_event(self):
        est = estimate_event_ahat(abs_law(1.2), 1.2, 0.5, 2.0, 1000, 0)
        assert est.p_hat == 1.0

    def test_wilson_intervals_shrink(self):
        law = BrownianLaw()
        small = estimate_event_mainassump(law, 1.5, 0.1, 3.0, 2000, 1)
        big = estimate_event_mainassump(law, 1.5, 0.1, 3.0, 20_000, 1)
        assert big.wilson_hi - big.wilson_lo < small.wilson_hi - small.wilson_lo
        assert max(small.wilson_lo, big.wilson_lo) < min(small.wilson_hi, big.wilson_hi)

    def test_worker_invariance(self):
        law = BrownianLaw()
        a = estimate_event_mainassump(law, 1.5, 0.1, 3.0, 9000, 3, chunk=1000, workers=1)
        b = estimate_event_mainassump(law, 1.5, 0.1, 3.0, 9000, 3, chunk=1000, workers=3)
        assert a.successes == b.successes

    def test_event_validation(self):
        with pytest.raises(ValueError):
            EventEstimate(10, 11, 0)

    def test_combined_search_on_abs_law(self):
        res = combined_search(abs_law(1.2), 1.2, 1000, 0)
        assert res.re1.p_hat == 1.0
        at, eps, b, est = res.found
        assert est.p_hat == 1.0 and b == pytest.approx(2 * float(at) - eps)


class TestLevy:
    def test_compound_poisson_oracle(self):
        tr = LevyTriplet(compound=((1.0, JumpLaw("fixed", 2.0)),))
        est = estimate_levy_event(tr, 1.0, 1.0, 20_000, 0)
        p = (1 - math.exp(-1)) ** 2
        assert abs(est.p_hat - p) < 3 * math.sqrt(p * (1 - p) / est.trials)
        assert est.warning is None

    def test_negative_jumps_warn(self):
        tr = LevyTriplet(compound=((1.0, JumpLaw("fixed", -2.0)),))
        est = estimate_levy_event(tr, 1.0, 1.0, 2000, 0)
        assert est.warning is not None and est.successes == 0

    def test_brownian_triplet(self):
        est = estimate_levy_event(LevyTriplet(stable_index=2.0), 3.0, 0.1, 20_000, 0)
        assert est.positive

    def test_search_M(self):
        tr = LevyTriplet(compound=((1.0, JumpLaw("fixed", 2.0)),), gaussian_var=1.0)
        out = levy_search_M(tr, 1.0, 2000, 0)
        assert [m for m, _ in out] == [1.0, 2.0, 4.0, 8.0]
        ps = [e.p_hat for _, e in out]
        assert ps == sorted(ps)


class TestKernelConditions:
    @pytest.mark.parametrize("r", [1.1, 1.5, 1.8, 2.0])
    def test_brox_closed_forms(self, r):
        res = gauss_condition_integrals("brox", r)
        assert res.sup_term == pytest.approx(r ** 4 / 2, rel=1e-6)
        assert abs(res.inf_inner) < 1e-12
        assert res.inf_annulus == pytest.approx(r * r - 0.5, rel=1e-6)
        assert res.holds == (r * r < 2 + math.sqrt(2))

    def test_brox_fails_at_1_9(self):
        sup_t, inf_i, inf_a, holds = gauss_condition_integrals("brox", 1.9).as_tuple()
        assert sup_t == pytest.approx(6.51605, rel=1e-6) and not holds

    def test_zero_kernel(self):
        assert gauss_condition_integrals("zero", 1.5).as_tuple() == (0.0, 0.0, 0.0, False)

    def test_brox_decay(self):
        rep = gauss_mixing_decay("brox", 1.5, 0.5)
        n = np.arange(rep.terms.size)
        assert np.allclose(rep.terms, 1.5 ** (-n / 2) * 1.5 ** (n + 1) / 1.5 ** n, rtol=1e-12)
        assert rep.holds

    def test_zero_decay(self):
        rep = gauss_mixing_decay("zero", 1.5, 0.5)
        assert np.all(rep.terms == 0) and rep.holds

    def test_growing_toy_kernel_fails(self):
        alpha = 0.5
        register_kernel(Kernel("toy_power", lambda x, y: np.abs(x) ** alpha + 0.0 * y, 1))
        rep = gauss_mixing_decay("toy_power", 1.5, alpha)
        assert np.allclose(rep.terms, rep.terms[0]) and not rep.holds


class TestSphere:
    def test_constant_components(self):
        # w = 1 everywhere, origin included, so the pinning check is relaxed
        one = Environment1D.from_function(lambda x: 1.0 + 0 * x, 3.0, 0.01, strict=False)
        res = check_sphere_condition(product_environment([one, one]), 1.5, 1.0, 64)
        assert res.holds and res.infimum == pytest.approx(2.0)

    def test_zero_component_fails(self):
        wx = Environment1D.from_function(np.abs, 3.0, 0.01)
        zero = Environment1D.from_function(lambda x: 0 * x, 3.0, 0.01)
        res = check_sphere_condition(product_environment([zero, wx]), 0.1, 1.0, 64)
        assert not res.holds and res.infimum == pytest.approx(0.0)
        assert np.allclose(np.abs(res.direction), [1.0, 0.0])

    def test_mesh_refinement(self):
        # a raw Brownian path has kinks at every node; the mesh infimum converges
        # at the stated rate once the environment is smooth on the mesh scale
        comps = [mollify(sample_brownian_2sided(s, 4.0, 0.01), 0.2) for s in (1, 2)]
        env = product_environment(comps)
        coarse = check_sphere_condition(env, 1.0, 2.0, 256)
        fine = check_sphere_condition(env, 1.0, 2.0, 2560)
        assert abs(coarse.infimum - fine.infimum) < 1e-3

    def test_mesh_shapes(self):
        assert sphere_mesh(1, 8).shape == (2, 1)
        assert sphere_mesh(2, 16).shape == (16, 2)
        pts = sphere_mesh(3, 10)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
        with pytest.raises(ValueError):
            sphere_mesh(2, 4)


class TestSubsequence:
    def test_zero_env_empty(self):
        env = Environment1D.from_function(lambda x: 0 * x, 40.0, 0.01)
        assert select_subsequence(env, 1.5, 0.5, 0.1, 3.0).indices == []

    def test_abs_fixed_point(self):
        # |x| is T-invariant for alpha = 1: every level or none
        env = Environment1D.from_function(np.abs, 40.0, 0.01)
        r = 1.5
        # inf over 1/r <= |x| <= r is 1/r > a/r; spread r - 0 < b/r iff b > r^2
        assert select_subsequence(env, r, 1.0, 0.5, 3.0).indices == list(range(1, 9))
        assert select_subsequence(env, r, 1.0, 0.5, 2.0).indices == []

    def test_relations_on_brownian(self):
        for seed in range(30):
            env = sample_brownian_2sided(seed, 40.0, 0.01)
            rep = select_subsequence(env, 1.5, 0.5, 0.1, 3.0)
            assert rep.all_relations_hold

    def test_extent_check(self):
        env = Environment1D.from_function(lambda x: 0 * x, 5.0, 0.01)
        with pytest.raises(ValueError):
            select_subsequence(env, 1.5, 0.5, 0.1, 3.0)
