import math

import numpy as np
import pytest

import saddlescape as ss
from saddlescape import (GdConfig, Landscape, LandscapeParams, NoiseConfig,
                         Outcome, RegionKind)


@pytest.fixture(scope="module")
def lc():
    return Landscape(LandscapeParams(n_saddles=5))


# --- initialization ---------------------------------------------------------------

def test_init_sample_band(lc):
    cap = lc.params.tau / (2 * math.e**2)
    rng = np.random.default_rng(0)
    for _ in range(500):
        p = ss.init_sample(lc, rng)
        rid = lc.classify(p)
        assert rid.kind is RegionKind.ODD_BLOCK and rid.index == 1
        d1 = abs(p[0] - 0.5)
        assert 0.0 < d1 <= cap
        assert 0.0 <= p[1] <= 1.0


def test_init_sample_reproducible(lc):
    a = ss.init_sample(lc, np.random.default_rng(99))
    b = ss.init_sample(lc, np.random.default_rng(99))
    assert a == b


# --- single steps ------------------------------------------------------------------

def test_gd_step_escape_growth_factor(lc):
    # dyadic offset: (1 + 2*eta*gamma) = 1.25 applies exactly
    d = 2.0 ** -4
    p = (0.5 + d, 0.25)
    q = ss.gd_step(lc, p, 0.25)
    assert q[0] - 0.5 == 1.25 * d


def test_gd_step_cross_contraction(lc):
    d = 2.0 ** -3
    p = (0.75, 0.5 + d)
    q = ss.gd_step(lc, p, 0.25)
    assert q[1] - 0.5 == 0.5 * d


def test_gd_step_wrong_side_reflection_example(lc):
    q = ss.gd_step(lc, (0.25, 0.5), 0.25)
    assert q == (0.75, 0.5)


def test_reflection_preserves_distance_bitwise_in_one_binade():
    # block 3 spans [2,3]^2, inside the binade [2,4): the mirror value is
    # always representable, so one wrong-side step is an exact reflection
    lc9 = Landscape(LandscapeParams(n_saddles=9))
    rng = np.random.default_rng(5)
    for _ in range(500):
        x1 = 2.0 + 0.5 * rng.random()
        if x1 == 2.5:
            continue
        x2 = 2.5 + 0.02 * (rng.random() - 0.5)
        q = ss.gd_step(lc9, (x1, x2), 0.25)
        assert abs(q[0] - 2.5) == abs(x1 - 2.5)
        assert q[0] > 2.5


def test_gd_step_outside_raises(lc):
    with pytest.raises(ss.OutsideDomainError):
        ss.gd_step(lc, (-1.0, 0.0), 0.25)


# --- projection ------------------------------------------------------------------------

def test_project_identity_on_domain(lc, rng):
    for p in lc.sample_points(200, rng):
        assert ss.project_to_domain(lc, tuple(p)) == tuple(p)


def test_project_examples(lc):
    assert ss.project_to_domain(lc, (-0.3, 0.5)) == (0.0, 0.5)
    assert ss.project_to_domain(lc, (1.5, -0.2)) == (1.5, 0.0)


def test_project_is_nearest_point(lc, rng):
    # oracle: no sampled point of D may be closer than the projection
    samples = lc.sample_points(20_000, rng)
    span = (lc.params.n_saddles + 2) * lc.params.tau
    for _ in range(50):
        p = (rng.uniform(-2, span), rng.uniform(-2, span))
        q = ss.project_to_domain(lc, p)
        assert not lc.classify(q).is_outside
        dq = math.hypot(q[0] - p[0], q[1] - p[1])
        dist = np.hypot(samples[:, 0] - p[0], samples[:, 1] - p[1])
        assert dq <= dist.min() + 1e-12


# --- noisy steps -------------------------------------------------------------------------

def test_sgd_step_zero_variance_is_gd(lc):
    p = (0.6, 0.4)
    q = ss.sgd_step(lc, p, 0.25, NoiseConfig(variance=0.0), np.random.default_rng(0))
    assert q == ss.gd_step(lc, p, 0.25)


def test_sgd_step_reproducible(lc):
    p = (0.6, 0.4)
    a = ss.sgd_step(lc, p, 0.25, NoiseConfig(variance=0.1), np.random.default_rng(3))
    b = ss.sgd_step(lc, p, 0.25, NoiseConfig(variance=0.1), np.random.default_rng(3))
    assert a == b


def test_sgd_noise_statistics():
    # the raw kick generator, before projection clips anything
    from saddlescape.descent import _perturb
    rng = np.random.default_rng(11)
    noise = NoiseConfig(variance=0.1)
    n = 10_000
    kicks = np.array([_perturb((0.0, 0.0), noise, 0.25, rng) for _ in range(n)])
    sigma = math.sqrt(0.1)
    assert np.all(np.abs(kicks.mean(axis=0)) <= 3 * sigma / math.sqrt(n))
    assert np.all(np.abs(kicks.var(axis=0) - 0.1) <= 0.05 * 0.1)


def test_sgd_step_is_projected_perturbed_gd(lc):
    # replaying the same rng shows sgd_step == project(gd_step + kick)
    from saddlescape.descent import _perturb
    p = (2.5, 2.5)
    noise = NoiseConfig(variance=0.1)
    base = ss.gd_step(lc, p, 0.25)
    for seed in range(50):
        q = ss.sgd_step(lc, p, 0.25, noise, np.random.default_rng(seed))
        raw = _perturb(base, noise, 0.25, np.random.default_rng(seed))
        assert q == ss.project_to_domain(lc, raw)


def test_noise_scale_by_eta_flag():
    from saddlescape.descent import _perturb
    a = _perturb((0.0, 0.0), NoiseConfig(variance=0.1), 0.25,
                 np.random.default_rng(1))
    b = _perturb((0.0, 0.0), NoiseConfig(variance=0.1, scale_by_eta=True), 0.25,
                 np.random.default_rng(1))
    assert b == (0.25 * a[0], 0.25 * a[1])


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(variance=-0.1)


# --- full runs ------------------------------------------------------------------------------

def test_run_from_saddle_center_stalls_immediately(lc):
    traj = ss.run(lc, GdConfig(), (0.5, 0.5))
    assert traj.outcome is Outcome.STALLED
    assert traj.total_steps == 0
    assert traj.iterates[-1].event is ss.Event.STALLED
    assert traj.iterates[-1].grad_norm == 0.0


def test_run_single_saddle_reaches_minimum():
    lc1 = Landscape(LandscapeParams(n_saddles=1))
    start = ss.init_sample(lc1, np.random.default_rng(0))
    traj = ss.run(lc1, GdConfig(), start)
    assert traj.outcome is Outcome.REACHED_MINIMUM
    assert traj.total_steps < 300
    assert traj.iterates[-1].region.kind is RegionKind.FINAL_BLOCK
    assert traj.iterates[-1].event is ss.Event.CONVERGED


def test_run_matches_bruteforce_loop():
    # oracle: drive the same start by hand with raw gradient steps
    lc1 = Landscape(LandscapeParams(n_saddles=1))
    start = ss.init_sample(lc1, np.random.default_rng(1))
    traj = ss.run(lc1, GdConfig(), start)

    x = start
    for _ in range(10_000):
        g = lc1.gradient(x)
        if (lc1.classify(x).kind is RegionKind.FINAL_BLOCK
                and math.hypot(*g) <= 1e-10):
            break
        x = (x[0] - 0.25 * g[0], x[1] - 0.25 * g[1])
    assert traj.iterates[-1].position == x


def test_run_budget_outcome(lc):
    start = ss.init_sample(lc, np.random.default_rng(0))
    traj = ss.run(lc, GdConfig(max_iter=5), start)
    assert traj.outcome is Outcome.BUDGET
    assert traj.total_steps == 5


def test_run_start_outside_raises(lc):
    with pytest.raises(ss.OutsideDomainError):
        ss.run(lc, GdConfig(), (-5.0, 0.0))


def test_run_escaping_domain_raises(lc):
    # absurd step size breaks containment and must be reported, not hidden
    start = ss.init_sample(lc, np.random.default_rng(0))
    with pytest.raises(ss.OutsideDomainError):
        ss.run(lc, GdConfig(eta=50.0), start)


def test_observer_sees_everything_thinning_keeps_events(lc):
    start = ss.init_sample(lc, np.random.default_rng(2))
    seen = []
    traj = ss.run(lc, GdConfig(record_every=7), start, observer=seen.append)
    assert len(seen) == traj.total_steps + 1
    assert [it.t for it in seen] == list(range(traj.total_steps + 1))
    kept = {it.t for it in traj.iterates}
    for it in seen:
        if it.event is not None or it.t % 7 == 0 or it.t == traj.total_steps:
            assert it.t in kept
    # recorded iterates are exactly the kept subset, in order
    assert [it.t for it in traj.iterates] == sorted(kept)


def test_run_deterministic(lc):
    start = ss.init_sample(lc, np.random.default_rng(3))
    a = ss.run(lc, GdConfig(), start, noise=NoiseConfig(variance=0.1, seed=4))
    b = ss.run(lc, GdConfig(), start, noise=NoiseConfig(variance=0.1, seed=4))
    assert a.iterates == b.iterates and a.outcome == b.outcome


def test_gd_invariants_over_seeds(lc):
    # containment, monotone chain progress, and weak descent on valid inits
    for seed in range(10):
        start = ss.init_sample(lc, np.random.default_rng(seed))
        traj = ss.run(lc, GdConfig(), start)
        prev = None
        for it in traj.iterates:
            assert not it.region.is_outside
            assert it.event is not ss.Event.PROJECTED
            if prev is not None:
                assert it.region.order >= prev.region.order
                if it.t == prev.t + 1:
                    assert it.region.order - prev.region.order <= 1
                    assert it.f_value <= prev.f_value
            prev = it


def test_sgd_run_reaches_final_block():
    lc9 = Landscape(LandscapeParams(n_saddles=9))
    start = ss.init_sample(lc9, np.random.default_rng(0))
    traj = ss.run(lc9, GdConfig(stop_grad_norm=0.5, max_iter=100_000), start,
                  noise=NoiseConfig(variance=0.1, seed=0))
    assert traj.outcome is Outcome.REACHED_MINIMUM
    assert traj.iterates[-1].region.kind is RegionKind.FINAL_BLOCK


def test_config_validation():
    with pytest.raises(ValueError):
        GdConfig(eta=-0.1)
    with pytest.raises(ValueError):
        GdConfig(max_iter=0)
    with pytest.raises(ValueError):
        GdConfig(record_every=0)
