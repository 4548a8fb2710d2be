import math

import numpy as np
import pytest
from scipy import stats

from cmhgibbs.distributions import DomainError, Gaussian1D, Uniform01
from cmhgibbs.models import NormalNormalModel, UnitSquareModel
from cmhgibbs.neighborhoods import NeighborhoodSpec, realize
from cmhgibbs.sampler import (
    ScanProbabilities,
    StateVector,
    StuckProposalError,
    acceptance_probability,
    cmh_step,
    cmh_move_mass,
    gibbs_step,
    gs_move_mass,
    restricted_proposal,
    run_chain,
    select_block,
)

NN = NormalNormalModel()


def test_state_vector_basics():
    s = StateVector.of((1.0, 2.0), 3.0)
    assert s.dims == (2, 1)
    assert np.array_equal(s.flat(), [1.0, 2.0, 3.0])
    t = s.replace(1, 4.0)
    assert np.array_equal(t.flat(), [1.0, 2.0, 4.0])
    assert np.array_equal(s.flat(), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        StateVector.of(math.nan)
    with pytest.raises(ValueError):
        s.replace(0, 1.0)


def test_scan_probabilities_validate():
    with pytest.raises(ValueError):
        ScanProbabilities((0.5, 0.6))
    with pytest.raises(ValueError):
        ScanProbabilities((0.0, 1.0))
    assert ScanProbabilities((1.0,)).p == (1.0,)


def test_select_block_inverse_cdf(pinned):
    p = ScanProbabilities((0.5, 0.5))
    assert select_block(p, pinned([0.25])) == 0
    assert select_block(p, pinned([0.75])) == 1
    assert all(select_block(ScanProbabilities((1.0,)), pinned([u])) == 0 for u in (0.0, 0.5, 0.999))


def test_select_block_frequencies():
    rng = np.random.default_rng(2)
    p = ScanProbabilities.uniform(3)
    counts = np.bincount([select_block(p, rng) for _ in range(10**6)], minlength=3) / 10**6
    assert np.all(np.abs(counts - 1 / 3) < 0.002)


def test_gibbs_step_examples(pinned):
    s0 = StateVector.of(0.0, 0.0)
    s, rec = gibbs_step(s0, NN, rng=pinned([0.5, 0.9]), block=0)
    assert np.array_equal(s.flat(), [0.0, 0.0])
    assert rec.accepted and rec.alpha == 1.0
    s, _ = gibbs_step(s0, NN, rng=pinned([0.975, 0.9]), block=0)
    assert s.flat()[0] == pytest.approx(1.959964, abs=1e-6) and s.flat()[1] == 0.0
    sq = StateVector.of(0.3, 0.8)
    s, _ = gibbs_step(sq, UnitSquareModel(), rng=pinned([0.42, 0.9]), block=1)
    assert np.array_equal(s.flat(), [0.3, 0.42])


def test_gibbs_step_touches_one_block():
    rng = np.random.default_rng(0)
    s = StateVector.of(1.0, -1.0)
    for _ in range(200):
        t, rec = gibbs_step(s, NN, rng=rng)
        other = 1 - rec.selected_block
        assert t.blocks[other][0] == s.blocks[other][0]
        s = t


def test_acceptance_probability_examples():
    assert acceptance_probability(0.3, 0.3) == 1.0
    assert acceptance_probability(0.2, 0.4) == 1.0
    assert acceptance_probability(0.4, 0.2) == pytest.approx(0.75)
    for bad in ((1.0, 0.2), (0.2, 1.0), (-0.1, 0.2)):
        with pytest.raises(DomainError):
            acceptance_probability(*bad)


def test_restricted_proposal_empty_takes_first_draw(pinned):
    nb = realize(NeighborhoodSpec.empty(), Uniform01(), 0.5)
    z, attempts = restricted_proposal(Uniform01(), nb, pinned([0.55]))
    assert attempts == 1 and z[0] == 0.55


def test_restricted_proposal_uniform_geometric_attempts():
    rng = np.random.default_rng(9)
    nb = realize(NeighborhoodSpec.interval(0.1), Uniform01(), 0.5)
    n = 10**6
    draws = np.empty(n)
    attempts = np.empty(n)
    for k in range(n):
        z, a = restricted_proposal(Uniform01(), nb, rng)
        draws[k], attempts[k] = z[0], a
    assert not np.any((draws > 0.4) & (draws < 0.6))
    assert abs(attempts.mean() - 1.25) < 0.01


def test_restricted_proposal_gaussian_ks():
    rng = np.random.default_rng(10)
    g = Gaussian1D(0.0, 1.0)
    nb = realize(NeighborhoodSpec.interval(0.5), g, 0.0)
    draws = np.array([restricted_proposal(g, nb, rng)[0][0] for _ in range(10**6)])
    mass = nb.mass

    def cdf(x):
        x = np.asarray(x)
        base = stats.norm.cdf(x)
        cut = np.clip(base, stats.norm.cdf(-0.5), stats.norm.cdf(0.5)) - stats.norm.cdf(-0.5)
        return (base - cut) / (1 - mass)

    assert stats.kstest(draws, cdf).statistic < 0.002


def test_stuck_proposal_is_reported():
    nb = realize(NeighborhoodSpec.interval(0.499), Uniform01(), 0.5)
    with pytest.raises(StuckProposalError) as err:
        restricted_proposal(Uniform01(), nb, np.random.default_rng(0), max_attempts=3)
    assert err.value.attempts == 3


def test_cmh_empty_matches_gibbs_stream_for_stream():
    a = np.random.default_rng(123)
    b = np.random.default_rng(123)
    s = t = NN.initial_state()
    for _ in range(2000):
        s, _ = gibbs_step(s, NN, rng=a)
        t, _ = cmh_step(t, NN, specs=NeighborhoodSpec.empty(), rng=b)
        assert s == t


def test_unit_square_exclusion_on_forced_block():
    rng = np.random.default_rng(1)
    spec = NeighborhoodSpec.interval(0.1)
    for _ in range(2000):
        s, rec = cmh_step(StateVector.of(0.5, 0.5), UnitSquareModel(), specs=spec, rng=rng, block=0)
        if rec.accepted:
            assert abs(s.flat()[0] - 0.5) >= 0.1


def test_cmh_q_always_accepts():
    rng = np.random.default_rng(4)
    s = NN.initial_state()
    for _ in range(5000):
        s, rec = cmh_step(s, NN, specs=NeighborhoodSpec.fixed_density(0.75), rng=rng)
        assert rec.alpha == 1.0 and rec.accepted


def test_rejection_leaves_state_identical():
    rng = np.random.default_rng(6)
    s = NN.initial_state()
    rejected = 0
    for _ in range(5000):
        t, rec = cmh_step(s, NN, specs=NeighborhoodSpec.interval(3.0, "sd"), rng=rng)
        if not rec.accepted:
            rejected += 1
            assert t is s or t == s
        else:
            realized = realize(NeighborhoodSpec.interval(3.0, "sd"), NN.conditional(rec.selected_block, s),
                               s.blocks[rec.selected_block])
            assert not realized.contains(rec.proposal)
        s = t
    assert rejected > 0


def test_run_chain_shape_and_determinism():
    p1, r1 = run_chain(NN, 500, np.random.default_rng(8), NeighborhoodSpec.interval(1.5, "sd"))
    p2, r2 = run_chain(NN, 500, np.random.default_rng(8), NeighborhoodSpec.interval(1.5, "sd"))
    assert p1.shape == (500, 2) and len(r1) == 499
    assert np.array_equal(p1, p2)
    assert np.array_equal(p1[0], [0.0, 0.0])


def test_move_masses_empty_neighborhood_agree():
    g = Gaussian1D(0.3, 1.0)
    assert cmh_move_mass(NeighborhoodSpec.empty(), g, 0.0, -0.5, 1.2) == pytest.approx(gs_move_mass(g, -0.5, 1.2), abs=1e-10)


def test_cmh_c_stationary_moments():
    from cmhgibbs import engine
    from mcse import batch_means_se

    path = engine.run_chain(NN, 10**6, np.random.default_rng(1500), NeighborhoodSpec.interval(1.5, "sd"),
                            record_path=True).path
    x1, x2 = path[:, 0], path[:, 1]
    assert abs(x1.mean()) < 4 * batch_means_se(x1)
    assert np.var(x1) == pytest.approx(2.0, rel=0.02)
    assert np.cov(x1, x2)[0, 1] == pytest.approx(1.0, rel=0.03)
