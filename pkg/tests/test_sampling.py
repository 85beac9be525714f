import numpy as np
import pytest
import scipy.stats

from bosoncert import distributions as dbn
from bosoncert import fock, sampling
from bosoncert.fock import ProblemShape
from bosoncert.interferometer import _as_unitary, haar_unitary
from bosoncert.seeds import stream
from bosoncert.stats import chi2_sf, chi2_two_sample


def fair_pair_table():
    shape = ProblemShape.create(2, 1)
    return dbn.OutcomeDistribution(shape=shape, probs=np.array([0.5, 0.5]), provenance="fair")


def test_point_mass_always_lands_on_the_same_rank():
    shape = ProblemShape.create(4, 2)
    probs = np.zeros(10)
    probs[7] = 1.0
    table = dbn.OutcomeDistribution(shape=shape, probs=probs, provenance="pm")
    for alias in (False, True):
        s = sampling.draw_from_table(table, 500, stream(1, 0, "pm"), alias=alias)
        assert s.ranks.tolist() == [7]
        assert s.counts.tolist() == [500]


def test_fair_pair_split_concentrates():
    s = sampling.draw_from_table(fair_pair_table(), 10**6, stream(2, 0, "fair"))
    assert s.ranks.tolist() == [0, 1]
    # 5 sigma on a fair binomial with sigma = 500
    assert abs(int(s.counts[0]) - 500000) <= 2500


def test_draws_are_reproducible_and_stream_keyed():
    table = fair_pair_table()
    a = sampling.draw_from_table(table, 1000, stream(3, 1, "x"))
    b = sampling.draw_from_table(table, 1000, stream(3, 1, "x"))
    c = sampling.draw_from_table(table, 1000, stream(3, 2, "x"))
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_both_draw_paths_pass_gof_against_the_table():
    u = haar_unitary(8, seed=31)
    table = dbn.boson_distribution(u, (1, 1, 1, 0, 0, 0, 0, 0))
    d = table.shape.dim
    for alias in (False, True):
        s = sampling.draw_from_table(table, 30000, stream(4, 0, "gof"), alias=alias)
        counts = np.zeros(d)
        counts[s.ranks] = s.counts
        # pool tail states so expected counts stay in chi-square territory
        order = np.argsort(table.probs)[::-1]
        head = order[:40]
        obs = np.append(counts[head], counts.sum() - counts[head].sum())
        exp = np.append(table.probs[head], 1.0 - table.probs[head].sum())
        exp = exp / exp.sum() * obs.sum()
        p = scipy.stats.chisquare(obs, exp).pvalue
        assert p > 1e-3


def test_gof_self_consistency_over_many_seeds():
    # one 1e4-event draw against its own source, 50 equal-mass bins,
    # alpha = 1e-3; the pass count over 1000 seeds sits near 999
    u = haar_unitary(10, seed=31)
    table = dbn.boson_distribution(u, (1, 1, 1, 1, 0, 0, 0, 0, 0, 0))
    bin_id = np.minimum((np.cumsum(table.probs) * 50).astype(np.int64), 49)
    mass = np.bincount(bin_id, weights=table.probs, minlength=50)
    passed = 0
    for seed in range(1000):
        s = sampling.draw_from_table(table, 10000, stream(1234, seed, "gof"))
        obs = np.bincount(bin_id[s.ranks], weights=s.counts.astype(float), minlength=50)
        exp = mass / mass.sum() * obs.sum()
        if scipy.stats.chisquare(obs, exp).pvalue > 1e-3:
            passed += 1
    assert passed >= 990


def test_direct_distinguishable_draws_match_the_table_law():
    # two-sample equivalence of the per-particle sampler and its exact table
    u = haar_unitary(6, seed=33)
    inp = (1, 1, 1, 0, 0, 0)
    table = dbn.distinguishable_distribution(u, inp)
    d = table.shape.dim
    passed = 0
    for k in range(500):
        direct = sampling.draw_distinguishable_direct(u, inp, 5000, stream(77, k, "direct"))
        tab = sampling.draw_from_table(table, 5000, stream(77, k, "table"))
        c1 = np.zeros(d)
        c2 = np.zeros(d)
        c1[direct.ranks] = direct.counts
        c2[tab.ranks] = tab.counts
        chi2, df = chi2_two_sample(c1, c2)
        if chi2_sf(chi2, df) > 1e-3:
            passed += 1
    assert passed >= 495


def test_direct_distinguishable_identity_returns_the_input():
    eye = _as_unitary(np.eye(5, dtype=complex), "id")
    inp = (0, 1, 0, 1, 0)
    s = sampling.draw_distinguishable_direct(eye, inp, 400, stream(5, 0, "id"))
    assert s.ranks.tolist() == [fock.rank(inp)]
    assert s.counts.tolist() == [400]


def test_direct_distinguishable_rejects_bunched_input():
    u = haar_unitary(3, seed=34)
    with pytest.raises(ValueError):
        sampling.draw_distinguishable_direct(u, (2, 0, 1), 10, stream(6, 0, "x"))


def test_uniform_draws_spread_like_birthdays():
    shape = ProblemShape.create(12, 12)
    s = sampling.draw_uniform(shape, 10000, stream(7, 0, "uni"))
    assert s.ranks.min() >= 0 and s.ranks.max() < shape.dim
    assert s.n_m == 10000
    # expected distinct draws ~ n - C(n,2)/D ~ 9963
    assert 9940 <= s.ranks.size <= 9985


def test_draw_count_validation():
    with pytest.raises(ValueError):
        sampling.draw_uniform(ProblemShape.create(3, 2), 0, stream(8, 0, "x"))
    with pytest.raises(ValueError):
        sampling.draw_from_table(fair_pair_table(), -5, stream(8, 0, "x"))


def test_from_rank_draws_aggregates_multiplicities():
    shape = ProblemShape.create(4, 2)
    s = sampling.from_rank_draws(shape, np.array([3, 1, 3, 0]), "p", "s")
    assert s.ranks.tolist() == [0, 1, 3]
    assert s.counts.tolist() == [1, 1, 2]
    assert s.n_m == 4


def test_sample_set_validation():
    shape = ProblemShape.create(3, 2)
    with pytest.raises(ValueError):
        sampling.SampleSet(shape, np.array([2, 1]), np.array([1, 1]), "p", "s")
    with pytest.raises(ValueError):
        sampling.SampleSet(shape, np.array([0, 1]), np.array([1, 0]), "p", "s")
    with pytest.raises(ValueError):
        sampling.SampleSet(shape, np.array([], dtype=np.int64), np.array([], dtype=np.int64), "p", "s")
    with pytest.raises(ValueError):
        sampling.SampleSet(shape, np.array([0, 6]), np.array([1, 1]), "p", "s")


def test_sample_states_unrank_correctly():
    shape = ProblemShape.create(3, 3)
    s = sampling.SampleSet(shape, np.array([0, 5]), np.array([2, 3]), "p", "s")
    assert s.states().tolist() == [[3, 0, 0], [1, 1, 1]]


def test_sample_csv_round_trip(tmp_path):
    table = fair_pair_table()
    s = sampling.draw_from_table(table, 1234, stream(9, 0, "rt"), seed_label="(9, 0, 'rt')")
    path = tmp_path / "s.csv"
    sampling.save_sample(path, s)
    back = sampling.load_sample(path)
    assert np.array_equal(back.ranks, s.ranks)
    assert np.array_equal(back.counts, s.counts)
    assert back.provenance == s.provenance
    assert back.seed == s.seed


def test_sample_loader_rejects_damage(tmp_path):
    table = fair_pair_table()
    s = sampling.draw_from_table(table, 100, stream(9, 0, "rt"))
    path = tmp_path / "s.csv"
    sampling.save_sample(path, s)

    sidecar = path.with_name(path.name + ".json")
    good = sidecar.read_text()
    sidecar.write_text(good.replace('"n_m": 100', '"n_m": 99'))
    with pytest.raises(ValueError):
        sampling.load_sample(path)
    sidecar.unlink()
    with pytest.raises(ValueError):
        sampling.load_sample(path)
    sidecar.write_text(good)

    body = path.read_text().splitlines()
    path.write_text("\n".join(["rank,weight"] + body[1:]) + "\n")
    with pytest.raises(ValueError):
        sampling.load_sample(path)
