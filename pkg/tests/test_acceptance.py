"""Acceptance checklist: one numbered criterion per test, timed where gated.

The two campaigns and the (40,5) tables are session-expensive fixtures shared
across criteria; everything else is built in place.  Each test records one
line for the summary block via the criterion fixture.
"""

import time

import numpy as np
import pytest
import scipy.stats

from bosoncert import distributions as dbn
from bosoncert import fock, sampling
from bosoncert.coarsegrain import assign_state, build_bubbles, coarse_grain
from bosoncert.distributions import load_distribution
from bosoncert.harness import CampaignConfig, run_campaign
from bosoncert.interferometer import (
    _as_unitary,
    evolve,
    haar_unitary,
    ion_chain,
    perturb_hamiltonian,
    perturb_timing,
    random_phase_unitary,
)
from bosoncert.permanent import permanent_naive, permanent_ryser
from bosoncert.seeds import stream
from bosoncert.stats import chi2_cutoff

from oracles import many_body_distribution

INPUT_40_5 = (1, 1, 1, 1, 1) + (0,) * 35


@pytest.fixture(scope="module")
def haar_tables():
    t0 = time.perf_counter()
    u = haar_unitary(40, seed=7)
    tq = dbn.boson_distribution(u, INPUT_40_5)
    td = dbn.distinguishable_distribution(u, INPUT_40_5)
    return tq, td, time.perf_counter() - t0


@pytest.fixture(scope="module")
def haar_campaign(tmp_path_factory):
    cfg = CampaignConfig.from_dict(
        {
            "system": {"kind": "haar", "m": 40, "seed": 7},
            "n": 5,
            "n_m": 10000,
            "n_s": 500,
            "targets": ["quantum2", "distinguishable", "uniform", "noisy:hamiltonian:0.01"],
            # 150 is an extra resolution row, not part of any gate
            "target_n_b": [26, 41, 70, 150],
            "alpha": 0.01,
            "master_seed": 11,
        }
    )
    outdir = tmp_path_factory.mktemp("haar_campaign")
    t0 = time.perf_counter()
    result = run_campaign(cfg, outdir, workers=1)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ion_campaign(tmp_path_factory):
    cfg = CampaignConfig.from_dict(
        {
            "system": {"kind": "ion", "m": 10, "freq_z_hz": 0.03e6,
                       "freq_x_hz": 4e6, "tau_s": 100e-6},
            "n": 10,
            "n_m": 10000,
            "n_s": 200,
            "targets": ["quantum2", "noisy:timing:0.03"],
            "target_n_b": [41],
            "alpha": 0.01,
            "master_seed": 13,
        }
    )
    return run_campaign(cfg, tmp_path_factory.mktemp("ion_campaign"), workers=1)


def test_01_state_space_dimensions(criterion):
    t0 = time.perf_counter()
    d1 = fock.hilbert_dim(40, 5)
    d2 = fock.hilbert_dim(12, 12)
    dt = time.perf_counter() - t0
    criterion(
        1,
        d1 == 1086008 and d2 == 1352078 and dt < 0.1,
        f"dim(40,5)={d1}, dim(12,12)={d2} in {dt * 1e6:.0f} us",
    )


def test_02_permanent_route_equivalence(criterion):
    rng = np.random.default_rng(2024)
    warm = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    permanent_ryser(warm), permanent_naive(warm)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 8))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        fast = permanent_ryser(a)
        slow = permanent_naive(a)
        worst = max(worst, abs(fast - slow) / abs(slow))
    dt = time.perf_counter() - t0
    criterion(2, worst < 1e-10 and dt < 1.0, f"500 matrices, rel err {worst:.1e}, {dt:.2f}s")


def test_03_exact_law_against_second_quantization(criterion):
    t0 = time.perf_counter()
    u = haar_unitary(6, seed=40)
    table = dbn.boson_distribution(u, (1, 1, 1, 0, 0, 0))
    oracle = many_body_distribution(u.u, (1, 1, 1, 0, 0, 0))
    worst = max(
        abs(table.probs[fock.rank(occ)] - p) for occ, p in oracle.items()
    )

    bs = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    hom = dbn.boson_distribution(_as_unitary(bs, "balanced splitter"), (1, 1))
    p11 = hom.probs[fock.rank((1, 1))]
    dt = time.perf_counter() - t0
    criterion(
        3,
        worst < 1e-8 and p11 < 1e-12 and dt < 1.0,
        f"(6,3) max dev {worst:.1e}, two-photon coincidence {p11:.1e}, {dt:.2f}s",
    )


def test_04_exact_laws_normalize(criterion, haar_tables):
    tq, td, dt = haar_tables
    dq = abs(float(tq.probs.sum()) - 1.0)
    dc = abs(float(td.probs.sum()) - 1.0)
    criterion(
        4,
        dq < 1e-9 and dc < 1e-9 and dt < 60.0,
        f"(40,5) sums off by {dq:.1e} and {dc:.1e}, swept in {dt:.1f}s",
    )


def test_05_generators_stay_unitary(criterion):
    def defect(interf):
        u = interf.u
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))

    t0 = time.perf_counter()
    chain = ion_chain(12, 2 * np.pi * 0.03e6, 2 * np.pi * 4e6)
    base = evolve(chain.hopping, 100e-6)
    cases = {
        "haar12": defect(haar_unitary(12, seed=1)),
        "haar40": defect(haar_unitary(40, seed=7)),
        "ion12": defect(base),
        "ham1%": defect(perturb_hamiltonian(base, 0.01, stream(5, 0, "ham"))),
        "timing3%": defect(perturb_timing(chain.hopping, 100e-6, 0.03)),
        "phase": defect(random_phase_unitary(chain.hopping, stream(5, 0, "ph"))),
    }
    dt = time.perf_counter() - t0
    worst = max(cases.values())
    criterion(5, worst < 1e-10 and dt < 1.0, f"worst defect {worst:.1e} over {len(cases)} generators, {dt:.2f}s")


def test_06_null_campaign_pass_rate(criterion, haar_campaign):
    result, dt = haar_campaign
    s = result.summaries[("quantum2", 41)]
    criterion(
        6,
        0.97 <= s["pass_rate"] <= 1.0 and dt < 600.0,
        f"same-law pass rate {100 * s['pass_rate']:.1f}% at {s['n_b_mean']:.1f} bins, "
        f"campaign {dt:.0f}s",
    )


def test_07_fraud_rejection_rates(criterion, haar_campaign):
    result, _ = haar_campaign
    uni = max(result.summaries[("uniform", t)]["pass_rate"] for t in (26, 41, 70))
    d26 = result.summaries[("distinguishable", 26)]["pass_rate"]
    d70 = result.summaries[("distinguishable", 70)]["pass_rate"]
    d150 = result.summaries[("distinguishable", 150)]["pass_rate"]
    nb70 = result.summaries[("distinguishable", 70)]["n_b_mean"]
    criterion(
        7,
        uni == 0.0 and d26 <= 0.10 and d70 <= 0.02,
        f"uniform {100 * uni:.1f}%, distinguishable {100 * d26:.1f}% @26 and "
        f"{100 * d70:.1f}% @70 (realised {nb70:.0f} bins; {100 * d150:.1f}% at the "
        f"150-target row)",
    )


def test_08_null_pvalue_moments(criterion, haar_campaign):
    result, _ = haar_campaign
    s = result.summaries[("quantum2", 41)]
    ok = abs(s["p_mean"] - 0.5) <= 0.03 and abs(s["p_std"] - 0.289) <= 0.03
    criterion(8, ok, f"p mean {s['p_mean']:.3f}, p std {s['p_std']:.3f} over 500 runs")


def test_09_statistic_distribution_shape(criterion, haar_campaign):
    result, _ = haar_campaign
    null = result.cells[("quantum2", 41)]
    df = int(round(result.summaries[("quantum2", 41)]["n_b_mean"])) - 1
    ks = scipy.stats.kstest([r.chi2 for r in null], scipy.stats.chi2(df).cdf)
    dist = result.cells[("distinguishable", 41)]
    exceed = float(np.mean([r.chi2 > chi2_cutoff(0.01, r.df) for r in dist]))
    criterion(
        9,
        ks.pvalue > 1e-3 and exceed >= 0.90,
        f"KS vs chi2({df}) p={ks.pvalue:.3f}; {100 * exceed:.1f}% of other-law runs "
        f"beat the 1% cutoff",
    )


def test_10_noise_sensitivity(criterion, haar_campaign, ion_campaign):
    result, _ = haar_campaign
    ham = result.summaries[("noisy:hamiltonian:0.01", 41)]["pass_rate"]
    null = ion_campaign.summaries[("quantum2", 41)]["pass_rate"]
    noisy = ion_campaign.summaries[("noisy:timing:0.03", 41)]["pass_rate"]
    criterion(
        10,
        ham >= 0.97 and null - noisy >= 0.10,
        f"1% generator noise passes {100 * ham:.1f}%; 3% timing noise drops "
        f"{100 * null:.1f}% -> {100 * noisy:.1f}% on the 10-ion chain",
    )


def test_11_raw_sample_overlap(criterion, haar_campaign):
    result, _ = haar_campaign
    table = load_distribution(result.outdir / "table_quantum.bsd")
    fids = []
    for k in range(50):
        a = sampling.draw_from_table(table, 10000, stream(17, k, "fa"))
        b = sampling.draw_from_table(table, 10000, stream(17, k, "fb"))
        fids.append(dbn.fidelity(a, b))
    mean = float(np.mean(fids))
    criterion(
        11,
        abs(mean - 0.039) <= 0.015,
        f"independent-sample fidelity {mean:.4f} +- {float(np.std(fids)):.4f} over 50 pairs",
    )


def test_12_partition_totality_and_conservation(criterion):
    u = haar_unitary(8, seed=7)
    table = dbn.boson_distribution(u, (1,) * 8)
    sample = sampling.draw_from_table(table, 10000, stream(19, 0, "s1"))
    part = build_bubbles(sample, 40)
    shape = table.shape

    labels = np.array(
        [assign_state(part, fock.unrank(r, shape.m, shape.n)) for r in range(shape.dim)]
    )
    total = labels.size == shape.dim and labels.min() >= 0 and labels.max() < part.n_bins
    sizes = np.bincount(labels, minlength=part.n_bins)
    folded = coarse_grain(part, sample)
    conserved = folded.masses.sum() == float(sample.n_m)
    fed = folded.masses.min() >= 10
    criterion(
        12,
        total and int(sizes.sum()) == shape.dim and conserved and fed,
        f"(8,8): {shape.dim} states over {part.n_bins} bins, counts sum "
        f"{folded.masses.sum():.0f}, smallest bin {folded.masses.min():.0f}",
    )


def test_13_campaign_determinism(criterion, tmp_path):
    cfg = {
        "system": {"kind": "haar", "m": 8, "seed": 3},
        "n": 2,
        "n_m": 1000,
        "n_s": 8,
        "targets": ["quantum2", "distinguishable"],
        "target_n_b": [6],
        "master_seed": 21,
    }
    a = run_campaign(CampaignConfig.from_dict(cfg), tmp_path / "a", workers=1)
    b = run_campaign(CampaignConfig.from_dict(cfg), tmp_path / "b", workers=1)
    same = (a.outdir / "report.json").read_bytes() == (b.outdir / "report.json").read_bytes()
    for rel in ("stats/quantum2@6.csv", "stats/distinguishable@6.csv", "unitary.json"):
        same = same and (a.outdir / rel).read_bytes() == (b.outdir / rel).read_bytes()
    criterion(13, same, "same master seed twice: report and per-run records byte-identical")
