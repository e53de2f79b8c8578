"""ASE, SNR, sensitivity thresholds and maximum reach."""

import math

import mpmath
import numpy as np
import pytest
from scipy.constants import h as PLANCK_J_S

from conftest import make_single_channel_link, make_system
from nli_planner import assets
from nli_planner.cfm import rx_nli_psd
from nli_planner.perf import (ReachResult, SensitivityPolicy, UnreachableError,
                              ase_power, cut_rx_power, evaluate_all_channels,
                              max_reach, max_reach_scan, nli_power_cfm,
                              shannon_sensitivity, snr, snr_report)
from nli_planner.types import CfmKind, LinkSpec, ModulationFormat

mpmath.mp.dps = 40


def test_ase_power_single_span_vs_mpmath():
    # [DERIVED] NF * h * f * (G - 1) * R for one transparent span.
    link = make_single_channel_link(n_spans=1, length_km=100.0)
    span = link.spans[0]
    gain = mpmath.mpf(10) ** (mpmath.mpf(repr(
        span.fiber.alpha_db_per_km * span.length_km)) / 10)
    nf = mpmath.mpf(10) ** mpmath.mpf("0.6")
    f_hz = mpmath.mpf("193.8e12")
    r_hz = mpmath.mpf("0.064e12")
    expected = nf * mpmath.mpf(repr(PLANCK_J_S)) * f_hz * (gain - 1) * r_hz
    assert ase_power(link, 1) == pytest.approx(float(expected), rel=1e-10)


def test_ase_power_accumulates_with_propagation():
    link = make_single_channel_link(n_spans=3)
    # Transparent spans: every amplifier's noise propagates with unit net
    # gain, so the total is the sum of the per-span contributions.
    one = ase_power(link, 1)
    assert ase_power(link, 3) == pytest.approx(3 * one, rel=1e-10)


def test_ase_power_ignores_gain_below_unity():
    link = make_single_channel_link(n_spans=1)
    spans = (link.spans[0].__class__(fiber=link.spans[0].fiber,
                                     length_km=100.0, gain_db=-3.0),)
    lossy = LinkSpec(spans=spans, combs=link.combs, cut_index=0)
    assert ase_power(lossy, 1) == 0.0


def test_ase_power_rejects_zero_spans():
    link = make_single_channel_link()
    with pytest.raises(ValueError):
        ase_power(link, 0)


def test_cut_rx_power_transparent():
    link = make_single_channel_link(n_spans=2, power_w=0.003)
    # Transparent spans return the launch power of the last span.
    assert cut_rx_power(link, 2) == pytest.approx(0.003, rel=1e-12)


def test_nli_power_flat_psd():
    assert nli_power_cfm(2.5e-4, 0.064) == pytest.approx(1.6e-5)


def test_snr_matches_components():
    link = make_system(31)
    variant = assets.model(CfmKind.CFM2)
    n = link.n_spans
    p_ase = ase_power(link, n)
    p_nli = rx_nli_psd(link, variant, n) * link.cut.symbol_rate
    expected = 10 * math.log10(cut_rx_power(link, n) / (p_ase + p_nli))
    assert snr(link, variant, n) == pytest.approx(expected, rel=1e-12)


def test_snr_report_consistency():
    link = make_system(32)
    variant = assets.model(CfmKind.CFM1)
    rep = snr_report(link, variant)
    assert len(rep.per_span_snr_db) == link.n_spans
    for n in range(1, link.n_spans + 1):
        assert rep.per_span_snr_db[n - 1] == pytest.approx(
            snr(link, variant, n), rel=1e-12)
    # SNR decreases with distance on a homogeneous-power link.
    assert all(a > b for a, b in zip(rep.per_span_snr_db,
                                     rep.per_span_snr_db[1:]))


def test_shannon_sensitivity_formula():
    # [DERIVED] dual-polarization capacity inversion: SNR = 2^(MI/2) - 1.
    lo, hi = assets.gaussian_mi_range()
    for mi in (lo, 10.0, hi):
        expected = 10 * math.log10(2 ** (mi / 2) - 1)
        assert shannon_sensitivity(mi) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        shannon_sensitivity(lo - 0.1)
    with pytest.raises(ValueError):
        shannon_sensitivity(hi + 0.1)


def test_gaussian_mi_range_anchors():
    # [PAPER] the MI interval spans 87% of the entropy of the 16 and 256
    # point constellations at two polarizations.
    lo, hi = assets.gaussian_mi_range()
    assert lo == pytest.approx(0.87 * 2 * 4)
    assert hi == pytest.approx(0.87 * 2 * 8)


def test_qam_thresholds_table():
    # [PAPER] frozen sensitivity thresholds (dB).
    expected = {
        ModulationFormat.PM_QPSK: 5.18,
        ModulationFormat.PM_8QAM: 9.30,
        ModulationFormat.PM_16QAM: 11.48,
        ModulationFormat.PM_32QAM: 14.45,
        ModulationFormat.PM_64QAM: 17.00,
        ModulationFormat.PM_128QAM: 19.71,
        ModulationFormat.PM_256QAM: 22.33,
    }
    table = assets.qam_thresholds_db()
    for fmt, val in expected.items():
        assert table[fmt] == pytest.approx(val, abs=1e-12)


def test_policy_thresholds():
    policy = SensitivityPolicy.default()
    assert policy.threshold_db(ModulationFormat.PM_16QAM) == pytest.approx(11.48)
    rng = np.random.default_rng(0)
    lo, hi = assets.gaussian_mi_range()
    val = policy.threshold_db(ModulationFormat.PM_GAUSSIAN, rng)
    assert shannon_sensitivity(lo) <= val <= shannon_sensitivity(hi)
    with pytest.raises(ValueError):
        policy.threshold_db(ModulationFormat.PM_GAUSSIAN)


def test_max_reach_scan_non_monotonic():
    values = {1: 20.0, 2: 14.0, 3: 16.0, 4: 12.0}
    res = max_reach_scan(lambda n: values[n], 4, 15.0)
    # The scan is exhaustive, so a later recovery above threshold counts.
    assert res == ReachResult(max_reach_spans=3, threshold_db=15.0,
                              snr_at_reach_db=16.0)


def test_max_reach_unreachable():
    with pytest.raises(UnreachableError):
        max_reach_scan(lambda n: 0.0, 5, 15.0)


def test_max_reach_on_link():
    link = make_system(33)
    variant = assets.model(CfmKind.CFM1)
    first = snr(link, variant, 1)
    res = max_reach(link, variant, first - 1.0)
    assert 1 <= res.max_reach_spans <= link.n_spans
    assert res.snr_at_reach_db >= first - 1.0


def test_evaluate_all_channels_matches_scalar():
    link = make_system(34, category=2)
    variant = assets.model(CfmKind.CFM4)
    ev = evaluate_all_channels(link, variant)
    comb = link.combs[0]
    for idx, ch in enumerate(comb):
        if not ch.active:
            assert math.isnan(ev.snr_db[idx])
            continue
        relabeled = LinkSpec(spans=link.spans, combs=link.combs,
                             cut_index=idx)
        assert ev.snr_db[idx] == pytest.approx(
            snr(relabeled, variant, link.n_spans), rel=1e-9)
