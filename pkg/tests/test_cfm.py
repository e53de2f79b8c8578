"""Closed-form model kernels: independent numeric oracles and invariants."""

from fractions import Fraction

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import make_single_channel_link, make_system
from nli_planner import assets
from nli_planner.cfm import (ZeroDispersionError, beta2_acc,
                             coherence_bracket, effective_beta2_cut,
                             effective_beta2_xci, harmonic_number,
                             i_cut_coherent, i_cut_incoherent, i_xci,
                             propagation_factor, rho_sci, rho_xci, rx_nli_psd,
                             rx_nli_psd_all_channels, sine_integral,
                             span_nli_psd)
from nli_planner.types import (CfmKind, ChannelSpec, FiberParams, LinkSpec,
                               ModelVariant, ModulationFormat, SpanConfig)

mpmath.mp.dps = 50


# ---------------------------------------------------------------------------
# Elementary kernels


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, math.pi, 10.0, 250.0, 4000.0])
def test_sine_integral_vs_quadrature(x):
    # [DERIVED] direct numerical integration of sin(t)/t.
    expected, _ = quad(lambda t: math.sin(t) / t if t else 1.0, 0.0, x,
                       limit=400)
    assert sine_integral(x) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("x", [0.5, 7.0, 123.456])
def test_sine_integral_vs_mpmath(x):
    # [DERIVED] arbitrary-precision reference.
    assert sine_integral(x) == pytest.approx(float(mpmath.si(x)), rel=1e-12)


def test_harmonic_number_exact():
    # [DERIVED] exact rational summation.
    for m in range(0, 60):
        exact = sum(Fraction(1, k) for k in range(1, m + 1))
        assert harmonic_number(m) == pytest.approx(float(exact), rel=1e-14)
    with pytest.raises(ValueError):
        harmonic_number(-1)


def test_coherence_bracket_zero_at_one_span():
    assert coherence_bracket(1) == 0.0


def test_coherence_bracket_direct_sum():
    # [DERIVED] HN(N-1) + (1-N)/N == sum_{k=1}^{N-1} (N-k)/(N k), exactly.
    for n in range(1, 41):
        exact = sum(Fraction(n - k, n * k) for k in range(1, n))
        assert coherence_bracket(n) == pytest.approx(float(exact), abs=1e-13)


def test_effective_beta2_forms():
    fib = FiberParams(alpha_db_per_km=0.21, beta2=-21.3, beta3=0.1452,
                      gamma=1.3, f_ref=193.8)
    # [TRIVIAL] at the reference frequency both forms reduce to beta2.
    assert effective_beta2_cut(fib, 193.8) == pytest.approx(-21.3)
    assert effective_beta2_xci(fib, 193.8, 193.8) == pytest.approx(-21.3)
    # The pair form at (f, f) equals the single-channel form at f.
    assert effective_beta2_xci(fib, 195.0, 195.0) == pytest.approx(
        effective_beta2_cut(fib, 195.0))
    # Linear slope pi*beta3 per THz of (f1 + f2 - 2 f_ref).
    delta = effective_beta2_xci(fib, 194.8, 193.8) - (-21.3)
    assert delta == pytest.approx(math.pi * 0.1452 * 1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# Kernel integrals against arbitrary-precision evaluation


def _mp_i_cut(two_alpha, b2_abs, rate):
    arg = mpmath.pi ** 2 / 2 * mpmath.mpf(b2_abs) / two_alpha * rate ** 2
    return mpmath.asinh(arg) / (2 * mpmath.pi * b2_abs * two_alpha)


def test_i_cut_incoherent_vs_mpmath():
    link = make_single_channel_link()
    span, cut = link.spans[0], link.cut
    expected = _mp_i_cut(mpmath.mpf(span.fiber.two_alpha),
                         abs(effective_beta2_cut(span.fiber, cut.f_center)),
                         mpmath.mpf(cut.symbol_rate))
    assert i_cut_incoherent(span, cut) == pytest.approx(float(expected),
                                                        rel=1e-12)


def test_i_cut_coherent_reduces_to_incoherent_at_one_span():
    link = make_single_channel_link()
    span, cut = link.spans[0], link.cut
    assert i_cut_coherent(span, cut, 1) == pytest.approx(
        i_cut_incoherent(span, cut), rel=1e-15)


def test_i_cut_coherent_vs_mpmath():
    link = make_single_channel_link()
    span, cut = link.spans[0], link.cut
    n_tot = 12
    b2 = mpmath.mpf(abs(effective_beta2_cut(span.fiber, cut.f_center)))
    two_a = mpmath.mpf(span.fiber.two_alpha)
    alpha = two_a / 2
    rate = mpmath.mpf(cut.symbol_rate)
    length = mpmath.mpf(span.length_km)
    bracket = (mpmath.harmonic(n_tot - 1) + (1 - n_tot) / mpmath.mpf(n_tot))
    expected = (mpmath.asinh(mpmath.pi ** 2 / 4 * b2 / alpha * rate ** 2)
                + 2 * mpmath.si(mpmath.pi ** 2 * b2 * length * rate ** 2)
                / (mpmath.pi * alpha * length) * bracket) \
        / (2 * mpmath.pi * b2 * two_a)
    assert i_cut_coherent(span, cut, n_tot) == pytest.approx(float(expected),
                                                             rel=1e-10)


def test_i_xci_vs_mpmath():
    link = make_single_channel_link()
    span, cut = link.spans[0], link.cut
    nch = ChannelSpec(f_center=cut.f_center + 0.1, symbol_rate=0.032,
                      roll_off=0.1, format=ModulationFormat.PM_64QAM,
                      power_w_per_span=(1e-3,))
    b2 = mpmath.mpf(abs(effective_beta2_xci(span.fiber, nch.f_center,
                                            cut.f_center)))
    two_a = mpmath.mpf(span.fiber.two_alpha)
    scale = mpmath.pi ** 2 * b2 / two_a * mpmath.mpf(cut.symbol_rate)
    df = mpmath.mpf(nch.f_center) - mpmath.mpf(cut.f_center)
    expected = (mpmath.asinh(scale * (df + mpmath.mpf(nch.symbol_rate) / 2))
                - mpmath.asinh(scale * (df - mpmath.mpf(nch.symbol_rate) / 2))) \
        / (4 * mpmath.pi * b2 * two_a)
    assert i_xci(span, cut, nch) == pytest.approx(float(expected), rel=1e-12)


def test_i_xci_symmetric_in_detuning_sign():
    link = make_single_channel_link()
    span, cut = link.spans[0], link.cut

    def neighbor(df):
        return ChannelSpec(f_center=cut.f_center + df, symbol_rate=0.032,
                           roll_off=0.1, format=ModulationFormat.PM_64QAM,
                           power_w_per_span=(1e-3,))

    # With beta3 = 0 the integral depends only on |detuning|.
    fib = FiberParams(alpha_db_per_km=0.21, beta2=-21.3, beta3=0.0,
                      gamma=1.3, f_ref=193.8)
    span0 = SpanConfig(fiber=fib, length_km=span.length_km)
    assert i_xci(span0, cut, neighbor(0.2)) == pytest.approx(
        i_xci(span0, cut, neighbor(-0.2)), rel=1e-13)


def test_zero_dispersion_rejected():
    fib = FiberParams(alpha_db_per_km=0.21, beta2=0.0, beta3=0.0,
                      gamma=1.3, f_ref=193.8)
    link = make_single_channel_link(fiber=fib)
    with pytest.raises(ZeroDispersionError):
        i_cut_incoherent(link.spans[0], link.cut)


# ---------------------------------------------------------------------------
# Correction factors against an arbitrary-precision re-evaluation


def _mp_pow(base, exponent):
    base = mpmath.mpf(base)
    if base == 0 and exponent > 0:
        return mpmath.mpf(0)
    return base ** mpmath.mpf(exponent)


def _mp_rho_xci(a, phi, acc, roll_cut, roll_nch, cfm4):
    br = max(mpmath.mpf(acc) + a[7 - 1], mpmath.mpf("1e-12"))
    core = (a[0] + a[1] * _mp_pow(phi, a[2]) + a[3] * _mp_pow(phi, a[4])
            * (1 + a[5] * br ** a[7]))
    if cfm4:
        core *= (1 + a[18] * _mp_pow(roll_cut, a[19])
                 + a[20] * _mp_pow(roll_nch, a[21]))
    return core


def _mp_rho_sci(a, phi, acc, rate, roll_cut, cfm4):
    br = max(mpmath.mpf(acc) + a[17 - 1], mpmath.mpf("1e-12"))
    core = (a[8] + a[9] * _mp_pow(phi, a[10]) + a[11] * _mp_pow(phi, a[12])
            * (1 + a[13] * _mp_pow(rate, a[14]) + a[15] * br ** a[17]))
    if cfm4:
        core *= 1 + a[22] * _mp_pow(roll_cut, a[23])
    return core


@pytest.mark.parametrize("kind", [CfmKind.CFM2, CfmKind.CFM3, CfmKind.CFM4])
def test_correction_factors_vs_mpmath(kind):
    # [DERIVED] 50-digit re-evaluation of the correction-factor formulas on
    # randomized inputs, tolerance 1e-10 relative.
    rng = np.random.default_rng(99)
    variant = assets.model(kind)
    a = [mpmath.mpf(repr(v)) for v in variant.coefficients.a]
    cfm4 = kind is CfmKind.CFM4

    for _ in range(40):
        n_spans = int(rng.integers(1, 6))
        link = make_system(int(rng.integers(1_000_000)), n_spans=n_spans,
                           band_width=0.5)
        span_index = int(rng.integers(n_spans))
        cut = link.cut
        comb = link.comb(span_index)
        others = [i for i in range(len(comb)) if i != link.cut_index]
        nch = comb[int(rng.choice(others))]

        got = rho_xci(variant, link, span_index, nch, cut)
        acc = abs(beta2_acc(link, span_index, nch, cut))
        want = _mp_rho_xci(a, mpmath.mpf(repr(
            float(np.float64(assets.phi_table()[nch.format])))),
            mpmath.mpf(repr(acc)), mpmath.mpf(repr(cut.roll_off)),
            mpmath.mpf(repr(nch.roll_off)), cfm4)
        assert got == pytest.approx(float(want), rel=1e-10)

        got = rho_sci(variant, link, span_index, cut)
        acc = abs(beta2_acc(link, span_index, cut))
        want = _mp_rho_sci(a, mpmath.mpf(repr(
            float(np.float64(assets.phi_table()[cut.format])))),
            mpmath.mpf(repr(acc)), mpmath.mpf(repr(cut.symbol_rate)),
            mpmath.mpf(repr(cut.roll_off)), cfm4)
        assert got == pytest.approx(float(want), rel=1e-10)


def test_identity_coefficients_give_unit_factors():
    link = make_system(3, n_spans=3)
    cut = link.cut
    comb = link.comb(1)
    nch = comb[0 if link.cut_index != 0 else 1]
    for kind in (CfmKind.CFM2, CfmKind.CFM3, CfmKind.CFM4):
        variant = ModelVariant(kind=kind,
                               coefficients=assets.identity_coefficients(kind))
        assert rho_xci(variant, link, 2, nch, cut) == 1.0
        assert rho_sci(variant, link, 2, cut) == 1.0


def test_identity_cfm2_equals_cfm1():
    cfm1 = assets.model(CfmKind.CFM1)
    cfm2_id = ModelVariant(kind=CfmKind.CFM2,
                           coefficients=assets.identity_coefficients(
                               CfmKind.CFM2))
    for seed in range(6):
        link = make_system(seed + 100)
        for n_end in (1, link.n_spans):
            a = rx_nli_psd(link, cfm1, n_end)
            b = rx_nli_psd(link, cfm2_id, n_end)
            assert b == pytest.approx(a, rel=1e-13)


# ---------------------------------------------------------------------------
# Accumulated dispersion and propagation


def test_beta2_acc_zero_at_first_span():
    link = make_system(5)
    assert beta2_acc(link, 0, link.cut) == 0.0


def test_beta2_acc_is_cumulative():
    link = make_system(5)
    cut = link.cut
    manual = 0.0
    for n in range(link.n_spans):
        assert beta2_acc(link, n, cut) == pytest.approx(manual, rel=1e-12)
        manual += effective_beta2_cut(link.spans[n].fiber, cut.f_center) \
            * link.spans[n].length_km
    # Pair form against an interferer differs from the self form.
    nch = link.comb(0)[0 if link.cut_index != 0 else 1]
    assert beta2_acc(link, 2, nch, cut) == pytest.approx(
        sum(effective_beta2_xci(link.spans[k].fiber, nch.f_center,
                                cut.f_center) * link.spans[k].length_km
            for k in range(2)), rel=1e-12)


def test_propagation_factor_transparent_link_is_unity():
    link = make_system(6, optimize=False)
    f = link.cut.f_center
    assert propagation_factor(link, 0, link.n_spans, f) == pytest.approx(
        1.0, rel=1e-12)
    assert propagation_factor(link, 2, 2, f) == 1.0


# ---------------------------------------------------------------------------
# PSD assembly properties


@given(scale=st.floats(min_value=0.1, max_value=10.0), seed=st.integers(0, 50))
@settings(max_examples=25, deadline=None)
def test_cubic_power_scaling_property(scale, seed):
    # Scaling every launch power by s scales the NLI PSD by s^3.
    link = make_system(seed)
    variant = assets.model(CfmKind.CFM4)
    base = rx_nli_psd(link, variant, link.n_spans)
    scaled = LinkSpec(
        spans=link.spans,
        combs=tuple(tuple(c.with_powers([p * scale
                                         for p in c.power_w_per_span])
                          for c in comb) for comb in link.combs),
        cut_index=link.cut_index)
    assert rx_nli_psd(scaled, variant, link.n_spans) == pytest.approx(
        base * scale ** 3, rel=1e-9)


def test_span_psd_positive_and_additive():
    link = make_system(8)
    variant = assets.model(CfmKind.CFM1)
    f = link.cut.f_center
    total = 0.0
    for n in range(link.n_spans):
        term = span_nli_psd(link, n, variant)
        assert term > 0.0
        total += term * propagation_factor(link, n + 1, link.n_spans, f)
    assert rx_nli_psd(link, variant, link.n_spans) == pytest.approx(
        total, rel=1e-12)


def test_inactive_channels_do_not_contribute():
    link = make_system(9, optimize=False)
    variant = assets.model(CfmKind.CFM1)
    victim = 0 if link.cut_index != 0 else 1
    pruned_combs = tuple(
        tuple(ChannelSpec(f_center=c.f_center, symbol_rate=c.symbol_rate,
                          roll_off=c.roll_off, format=c.format,
                          power_w_per_span=c.power_w_per_span, active=False)
              if i == victim else c
              for i, c in enumerate(comb))
        for comb in link.combs)
    pruned = LinkSpec(spans=link.spans, combs=pruned_combs,
                      cut_index=link.cut_index)
    assert rx_nli_psd(pruned, variant, link.n_spans) \
        < rx_nli_psd(link, variant, link.n_spans)


@pytest.mark.parametrize("kind", list(CfmKind))
def test_vectorized_matches_scalar(kind):
    variant = assets.model(kind)
    for seed in (11, 12, 13):
        link = make_system(seed, category=2 if seed == 12 else 1)
        for n_end in (1, link.n_spans):
            vec = rx_nli_psd_all_channels(link, variant, n_end)
            got = vec[link.cut_index]
            want = rx_nli_psd(link, variant, n_end)
            assert got == pytest.approx(want, rel=1e-9)
            # Every active channel agrees with a scalar run as CUT.
            comb = link.combs[0]
            for idx, ch in enumerate(comb):
                if not ch.active:
                    assert math.isnan(vec[idx])
                    continue
                relabeled = LinkSpec(spans=link.spans, combs=link.combs,
                                     cut_index=idx)
                assert vec[idx] == pytest.approx(
                    rx_nli_psd(relabeled, variant, n_end), rel=1e-9)


def test_coherent_truncation_binding():
    # CFM3's self term depends on the truncation length: dropping the last
    # span changes every span's coherent correction, so the PSD after n
    # spans of an (n+1)-span evaluation differs from an n-span evaluation.
    link = make_system(14, n_spans=6)
    cfm3 = assets.model(CfmKind.CFM3)
    direct = rx_nli_psd(link, cfm3, 3)
    span_terms = [span_nli_psd(link, n, cfm3, n_span_total=6)
                  for n in range(3)]
    f = link.cut.f_center
    truncated_of_full = sum(t * propagation_factor(link, n + 1, 3, f)
                            for n, t in enumerate(span_terms))
    assert direct != pytest.approx(truncated_of_full, rel=1e-12)
