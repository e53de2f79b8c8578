"""Closed-form nonlinear-interference PSD models CFM1-CFM4.

The per-span NLI PSD at the channel-under-test combines a self-interference
term and one cross-interference term per co-propagating channel, each built
from asinh closed forms of the underlying four-wave-mixing integrals.
CFM2-CFM4 multiply those terms by fitted correction factors; CFM3/CFM4
additionally model coherent accumulation of the self term.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import sici

from .types import (CfmKind, ChannelSpec, FiberParams, LinkSpec,
                    ModelVariant, SpanConfig, phi_of_format)

# Validity bound: below this effective |beta2| (ps^2/km) the closed forms
# degrade and results are flagged rather than trusted.
MIN_ABS_BETA2 = 2.5

# Guard floor for bracket bases raised to fitted exponents.
_BRACKET_FLOOR = 1e-12

# Floor for effective-dispersion magnitudes in the vectorized path, where a
# single zero-crossing pair must not poison the whole array.
_BETA2_FLOOR = 1e-9


class ZeroDispersionError(ArithmeticError):
    """Effective dispersion is exactly zero: the closed forms are singular."""


class LowDispersionWarning(UserWarning):
    """Effective |beta2| below the recommended validity bound."""


def effective_beta2_cut(fiber: FiberParams, f_cut: float) -> float:
    """Effective dispersion (ps^2/km) seen by the CUT at its own frequency."""
    return fiber.beta2 + math.pi * fiber.beta3 * (2.0 * f_cut - 2.0 * fiber.f_ref)


def effective_beta2_xci(fiber: FiberParams, f_nch: float, f_cut: float) -> float:
    """Effective dispersion (ps^2/km) for an interferer/CUT pair."""
    return fiber.beta2 + math.pi * fiber.beta3 * (f_nch + f_cut - 2.0 * fiber.f_ref)


def harmonic_number(m: int) -> float:
    """HN(m) = sum_{k=1..m} 1/k by direct summation (m stays small here)."""
    if m < 0:
        raise ValueError("harmonic number of a negative integer")
    return sum(1.0 / k for k in range(1, m + 1))


def sine_integral(x: float) -> float:
    """Si(x) = integral of sin(t)/t from 0 to x."""
    return float(sici(x)[0])


def _check_beta2(b2: float) -> float:
    mag = abs(b2)
    if mag == 0.0:
        raise ZeroDispersionError("zero effective dispersion")
    if mag < MIN_ABS_BETA2:
        warnings.warn(
            f"effective |beta2| = {mag:.3g} ps^2/km is below the recommended "
            f"{MIN_ABS_BETA2} ps^2/km validity bound", LowDispersionWarning,
            stacklevel=3)
    return mag


def i_cut_incoherent(span: SpanConfig, cut: ChannelSpec) -> float:
    """Self-interference kernel integral, incoherent accumulation form."""
    b2 = _check_beta2(effective_beta2_cut(span.fiber, cut.f_center))
    two_alpha = span.fiber.two_alpha
    arg = (math.pi ** 2 / 2.0) * (b2 / two_alpha) * cut.symbol_rate ** 2
    return math.asinh(arg) / (2.0 * math.pi * b2 * two_alpha)


def coherence_bracket(n_span_total: int) -> float:
    """HN(N-1) + (1-N)/N; zero at N = 1."""
    if n_span_total < 1:
        raise ValueError("span count must be >= 1")
    return harmonic_number(n_span_total - 1) + (1 - n_span_total) / n_span_total


def i_cut_coherent(span: SpanConfig, cut: ChannelSpec,
                   n_span_total: int) -> float:
    """Self-interference kernel with the coherent-accumulation correction.

    The CUT bandwidth is taken equal to its symbol rate, matching the
    incoherent form.  At ``n_span_total == 1`` the correction is exactly zero
    and the value coincides with :func:`i_cut_incoherent`.
    """
    b2 = _check_beta2(effective_beta2_cut(span.fiber, cut.f_center))
    two_alpha = span.fiber.two_alpha
    alpha = two_alpha / 2.0
    b_cut = cut.symbol_rate
    asinh_term = math.asinh((math.pi ** 2 / 4.0) * (b2 / alpha) * b_cut ** 2)
    bracket = coherence_bracket(n_span_total)
    corr = 0.0
    if bracket != 0.0:
        si = sine_integral(math.pi ** 2 * b2 * span.length_km * b_cut ** 2)
        corr = 2.0 * si / (math.pi * alpha * span.length_km) * bracket
    return (asinh_term + corr) / (2.0 * math.pi * b2 * two_alpha)


def i_xci(span: SpanConfig, cut: ChannelSpec, nch: ChannelSpec) -> float:
    """Cross-interference kernel integral for one interfering channel."""
    b2 = _check_beta2(effective_beta2_xci(span.fiber, nch.f_center, cut.f_center))
    two_alpha = span.fiber.two_alpha
    scale = math.pi ** 2 * (b2 / two_alpha) * cut.symbol_rate
    df = nch.f_center - cut.f_center
    hi = math.asinh(scale * (df + nch.symbol_rate / 2.0))
    lo = math.asinh(scale * (df - nch.symbol_rate / 2.0))
    return (hi - lo) / (4.0 * math.pi * b2 * two_alpha)


def beta2_acc(link: LinkSpec, span_index: int, channel: ChannelSpec,
              cut: ChannelSpec | None = None) -> float:
    """Accumulated effective dispersion (ps^2) at the input of a span.

    Sums the pairwise effective dispersion of ``channel`` against ``cut``
    (``channel`` itself when no CUT is given) over spans before
    ``span_index`` (0-based); zero at the first span.
    """
    f_other = (cut or channel).f_center
    total = 0.0
    for k in range(span_index):
        span = link.spans[k]
        total += effective_beta2_xci(span.fiber, channel.f_center, f_other) \
            * span.length_km
    return total


def _pow(base: float, exponent: float) -> float:
    if base == 0.0 and exponent > 0.0:
        return 0.0
    return base ** exponent


def _bracket(abs_b2_acc: float, offset: float) -> float:
    return max(abs_b2_acc + offset, _BRACKET_FLOOR)


def rho_xci(variant: ModelVariant, link: LinkSpec, span_index: int,
            nch: ChannelSpec, cut: ChannelSpec) -> float:
    """Correction factor for one cross-interference term."""
    if variant.kind is CfmKind.CFM1:
        return 1.0
    a = variant.coefficients
    phi = phi_of_format(nch.format)
    acc = abs(beta2_acc(link, span_index, nch, cut))
    core = (a[1] + a[2] * _pow(phi, a[3])
            + a[4] * _pow(phi, a[5])
            * (1.0 + a[6] * _bracket(acc, a[7]) ** a[8]))
    if variant.kind is CfmKind.CFM4:
        core *= (1.0 + a[19] * _pow(cut.roll_off, a[20])
                 + a[21] * _pow(nch.roll_off, a[22]))
    return core


def rho_sci(variant: ModelVariant, link: LinkSpec, span_index: int,
            cut: ChannelSpec) -> float:
    """Correction factor for the self-interference term."""
    if variant.kind is CfmKind.CFM1:
        return 1.0
    a = variant.coefficients
    phi = phi_of_format(cut.format)
    acc = abs(beta2_acc(link, span_index, cut))
    core = (a[9] + a[10] * _pow(phi, a[11])
            + a[12] * _pow(phi, a[13])
            * (1.0 + a[14] * _pow(cut.symbol_rate, a[15])
               + a[16] * _bracket(acc, a[17]) ** a[18]))
    if variant.kind is CfmKind.CFM4:
        core *= 1.0 + a[23] * _pow(cut.roll_off, a[24])
    return core


def span_nli_psd(link: LinkSpec, span_index: int, variant: ModelVariant,
                 n_span_total: int | None = None) -> float:
    """NLI PSD (W/THz) generated in one span at the CUT frequency.

    ``n_span_total`` binds the coherent self-term span count for CFM3/CFM4;
    it defaults to the full link length.
    """
    span = link.spans[span_index]
    comb = link.comb(span_index)
    cut = comb[link.cut_index]
    if n_span_total is None:
        n_span_total = link.n_spans

    if variant.kind.coherent_sci:
        i_cut = i_cut_coherent(span, cut, n_span_total)
    else:
        i_cut = i_cut_incoherent(span, cut)
    g_cut = cut.psd(span_index)
    acc = rho_sci(variant, link, span_index, cut) * g_cut ** 2 * i_cut

    for idx, nch in enumerate(comb):
        if idx == link.cut_index or not nch.active:
            continue
        g_nch = nch.psd(span_index)
        acc += (2.0 * rho_xci(variant, link, span_index, nch, cut)
                * g_nch ** 2 * i_xci(span, cut, nch))

    prefactor = ((16.0 / 27.0) * span.fiber.gamma ** 2
                 * span.gain_lin(cut.f_center) * span.span_loss_lin)
    return prefactor * g_cut * acc


def propagation_factor(link: LinkSpec, first: int, last: int,
                       f_thz: float) -> float:
    """Power gain/loss product of spans ``first..last-1`` (0-based, half-open)."""
    out = 1.0
    for k in range(first, last):
        span = link.spans[k]
        out *= span.gain_lin(f_thz) * span.span_loss_lin
    return out


def rx_nli_psd(link: LinkSpec, variant: ModelVariant, n_end: int) -> float:
    """Accumulated NLI PSD (W/THz) at the receiver of the truncated link.

    The coherent self-term of CFM3/CFM4 is evaluated with the truncated
    span count ``n_end`` for every span.
    """
    if not 1 <= n_end <= link.n_spans:
        raise ValueError("n_end out of range")
    f_cut = link.cut.f_center
    total = 0.0
    for n in range(n_end):
        term = span_nli_psd(link, n, variant, n_span_total=n_end)
        total += term * propagation_factor(link, n + 1, n_end, f_cut)
    return total


def _combs_span_invariant(link: LinkSpec) -> bool:
    first = link.combs[0]
    return all(c is first or c == first for c in link.combs[1:])


def rx_nli_psd_all_channels(link: LinkSpec, variant: ModelVariant,
                            n_end: int | None = None) -> np.ndarray:
    """Receiver NLI PSD with every active channel treated as CUT in turn.

    Vectorized over channel pairs; requires the comb to be identical at
    every span (the generated/test-set systems satisfy this).  Inactive
    channels yield NaN.
    """
    if n_end is None:
        n_end = link.n_spans
    if not 1 <= n_end <= link.n_spans:
        raise ValueError("n_end out of range")
    if not _combs_span_invariant(link):
        raise ValueError("vectorized evaluation requires span-invariant combs")

    comb = link.combs[0]
    nc = len(comb)
    f = np.array([c.f_center for c in comb])
    rate = np.array([c.symbol_rate for c in comb])
    roll = np.array([c.roll_off for c in comb])
    phi = np.array([phi_of_format(c.format) for c in comb])
    act = np.array([c.active for c in comb], dtype=bool)
    powers = np.array([[c.power_w_per_span[n] if c.active else 0.0
                        for c in comb] for n in range(n_end)])
    g = powers / rate  # [n, c] effective PSDs

    kind = variant.kind
    a = variant.coefficients.a if kind is not CfmKind.CFM1 else None

    total = np.zeros(nc)
    acc_b2 = np.zeros((nc, nc))  # pairwise accumulated dispersion (ps^2)
    # Backward propagation factors from end of span n to Rx (flat gains).
    prop = np.ones(n_end)
    for n in range(n_end - 1, 0, -1):
        span = link.spans[n]
        prop[n - 1] = prop[n] * span.gain_lin(0.0) * span.span_loss_lin

    eye = np.eye(nc, dtype=bool)
    for n in range(n_end):
        span = link.spans[n]
        fib = span.fiber
        two_alpha = fib.two_alpha
        # Pairwise effective dispersion; row index = CUT, column = interferer.
        m = fib.beta2 + math.pi * fib.beta3 * (f[:, None] + f[None, :]
                                               - 2.0 * fib.f_ref)
        m_abs = np.maximum(np.abs(m), _BETA2_FLOOR)

        scale = math.pi ** 2 * (m_abs / two_alpha) * rate[:, None]
        df = f[None, :] - f[:, None]
        i_mat = (np.arcsinh(scale * (df + rate[None, :] / 2.0))
                 - np.arcsinh(scale * (df - rate[None, :] / 2.0))) \
            / (4.0 * math.pi * m_abs * two_alpha)

        b2_diag = np.diagonal(m_abs)
        arg = (math.pi ** 2 / 2.0) * (b2_diag / two_alpha) * rate ** 2
        i_sci = np.arcsinh(arg) / (2.0 * math.pi * b2_diag * two_alpha)
        if kind.coherent_sci:
            bracket = coherence_bracket(n_end)
            if bracket != 0.0:
                si = sici(math.pi ** 2 * b2_diag * span.length_km
                          * rate ** 2)[0]
                alpha = two_alpha / 2.0
                i_sci = i_sci + si * 2.0 * bracket \
                    / (math.pi * alpha * span.length_km) \
                    / (2.0 * math.pi * b2_diag * two_alpha)

        if kind is CfmKind.CFM1:
            rho_mat = np.ones((nc, nc))
            rho_cut = np.ones(nc)
        else:
            br = np.maximum(np.abs(acc_b2) + a[6], _BRACKET_FLOOR)
            rho_mat = (a[0] + a[1] * _pow_arr(phi, a[2])[None, :]
                       + a[3] * _pow_arr(phi, a[4])[None, :]
                       * (1.0 + a[5] * br ** a[7]))
            br_cut = np.maximum(np.abs(np.diagonal(acc_b2)) + a[16],
                                _BRACKET_FLOOR)
            rho_cut = (a[8] + a[9] * _pow_arr(phi, a[10])
                       + a[11] * _pow_arr(phi, a[12])
                       * (1.0 + a[13] * rate ** a[14]
                          + a[15] * br_cut ** a[17]))
            if kind is CfmKind.CFM4:
                rho_mat = rho_mat * (1.0 + a[18] * _pow_arr(roll, a[19])[:, None]
                                     + a[20] * _pow_arr(roll, a[21])[None, :])
                rho_cut = rho_cut * (1.0 + a[22] * _pow_arr(roll, a[23]))

        g_n = g[n]
        xci = rho_mat * (g_n ** 2)[None, :] * i_mat
        xci[:, ~act] = 0.0
        xci[eye] = 0.0
        sci = rho_cut * g_n ** 2 * i_sci
        prefactor = ((16.0 / 27.0) * fib.gamma ** 2
                     * span.gain_lin(0.0) * span.span_loss_lin)
        total += prefactor * g_n * (sci + 2.0 * xci.sum(axis=1)) * prop[n]

        acc_b2 += m * span.length_km

    total[~act] = np.nan
    return total


def _pow_arr(base: np.ndarray, exponent: float) -> np.ndarray:
    out = np.power(base, exponent, where=(base != 0.0) | (exponent <= 0.0),
                   out=np.zeros_like(base, dtype=float))
    if exponent == 0.0:
        out[base == 0.0] = 1.0
    return out


def cut_min_abs_beta2(link: LinkSpec) -> float:
    """Smallest effective |beta2| the CUT sees over the link's spans."""
    cut = link.cut
    return min(abs(effective_beta2_cut(s.fiber, cut.f_center))
               for s in link.spans)
