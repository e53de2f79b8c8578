"""SNR, ASE, sensitivity thresholds and maximum reach."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.constants import h as PLANCK_J_S

from . import assets
from .cfm import propagation_factor, rx_nli_psd, rx_nli_psd_all_channels
from .types import LinkSpec, ModelVariant, ModulationFormat

_THZ = 1e12  # THz and TBaud to SI


class UnreachableError(RuntimeError):
    """The CUT misses its sensitivity threshold even at one span."""


@dataclass(frozen=True)
class SensitivityPolicy:
    """SNR thresholds per QAM format plus the Gaussian MI target interval."""

    qam_thresholds_db: dict[ModulationFormat, float]
    gaussian_mi_range: tuple[float, float]

    @classmethod
    def default(cls) -> "SensitivityPolicy":
        return cls(qam_thresholds_db=assets.qam_thresholds_db(),
                   gaussian_mi_range=assets.gaussian_mi_range())

    def threshold_db(self, fmt: ModulationFormat, rng=None) -> float:
        """Threshold for a format; Gaussian CUTs draw a random MI target."""
        if fmt is ModulationFormat.PM_GAUSSIAN:
            if rng is None:
                raise ValueError("Gaussian sensitivity needs an RNG")
            lo, hi = self.gaussian_mi_range
            return shannon_sensitivity(rng.uniform(lo, hi),
                                       mi_range=self.gaussian_mi_range)
        try:
            return self.qam_thresholds_db[fmt]
        except KeyError:
            raise ValueError(f"no sensitivity threshold for {fmt.value}")


@dataclass(frozen=True)
class SnrReport:
    per_span_snr_db: tuple[float, ...]
    p_ase_w: tuple[float, ...]
    p_nli_w: tuple[float, ...]
    variant: ModelVariant


@dataclass(frozen=True)
class ReachResult:
    max_reach_spans: int
    threshold_db: float
    snr_at_reach_db: float


def ase_power(link: LinkSpec, n_end: int, f_thz: float | None = None,
              r_tbaud: float | None = None) -> float:
    """Dual-polarization ASE power (W) in the matched-filter bandwidth.

    Each amplifier contributes NF * h * f * (gain - 1) in PSD, propagated
    through the remaining spans; amplifiers with gain below 1 contribute
    nothing.
    """
    if n_end < 1:
        raise ValueError("n_end must be >= 1")
    cut = link.cut
    f = cut.f_center if f_thz is None else f_thz
    r = cut.symbol_rate if r_tbaud is None else r_tbaud
    total = 0.0
    for k in range(n_end):
        span = link.spans[k]
        gain = span.gain_lin(f)
        if gain <= 1.0:
            continue
        nf_lin = 10.0 ** (span.noise_figure_db / 10.0)
        psd_w_per_hz = nf_lin * PLANCK_J_S * (f * _THZ) * (gain - 1.0)
        total += psd_w_per_hz * (r * _THZ) \
            * propagation_factor(link, k + 1, n_end, f)
    return total


def nli_power_cfm(psd_w_per_thz: float, r_cut_tbaud: float) -> float:
    """Flat-PSD approximation of the matched-filter NLI power."""
    return psd_w_per_thz * r_cut_tbaud


def cut_rx_power(link: LinkSpec, n_end: int) -> float:
    """CUT power (W) at the receiver after the last span's loss and gain."""
    span = link.spans[n_end - 1]
    cut = link.comb(n_end - 1)[link.cut_index]
    return (cut.power_w_per_span[n_end - 1] * span.span_loss_lin
            * span.gain_lin(cut.f_center))


def snr(link: LinkSpec, variant: ModelVariant, n_end: int) -> float:
    """Received SNR (dB) of the CUT, inclusive of ASE and NLI noise."""
    p_ase = ase_power(link, n_end)
    p_nli = nli_power_cfm(rx_nli_psd(link, variant, n_end),
                          link.cut.symbol_rate)
    return 10.0 * math.log10(cut_rx_power(link, n_end) / (p_ase + p_nli))


def snr_report(link: LinkSpec, variant: ModelVariant) -> SnrReport:
    snrs, ases, nlis = [], [], []
    for n_end in range(1, link.n_spans + 1):
        p_ase = ase_power(link, n_end)
        p_nli = nli_power_cfm(rx_nli_psd(link, variant, n_end),
                              link.cut.symbol_rate)
        snrs.append(10.0 * math.log10(cut_rx_power(link, n_end)
                                      / (p_ase + p_nli)))
        ases.append(p_ase)
        nlis.append(p_nli)
    return SnrReport(per_span_snr_db=tuple(snrs), p_ase_w=tuple(ases),
                     p_nli_w=tuple(nlis), variant=variant)


def shannon_sensitivity(mi_target: float,
                        mi_range: tuple[float, float] | None = None) -> float:
    """SNR (dB) at which a dual-polarization Gaussian channel attains the MI.

    MI = 2 log2(1 + SNR), so SNR = 2^(MI/2) - 1.
    """
    lo, hi = mi_range if mi_range is not None else assets.gaussian_mi_range()
    if not lo <= mi_target <= hi:
        raise ValueError(f"MI target {mi_target} outside [{lo}, {hi}]")
    return 10.0 * math.log10(2.0 ** (mi_target / 2.0) - 1.0)


def max_reach_scan(snr_fn: Callable[[int], float], n_spans: int,
                   threshold_db: float) -> ReachResult:
    """Largest span count whose SNR meets the threshold (full linear scan)."""
    best = None
    for n_end in range(1, n_spans + 1):
        value = snr_fn(n_end)
        if value >= threshold_db:
            best = (n_end, value)
    if best is None:
        raise UnreachableError(
            f"SNR below {threshold_db:.2f} dB already at one span")
    return ReachResult(max_reach_spans=best[0], threshold_db=threshold_db,
                       snr_at_reach_db=best[1])


def max_reach(link: LinkSpec, variant: ModelVariant,
              threshold_db: float) -> ReachResult:
    return max_reach_scan(lambda n: snr(link, variant, n), link.n_spans,
                          threshold_db)


def delta_snr(snr_cfm_db: float, snr_bmk_db: float) -> float:
    """SNR estimation error (dB) of a model against a benchmark."""
    return snr_cfm_db - snr_bmk_db


@dataclass(frozen=True)
class ChannelEvaluation:
    """Per-channel receiver metrics with each channel treated as CUT."""

    snr_db: np.ndarray
    p_nli_w: np.ndarray
    p_ase_w: np.ndarray
    p_rx_w: np.ndarray


def evaluate_all_channels(link: LinkSpec, variant: ModelVariant,
                          n_end: int | None = None) -> ChannelEvaluation:
    """Vectorized SNR of every active channel (NaN entries are inactive)."""
    if n_end is None:
        n_end = link.n_spans
    comb = link.combs[0]
    nc = len(comb)
    nli_psd = rx_nli_psd_all_channels(link, variant, n_end)
    rate = np.array([c.symbol_rate for c in comb])
    f = np.array([c.f_center for c in comb])
    act = np.array([c.active for c in comb], dtype=bool)
    p_nli = nli_psd * rate

    # Per-amplifier ASE, propagated with the flat span gains.
    p_ase = np.zeros(nc)
    for k in range(n_end):
        span = link.spans[k]
        gain = span.gain_lin(0.0)
        if gain <= 1.0:
            continue
        nf_lin = 10.0 ** (span.noise_figure_db / 10.0)
        prop = 1.0
        for j in range(k + 1, n_end):
            s = link.spans[j]
            prop *= s.gain_lin(0.0) * s.span_loss_lin
        p_ase += nf_lin * PLANCK_J_S * (f * _THZ) * (gain - 1.0) \
            * (rate * _THZ) * prop

    last = link.spans[n_end - 1]
    p_launch = np.array([c.power_w_per_span[n_end - 1] if c.active else np.nan
                         for c in comb])
    p_rx = p_launch * last.span_loss_lin * last.gain_lin(0.0)
    with np.errstate(invalid="ignore"):
        snr_db = 10.0 * np.log10(p_rx / (p_ase + p_nli))
    snr_db[~act] = np.nan
    return ChannelEvaluation(snr_db=snr_db, p_nli_w=p_nli, p_ase_w=p_ase,
                             p_rx_w=p_rx)
