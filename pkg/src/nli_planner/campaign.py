"""Multi-system evaluation campaigns, the span-increment diagnostic, and the
coefficient-fitting pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import assets
from .cfm import (beta2_acc, i_cut_coherent, i_cut_incoherent, i_xci,
                  propagation_factor, rx_nli_psd)
from .oracle import QuadratureConfig, gn_span_psd
from .perf import (SensitivityPolicy, UnreachableError, ase_power,
                   cut_rx_power, max_reach_scan, snr)
from .poweropt import optimize_powers
from .sysgen import LOW_DISPERSION_FLAG, GeneratorConfig, generate_system
from .types import (CfmKind, LinkSpec, ModelCoefficients, ModelVariant,
                    ModulationFormat, phi_of_format)


# ---------------------------------------------------------------------------
# Benchmarks


class CfmBenchmark:
    """A closed-form variant used as reference model."""

    def __init__(self, variant: ModelVariant):
        self.variant = variant
        self.name = variant.kind.value

    def rx_psd(self, link: LinkSpec, n_end: int) -> float:
        return rx_nli_psd(link, self.variant, n_end)

    def nli_power_w(self, link: LinkSpec, n_end: int) -> float:
        return self.rx_psd(link, n_end) * link.cut.symbol_rate

    def snr_db(self, link: LinkSpec, n_end: int) -> float:
        return snr(link, self.variant, n_end)


class GnOracleBenchmark:
    """2-D quadrature GN model with incoherent span accumulation.

    Per-span PSDs are cached per link, so scanning truncations costs one
    quadrature per span.
    """

    name = "gn-oracle"

    def __init__(self, quad: QuadratureConfig | None = None):
        self.quad = quad or QuadratureConfig()
        self._cache: dict[LinkSpec, list[float]] = {}

    def _span_psds(self, link: LinkSpec) -> list[float]:
        key = link
        if key not in self._cache:
            f_cut = link.cut.f_center
            self._cache[key] = [
                gn_span_psd(link.spans[n], link.comb(n), f_cut, self.quad,
                            span_index=n)
                for n in range(link.n_spans)]
        return self._cache[key]

    def rx_psd(self, link: LinkSpec, n_end: int) -> float:
        psds = self._span_psds(link)
        f_cut = link.cut.f_center
        return sum(psds[n] * propagation_factor(link, n + 1, n_end, f_cut)
                   for n in range(n_end))

    def nli_power_w(self, link: LinkSpec, n_end: int) -> float:
        return self.rx_psd(link, n_end) * link.cut.symbol_rate

    def snr_db(self, link: LinkSpec, n_end: int) -> float:
        p_ase = ase_power(link, n_end)
        p_nli = self.nli_power_w(link, n_end)
        return 10.0 * math.log10(cut_rx_power(link, n_end)
                                 / (p_ase + p_nli))


# ---------------------------------------------------------------------------
# Error statistics


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    std_dev: float
    peak: float  # max |error|
    peak_to_peak: float
    n_samples: int
    bin_width: float
    bin_edges: tuple[float, ...]
    bin_counts: tuple[int, ...]


def error_stats(samples: list[float], bin_width: float = 0.02) -> ErrorStats:
    """Mean / population std / peak / peak-to-peak of dB errors, with a
    fixed-width histogram aligned on multiples of the bin width."""
    if not samples:
        raise ValueError("error_stats requires at least one sample")
    if bin_width <= 0:
        raise ValueError("bin width must be > 0")
    x = np.asarray(samples, dtype=float)
    lo = math.floor(x.min() / bin_width) * bin_width
    hi = math.ceil(x.max() / bin_width) * bin_width
    nbins = max(1, round((hi - lo) / bin_width))
    counts, edges = np.histogram(x, bins=nbins, range=(lo, lo + nbins * bin_width))
    return ErrorStats(mean=float(x.mean()), std_dev=float(x.std()),
                      peak=float(np.abs(x).max()),
                      peak_to_peak=float(x.max() - x.min()),
                      n_samples=len(x), bin_width=bin_width,
                      bin_edges=tuple(float(e) for e in edges),
                      bin_counts=tuple(int(c) for c in counts))


# ---------------------------------------------------------------------------
# Campaigns


@dataclass(frozen=True)
class CampaignConfig:
    n_systems: int = 100
    categories: tuple[int, ...] = (1,)
    cut_positions: tuple[str, ...] = ("center",)
    variants: tuple[CfmKind, ...] = (CfmKind.CFM1,)
    seed: int = 0
    bin_width_db: float = 0.02
    # Generator overrides (paper values by default; shrink for desk runs).
    band_width_thz: float = 5.0
    n_spans: int = 20
    nf_mode: str = "mixed"
    # Exclude systems whose CUT dips below the closed-form validity bound.
    exclude_low_dispersion: bool = True

    def __post_init__(self) -> None:
        if self.n_systems < 1:
            raise ValueError("n_systems must be >= 1")
        if self.bin_width_db <= 0:
            raise ValueError("bin width must be > 0")


@dataclass(frozen=True)
class CampaignResult:
    stats: dict[tuple[str, str], ErrorStats]  # (variant, cut_position)
    n_evaluated: int
    n_excluded_low_dispersion: int
    n_excluded_unreachable: int
    seeds_used: tuple[int, ...]


def _variant_models(kinds: tuple[CfmKind, ...]) -> list[ModelVariant]:
    return [assets.model(k) for k in kinds]


def run_campaign(cfg: CampaignConfig, benchmark,
                 policy: SensitivityPolicy | None = None) -> CampaignResult:
    """Generate, power-optimize and score systems against a benchmark.

    Each system's SNR error is measured at the benchmark's max reach; systems
    unreachable at one span (or below the dispersion bound, when excluded)
    are counted and skipped.
    """
    policy = policy or SensitivityPolicy.default()
    models = _variant_models(cfg.variants)
    mixes = [(cat, pos) for cat in cfg.categories for pos in cfg.cut_positions]
    samples: dict[tuple[str, str], list[float]] = {
        (m.kind.value, pos): [] for m in models for _, pos in mixes}

    n_low, n_unreachable, n_done = 0, 0, 0
    seeds = []
    attempt = 0
    while n_done < cfg.n_systems:
        cat, pos = mixes[n_done % len(mixes)]
        attempt += 1
        rng = np.random.default_rng([cfg.seed, attempt])
        gen = GeneratorConfig(category=cat, cut_position=pos,
                              band_width=cfg.band_width_thz,
                              n_spans=cfg.n_spans, nf_mode=cfg.nf_mode,
                              seed=cfg.seed)
        link = generate_system(gen, rng)
        if cfg.exclude_low_dispersion and LOW_DISPERSION_FLAG in link.flags:
            n_low += 1
            continue
        link, _plan = optimize_powers(link, rng)
        threshold = policy.threshold_db(link.cut.format, rng)
        try:
            reach = max_reach_scan(lambda n: benchmark.snr_db(link, n),
                                   link.n_spans, threshold)
        except UnreachableError:
            n_unreachable += 1
            continue
        bmk_snr = benchmark.snr_db(link, reach.max_reach_spans)
        for model in models:
            d = snr(link, model, reach.max_reach_spans) - bmk_snr
            samples[(model.kind.value, pos)].append(d)
        seeds.append(attempt)
        n_done += 1

    stats = {key: error_stats(vals, cfg.bin_width_db)
             for key, vals in samples.items() if vals}
    return CampaignResult(stats=stats, n_evaluated=n_done,
                          n_excluded_low_dispersion=n_low,
                          n_excluded_unreachable=n_unreachable,
                          seeds_used=tuple(seeds))


# ---------------------------------------------------------------------------
# Span-increment diagnostic


def span_increment_ratio(link: LinkSpec, model_a, model_b
                         ) -> list[tuple[float, float]]:
    """Per-span ratio of accumulated-NLI increments of two models.

    Returns (|accumulated dispersion at span start|, increment ratio) pairs;
    spans with a vanishing denominator increment are skipped.
    """
    if link.n_spans < 2:
        raise ValueError("diagnostic needs at least two spans")
    cut = link.cut
    out = []
    prev_a, prev_b = 0.0, 0.0
    for n in range(1, link.n_spans + 1):
        cur_a = model_a.rx_psd(link, n)
        cur_b = model_b.rx_psd(link, n)
        da, db = cur_a - prev_a, cur_b - prev_b
        prev_a, prev_b = cur_a, cur_b
        if db == 0.0:
            continue
        abscissa = abs(beta2_acc(link, n - 1, cut))
        out.append((abscissa, da / db))
    return out


# ---------------------------------------------------------------------------
# Coefficient fitting


@dataclass(frozen=True)
class FitConfig:
    n_systems: int = 50
    categories: tuple[int, ...] = (1,)
    cut_positions: tuple[str, ...] = ("center",)
    seed: int = 1000
    band_width_thz: float = 5.0
    n_spans: int = 20
    nf_mode: str = "mixed"
    exclude_low_dispersion: bool = True
    max_iterations: int = 4000
    n_restarts: int = 1
    initial: ModelCoefficients | None = None


@dataclass(frozen=True)
class FitResult:
    kind: CfmKind
    coefficients: ModelCoefficients
    cost_initial: float
    cost_final: float
    improved: bool
    n_terms: int
    train_seeds: tuple[int, ...]

    @property
    def variant(self) -> ModelVariant:
        return ModelVariant(kind=self.kind, coefficients=self.coefficients)


class _FitData:
    """Precomputed coefficient-independent structure of the training cost.

    For each system: per-span SCI bases and features, flattened XCI entry
    bases and features, the span-to-truncation propagation matrix, the
    (possibly truncation-dependent) SCI kernel matrix, and the benchmark
    per-span NLI powers.
    """

    def __init__(self, kind: CfmKind):
        self.kind = kind
        self.systems: list[dict] = []

    def add_system(self, link: LinkSpec, reach: int, p_bmk: np.ndarray) -> None:
        cut = link.cut
        m_count = reach
        sci_base = np.zeros(m_count)
        sci_acc = np.zeros(m_count)
        i_sci = np.zeros((m_count, m_count))  # [span m, truncation n-1]
        prop = np.zeros((m_count, m_count))
        xb, xphi, xacc, xroll = [], [], [], []
        xseg = []
        for m in range(m_count):
            span = link.spans[m]
            comb = link.comb(m)
            g_cut = cut.psd(m)
            base = ((16.0 / 27.0) * span.fiber.gamma ** 2
                    * span.gain_lin(cut.f_center) * span.span_loss_lin * g_cut)
            sci_base[m] = base * g_cut ** 2
            sci_acc[m] = abs(beta2_acc(link, m, cut))
            for n in range(m, m_count):
                prop[m, n] = propagation_factor(link, m + 1, n + 1,
                                                cut.f_center)
                if self.kind.coherent_sci:
                    i_sci[m, n] = i_cut_coherent(span, cut, n + 1)
                else:
                    i_sci[m, n] = i_cut_incoherent(span, cut)
            for idx, nch in enumerate(comb):
                if idx == link.cut_index or not nch.active:
                    continue
                xb.append(base * 2.0 * nch.psd(m) ** 2
                          * i_xci(span, cut, nch))
                xphi.append(phi_of_format(nch.format))
                xacc.append(abs(beta2_acc(link, m, nch, cut)))
                xroll.append(nch.roll_off)
                xseg.append(m)
        self.systems.append({
            "rate": cut.symbol_rate,
            "phi_cut": phi_of_format(cut.format),
            "roll_cut": cut.roll_off,
            "sci_base": sci_base, "sci_acc": sci_acc,
            "i_sci": i_sci, "prop": prop,
            "xb": np.array(xb), "xphi": np.array(xphi),
            "xacc": np.array(xacc), "xroll": np.array(xroll),
            "xseg": np.array(xseg, dtype=int), "m_count": m_count,
            "p_bmk": p_bmk,
        })

    def cost(self, a: np.ndarray) -> float:
        """Sum over systems and spans of the squared relative NLI-power error.

        Wild simplex trial points can overflow to inf/NaN; those propagate
        into a non-finite cost, which the optimizer treats as arbitrarily bad.
        """
        kind = self.kind
        total = 0.0
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            for s in self.systems:
                br = np.maximum(s["xacc"] + a[6], 1e-12)
                rho_x = (a[0] + a[1] * _safe_pow(s["xphi"], a[2])
                         + a[3] * _safe_pow(s["xphi"], a[4])
                         * (1.0 + a[5] * br ** a[7]))
                br_c = np.maximum(s["sci_acc"] + a[16], 1e-12)
                rho_c = (a[8] + a[9] * _safe_pow(s["phi_cut"], a[10])
                         + a[11] * _safe_pow(s["phi_cut"], a[12])
                         * (1.0 + a[13] * s["rate"] ** a[14]
                            + a[15] * br_c ** a[17]))
                if kind is CfmKind.CFM4:
                    rho_x = rho_x * (1.0
                                     + a[18] * _safe_pow(s["roll_cut"], a[19])
                                     + a[20] * _safe_pow(s["xroll"], a[21]))
                    rho_c = rho_c * (1.0
                                     + a[22] * _safe_pow(s["roll_cut"], a[23]))
                xterm = np.bincount(s["xseg"], weights=s["xb"] * rho_x,
                                    minlength=s["m_count"])
                sci = s["sci_base"] * rho_c
                p = s["rate"] * ((s["prop"] * s["i_sci"]).T @ sci
                                 + s["prop"].T @ xterm)
                rel = (p - s["p_bmk"]) / s["p_bmk"]
                total += float(np.dot(rel, rel))
        return total

    @property
    def n_terms(self) -> int:
        return sum(s["m_count"] for s in self.systems)


def _safe_pow(base, exponent: float):
    b = np.asarray(base, dtype=float)
    out = np.power(b, exponent, where=(b != 0.0) | (exponent <= 0.0),
                   out=np.zeros_like(b))
    if exponent == 0.0:
        out = np.where(b == 0.0, 1.0, out)
    return out


def build_fit_data(fit: FitConfig, kind: CfmKind, benchmark,
                   policy: SensitivityPolicy | None = None
                   ) -> tuple[_FitData, tuple[int, ...]]:
    """Generate the training systems and precompute the cost structure."""
    policy = policy or SensitivityPolicy.default()
    data = _FitData(kind)
    mixes = [(c, p) for c in fit.categories for p in fit.cut_positions]
    seeds = []
    attempt, done = 0, 0
    while done < fit.n_systems:
        cat, pos = mixes[done % len(mixes)]
        attempt += 1
        rng = np.random.default_rng([fit.seed, attempt])
        gen = GeneratorConfig(category=cat, cut_position=pos,
                              band_width=fit.band_width_thz,
                              n_spans=fit.n_spans, nf_mode=fit.nf_mode,
                              seed=fit.seed)
        link = generate_system(gen, rng)
        if fit.exclude_low_dispersion and LOW_DISPERSION_FLAG in link.flags:
            continue
        link, _plan = optimize_powers(link, rng)
        threshold = policy.threshold_db(link.cut.format, rng)
        try:
            reach = max_reach_scan(lambda n: benchmark.snr_db(link, n),
                                   link.n_spans, threshold)
        except UnreachableError:
            continue
        r = reach.max_reach_spans
        p_bmk = np.array([benchmark.nli_power_w(link, n)
                          for n in range(1, r + 1)])
        data.add_system(link, r, p_bmk)
        seeds.append(attempt)
        done += 1
    return data, tuple(seeds)


def fit_coefficients(fit: FitConfig, kind: CfmKind, benchmark,
                     policy: SensitivityPolicy | None = None) -> FitResult:
    """Minimize the summed relative NLI-power error over the free parameters.

    Derivative-free local search (Nelder-Mead) from the shipped table, the
    identity point and optional perturbed restarts; the result never has a
    higher cost than the initial point.
    """
    if kind is CfmKind.CFM1:
        raise ValueError("CFM1 has no free parameters to fit")
    data, seeds = build_fit_data(fit, kind, benchmark, policy)
    initial = fit.initial or assets.shipped_coefficients(kind)
    x0 = np.array(initial.a)
    cost0 = data.cost(x0)

    starts = [x0, np.array(assets.identity_coefficients(kind).a)]
    rng = np.random.default_rng(fit.seed + 17)
    for _ in range(fit.n_restarts):
        starts.append(starts[1] * (1.0 + 0.05 * rng.standard_normal(len(x0))))

    best_x, best_cost = x0, cost0
    for start in starts:
        res = minimize(data.cost, start, method="Nelder-Mead",
                       options={"maxiter": fit.max_iterations,
                                "xatol": 1e-8, "fatol": 1e-12})
        if res.fun < best_cost:
            best_x, best_cost = res.x, res.fun

    improved = best_cost < cost0
    coeffs = ModelCoefficients(a=tuple(float(v) for v in
                                       (best_x if improved else x0)))
    return FitResult(kind=kind, coefficients=coeffs, cost_initial=cost0,
                     cost_final=min(best_cost, cost0), improved=improved,
                     n_terms=data.n_terms, train_seeds=seeds)
