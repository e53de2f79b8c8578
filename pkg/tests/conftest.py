"""Shared fixtures and factories for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nli_planner.poweropt import optimize_powers
from nli_planner.sysgen import GeneratorConfig, generate_system
from nli_planner.types import (ChannelSpec, FiberParams, LinkSpec,
                               ModulationFormat, SpanConfig)


def make_system(seed: int, *, category: int = 1, band_width: float = 0.6,
                n_spans: int = 4, cut_position: str = "center",
                optimize: bool = True) -> LinkSpec:
    """Small randomized system, optionally with optimized launch powers."""
    cfg = GeneratorConfig(category=category, cut_position=cut_position,
                          band_width=band_width, n_spans=n_spans, seed=seed)
    rng = np.random.default_rng(seed)
    link = generate_system(cfg, rng)
    if optimize:
        link, _ = optimize_powers(link, rng)
    return link


def make_single_channel_link(*, n_spans: int = 1, length_km: float = 100.0,
                             rate: float = 0.064, power_w: float = 0.002,
                             f_center: float = 193.8,
                             fmt: ModulationFormat = ModulationFormat.PM_16QAM,
                             fiber: FiberParams | None = None) -> LinkSpec:
    """Deterministic one-channel link for targeted numeric checks."""
    if fiber is None:
        fiber = FiberParams(alpha_db_per_km=0.21, beta2=-21.3, beta3=0.1452,
                            gamma=1.3, f_ref=193.8, name="SMF")
    spans = tuple(SpanConfig(fiber=fiber, length_km=length_km, gain_db=None,
                             noise_figure_db=6.0) for _ in range(n_spans))
    ch = ChannelSpec(f_center=f_center, symbol_rate=rate, roll_off=0.1,
                     format=fmt, power_w_per_span=(power_w,) * n_spans)
    comb = (ch,)
    return LinkSpec(spans=spans, combs=tuple(comb for _ in spans), cut_index=0)


@pytest.fixture
def small_system() -> LinkSpec:
    return make_system(20)
