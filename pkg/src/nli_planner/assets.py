"""Versioned read-only data assets: fiber presets, Phi table, coefficient
tables and sensitivity thresholds.  Files are checksum-verified on first load.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .types import (CfmKind, FiberParams, ModelCoefficients, ModelVariant,
                    ModulationFormat, ValidationError)


class AssetError(RuntimeError):
    """A shipped data file is missing, corrupt, or has a bad version tag."""


def _read_bytes(name: str) -> bytes:
    return resources.files("nli_planner.data").joinpath(name).read_bytes()


@lru_cache(maxsize=None)
def _checksums() -> dict[str, str]:
    manifest = json.loads(_read_bytes("checksums.json"))
    if manifest.get("version") != 1:
        raise AssetError("unsupported checksum manifest version")
    return dict(manifest["sha256"])


@lru_cache(maxsize=None)
def _load(name: str) -> dict:
    raw = _read_bytes(name)
    expected = _checksums().get(name)
    if expected is None:
        raise AssetError(f"{name} missing from checksum manifest")
    digest = hashlib.sha256(raw).hexdigest()
    if digest != expected:
        raise AssetError(f"{name} checksum mismatch: {digest}")
    doc = json.loads(raw)
    if doc.get("version") != 1:
        raise AssetError(f"{name}: unsupported version {doc.get('version')}")
    return doc


@lru_cache(maxsize=None)
def fiber_presets() -> dict[str, FiberParams]:
    doc = _load("fiber_presets.json")
    f_ref = float(doc["f_ref_thz"])
    out = {}
    for name, row in doc["presets"].items():
        out[name] = FiberParams(
            alpha_db_per_km=float(row["alpha_db_per_km"]),
            beta2=float(row["beta2_ps2_per_km"]),
            beta3=float(row["beta3_ps3_per_km"]),
            gamma=float(row["gamma_per_w_km"]),
            f_ref=f_ref,
            name=name,
        )
    return out


@lru_cache(maxsize=None)
def phi_table() -> dict[ModulationFormat, Fraction]:
    doc = _load("phi_table.json")
    return {ModulationFormat(k): Fraction(v) for k, v in doc["phi"].items()}


@lru_cache(maxsize=None)
def qam_thresholds_db() -> dict[ModulationFormat, float]:
    doc = _load("qam_thresholds.json")
    return {ModulationFormat(k): float(v)
            for k, v in doc["snr_threshold_db"].items()}


@lru_cache(maxsize=None)
def gaussian_mi_range() -> tuple[float, float]:
    doc = _load("qam_thresholds.json")
    lo, hi = doc["gaussian_mi_range_bits"]
    return float(lo), float(hi)


@lru_cache(maxsize=None)
def shipped_coefficients(kind: CfmKind) -> ModelCoefficients:
    if kind is CfmKind.CFM1:
        raise ValidationError("CFM1 has no coefficient table")
    doc = _load(f"coefficients_{kind.value}.json")
    if doc["variant"] != kind.value:
        raise AssetError(f"coefficient file variant mismatch for {kind.value}")
    return ModelCoefficients(a=tuple(float(x) for x in doc["a"]))


def identity_coefficients(kind: CfmKind) -> ModelCoefficients:
    """Coefficients forcing every correction factor to exactly 1.

    Zeroing the format-dependent addends (a2 = a4 = a10 = a12 = 0) with unit
    offsets (a1 = a9 = 1) makes CFM2 reduce to CFM1 bit-for-bit.
    """
    if kind is CfmKind.CFM1:
        raise ValidationError("CFM1 has no coefficients")
    a = [0.0] * kind.n_coefficients
    a[0] = 1.0   # a1
    a[8] = 1.0   # a9
    # Exponent slots kept at 1 so arbitrary inputs stay finite.
    for idx in (2, 4, 6, 7, 10, 12, 14, 16, 17):
        a[idx] = 1.0
    if kind is CfmKind.CFM4:
        for idx in (19, 21, 23):  # a20, a22, a24
            a[idx] = 1.0
    return ModelCoefficients(a=tuple(a))


def model(kind: CfmKind) -> ModelVariant:
    """Variant with its shipped coefficient table (none for CFM1)."""
    if kind is CfmKind.CFM1:
        return ModelVariant(kind=kind)
    return ModelVariant(kind=kind, coefficients=shipped_coefficients(kind))
