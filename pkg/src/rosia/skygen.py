"""Synthetic all-sky raw catalog with a realistic bright-end profile.

Test and benchmark runs need a full-sky input catalog.  This generator
produces one with uniformly distributed positions and a visual-
magnitude distribution following the standard bright-end star-count law
log10 N(<m) = const + BETA * m, calibrated so that roughly 5050 stars
are brighter than magnitude 6 (mirroring the real sky) and, after the
default close-pair removal, about 4934 remain.  A controlled number of
tight pairs below the default separation cutoff stands in for binary
stars.

The output is deterministic for a given seed.
"""

from __future__ import annotations

import math

import numpy as np

from .catalog import RawStar

# Bright-end cumulative star-count slope (dex per magnitude).
BETA = 0.51

DEFAULT_SEED = 20240809

# Calibration: singles brighter than 6 and injected close pairs chosen
# so the magnitude-6 catalog after pair removal lands near 4934 stars.
_SINGLES_AT_6 = 5036
_PAIR_COUNT = 55

_MAG_MIN = -1.5
_MAG_FAINT = 6.8


def _sample_magnitudes(rng: np.random.Generator, count: int) -> np.ndarray:
    # Inverse-CDF draw from N(<m) ~ 10^(BETA m) truncated to
    # [_MAG_MIN, _MAG_FAINT].
    lo = 10.0 ** (BETA * _MAG_MIN)
    hi = 10.0 ** (BETA * _MAG_FAINT)
    u = rng.uniform(lo, hi, size=count)
    return np.log10(u) / BETA


def _uniform_sphere(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _vector_to_radec(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ra = np.degrees(np.arctan2(v[:, 1], v[:, 0])) % 360.0
    dec = np.degrees(np.arcsin(np.clip(v[:, 2], -1.0, 1.0)))
    return ra, dec


def synthetic_sky(seed: int = DEFAULT_SEED) -> list[RawStar]:
    """Generate the deterministic synthetic raw catalog.

    Returns RawStar records down to magnitude ~6.8 (about 12600 singles
    plus the injected pairs), suitable for building onboard catalogs at
    magnitude limits up to 6.5.
    """
    rng = np.random.Generator(np.random.Philox(seed))

    frac_at_6 = 10.0 ** (BETA * (6.0 - _MAG_FAINT))
    total = int(round(_SINGLES_AT_6 / frac_at_6))
    mags = _sample_magnitudes(rng, total)
    positions = _uniform_sphere(rng, total)

    # Companion stars: tight pairs well inside the default 0.04 degree
    # rejection radius, both members bright enough to pass a mag-6 cut.
    bright = np.flatnonzero(mags <= 5.8)
    primaries = rng.choice(bright, size=_PAIR_COUNT, replace=False)
    sep = np.radians(rng.uniform(0.008, 0.03, size=_PAIR_COUNT))
    azimuth = rng.uniform(0.0, 2.0 * math.pi, size=_PAIR_COUNT)
    companion_mag = np.minimum(mags[primaries] + rng.uniform(0.0, 1.0, size=_PAIR_COUNT), 5.99)

    companions = np.empty((_PAIR_COUNT, 3))
    for k, p in enumerate(primaries):
        v = positions[p]
        pivot = np.zeros(3)
        pivot[int(np.argmin(np.abs(v)))] = 1.0
        e1 = np.cross(v, pivot)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(v, e1)
        offset = math.cos(azimuth[k]) * e1 + math.sin(azimuth[k]) * e2
        w = v * math.cos(sep[k]) + offset * math.sin(sep[k])
        companions[k] = w / np.linalg.norm(w)

    all_pos = np.concatenate([positions, companions])
    all_mags = np.concatenate([mags, companion_mag])
    ra, dec = _vector_to_radec(all_pos)
    return [
        RawStar(i + 1, float(ra[i]), float(dec[i]), float(all_mags[i]))
        for i in range(len(all_mags))
    ]


def write_csv(stars: list[RawStar], path) -> None:
    """Write records in the raw-catalog CSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,ra_deg,dec_deg,vmag\n")
        for s in stars:
            fh.write(f"{s.id},{s.ra_deg!r},{s.dec_deg!r},{s.mag!r}\n")
