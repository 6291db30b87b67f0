"""Onboard catalog construction, persistence, and sub-catalog extraction.

The onboard catalog stores, per star, the inertial-frame unit vector,
the visual magnitude, and the sorted angular distances to its two
nearest catalog neighbors (``nn1 <= nn2``, the "triplet feature").
Entries are kept sorted by magnitude so the magnitude window of a
sub-catalog query is a binary search.

Storage is O(M): six floats plus an integer id per star.

File format (little-endian)::

    magic   8 bytes  b"ROSIACAT"
    u32     version (currently 1)
    u32     star count M
    f64     magnitude limit
    f64     minimum-separation filter (radians)
    32 B    source hash (SHA-256 of the raw input records)
    M x     { u32 id, 3 x f64 vector, f64 magnitude, 2 x f64 feature }
    u32     CRC-32 of everything after the magic
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
import zlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

MAGIC = b"ROSIACAT"
FORMAT_VERSION = 1

# Default binary-star rejection radius.  Chosen so that filtering a
# bright-end all-sky input at magnitude 6 lands near the documented
# ~4934 surviving stars; it is a config knob, not a constant of nature.
DEFAULT_MIN_SEP_RAD = math.radians(0.04)

_STAR_DTYPE = np.dtype(
    [
        ("id", "<u4"),
        ("vec", "<f8", (3,)),
        ("mag", "<f8"),
        ("nn1", "<f8"),
        ("nn2", "<f8"),
    ]
)


class EmptyCatalog(Exception):
    """Fewer than three stars survived filtering."""


class FormatError(Exception):
    """Catalog file is malformed (magic, version, checksum, or invariants)."""


@dataclass(frozen=True, slots=True)
class RawStar:
    """One input-catalog record: equatorial position in degrees."""

    id: int
    ra_deg: float
    dec_deg: float
    mag: float


class CatalogStar(NamedTuple):
    id: int
    vector: np.ndarray
    magnitude: float
    nn1: float
    nn2: float


@dataclass(frozen=True)
class OnboardCatalog:
    """Magnitude-sorted star table with per-star triplet features."""

    ids: np.ndarray  # (M,) uint32
    vectors: np.ndarray  # (M, 3) float64, unit rows
    mags: np.ndarray  # (M,) float64, ascending
    nn1: np.ndarray  # (M,) float64
    nn2: np.ndarray  # (M,) float64
    mag_limit: float
    min_sep_rad: float
    source_hash: bytes

    def __len__(self) -> int:
        return len(self.ids)

    def star(self, index: int) -> CatalogStar:
        return CatalogStar(
            int(self.ids[index]),
            self.vectors[index],
            float(self.mags[index]),
            float(self.nn1[index]),
            float(self.nn2[index]),
        )


def radec_to_vector(ra_deg, dec_deg) -> np.ndarray:
    """Equatorial degrees to a unit vector.

    Convention: x = cos(dec) cos(ra), y = cos(dec) sin(ra), z = sin(dec).
    """
    ra = np.deg2rad(ra_deg)
    dec = np.deg2rad(dec_deg)
    return np.stack(
        [np.cos(dec) * np.cos(ra), np.cos(dec) * np.sin(ra), np.sin(dec)], axis=-1
    )


def read_raw_csv(path) -> list[RawStar]:
    """Read a raw catalog CSV with header ``id,ra_deg,dec_deg,vmag``."""
    stars = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"id", "ra_deg", "dec_deg", "vmag"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise FormatError(
                f"raw catalog must have columns {sorted(expected)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            stars.append(
                RawStar(
                    int(row["id"]),
                    float(row["ra_deg"]),
                    float(row["dec_deg"]),
                    float(row["vmag"]),
                )
            )
    return stars


def _blocked_angles_apply(vectors: np.ndarray, fn, block: int = 512) -> None:
    """Call fn(start, angles_block) over the full pairwise angle matrix.

    angles_block rows have the self-distance preset to +inf.  Runs in
    O(M^2) time but only O(block * M) memory.
    """
    m = len(vectors)
    for start in range(0, m, block):
        stop = min(start + block, m)
        dots = vectors[start:stop] @ vectors.T
        np.clip(dots, -1.0, 1.0, out=dots)
        angles = np.arccos(dots)
        angles[np.arange(stop - start), np.arange(start, stop)] = np.inf
        fn(start, angles)


def nearest_two_features(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per star, the two smallest angular distances to the other stars."""
    m = len(vectors)
    if m < 3:
        raise ValueError("need at least 3 stars for nearest-two features")
    nn1 = np.empty(m)
    nn2 = np.empty(m)

    def take(start, angles):
        two = np.partition(angles, 1, axis=1)[:, :2]
        nn1[start : start + len(angles)] = two.min(axis=1)
        nn2[start : start + len(angles)] = two.max(axis=1)

    _blocked_angles_apply(vectors, take)
    return nn1, nn2


def _close_pair_mask(vectors: np.ndarray, min_sep: float) -> np.ndarray:
    """True for every star with some neighbor closer than min_sep."""
    m = len(vectors)
    mask = np.zeros(m, dtype=bool)
    if min_sep <= 0.0:
        return mask

    def mark(start, angles):
        mask[start : start + len(angles)] |= (angles < min_sep).any(axis=1)

    _blocked_angles_apply(vectors, mark)
    return mask


def _hash_raw(raw: list[RawStar]) -> bytes:
    h = hashlib.sha256()
    for s in raw:
        h.update(struct.pack("<iddd", s.id, s.ra_deg, s.dec_deg, s.mag))
    return h.digest()


def build_onboard_catalog(
    raw: list[RawStar],
    mag_limit: float,
    min_sep_rad: float = DEFAULT_MIN_SEP_RAD,
) -> OnboardCatalog:
    """Filter, de-binarize, and featurize a raw catalog.

    Keeps stars at magnitude <= mag_limit, removes *both* members of any
    pair closer than min_sep_rad (a close pair is unresolvable in either
    role), computes the nearest-two features over the surviving set, and
    sorts by magnitude.

    Raises EmptyCatalog when fewer than 3 stars survive.
    """
    kept = [s for s in raw if s.mag <= mag_limit]
    if len(kept) < 3:
        raise EmptyCatalog(f"only {len(kept)} stars at magnitude <= {mag_limit}")
    ids = np.array([s.id for s in kept], dtype=np.uint32)
    mags = np.array([s.mag for s in kept])
    vectors = radec_to_vector(
        np.array([s.ra_deg for s in kept]), np.array([s.dec_deg for s in kept])
    )

    close = _close_pair_mask(vectors, min_sep_rad)
    if (len(kept) - int(close.sum())) < 3:
        raise EmptyCatalog("fewer than 3 stars survive the close-pair filter")
    ids, mags, vectors = ids[~close], mags[~close], vectors[~close]

    nn1, nn2 = nearest_two_features(vectors)
    order = np.argsort(mags, kind="stable")
    return OnboardCatalog(
        ids=ids[order],
        vectors=vectors[order],
        mags=mags[order],
        nn1=nn1[order],
        nn2=nn2[order],
        mag_limit=float(mag_limit),
        min_sep_rad=float(min_sep_rad),
        source_hash=_hash_raw(raw),
    )


def extract_sub_catalogs(
    scene,
    cat: OnboardCatalog,
    alpha_eps: float,
    eps_v: float,
    k: int = 2,
) -> list[np.ndarray]:
    """Feasible catalog indices per scene star.

    A catalog star j is feasible for scene star i when its magnitude is
    within eps_v of the star's and each of the first ``k`` neighbor
    distances agrees within 2 * alpha_eps.  The magnitude window is
    located by binary search on the sorted catalog, then the feature
    filter is applied to the slice.  ``k`` = 0 degenerates to the
    magnitude-only filter used by the baseline bound.
    """
    subcats = []
    tol = 2.0 * alpha_eps
    for star in scene:
        lo = int(np.searchsorted(cat.mags, star.magnitude - eps_v, side="left"))
        hi = int(np.searchsorted(cat.mags, star.magnitude + eps_v, side="right"))
        idx = np.arange(lo, hi)
        if k >= 1 and len(idx):
            idx = idx[np.abs(cat.nn1[idx] - star.nn1) <= tol]
        if k >= 2 and len(idx):
            idx = idx[np.abs(cat.nn2[idx] - star.nn2) <= tol]
        subcats.append(idx)
    return subcats


def save_catalog(cat: OnboardCatalog, path) -> None:
    """Write the catalog in the binary format described in the module doc."""
    records = np.empty(len(cat), dtype=_STAR_DTYPE)
    records["id"] = cat.ids
    records["vec"] = cat.vectors
    records["mag"] = cat.mags
    records["nn1"] = cat.nn1
    records["nn2"] = cat.nn2
    payload = (
        struct.pack("<II", FORMAT_VERSION, len(cat))
        + struct.pack("<dd", cat.mag_limit, cat.min_sep_rad)
        + cat.source_hash
        + records.tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_catalog(path) -> OnboardCatalog:
    """Read a catalog file, validating format and catalog invariants."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8 + 16 + 32 + 4:
        raise FormatError("catalog file truncated")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic; not an onboard catalog file")
    payload, (crc,) = blob[len(MAGIC) : -4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != crc:
        raise FormatError("checksum mismatch; catalog file corrupted")
    version, count = struct.unpack_from("<II", payload, 0)
    if version != FORMAT_VERSION:
        raise FormatError(
            f"unsupported catalog version: expected {FORMAT_VERSION}, found {version}"
        )
    mag_limit, min_sep_rad = struct.unpack_from("<dd", payload, 8)
    source_hash = payload[24:56]
    body = payload[56:]
    if len(body) != count * _STAR_DTYPE.itemsize:
        raise FormatError("catalog file truncated")
    records = np.frombuffer(body, dtype=_STAR_DTYPE).copy()
    cat = OnboardCatalog(
        ids=records["id"].copy(),
        vectors=records["vec"].copy(),
        mags=records["mag"].copy(),
        nn1=records["nn1"].copy(),
        nn2=records["nn2"].copy(),
        mag_limit=mag_limit,
        min_sep_rad=min_sep_rad,
        source_hash=source_hash,
    )
    _validate(cat)
    return cat


def _validate(cat: OnboardCatalog) -> None:
    norms = np.linalg.norm(cat.vectors, axis=1)
    if len(cat) and np.max(np.abs(norms - 1.0)) > 1e-9:
        raise FormatError("catalog vectors are not unit length")
    if np.any(np.diff(cat.mags) < 0.0):
        raise FormatError("catalog magnitudes are not sorted")
    if np.any(cat.nn1 <= 0.0) or np.any(cat.nn2 < cat.nn1):
        raise FormatError("catalog triplet features violate 0 < nn1 <= nn2")
