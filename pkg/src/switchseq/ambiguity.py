"""Spatio-temporal ambiguity function and the integral objective over the
angle-Doppler region, estimated with deterministic scrambled-Sobol sampling.

The objective is evaluated with a fixed low-discrepancy point set per
(seed, sample count), so comparing two sequences uses common random numbers
and repeated runs are bit-stable. Because the steering part of every basis
vector is independent of the switching sequence, an ObjectiveEvaluator
precomputes all per-sample steering products once and each sequence
evaluation only pays for the Doppler phases.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .arrays import ArrayModel, steering_matrix
from .signal import StructuralParams, basis
from .switching import SwitchingSequence


class DegenerateDirectionError(ValueError):
    """All element gains vanish for a direction, so the basis has zero norm."""


@dataclass(frozen=True)
class Region:
    """Integration region: angle boxes plus a bound on the Doppler difference."""

    azimuth: tuple[float, float] = (0.0, 2.0 * math.pi)
    elevation: tuple[float, float] = (0.0, math.pi)
    doppler_bound: float = 1.0

    def __post_init__(self):
        if not self.doppler_bound > 0:
            raise ValueError("doppler bound must be positive")
        if not (self.azimuth[0] < self.azimuth[1] and self.elevation[0] < self.elevation[1]):
            raise ValueError("angle ranges must be non-degenerate")

    @classmethod
    def default_for(cls, delta_t: float, doppler_fraction: float = 0.25) -> "Region":
        """Full-sphere box with the Doppler bound a fraction of 1/(2*delta_t)."""
        return cls(doppler_bound=doppler_fraction / (2.0 * delta_t))


@dataclass(frozen=True)
class ObjectiveConfig:
    """Settings for the integral objective f_P."""

    power: int = 6
    samples: int = 4096
    seed: int = 0
    sin_elevation: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.power < 2 or self.power % 2 != 0:
            raise ValueError("power must be an even integer >= 2")
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def normalized_correlation(b1: np.ndarray, b2: np.ndarray) -> complex:
    """b1^H b2 / (||b1|| ||b2||); raises on a zero-norm input."""
    n1 = np.linalg.norm(b1)
    n2 = np.linalg.norm(b2)
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateDirectionError("basis vector has zero norm")
    return complex(np.vdot(b1, b2) / (n1 * n2))


def ambiguity_value(array: ArrayModel, seq: SwitchingSequence,
                    mu: StructuralParams, mu_prime: StructuralParams) -> complex:
    """Normalized inner product of the two basis vectors; |result| <= 1."""
    return normalized_correlation(basis(array, seq, mu), basis(array, seq, mu_prime))


class ObjectiveEvaluator:
    """Precomputed QMC machinery for evaluating f_P over many sequences.

    All sequences passed to evaluate() must share the element count, slot
    duration, and snapshot count given at construction; those fix the sample
    points and steering products (common random numbers).
    """

    def __init__(self, array: ArrayModel, region: Region, config: ObjectiveConfig,
                 delta_t: float, snapshots: int = 1):
        self.array = array
        self.region = region
        self.config = config
        self.delta_t = float(delta_t)
        self.snapshots = int(snapshots)

        m = array.num_elements
        n = config.samples
        sobol = qmc.Sobol(d=5, scramble=True, seed=config.seed)
        u = sobol.random(n)

        az0, az1 = region.azimuth
        el0, el1 = region.elevation
        phi = az0 + u[:, 0] * (az1 - az0)
        phi_p = az0 + u[:, 2] * (az1 - az0)
        if config.sin_elevation:
            c0, c1 = math.cos(el0), math.cos(el1)
            theta = np.arccos(c0 + u[:, 1] * (c1 - c0))
            theta_p = np.arccos(c0 + u[:, 3] * (c1 - c0))
            el_measure = abs(c0 - c1)
        else:
            theta = el0 + u[:, 1] * (el1 - el0)
            theta_p = el0 + u[:, 3] * (el1 - el0)
            el_measure = el1 - el0
        dnu = region.doppler_bound * (2.0 * u[:, 4] - 1.0)

        self.volume = (az1 - az0) ** 2 * el_measure ** 2 * (2.0 * region.doppler_bound)
        self.delta_doppler = dnu
        self.azimuth = phi
        self.elevation = theta
        self.azimuth_prime = phi_p
        self.elevation_prime = theta_p

        g = steering_matrix(array, phi, theta)          # (n, M)
        g_p = steering_matrix(array, phi_p, theta_p)    # (n, M)
        norm = np.sqrt(self.snapshots * np.sum(np.abs(g) ** 2, axis=1))
        norm_p = np.sqrt(self.snapshots * np.sum(np.abs(g_p) ** 2, axis=1))
        ok = (norm > 0.0) & (norm_p > 0.0)
        self.degenerate_count = int(n - ok.sum())
        denom = np.where(ok, norm * norm_p, 1.0)
        # steering cross-products, zeroed where a direction is degenerate
        self._cross = np.where(ok[:, None], np.conj(g) * g_p / denom[:, None], 0.0)
        # inter-snapshot Doppler factor: geometric sum over snapshot offsets
        # (the 1/snapshots normalization already sits in the basis norms)
        if self.snapshots > 1:
            offsets = np.arange(self.snapshots) * m * self.delta_t
            self._snapshot_factor = np.abs(
                np.exp(2j * math.pi * np.outer(dnu, offsets)).sum(axis=1)
            )
        else:
            self._snapshot_factor = None

    def _magnitudes(self, slots: np.ndarray, lo: int, hi: int) -> np.ndarray:
        eta_within = slots * self.delta_t
        phases = np.exp(
            2j * math.pi * np.outer(self.delta_doppler[lo:hi], eta_within)
        )
        mags = np.abs((self._cross[lo:hi] * phases).sum(axis=1))
        if self._snapshot_factor is not None:
            mags = mags * self._snapshot_factor[lo:hi]
        return mags

    def evaluate(self, seq: SwitchingSequence) -> float:
        """QMC estimate of f_P for one sequence."""
        if seq.num_elements != self.array.num_elements:
            raise ValueError("sequence does not match the evaluator's array")
        if seq.delta_t != self.delta_t or seq.snapshots != self.snapshots:
            raise ValueError("sequence timing does not match the evaluator")
        n = self.config.samples
        slots = seq.slot_of()
        if self.config.workers == 1:
            mags = self._magnitudes(slots, 0, n)
        else:
            # fixed chunk grid so the per-sample values (and hence the ordered
            # reduction below) are identical for any worker count
            chunk = 1024
            bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
            mags = np.empty(n)
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                futures = {
                    pool.submit(self._magnitudes, slots, lo, hi): (lo, hi)
                    for lo, hi in bounds
                }
                for fut, (lo, hi) in futures.items():
                    mags[lo:hi] = fut.result()
        total = np.sum(mags ** self.config.power)
        return float(self.volume * total / n)

    @classmethod
    def for_sequence(cls, array: ArrayModel, region: Region,
                     config: ObjectiveConfig, seq: SwitchingSequence) -> "ObjectiveEvaluator":
        return cls(array, region, config, seq.delta_t, seq.snapshots)


def objective(array: ArrayModel, seq: SwitchingSequence, region: Region,
              config: ObjectiveConfig) -> float:
    """One-shot f_P evaluation (builds a single-use evaluator)."""
    return ObjectiveEvaluator.for_sequence(array, region, config, seq).evaluate(seq)


DB_FLOOR = -100.0


@dataclass(frozen=True)
class AmbiguitySurface:
    """|X| on a (angle offset, Doppler difference) grid around a fixed reference."""

    doppler_hz: np.ndarray        # (Nd,) Doppler-difference axis
    angle_offset_deg: np.ndarray  # (Na,) angle offsets from the reference
    angle_axis: str               # "eoa" or "aoa"
    magnitude: np.ndarray         # (Na, Nd) linear |X|
    reference: StructuralParams

    def __post_init__(self):
        for name in ("doppler_hz", "angle_offset_deg", "magnitude"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.magnitude.shape != (self.angle_offset_deg.size, self.doppler_hz.size):
            raise ValueError("magnitude shape must be (n_angles, n_dopplers)")

    @property
    def magnitude_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(self.magnitude, 10 ** (DB_FLOOR / 20.0)))


def ambiguity_surface(array: ArrayModel, seq: SwitchingSequence,
                      mu: StructuralParams, doppler_hz, angle_offset_deg,
                      angle_axis: str = "eoa") -> AmbiguitySurface:
    """Sweep mu' over Doppler differences and angle offsets with mu fixed.

    The angle axis offsets either the elevation ("eoa") or the azimuth
    ("aoa") of arrival relative to the reference.
    """
    doppler_hz = np.asarray(doppler_hz, dtype=float)
    angle_offset_deg = np.asarray(angle_offset_deg, dtype=float)
    if doppler_hz.size == 0 or angle_offset_deg.size == 0:
        raise ValueError("sweep grids must be non-empty")
    if np.any(np.diff(doppler_hz) <= 0) or np.any(np.diff(angle_offset_deg) <= 0):
        raise ValueError("sweep grids must be strictly increasing")

    offsets = np.radians(angle_offset_deg)
    if angle_axis == "eoa":
        el = mu.rx_elevation + offsets
        if np.any(el < 0) or np.any(el > math.pi):
            raise ValueError("elevation sweep leaves [0, pi]; narrow the grid")
        az = np.full_like(el, mu.rx_azimuth)
    elif angle_axis == "aoa":
        az = np.mod(mu.rx_azimuth + offsets, 2 * math.pi)
        el = np.full_like(az, mu.rx_elevation)
    else:
        raise ValueError("angle_axis must be 'eoa' or 'aoa'")

    b_ref = basis(array, seq, mu)
    norm_ref = np.linalg.norm(b_ref)
    if norm_ref == 0.0:
        raise DegenerateDirectionError("reference direction has zero array response")

    g = steering_matrix(array, az, el)                      # (Na, M)
    g_tiled = np.tile(g, (1, seq.snapshots))                # (Na, M*S)
    norms = np.linalg.norm(g_tiled, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateDirectionError("sweep contains a zero-response direction")

    eta = seq.eta(centered=True)
    nu_prime = mu.doppler_hz + doppler_hz
    phases = np.exp(2j * math.pi * np.outer(eta, nu_prime))  # (M*S, Nd)
    numer = (np.conj(b_ref)[None, :] * g_tiled) @ phases     # (Na, Nd)
    mag = np.abs(numer) / (norm_ref * norms[:, None])
    return AmbiguitySurface(doppler_hz, angle_offset_deg, angle_axis, mag, mu)


def save_surface_csv(surface: AmbiguitySurface, path: str | Path,
                     metadata: dict | None = None) -> None:
    """Write the surface in dB as long-format CSV plus a JSON sidecar."""
    path = Path(path)
    db = surface.magnitude_db
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_doppler_hz", "angle_deg", "magnitude_db"])
        for a, angle in enumerate(surface.angle_offset_deg):
            for d, dop in enumerate(surface.doppler_hz):
                writer.writerow([repr(float(dop)), repr(float(angle)), repr(float(db[a, d]))])
    sidecar = {
        "angle_axis": surface.angle_axis,
        "angle_offset_deg": [float(x) for x in surface.angle_offset_deg],
        "delta_doppler_hz": [float(x) for x in surface.doppler_hz],
        "reference": {
            "rx_azimuth_rad": surface.reference.rx_azimuth,
            "rx_elevation_rad": surface.reference.rx_elevation,
            "doppler_hz": surface.reference.doppler_hz,
        },
    }
    if metadata:
        sidecar.update(metadata)
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(sidecar, indent=2) + "\n"
    )
