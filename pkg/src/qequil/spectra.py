"""Energy spectra, spectral gaps, and window statistics.

Everything downstream works in the Hamiltonian eigenbasis, so a spectrum is
just the sorted distinct energies, their degeneracies, and the map from
eigenbasis index to level index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEGENERACY_RTOL",
    "EnergySpectrum",
    "GapSet",
    "spectrum_from_hermitian",
    "max_window_probability",
    "max_window_probability_window",
    "max_gaps_in_window",
    "validated_level_probs",
]

DEGENERACY_RTOL = 1e-10
PROB_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EnergySpectrum:
    """Sorted distinct energy levels with their degeneracies.

    Parameters
    ----------
    levels : array_like
        Strictly increasing distinct energies.
    degeneracies : array_like
        Positive multiplicity of each level; total Hilbert dimension is
        the sum.
    tol : float
        Relative tolerance below which two levels would be considered
        degenerate; adjacent levels must be separated by more than this.
    """

    levels: np.ndarray
    degeneracies: np.ndarray
    tol: float = DEGENERACY_RTOL

    def __post_init__(self):
        levels = np.atleast_1d(np.asarray(self.levels, dtype=float))
        degs = np.atleast_1d(np.asarray(self.degeneracies, dtype=int))
        if levels.ndim != 1 or degs.shape != levels.shape:
            raise ValueError("levels and degeneracies must be matching 1-d sequences")
        if levels.size == 0:
            raise ValueError("spectrum needs at least one level")
        if np.any(degs < 1):
            raise ValueError("degeneracies must be positive integers")
        scale = max(1.0, float(np.abs(levels).max()))
        if levels.size > 1 and np.any(np.diff(levels) <= self.tol * scale):
            raise ValueError(
                "levels must be strictly increasing and separated by more than "
                f"{self.tol:g} * {scale:g}"
            )
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "degeneracies", degs)
        object.__setattr__(self, "_level_of_index",
                           np.repeat(np.arange(levels.size), degs))
        object.__setattr__(self, "_index_energies", np.repeat(levels, degs))

    @property
    def num_levels(self) -> int:
        return int(self.levels.size)

    @property
    def dim(self) -> int:
        return int(self.degeneracies.sum())

    @property
    def level_of_index(self) -> np.ndarray:
        """Map eigenbasis index j in [0, dim) to its level index."""
        return self._level_of_index

    @property
    def index_energies(self) -> np.ndarray:
        """Energy of each eigenbasis index (levels repeated by degeneracy)."""
        return self._index_energies

    @property
    def span(self) -> float:
        return float(self.levels[-1] - self.levels[0])

    @property
    def max_gap(self) -> float:
        """Largest |E_j - E_k|, i.e. the spectral span."""
        return self.span

    def gaps(self) -> "GapSet":
        return GapSet.from_spectrum(self)

    def is_nondegenerate(self) -> bool:
        return bool(np.all(self.degeneracies == 1))

    def to_dict(self) -> dict:
        return {
            "levels": [float(x) for x in self.levels],
            "degeneracies": [int(g) for g in self.degeneracies],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnergySpectrum":
        return cls(np.asarray(data["levels"], dtype=float),
                   np.asarray(data["degeneracies"], dtype=int))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "EnergySpectrum":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class GapSet:
    """Sorted multiset of energy differences E_j - E_k over ordered pairs
    of distinct levels (the zero gap j = k is excluded)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_spectrum(cls, spectrum: EnergySpectrum) -> "GapSet":
        levels = spectrum.levels
        diff = levels[:, None] - levels[None, :]
        off = ~np.eye(levels.size, dtype=bool)
        return cls(diff[off])

    @property
    def count(self) -> int:
        return int(self.values.size)


def spectrum_from_hermitian(matrix, tol: float = DEGENERACY_RTOL):
    """Diagonalize a Hermitian matrix into an :class:`EnergySpectrum`.

    Eigenvalues closer than ``tol * max(1, |E|_max)`` are merged into one
    level; the merge is a transitive closure, so chains of near-equal
    eigenvalues collapse together.

    Returns
    -------
    (EnergySpectrum, ndarray)
        The spectrum and the unitary whose columns are the eigenvectors,
        ordered consistently with ``level_of_index``.
    """
    H = np.asarray(matrix, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    residual = float(np.abs(H - H.conj().T).max()) if H.size else 0.0
    scale = max(1.0, float(np.abs(H).max())) if H.size else 1.0
    if residual > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: residual {residual:.3e} exceeds "
            f"{tol * scale:.3e}"
        )
    eigvals, basis = np.linalg.eigh((H + H.conj().T) / 2.0)
    thr = tol * max(1.0, float(np.abs(eigvals).max()))
    splits = np.nonzero(np.diff(eigvals) > thr)[0] + 1
    groups = np.split(np.arange(eigvals.size), splits)
    levels = np.array([eigvals[g].mean() for g in groups])
    degs = np.array([g.size for g in groups], dtype=int)
    return EnergySpectrum(levels, degs, tol=tol), basis


def validated_level_probs(probs, num_levels: int) -> np.ndarray:
    """Check a level-probability vector: right length, nonnegative, sums to 1."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (num_levels,):
        raise ValueError(f"expected {num_levels} level probabilities, got shape {p.shape}")
    if np.any(p < -PROB_SUM_TOL):
        raise ValueError("level probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"level probabilities sum to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, None)


def max_window_probability_window(spectrum: EnergySpectrum, probs, width: float):
    """Maximum total level probability inside any closed energy window of
    the given width, together with the maximizing window.

    The maximum of the window sum as a function of the window position is
    attained with the left edge sitting on a level, so only ``num_levels``
    candidate windows need to be scanned.

    Returns
    -------
    (float, (float, float))
        The probability and the ``(left, right)`` edges of a maximizing
        window.
    """
    if width <= 0:
        raise ValueError("window width must be positive")
    p = validated_level_probs(probs, spectrum.num_levels)
    levels = spectrum.levels
    cums = np.concatenate(([0.0], np.cumsum(p)))
    right = np.searchsorted(levels, levels + width, side="right")
    sums = cums[right] - cums[: levels.size]
    best = int(np.argmax(sums))
    lo = float(levels[best])
    return float(sums[best]), (lo, lo + width)


def max_window_probability(spectrum: EnergySpectrum, probs, width: float) -> float:
    """Maximum total level probability inside any closed window of the
    given energy width."""
    value, _ = max_window_probability_window(spectrum, probs, width)
    return value


def max_gaps_in_window(gaps: GapSet, width: float) -> int:
    """Maximum number of gaps (with multiplicity) inside any closed window
    of the given width."""
    if width <= 0:
        raise ValueError("window width must be positive")
    vals = gaps.values
    if vals.size == 0:
        return 0
    right = np.searchsorted(vals, vals + width, side="right")
    return int((right - np.arange(vals.size)).max())
