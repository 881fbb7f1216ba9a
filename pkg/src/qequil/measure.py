"""Projective measurements and the distinguishability functional.

Distinguishability between two states under a measurement is half the L1
distance between the outcome probability vectors; for a two-outcome
measurement {P, 1-P} it reduces to |tr(a P) - tr(b P)|.
"""
from __future__ import annotations

import json

import numpy as np

from .states import QuantumState, complex_in, complex_out

__all__ = [
    "PROJECTOR_TOL",
    "Projector",
    "Measurement",
    "two_outcome",
    "distinguishability",
    "distinguishability_series",
    "expectation_series",
    "success_probability",
    "save_measurement",
    "load_measurement",
]

# Snapshot-subspace projectors arrive from numerically delicate
# orthonormalization, so the shared acceptance tolerance is looser than the
# 1e-10 that exactly constructed projectors meet.
PROJECTOR_TOL = 1e-8


class Projector:
    """An orthogonal projector, stored as a full matrix or as an orthonormal
    column factor V with P = V V^dag (rank-1 projectors store the vector)."""

    __slots__ = ("_matrix", "factor", "rank", "dim")

    def __init__(self, *, matrix=None, factor=None, rank=None, dim=None):
        self._matrix = matrix
        self.factor = factor
        self.rank = rank
        self.dim = dim

    @classmethod
    def from_matrix(cls, matrix, tol: float = PROJECTOR_TOL) -> "Projector":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("projector must be a square matrix")
        herm = float(np.abs(m - m.conj().T).max()) if m.size else 0.0
        idem = float(np.abs(m @ m - m).max()) if m.size else 0.0
        if herm > tol or idem > tol:
            raise ValueError(
                f"not a projector: hermiticity residual {herm:.3e}, "
                f"idempotency residual {idem:.3e} (tol {tol:g})"
            )
        rank = int(round(np.trace(m).real))
        return cls(matrix=m, rank=rank, dim=m.shape[0])

    @classmethod
    def from_factor(cls, factor, tol: float = PROJECTOR_TOL) -> "Projector":
        v = np.asarray(factor, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        gram = v.conj().T @ v
        resid = float(np.abs(gram - np.eye(v.shape[1])).max())
        if resid > tol:
            raise ValueError(f"factor columns not orthonormal: residual {resid:.3e}")
        return cls(factor=v, rank=v.shape[1], dim=v.shape[0])

    @classmethod
    def rank_one(cls, vector, tol: float = PROJECTOR_TOL) -> "Projector":
        return cls.from_factor(np.asarray(vector, dtype=complex).reshape(-1, 1), tol)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = self.factor @ self.factor.conj().T
        return self._matrix

    def expectation(self, state: QuantumState) -> float:
        """tr(P rho)."""
        if self.factor is not None:
            if state.is_pure:
                return float(np.sum(np.abs(self.factor.conj().T @ state.amplitudes) ** 2))
            return float(np.sum(self.factor.conj() * (state.rho @ self.factor)).real)
        if state.is_pure:
            c = state.amplitudes
            return float(np.vdot(c, self.matrix @ c).real)
        return float(np.vdot(self.matrix, state.rho).real)

    def complement_matrix(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) - self.matrix


def expectation_series(projector: Projector, state: QuantumState, times) -> np.ndarray:
    """tr(P rho_t) for an array of times, without materializing each rho_t.

    For pure states this is one matrix product over the whole time grid.
    """
    times = np.asarray(times, dtype=float)
    energies = state.spectrum.index_energies
    if state.is_pure:
        phases = np.exp(-1j * np.outer(energies, times))  # (d, nt)
        if projector.factor is not None:
            w = projector.factor.conj().T * state.amplitudes[None, :]  # (r, d)
            return np.sum(np.abs(w @ phases) ** 2, axis=0)
        ct = state.amplitudes[:, None] * phases  # (d, nt)
        return np.sum(ct.conj() * (projector.matrix @ ct), axis=0).real
    # Mixed: tr(P rho_t) = sum_jk conj(P)_jk rho_jk e^{-i(E_j - E_k)t}.
    coeff = (projector.matrix.conj() * state.rho).ravel()
    gaps = (energies[:, None] - energies[None, :]).ravel()
    out = np.empty(times.size)
    chunk = max(1, int(4e6 // max(gaps.size, 1)))
    for start in range(0, times.size, chunk):
        t = times[start:start + chunk]
        out[start:start + chunk] = (coeff @ np.exp(-1j * np.outer(gaps, t))).real
    return out


class Measurement:
    """Ordered projective outcomes that sum to the identity."""

    def __init__(self, projectors, tol: float = PROJECTOR_TOL, validate: bool = True):
        self.projectors = tuple(projectors)
        if not self.projectors:
            raise ValueError("measurement needs at least one outcome")
        self.dim = self.projectors[0].dim
        if any(p.dim != self.dim for p in self.projectors):
            raise ValueError("projectors have mismatched dimensions")
        if sum(p.rank for p in self.projectors) != self.dim:
            raise ValueError("outcome ranks must sum to the dimension")
        if validate:
            resid = self.residuals()
            worst = max(resid.values())
            if worst > tol:
                raise ValueError(f"measurement residuals exceed {tol:g}: {resid}")

    @property
    def ranks(self) -> tuple:
        return tuple(p.rank for p in self.projectors)

    @property
    def num_outcomes(self) -> int:
        return len(self.projectors)

    def residuals(self) -> dict:
        """Worst hermiticity, idempotency, orthogonality, and completeness
        residuals, for reporting against the shared tolerance."""
        herm = idem = 0.0
        for p in self.projectors:
            if p.factor is not None:
                g = p.factor.conj().T @ p.factor
                idem = max(idem, float(np.abs(g - np.eye(p.rank)).max()))
            else:
                m = p.matrix
                herm = max(herm, float(np.abs(m - m.conj().T).max()))
                idem = max(idem, float(np.abs(m @ m - m).max()))
        ortho = 0.0
        for i, p in enumerate(self.projectors):
            for q in self.projectors[i + 1:]:
                if p.factor is not None and q.factor is not None:
                    ortho = max(ortho, float(np.linalg.norm(p.factor.conj().T @ q.factor, 2)))
                else:
                    ortho = max(ortho, float(np.abs(p.matrix @ q.matrix).max()))
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for p in self.projectors:
            total += p.matrix
        complete = float(np.abs(total - np.eye(self.dim)).max())
        return {"hermiticity": herm, "idempotency": idem,
                "orthogonality": ortho, "completeness": complete}

    def outcome_probabilities(self, state: QuantumState) -> np.ndarray:
        return np.array([p.expectation(state) for p in self.projectors])


def two_outcome(projector, tol: float = PROJECTOR_TOL) -> Measurement:
    """Measurement {P, 1 - P} from a projector (matrix, factor-backed
    Projector, or vector)."""
    if isinstance(projector, Projector):
        p = projector
    else:
        p = Projector.from_matrix(projector, tol)
    comp = Projector(matrix=p.complement_matrix(), rank=p.dim - p.rank, dim=p.dim)
    return Measurement([p, comp], tol=tol)


def distinguishability(m: Measurement, a: QuantumState, b: QuantumState) -> float:
    """Half the L1 distance between the outcome statistics of two states."""
    if a.dim != b.dim or a.dim != m.dim:
        raise ValueError("measurement and states have mismatched dimensions")
    pa = m.outcome_probabilities(a)
    pb = m.outcome_probabilities(b)
    return 0.5 * float(np.abs(pa - pb).sum())


def distinguishability_series(m: Measurement, state: QuantumState,
                              fixed: QuantumState, times) -> np.ndarray:
    """D(rho_t, fixed) under m for an array of times, with state evolving
    and the comparison state held fixed."""
    times = np.asarray(times, dtype=float)
    total = np.zeros(times.size)
    for p in m.projectors:
        total += np.abs(expectation_series(p, state, times) - p.expectation(fixed))
    return 0.5 * total


def success_probability(distance: float) -> float:
    """Probability of correctly guessing which of two equally likely states
    was measured, given their distinguishability."""
    if not 0.0 <= distance <= 1.0 + 1e-12:
        raise ValueError(f"distinguishability {distance!r} outside [0, 1]")
    return 0.5 + 0.5 * min(distance, 1.0)


def save_measurement(m: Measurement, path) -> None:
    entries = []
    for p in m.projectors:
        if p.rank == 1 and p.factor is not None:
            entries.append({"rank_one": complex_out(p.factor[:, 0])})
        else:
            entries.append(complex_out(p.matrix))
    with open(path, "w") as fh:
        json.dump({"projectors": entries}, fh)


def load_measurement(path, tol: float = PROJECTOR_TOL) -> Measurement:
    with open(path) as fh:
        payload = json.load(fh)
    projectors = []
    for entry in payload["projectors"]:
        if isinstance(entry, dict) and "rank_one" in entry:
            v = complex_in(entry["rank_one"])
            v = v / np.linalg.norm(v)
            projectors.append(Projector.rank_one(v, tol))
        else:
            projectors.append(Projector.from_matrix(complex_in(entry), tol))
    return Measurement(projectors, tol=tol)
