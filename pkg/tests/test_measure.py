import numpy as np
import pytest

from qequil.measure import (Measurement, Projector, distinguishability,
                            distinguishability_series, expectation_series,
                            load_measurement, save_measurement,
                            success_probability, two_outcome)
from qequil.spectra import EnergySpectrum
from qequil.states import QuantumState, dephase, evolve

from helpers import random_mixed, random_pure, trace_distance


@pytest.fixture
def spec():
    return EnergySpectrum([0.0, 0.9, 2.1, 3.4, 5.0], [1, 1, 1, 1, 1])


def _haar_frame(rng, d, k):
    z = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    q, _ = np.linalg.qr(z)
    return q


class TestProjector:
    def test_rejects_non_projector(self):
        m = np.diag([0.5, 0.5]).astype(complex)
        with pytest.raises(ValueError, match="idempotency residual"):
            Projector.from_matrix(m)

    def test_rejects_non_orthonormal_factor(self):
        v = np.array([[1.0], [1.0]], dtype=complex)
        with pytest.raises(ValueError, match="orthonormal"):
            Projector.from_factor(v)

    def test_factor_and_matrix_agree(self, spec):
        rng = np.random.default_rng(0)
        v = _haar_frame(rng, 5, 2)
        p = Projector.from_factor(v)
        q = Projector.from_matrix(v @ v.conj().T)
        assert p.rank == q.rank == 2
        state = random_mixed(rng, spec)
        assert p.expectation(state) == pytest.approx(q.expectation(state), abs=1e-12)

    def test_expectation_paths_agree(self, spec):
        rng = np.random.default_rng(1)
        v = _haar_frame(rng, 5, 3)
        p_fac = Projector.from_factor(v)
        p_mat = Projector.from_matrix(v @ v.conj().T)
        pure = random_pure(rng, spec)
        mixed = random_mixed(rng, spec)
        assert p_mat.expectation(pure) == pytest.approx(p_fac.expectation(pure), abs=1e-12)
        assert p_mat.expectation(mixed) == pytest.approx(p_fac.expectation(mixed), abs=1e-12)


class TestMeasurement:
    def test_residual_reporting(self, spec):
        rng = np.random.default_rng(2)
        v = _haar_frame(rng, 5, 5)
        projectors = [Projector.from_factor(v[:, :2]),
                      Projector.from_factor(v[:, 2:4]),
                      Projector.from_factor(v[:, 4:])]
        m = Measurement(projectors)
        resid = m.residuals()
        assert set(resid) == {"hermiticity", "idempotency", "orthogonality",
                              "completeness"}
        assert max(resid.values()) < 1e-10

    def test_rejects_incomplete(self, spec):
        rng = np.random.default_rng(3)
        v = _haar_frame(rng, 5, 4)
        with pytest.raises(ValueError):
            Measurement([Projector.from_factor(v[:, :2]),
                         Projector.from_factor(v[:, 2:3]),
                         Projector.from_factor(v[:, 3:4])])

    def test_rejects_overlapping(self, spec):
        rng = np.random.default_rng(4)
        v = _haar_frame(rng, 5, 3)
        with pytest.raises(ValueError, match="residuals"):
            Measurement([Projector.from_factor(v),
                         Projector.from_factor(v[:, :2])])


class TestDistinguishability:
    def test_same_state_zero(self, spec):
        rng = np.random.default_rng(5)
        state = random_mixed(rng, spec)
        m = two_outcome(Projector.from_factor(_haar_frame(rng, 5, 2)))
        assert distinguishability(m, state, state) == 0.0

    def test_pure_versus_maximally_mixed(self, spec):
        rng = np.random.default_rng(6)
        state = random_pure(rng, spec)
        mixed = QuantumState.mixed(spec, np.eye(5, dtype=complex) / 5.0)
        m = two_outcome(Projector.rank_one(state.amplitudes))
        assert distinguishability(m, state, mixed) == pytest.approx(1 - 1 / 5, abs=1e-12)

    def test_trivial_projectors_give_zero(self, spec):
        rng = np.random.default_rng(7)
        a, b = random_pure(rng, spec), random_mixed(rng, spec)
        zero = Projector(matrix=np.zeros((5, 5), dtype=complex), rank=0, dim=5)
        full = Projector(matrix=np.eye(5, dtype=complex), rank=5, dim=5)
        m = Measurement([zero, full], validate=True)
        assert distinguishability(m, a, b) == pytest.approx(0.0, abs=1e-12)

    def test_complement_symmetry(self, spec):
        rng = np.random.default_rng(8)
        a, b = random_mixed(rng, spec), random_mixed(rng, spec)
        p = Projector.from_factor(_haar_frame(rng, 5, 2))
        comp = Projector.from_matrix(p.complement_matrix())
        da = distinguishability(two_outcome(p), a, b)
        db = distinguishability(two_outcome(comp), a, b)
        assert da == pytest.approx(db, abs=1e-12)

    def test_refinement_never_decreases(self, spec):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a, b = random_mixed(rng, spec), random_mixed(rng, spec)
            v = _haar_frame(rng, 5, 5)
            coarse = Measurement([Projector.from_factor(v[:, :3]),
                                  Projector.from_factor(v[:, 3:])])
            fine = Measurement([Projector.from_factor(v[:, :1]),
                                Projector.from_factor(v[:, 1:3]),
                                Projector.from_factor(v[:, 3:])])
            assert (distinguishability(fine, a, b)
                    >= distinguishability(coarse, a, b) - 1e-12)

    def test_metric_properties_and_trace_distance_cap(self, spec):
        rng = np.random.default_rng(10)
        for _ in range(15):
            a, b, c = (random_mixed(rng, spec) for _ in range(3))
            v = _haar_frame(rng, 5, 5)
            m = Measurement([Projector.from_factor(v[:, :2]),
                             Projector.from_factor(v[:, 2:])])
            dab = distinguishability(m, a, b)
            assert dab == pytest.approx(distinguishability(m, b, a), abs=1e-14)
            assert dab <= (distinguishability(m, a, c)
                           + distinguishability(m, c, b) + 1e-12)
            assert dab <= trace_distance(a, b) + 1e-12

    def test_series_matches_pointwise(self, spec):
        rng = np.random.default_rng(11)
        state = random_pure(rng, spec)
        omega = dephase(state)
        m = two_outcome(Projector.from_factor(_haar_frame(rng, 5, 2)))
        times = np.linspace(0.0, 7.0, 13)
        series = distinguishability_series(m, state, omega, times)
        pointwise = [distinguishability(m, evolve(state, t), omega) for t in times]
        assert np.abs(series - pointwise).max() < 1e-12

    def test_expectation_series_mixed_path(self, spec):
        rng = np.random.default_rng(12)
        state = random_mixed(rng, spec)
        p = Projector.from_factor(_haar_frame(rng, 5, 2))
        times = np.linspace(0.0, 5.0, 9)
        series = expectation_series(p, state, times)
        pointwise = [p.expectation(evolve(state, t)) for t in times]
        assert np.abs(series - np.array(pointwise)).max() < 1e-12


def test_success_probability():
    assert success_probability(0.0) == 0.5
    assert success_probability(1.0) == 1.0
    assert success_probability(0.98) == pytest.approx(0.99, abs=1e-15)
    with pytest.raises(ValueError):
        success_probability(1.5)
    with pytest.raises(ValueError):
        success_probability(-0.1)


def test_measurement_file_roundtrip(tmp_path, spec):
    rng = np.random.default_rng(13)
    v = _haar_frame(rng, 5, 5)
    m = Measurement([Projector.rank_one(v[:, 0]),
                     Projector.from_factor(v[:, 1:3]),
                     Projector.from_factor(v[:, 3:])])
    path = tmp_path / "meas.json"
    save_measurement(m, path)
    back = load_measurement(path)
    assert back.ranks == (1, 2, 2)
    state = random_mixed(rng, spec)
    assert np.abs(back.outcome_probabilities(state)
                  - m.outcome_probabilities(state)).max() < 1e-12
