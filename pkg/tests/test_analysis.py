"""Phase laws, fidelity, classification, and the derived analyses."""

import math

import numpy as np
import pytest

from topochain.analysis import (
    BlochState,
    apply_correction,
    band_flatness,
    compare_protocols,
    critical_period_sweep,
    expected_phase,
    phase_correction,
    protocol_phase,
)
from topochain.core import EvolutionConfig
from topochain.ensemble import EnsembleSpec
from topochain.errors import ConfigurationError
from topochain.metrics import (
    Z4_PHASES,
    average_fidelity,
    circular_distance,
    wrap_phase,
    z4_classify,
    z4_label,
)
from topochain.protocols import ChainModel


def test_wrap_phase():
    assert wrap_phase(0.0) == 0.0
    assert wrap_phase(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert wrap_phase(math.pi) == pytest.approx(math.pi)
    assert wrap_phase(7 * math.pi) == pytest.approx(math.pi)
    arr = wrap_phase(np.array([0.0, 2 * math.pi, -3 * math.pi]))
    np.testing.assert_allclose(arr, [0.0, 0.0, math.pi])


def test_circular_distance():
    assert circular_distance(0.1, 0.05 + 2 * math.pi) == pytest.approx(0.05)
    assert circular_distance(math.pi - 0.01, -math.pi + 0.01) == pytest.approx(0.02)
    assert circular_distance(0.0, math.pi) == pytest.approx(math.pi)


def test_z4_classification():
    assert z4_classify(1.57) == pytest.approx(math.pi / 2)
    assert z4_classify(-3.10) == pytest.approx(math.pi)
    assert z4_classify(3.10) == pytest.approx(math.pi)
    assert z4_classify(0.01) == 0.0
    assert z4_classify(math.pi / 4) is None
    assert z4_classify(0.2, tolerance=0.25) == 0.0
    with pytest.raises(ValueError):
        z4_classify(0.0, tolerance=0.0)
    with pytest.raises(ValueError):
        z4_classify(0.0, tolerance=math.pi / 4)
    assert set(Z4_PHASES) == {0.0, math.pi / 2, math.pi, -math.pi / 2}


def test_z4_labels():
    assert z4_label(None) == "unclassified"
    assert z4_label(math.pi / 2) == "pi/2"
    assert z4_label(-math.pi / 2) == "-pi/2"
    assert z4_label(0.0) == "0"
    assert z4_label(math.pi) == "pi"


def test_average_fidelity_anchors():
    # F = 1/2 + |A|^2/6 + |A| cos(arg A)/3
    assert average_fidelity(1.0 + 0.0j) == pytest.approx(1.0)
    assert average_fidelity(0.0j) == pytest.approx(0.5)
    assert average_fidelity(1.0j) == pytest.approx(2.0 / 3.0)
    assert average_fidelity(-1.0 + 0.0j) == pytest.approx(1.0 / 3.0)
    assert average_fidelity(0.5 + 0.0j) == pytest.approx(0.5 + 0.25 / 6 + 0.5 / 3)
    with pytest.raises(ConfigurationError):
        average_fidelity(1.5 + 0.0j)


def test_average_fidelity_monotone_in_alignment():
    mags = np.full(50, 0.8)
    gammas = np.linspace(0.0, math.pi, 50)
    f = [average_fidelity(m * np.exp(1j, dtype=complex) ** 0 * np.exp(1j * g))
         for m, g in zip(mags, gammas)]
    assert all(a >= b - 1e-15 for a, b in zip(f, f[1:]))


def test_expected_phase_laws():
    assert expected_phase(4, "even_ssh") == pytest.approx(math.pi / 2)
    assert expected_phase(20, "even_ssh") == pytest.approx(math.pi / 2)
    assert expected_phase(22, "even_ssh") == pytest.approx(-math.pi / 2)
    assert expected_phase(6, "even_ssh") == pytest.approx(-math.pi / 2)
    assert expected_phase(5, "odd_topological") == pytest.approx(0.0)
    assert expected_phase(21, "odd_topological") == pytest.approx(0.0)
    assert expected_phase(19, "odd_topological") == pytest.approx(math.pi)
    assert expected_phase(7, "odd_topological") == pytest.approx(math.pi)
    with pytest.raises(ValueError, match="even"):
        expected_phase(5, "even_ssh")
    with pytest.raises(ValueError, match="odd"):
        expected_phase(6, "odd_topological")
    with pytest.raises(ValueError, match="family"):
        expected_phase(6, "nonsense")


def test_phase_is_negative_phi0():
    # the transfer phase compensates the mirror phase (N-1) pi/2
    for n in range(2, 51):
        family = "even_ssh" if n % 2 == 0 else "odd_topological"
        gamma = expected_phase(n, family)
        phi0 = phase_correction(n).phi0
        assert abs(wrap_phase(gamma + phi0)) < 1e-12


def test_phase_correction_gates():
    identity = phase_correction(5)
    assert identity.phi0 == 0.0
    np.testing.assert_array_equal(identity.gate, np.eye(2, dtype=complex))

    g20 = phase_correction(20)
    assert g20.phi0 == pytest.approx(-math.pi / 2)
    np.testing.assert_array_equal(g20.gate, np.diag([1.0, -1.0j]))

    g19 = phase_correction(19)
    assert g19.phi0 == pytest.approx(math.pi)
    np.testing.assert_array_equal(g19.gate, np.diag([1.0, -1.0]))

    g6 = phase_correction(6)
    np.testing.assert_array_equal(g6.gate, np.diag([1.0, 1.0j]))
    # entries stay exactly on the fourth roots of unity
    assert g6.gate[1, 1] ** 4 == 1.0 + 0.0j

    with pytest.raises(ValueError):
        phase_correction(1)


def test_bloch_state_and_correction():
    s = BlochState(theta=1.0, phi=7.0)
    assert s.phi == pytest.approx(wrap_phase(7.0))
    with pytest.raises(ValueError):
        BlochState(theta=-0.1, phi=0.0)
    with pytest.raises(ValueError):
        BlochState(theta=3.2, phi=0.0)

    # odd, N = 3 mod 4: transfer tags pi, the gate removes it
    out = apply_correction(BlochState(theta=1.2, phi=math.pi), 19)
    assert out.theta == 1.2
    assert abs(out.phi) < 1e-12

    # even, N = 0 mod 4: transfer tags +pi/2, phi0 = -pi/2
    out = apply_correction(BlochState(theta=0.7, phi=1.0 + math.pi / 2), 20)
    assert out.phi == pytest.approx(1.0)


def test_protocol_phase_mapping():
    assert protocol_phase(ChainModel.create("normal_ssh", 20)) == pytest.approx(math.pi / 2)
    assert protocol_phase(ChainModel.create("normal_ssh", 22)) == pytest.approx(-math.pi / 2)
    assert protocol_phase(ChainModel.create("edge_cosine", 21)) == pytest.approx(0.0)
    assert protocol_phase(ChainModel.create("sqrt_interface", 19)) == pytest.approx(math.pi)
    assert protocol_phase(ChainModel.create("gaussian_interface", 19)) == pytest.approx(math.pi)
    # the static mirror chain obeys the same (N-1) pi/2 law
    assert protocol_phase(ChainModel.create("christandl", 4)) == pytest.approx(math.pi / 2)
    assert protocol_phase(ChainModel.create("christandl", 19)) == pytest.approx(math.pi)
    # pump breaks chiral symmetry: no locked phase
    assert protocol_phase(ChainModel.create("rice_mele", 20)) is None


def test_band_flatness():
    assert band_flatness(ChainModel.create("christandl", 8)) < 1e-13
    assert band_flatness(ChainModel.create("sqrt_interface", 9, total_time=30.0)) < 1e-8
    assert band_flatness(ChainModel.create("normal_ssh", 20)) > 0.1
    with pytest.raises(ValueError):
        band_flatness(ChainModel.create("christandl", 4), t_samples=1)


def test_period_sweep_finds_interior_peak():
    sweep = critical_period_sweep(5, 8.0, 12.0, 2.0,
                                  EvolutionConfig(step_size=0.1))
    np.testing.assert_allclose(sweep.periods, [8.0, 10.0, 12.0])
    assert len(sweep.peaks) == 1
    t_ref, p_ref = sweep.peaks[0]
    assert 8.0 < t_ref < 12.0
    assert p_ref >= sweep.probabilities[1] - 1e-12
    assert sweep.probabilities.shape == (3,)


def test_period_sweep_monotone_range_has_no_peak():
    sweep = critical_period_sweep(5, 2.0, 6.0, 2.0, EvolutionConfig(step_size=0.1))
    assert np.all(np.diff(sweep.probabilities) > 0)
    assert sweep.peaks == []


def test_compare_protocols():
    def spec(pid):
        return EnsembleSpec(
            model=ChainModel.create(pid, 5, total_time=120.0),
            strengths=(0.1,),
            realizations=2,
            master_seed=1,
            evolution=EvolutionConfig(step_size=0.25),
        )

    rows = compare_protocols(spec("edge_cosine"), spec("edge_cosine"))
    assert len(rows) == 1
    strength, mean_a, mean_b, diff = rows[0]
    assert strength == 0.1
    assert mean_a == mean_b
    assert diff == 0.0

    other = EnsembleSpec(
        model=ChainModel.create("edge_cosine", 5, total_time=120.0),
        strengths=(0.2,),
        realizations=2,
        master_seed=1,
    )
    with pytest.raises(ValueError, match="grid"):
        compare_protocols(spec("edge_cosine"), other)
