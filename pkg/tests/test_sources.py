import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsdist.fock import (
    H,
    V,
    ConfigurationError,
    FockStateVector,
    Mode,
    ValidationError,
    make_registry,
)
from dfsdist.sources import (
    CoherentParams,
    DetectorModel,
    SpdcParams,
    click_probabilities,
    coherent_state,
    conditioned_polarization_dm,
    effective_qubit_dm,
    pair_state,
    pattern_distribution,
    single_photon_state,
    spdc_state,
)


def _pair_sector_probabilities(gamma: float, pair_cutoff: int) -> dict[int, float]:
    """Independent series expansion of the squeezed-pair source.

    Amplitude g^(k+l) on (k, l) pairs with g = sqrt(gamma/2), renormalized over
    the truncated set, exactly as the source definition states.
    """
    g2 = gamma / 2.0
    weights: dict[int, float] = {}
    for k in range(pair_cutoff + 1):
        for l in range(pair_cutoff + 1 - k):
            weights[k + l] = weights.get(k + l, 0.0) + g2 ** (k + l)
    norm = sum(weights.values())
    return {n: w / norm for n, w in weights.items()}


def test_spdc_gamma_zero_is_vacuum():
    reg = make_registry(["A", "B"])
    state = spdc_state(SpdcParams(0.0), reg, 4)
    assert abs(state.amplitude((0,) * 4) - 1.0) < 1e-12
    assert abs(state.norm_squared() - 1.0) < 1e-12


def test_spdc_sector_probabilities_match_expansion_oracle():
    gamma = 3.0e-3
    reg = make_registry(["A", "B"])
    state = spdc_state(SpdcParams(gamma), reg, 4)
    oracle = _pair_sector_probabilities(gamma, 2)
    got: dict[int, float] = {}
    for occ, amp in state.terms.items():
        pairs = sum(occ) // 2
        got[pairs] = got.get(pairs, 0.0) + abs(amp) ** 2
    for n, expect in oracle.items():
        assert abs(got[n] - expect) < 1e-12
    # One-pair probability is the configured rate to leading order.
    assert abs(got[1] - gamma) < 2.0 * gamma ** 2
    # Two-pair to one-pair ratio is (3/4) gamma to leading order.
    assert abs(got[2] / got[1] - 0.75 * gamma) < gamma ** 2


def test_spdc_one_pair_sector_is_bell_state():
    reg = make_registry(["A", "B"])
    state = spdc_state(SpdcParams(1e-3), reg, 4)
    hh = [0, 0, 0, 0]
    hh[reg.index(Mode("A", H))] = hh[reg.index(Mode("B", H))] = 1
    vv = [0, 0, 0, 0]
    vv[reg.index(Mode("A", V))] = vv[reg.index(Mode("B", V))] = 1
    a_hh = state.amplitude(tuple(hh))
    a_vv = state.amplitude(tuple(vv))
    assert abs(a_hh - a_vv) < 1e-15
    assert a_hh.real > 0.0


def test_spdc_truncation_warning():
    reg = make_registry(["A", "B"])
    with pytest.warns(UserWarning, match="pair-number truncation"):
        spdc_state(SpdcParams(0.2, pair_cutoff=1), reg, 4)


def test_pair_state_encodings():
    reg = make_registry(["A", "B"])
    bell = pair_state(reg, 4)
    assert abs(bell.norm_squared() - 1.0) < 1e-12
    alpha, beta = math.sqrt(0.8), math.sqrt(0.2)
    enc = pair_state(reg, 4, amplitudes=(alpha, beta))
    hh = [0] * 4
    hh[reg.index(Mode("A", H))] = hh[reg.index(Mode("B", H))] = 1
    assert abs(enc.amplitude(tuple(hh)) - alpha) < 1e-12
    with pytest.raises(ValidationError):
        pair_state(reg, 4, amplitudes=(1.0, 1.0))


def test_coherent_state_examples():
    reg = make_registry(["R"])
    vac = coherent_state(CoherentParams(0.0), reg, 4)
    assert abs(vac.amplitude((0, 0)) - 1.0) < 1e-12
    mu_b = 0.1
    state = coherent_state(CoherentParams(mu_b), reg, 6, "R")
    p1 = sum(abs(a) ** 2 for occ, a in state.terms.items() if sum(occ) == 1)
    assert abs(p1 - mu_b * math.exp(-mu_b)) < 1e-12
    mean = sum(abs(a) ** 2 * sum(occ) for occ, a in state.terms.items())
    assert abs(mean - mu_b) < 1e-8


def test_coherent_truncation_warning_records_tail():
    reg = make_registry(["R"])
    with pytest.warns(UserWarning, match="coherent truncation"):
        state = coherent_state(CoherentParams(2.0), reg, 3)
    assert state.truncated_weight > 1e-6
    assert abs(state.norm_squared() + state.truncated_weight - 1.0) < 1e-12


def test_single_photon_state_phases():
    reg = make_registry(["R"])
    state = single_photon_state(reg, 3, "R", phases=(0.0, math.pi / 2.0))
    occ_v = [0, 0]
    occ_v[reg.index(Mode("R", V))] = 1
    amp = state.amplitude(tuple(occ_v))
    assert abs(amp - 1j / math.sqrt(2.0)) < 1e-12


def test_detector_model_examples():
    det = DetectorModel("D", 1.0, 0.0)
    assert det.click_probability(1) == 1.0
    dark = DetectorModel("G", 0.09, 1.5e-6)
    assert abs(dark.click_probability(0) - 1.5e-6) < 1e-16
    det2 = DetectorModel("E", 0.13, 0.0)
    assert abs(det2.click_probability(2) - (1.0 - 0.87 ** 2)) < 1e-12
    with pytest.raises(ValidationError):
        DetectorModel("X", 1.3, 0.0)
    with pytest.raises(ValidationError):
        DetectorModel("X", 0.5, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 0.1), st.integers(0, 4))
def test_povm_completeness(eta, dark, n):
    det = DetectorModel("D", eta, dark)
    assert abs(det.click_probability(n) + det.no_click_probability(n) - 1.0) < 1e-12


def test_click_probabilities_pattern():
    reg = make_registry(["A", "B"])
    r = 1.0 / math.sqrt(2.0)
    hh = [0] * 4
    hh[reg.index(Mode("A", H))] = hh[reg.index(Mode("B", H))] = 1
    vv = [0] * 4
    vv[reg.index(Mode("A", V))] = vv[reg.index(Mode("B", V))] = 1
    state = FockStateVector(reg, 2, {tuple(hh): r, tuple(vv): r})
    det = DetectorModel("D", 0.5, 0.0)
    assignments = {"A": (det, reg.indices("A")), "B": (det, reg.indices("B"))}
    p_both = click_probabilities(state, assignments, {"A": True, "B": True})
    assert abs(p_both - 0.25) < 1e-12
    p_a_only = click_probabilities(state, assignments, {"A": True, "B": False})
    assert abs(p_a_only - 0.25) < 1e-12
    dist = pattern_distribution(state, assignments)
    assert abs(sum(dist.values()) - 1.0) < 1e-12
    assert abs(dist[(True, True)] - 0.25) < 1e-12


def test_click_probabilities_rejects_overlap_and_unknown():
    reg = make_registry(["A"])
    state = FockStateVector(reg, 1, {(1, 0): 1.0})
    det = DetectorModel("D", 0.5)
    with pytest.raises(ConfigurationError):
        click_probabilities(state, {"a": (det, [0, 1]), "b": (det, [1])},
                            {"a": True})
    with pytest.raises(ConfigurationError):
        click_probabilities(state, {"a": (det, [0])}, {"zz": True})


def _bell_with_labels(reg):
    r = 1.0 / math.sqrt(2.0)
    hh = [0] * reg.n_modes
    hh[reg.index(Mode("E", H))] = hh[reg.index(Mode("G", H))] = 1
    vv = [0] * reg.n_modes
    vv[reg.index(Mode("E", V))] = vv[reg.index(Mode("G", V))] = 1
    return FockStateVector(reg, 2, {tuple(hh): r, tuple(vv): r})


def test_conditioned_dm_ideal_detectors():
    reg = make_registry(["E", "G"])
    state = _bell_with_labels(reg)
    det = DetectorModel("D", 1.0, 0.0)
    dm, prob = conditioned_polarization_dm(state, "E", "G", det, det)
    assert abs(prob - 1.0) < 1e-12
    assert abs(dm.matrix[0, 3] - 0.5) < 1e-12


def test_conditioned_dm_dark_only_is_maximally_mixed():
    # Vacuum plus dark counts: the click-sector state carries no information.
    reg = make_registry(["E", "G"])
    vac = FockStateVector(reg, 2, {(0,) * 4: 1.0})
    det = DetectorModel("D", 0.5, 1e-3)
    dm, prob = conditioned_polarization_dm(vac, "E", "G", det, det)
    assert abs(prob - 1e-6) < 1e-15
    assert np.abs(dm.matrix - np.eye(4) / 4.0).max() < 1e-12


def test_conditioned_dm_efficiency_cancels_in_state():
    reg = make_registry(["E", "G"])
    state = _bell_with_labels(reg)
    lossy = DetectorModel("D", 0.25, 0.0)
    dm, prob = conditioned_polarization_dm(state, "E", "G", lossy, lossy)
    assert abs(prob - 0.25 ** 2) < 1e-12
    assert abs(dm.matrix[0, 3] - 0.5) < 1e-12


def test_conditioned_dm_dark_dilutes_correlations():
    # A one-sided photon with the partner lost: dark counts promote it into
    # the coincidence sector as a maximally mixed partner.
    reg = make_registry(["E", "G"])
    occ = [0] * 4
    occ[reg.index(Mode("E", H))] = 1
    state = FockStateVector(reg, 2, {tuple(occ): 1.0})
    det_e = DetectorModel("E", 0.5, 0.0)
    det_g = DetectorModel("G", 0.5, 1e-4)
    dm, prob = conditioned_polarization_dm(state, "E", "G", det_e, det_g)
    assert abs(prob - 0.5 * 1e-4) < 1e-15
    expect = np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2.0)
    assert np.abs(dm.matrix - expect).max() < 1e-12


def test_effective_dm_excludes_multiphoton_sectors():
    reg = make_registry(["E", "G"])
    occ = [0] * 4
    occ[reg.index(Mode("E", H))] = 2
    occ[reg.index(Mode("G", H))] = 1
    state = FockStateVector(reg, 3, {tuple(occ): 1.0})
    det = DetectorModel("D", 0.5, 0.0)
    dm = effective_qubit_dm(state, "E", "G", det, det)
    assert dm.trace < 1e-15


def test_conditioned_dm_with_herald_weight():
    reg = make_registry(["E", "G", "F"])
    r = 1.0 / math.sqrt(2.0)
    hh = [0] * 6
    hh[reg.index(Mode("E", H))] = hh[reg.index(Mode("G", H))] = 1
    hh[reg.index(Mode("F", H))] = 1
    vv = [0] * 6
    vv[reg.index(Mode("E", V))] = vv[reg.index(Mode("G", V))] = 1
    state = FockStateVector(reg, 3, {tuple(hh): r, tuple(vv): r})
    det = DetectorModel("D", 1.0, 0.0)
    herald = DetectorModel("F", 1.0, 0.0)
    dm, prob = conditioned_polarization_dm(
        state, "E", "G", det, det,
        herald_indices=reg.indices("F", pol=H), herald_det=herald)
    # Only the branch with the herald photon survives.
    assert abs(prob - 0.5) < 1e-12
    assert abs(dm.matrix[0, 0] - 1.0) < 1e-12
