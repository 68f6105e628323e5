"""Photon-pair and coherent-pulse sources plus threshold-detector models.

Convention: the pair source parameter ``gamma`` is the per-pulse probability
of emitting exactly one pair, to leading order.  The underlying two-mode
squeezing amplitude is ``sqrt(gamma/2)`` per polarization, so the two-pair to
one-pair probability ratio is (3/4)*gamma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fock import (
    H,
    MATCHED,
    V,
    ConfigurationError,
    FockStateVector,
    Mode,
    ModeRegistry,
    PolarizationDensityMatrix,
    ValidationError,
)

DIAGONAL_JONES = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class SpdcParams:
    """Down-conversion source strength.

    gamma: per-pulse one-pair emission probability (leading order).
    pair_cutoff: highest retained pair number.
    """

    gamma: float
    pair_cutoff: int = 2

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError("gamma must lie in [0, 1)")
        if self.pair_cutoff < 1:
            raise ValidationError("pair cutoff must be >= 1")


@dataclass(frozen=True)
class CoherentParams:
    """Coherent ancilla pulse at its preparation point."""

    mean_photons: float
    jones: tuple[complex, complex] = DIAGONAL_JONES

    def __post_init__(self):
        if self.mean_photons < 0.0:
            raise ValidationError("mean photon number must be >= 0")
        norm = abs(self.jones[0]) ** 2 + abs(self.jones[1]) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError("polarization Jones vector must be normalized")


def spdc_state(params: SpdcParams, registry: ModeRegistry, cutoff: int,
               signal: str = "A", idler: str = "B") -> FockStateVector:
    """Truncated two-polarization squeezed state on (signal, idler).

    exp[g (a_sH^dag a_iH^dag + a_sV^dag a_iV^dag)] |vac> with g = sqrt(gamma/2),
    truncated at ``pair_cutoff`` pairs and renormalized.  The one-pair sector
    is proportional to |HH> + |VV|.
    """
    g = math.sqrt(params.gamma / 2.0)
    sig_h = registry.index(Mode(signal, H, MATCHED))
    sig_v = registry.index(Mode(signal, V, MATCHED))
    idl_h = registry.index(Mode(idler, H, MATCHED))
    idl_v = registry.index(Mode(idler, V, MATCHED))
    vac = registry.vacuum_occupation()
    terms: dict[tuple[int, ...], complex] = {}
    max_pairs = min(params.pair_cutoff, cutoff // 2)
    for k in range(max_pairs + 1):          # H pairs
        for l in range(max_pairs + 1 - k):  # V pairs
            occ = list(vac)
            occ[sig_h] += k
            occ[idl_h] += k
            occ[sig_v] += l
            occ[idl_v] += l
            terms[tuple(occ)] = g ** (k + l)
    state = FockStateVector(registry, cutoff, terms)
    norm2 = state.norm_squared()
    # Weight of the discarded > pair_cutoff tail of the untruncated state.
    full_norm2 = (1.0 / (1.0 - g * g)) ** 2 if g < 1.0 else math.inf
    tail = 1.0 - norm2 / full_norm2
    if tail > 1e-6:
        warnings.warn(f"pair-number truncation discards weight {tail:.3g}",
                      stacklevel=2)
    return state.normalized()


def pair_state(registry: ModeRegistry, cutoff: int, signal: str = "A",
               idler: str = "B",
               amplitudes: tuple[complex, complex] | None = None) -> FockStateVector:
    """Exact one-pair state alpha|HH> + beta|VV> (defaults to the Bell state)."""
    alpha, beta = amplitudes if amplitudes is not None else DIAGONAL_JONES
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError("pair amplitudes must be normalized")
    vac = registry.vacuum_occupation()
    terms: dict[tuple[int, ...], complex] = {}
    for amp, pol in ((alpha, H), (beta, V)):
        if abs(amp) == 0.0:
            continue
        occ = list(vac)
        occ[registry.index(Mode(signal, pol, MATCHED))] = 1
        occ[registry.index(Mode(idler, pol, MATCHED))] = 1
        terms[tuple(occ)] = amp
    return FockStateVector(registry, cutoff, terms)


def coherent_state(params: CoherentParams, registry: ModeRegistry, cutoff: int,
                   spatial: str = "R",
                   phases: tuple[float, float] = (0.0, 0.0)) -> FockStateVector:
    """Truncated coherent state in one polarization mode pair.

    Amplitudes keep their exact Poisson values (no renormalization after
    truncation); the discarded tail weight is recorded on the state and a
    warning is raised if it exceeds 1e-6.
    """
    alpha_h = math.sqrt(params.mean_photons) * params.jones[0] * np.exp(1j * phases[0])
    alpha_v = math.sqrt(params.mean_photons) * params.jones[1] * np.exp(1j * phases[1])
    idx_h = registry.index(Mode(spatial, H, MATCHED))
    idx_v = registry.index(Mode(spatial, V, MATCHED))
    vac = registry.vacuum_occupation()
    prefactor = math.exp(-params.mean_photons / 2.0)
    terms: dict[tuple[int, ...], complex] = {}
    for m in range(cutoff + 1):
        for n in range(cutoff + 1 - m):
            amp = (prefactor * alpha_h ** m * alpha_v ** n
                   / math.sqrt(math.factorial(m) * math.factorial(n)))
            occ = list(vac)
            occ[idx_h] = m
            occ[idx_v] = n
            terms[tuple(occ)] = amp
    state = FockStateVector(registry, cutoff, terms)
    tail = max(0.0, 1.0 - state.norm_squared())
    if tail > 1e-6:
        warnings.warn(f"coherent truncation discards weight {tail:.3g}",
                      stacklevel=2)
    return FockStateVector(registry, cutoff, state.terms, tail)


def single_photon_state(registry: ModeRegistry, cutoff: int, spatial: str,
                        jones: tuple[complex, complex] = DIAGONAL_JONES,
                        phases: tuple[float, float] = (0.0, 0.0)) -> FockStateVector:
    """One photon in the matched temporal component with the given polarization."""
    vac = registry.vacuum_occupation()
    terms: dict[tuple[int, ...], complex] = {}
    for amp, pol, phase in ((jones[0], H, phases[0]), (jones[1], V, phases[1])):
        if abs(amp) == 0.0:
            continue
        occ = list(vac)
        occ[registry.index(Mode(spatial, pol, MATCHED))] = 1
        terms[tuple(occ)] = amp * np.exp(1j * phase)
    return FockStateVector(registry, cutoff, terms)


@dataclass(frozen=True)
class DetectorModel:
    """Threshold detector: click/no-click with efficiency and dark probability."""

    name: str
    efficiency: float
    dark: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValidationError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark < 1.0:
            raise ValidationError("dark probability must lie in [0, 1)")

    def click_probability(self, n_photons: int) -> float:
        return 1.0 - (1.0 - self.dark) * (1.0 - self.efficiency) ** n_photons

    def no_click_probability(self, n_photons: int) -> float:
        return (1.0 - self.dark) * (1.0 - self.efficiency) ** n_photons


def click_probabilities(state: FockStateVector,
                        assignments: Mapping[str, tuple[DetectorModel, Sequence[int]]],
                        required_pattern: Mapping[str, bool]) -> float:
    """Probability of an exact click/no-click pattern on assigned mode groups.

    Unassigned modes are summed over.  Assignments must be disjoint.
    """
    seen: set[int] = set()
    for det, indices in assignments.values():
        idx = set(indices)
        if idx & seen:
            raise ConfigurationError("overlapping detector assignments")
        seen |= idx
    unknown = set(required_pattern) - set(assignments)
    if unknown:
        raise ConfigurationError(f"pattern references unknown detectors {unknown}")
    total = 0.0
    for occ, amp in state.terms.items():
        w = abs(amp) ** 2
        for name, (det, indices) in assignments.items():
            n = sum(occ[i] for i in indices)
            click = det.click_probability(n)
            want = required_pattern.get(name)
            if want is None:
                continue
            w *= click if want else (1.0 - click)
        total += w
    return total


def pattern_distribution(state: FockStateVector,
                         assignments: Mapping[str, tuple[DetectorModel, Sequence[int]]],
                         ) -> dict[tuple[bool, ...], float]:
    """Joint click-pattern distribution over the assigned detectors (fixed order)."""
    names = list(assignments)
    dist: dict[tuple[bool, ...], float] = {}
    for occ, amp in state.terms.items():
        w = abs(amp) ** 2
        probs = []
        for name in names:
            det, indices = assignments[name]
            probs.append(det.click_probability(sum(occ[i] for i in indices)))
        for bits in np.ndindex(*(2,) * len(names)):
            p = w
            for b, c in zip(bits, probs):
                p *= c if b else (1.0 - c)
            key = tuple(bool(b) for b in bits)
            dist[key] = dist.get(key, 0.0) + p
    return dist


def effective_qubit_dm(state: FockStateVector, side_a: str, side_b: str,
                       det_a: DetectorModel, det_b: DetectorModel,
                       herald_indices: Sequence[int] | None = None,
                       herald_det: DetectorModel | None = None,
                       ) -> PolarizationDensityMatrix:
    """Unnormalized effective two-qubit state of two analyzed spatial labels.

    Sectors with exactly one photon on a side enter with their polarization
    content (temporal components traced incoherently) weighted by detection
    efficiency; dark counts add analyzer-independent identity contributions,
    including from empty sectors.  Sectors with two or more photons on an
    analyzed side are outside the qubit description and are excluded; they
    still contribute to exact click probabilities computed elsewhere.  The
    herald weight (e.g. the |D>-projected pulse detector) multiplies every
    sector.
    """
    reg = state.registry
    idx_a = {i: (reg.modes[i].pol, reg.modes[i].temporal)
             for i in reg.indices(side_a)}
    idx_b = {i: (reg.modes[i].pol, reg.modes[i].temporal)
             for i in reg.indices(side_b)}
    rest = [i for i in range(reg.n_modes) if i not in idx_a and i not in idx_b]
    herald = list(herald_indices) if herald_indices is not None else []

    def herald_weight(occ) -> float:
        if herald_det is None:
            return 1.0
        return herald_det.click_probability(sum(occ[i] for i in herald))

    sec11: dict[tuple, np.ndarray] = {}
    sec10: dict[tuple, np.ndarray] = {}
    sec01: dict[tuple, np.ndarray] = {}
    w00 = 0.0
    hw: dict[tuple, float] = {}
    for occ, amp in state.terms.items():
        na = sum(occ[i] for i in idx_a)
        nb = sum(occ[i] for i in idx_b)
        if na > 1 or nb > 1:
            continue
        rest_occ = tuple(occ[i] for i in rest)
        if na == 1:
            ia = next(i for i in idx_a if occ[i])
            pol_a, tau_a = idx_a[ia]
        if nb == 1:
            ib = next(i for i in idx_b if occ[i])
            pol_b, tau_b = idx_b[ib]
        if na == 1 and nb == 1:
            key = (rest_occ, tau_a, tau_b)
            vec = sec11.setdefault(key, np.zeros(4, dtype=complex))
            vec[2 * (pol_a == V) + (pol_b == V)] += amp
        elif na == 1:
            key = (rest_occ, tau_a, None)
            vec = sec10.setdefault(key, np.zeros(2, dtype=complex))
            vec[int(pol_a == V)] += amp
        elif nb == 1:
            key = (rest_occ, None, tau_b)
            vec = sec01.setdefault(key, np.zeros(2, dtype=complex))
            vec[int(pol_b == V)] += amp
        else:
            w00 += herald_weight(occ) * abs(amp) ** 2
            continue
        if key not in hw:
            full = list(state.registry.vacuum_occupation())
            for pos, val in zip(rest, rest_occ):
                full[pos] = val
            hw[key] = herald_weight(full)

    ea, da = det_a.efficiency, det_a.dark
    eb, db = det_b.efficiency, det_b.dark
    eye2 = np.eye(2, dtype=complex)
    rho = np.zeros((4, 4), dtype=complex)

    s11 = np.zeros((4, 4), dtype=complex)
    for key, vec in sec11.items():
        s11 += hw[key] * np.outer(vec, vec.conj())
    if s11.any():
        t4 = s11.reshape(2, 2, 2, 2)
        tr_b = np.trace(t4, axis1=1, axis2=3)  # 2x2 on side a
        tr_a = np.trace(t4, axis1=0, axis2=2)  # 2x2 on side b
        rho += (1 - da) * ea * (1 - db) * eb * s11
        rho += (1 - da) * ea * db * np.kron(tr_b, eye2)
        rho += da * (1 - db) * eb * np.kron(eye2, tr_a)
        rho += da * db * float(np.real(np.trace(s11))) * np.eye(4)

    if sec10:
        s10 = np.zeros((2, 2), dtype=complex)
        for key, vec in sec10.items():
            s10 += hw[key] * np.outer(vec, vec.conj())
        block = (1 - da) * ea * s10 + da * float(np.real(np.trace(s10))) * eye2
        rho += db * np.kron(block, eye2)
    if sec01:
        s01 = np.zeros((2, 2), dtype=complex)
        for key, vec in sec01.items():
            s01 += hw[key] * np.outer(vec, vec.conj())
        block = (1 - db) * eb * s01 + db * float(np.real(np.trace(s01))) * eye2
        rho += da * np.kron(eye2, block)
    rho += da * db * w00 * np.eye(4)

    return PolarizationDensityMatrix((rho + rho.conj().T) / 2.0)


def conditioned_polarization_dm(state: FockStateVector, side_a: str, side_b: str,
                                det_a: DetectorModel, det_b: DetectorModel,
                                herald_indices: Sequence[int] | None = None,
                                herald_det: DetectorModel | None = None,
                                ) -> tuple[PolarizationDensityMatrix | None, float]:
    """Normalized conditional two-qubit state plus the coincidence probability.

    The probability is the exact threshold click coincidence (all assigned
    detectors clicking, no polarization analysis) including every photon
    sector; the state is the effective qubit reconstruction.
    """
    reg = state.registry
    assignments = {
        "a": (det_a, reg.indices(side_a)),
        "b": (det_b, reg.indices(side_b)),
    }
    required = {"a": True, "b": True}
    if herald_indices is not None and herald_det is not None:
        assignments["herald"] = (herald_det, list(herald_indices))
        required["herald"] = True
    prob = click_probabilities(state, assignments, required)
    dm = effective_qubit_dm(state, side_a, side_b, det_a, det_b,
                            herald_indices, herald_det)
    if dm.trace <= 1e-300:
        return None, prob
    return dm.normalized(), prob
