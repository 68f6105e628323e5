"""Full entanglement-distribution protocol wiring and measurement statistics.

The counter-propagating scheme sends one photon of a polarization-entangled
pair through a lossy collective-dephasing channel while a weak coherent pulse
traverses the same channel in the opposite direction.  The receiver flips the
pulse polarization, interferes pulse and retained photon on a polarizing
beamsplitter (quantum parity check), projects one output onto |D> and keeps
threshold triple coincidences.  The surviving two-photon state lives in a
subspace immune to the collective phase noise.

Because a coherent pulse stays coherent under loss and glass-plate reflection
(the complementary ports carry unentangled coherent states that are never
detected), the pulse is prepared directly at the receiver with its delivered
mean photon number; the launched intensity scales as 1/T and could not be
represented in a truncated Fock space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fock import (
    H,
    V,
    ConfigurationError,
    FockStateVector,
    ModeRegistry,
    PolarizationDensityMatrix,
    ValidationError,
    make_registry,
    apply_transform,
    tensor,
)
from .optics import (
    OverlapModel,
    attenuator,
    hwp,
    jones_transform,
    loss_channel,
    overlap_at_delay,
    overlap_split,
    pbs,
    phase_shifter,
)
from .sources import (
    CoherentParams,
    DetectorModel,
    SpdcParams,
    coherent_state,
    effective_qubit_dm,
    pair_state,
    single_photon_state,
    spdc_state,
)

REP_RATE_HZ = 82e6
CHSH_FIDELITY_BOUND = 1.0 / math.sqrt(2.0)

PHASE_SET_8 = tuple((0.0, n * math.pi / 4.0) for n in range(8))

VARIANTS = ("counter_propagating", "forward_all_from_bob",
            "single_photon_ancilla", "direct_no_dfs")
SOURCES = ("spdc", "exact_pair")

_SQ2 = 1.0 / math.sqrt(2.0)
ANALYZER_KETS: dict[str, tuple[complex, complex]] = {
    "H": (1.0, 0.0),
    "V": (0.0, 1.0),
    "D": (_SQ2, _SQ2),
    "Dbar": (_SQ2, -_SQ2),
    "R": (_SQ2, 1j * _SQ2),
    "L": (_SQ2, -1j * _SQ2),
}
Z_SETTINGS = ("H", "V")
X_SETTINGS = ("D", "Dbar")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete parameter record for one protocol configuration.

    ``mu`` is the ancilla mean photon number delivered to the receiver; the
    launched value mu/T is reported by :attr:`mu_bob`.  ``gamma`` is the
    per-pulse pair-emission probability of the source.
    """

    gamma: float = 3.0e-3
    mu: float = 1.4e-2 / 0.13
    transmittance: float = 0.1
    eta: float = 0.13
    eta_g: float = 0.09
    dark_g: float = 1.5e-6
    dark_e: float = 0.0
    dark_f: float = 0.0
    overlap_s0: float = 1.0
    overlap_sigma_um: float = 100.0
    delay_um: float = 0.0
    gp_reflectance: float = 0.05
    phase_shifts: tuple[tuple[float, float], ...] = PHASE_SET_8
    phase_delta: tuple[float, float] = (0.0, 0.0)
    cutoff: int = 4
    variant: str = "counter_propagating"
    source: str = "spdc"
    input_qubit: tuple[complex, complex] | None = None
    include_feedforward_branch: bool = False
    pair_cutoff: int = 2

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.source not in SOURCES:
            raise ConfigurationError(f"unknown source {self.source!r}")
        for name in ("transmittance", "eta", "eta_g", "gp_reflectance",
                     "overlap_s0"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        for name in ("gamma", "mu"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be >= 0")
        for name in ("dark_g", "dark_e", "dark_f"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValidationError(f"{name} must lie in [0, 1)")
        if self.overlap_sigma_um <= 0.0:
            raise ValidationError("overlap width must be positive")
        if self.cutoff < 1:
            raise ValidationError("cutoff must be >= 1")
        if not self.phase_shifts:
            raise ValidationError("phase set must be nonempty")
        if self.input_qubit is not None:
            a, b = self.input_qubit
            if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-9:
                raise ValidationError("input qubit must be normalized")

    @property
    def mu_bob(self) -> float:
        """Launched ancilla mean photon number (1/T scaling)."""
        if self.transmittance == 0.0:
            return math.inf if self.mu > 0 else 0.0
        return self.mu / self.transmittance

    @property
    def overlap_amplitude(self) -> float:
        model = OverlapModel(self.overlap_s0, self.overlap_sigma_um)
        return overlap_at_delay(model, self.delay_um)

    @classmethod
    def ideal(cls, variant: str = "single_photon_ancilla",
              **overrides) -> "ExperimentConfig":
        """Lossless single-pair configuration with perfect detectors."""
        base = dict(
            gamma=0.0, mu=0.0, transmittance=1.0, eta=1.0, eta_g=1.0,
            dark_g=0.0, overlap_s0=1.0, gp_reflectance=0.0,
            variant=variant, source="exact_pair", cutoff=4,
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class ProtocolOutcome:
    """Coincidence statistics and the conditional two-qubit state of one run."""

    zz_probs: dict[tuple[str, str], float]
    xx_probs: dict[tuple[str, str], float]
    dm: PolarizationDensityMatrix | None
    dm_weight: float
    triple_probability: float
    components: dict[tuple[int, int, str], float]
    truncated_weight: float = 0.0

    def component_sum(self, pairs: int | None = None, ancilla_min: int = 0,
                      ancilla_max: int | None = None,
                      origin: str | None = None) -> float:
        total = 0.0
        for (p, r, org), val in self.components.items():
            if pairs is not None and p != pairs:
                continue
            if r < ancilla_min:
                continue
            if ancilla_max is not None and r > ancilla_max:
                continue
            if origin is not None and org != origin:
                continue
            total += val
        return total

    @property
    def desired_probability(self) -> float:
        return self.components.get((1, 1, "photon"), 0.0)

    @property
    def ancilla_multiphoton_probability(self) -> float:
        return self.component_sum(ancilla_min=2, origin="photon")

    @property
    def multi_pair_probability(self) -> float:
        return sum(val for (p, r, org), val in self.components.items()
                   if p >= 2 and org == "photon")

    @property
    def dark_probability(self) -> float:
        return sum(val for (_, _, org), val in self.components.items()
                   if org == "dark")


@dataclass
class _Plan:
    registry: ModeRegistry
    side_e: str
    side_g: str
    herald: str | None
    pair_side_indices: list[int]
    detectors: dict[str, DetectorModel]


def _analyzer_matrix(setting: str) -> np.ndarray:
    ket = ANALYZER_KETS[setting]
    orth = {"H": "V", "V": "H", "D": "Dbar", "Dbar": "D", "R": "L", "L": "R"}
    ket2 = ANALYZER_KETS[orth[setting]]
    return np.array([[np.conj(ket[0]), np.conj(ket[1])],
                     [np.conj(ket2[0]), np.conj(ket2[1])]], dtype=complex)


def _build_plan(cfg: ExperimentConfig) -> _Plan:
    det_e = DetectorModel("D_E", cfg.eta, cfg.dark_e)
    det_f = DetectorModel("D_F", cfg.eta, cfg.dark_f)
    det_g = DetectorModel("D_G", cfg.eta_g, cfg.dark_g)

    if cfg.variant == "direct_no_dfs":
        reg = make_registry(["A", "B", "G", "LB", "DB"])
        plan = _Plan(reg, "A", "G", None, [], {"E": det_e, "G": det_g})
        plan.pair_side_indices = (reg.indices("B") + reg.indices("G")
                                  + reg.indices("LB") + reg.indices("DB"))
        return plan

    labels: list = [("A", True), ("R", True), ("E", True), ("F", True)]
    if cfg.variant == "forward_all_from_bob":
        labels += ["B", ("LA", True)]
        side_g = "B"
        pair_side = ["B"]
    else:
        labels += ["B", "G", "LB", "DB"]
        side_g = "G"
        pair_side = ["B", "G", "LB", "DB"]
    if cfg.variant == "single_photon_ancilla":
        labels += [("LR", True)]
    reg = make_registry(labels)
    plan = _Plan(reg, "E", side_g, "F", [],
                 {"E": det_e, "G": det_g, "F": det_f})
    plan.pair_side_indices = [i for lab in pair_side for i in reg.indices(lab)]
    return plan


def _initial_state(cfg: ExperimentConfig, reg: ModeRegistry,
                   phi_r: tuple[float, float]) -> FockStateVector:
    if cfg.source == "exact_pair":
        pair = pair_state(reg, cfg.cutoff, "A", "B", cfg.input_qubit)
    else:
        pair = spdc_state(SpdcParams(cfg.gamma, cfg.pair_cutoff), reg,
                          cfg.cutoff, "A", "B")
    if cfg.variant == "direct_no_dfs":
        return pair
    if cfg.variant == "single_photon_ancilla":
        # Launched at the sender; phases and loss are applied explicitly.
        ancilla = single_photon_state(reg, cfg.cutoff, "R")
    else:
        mu_delivered = cfg.mu if cfg.transmittance > 0.0 else 0.0
        ancilla = coherent_state(CoherentParams(mu_delivered), reg, cfg.cutoff,
                                 "R", phases=phi_r)
    return tensor(pair, ancilla)


def _transforms(cfg: ExperimentConfig, reg: ModeRegistry,
                phi: tuple[float, float], phi_r: tuple[float, float]) -> list:
    s = cfg.overlap_amplitude
    seq = []
    if cfg.variant == "direct_no_dfs":
        seq.append(phase_shifter(reg, "B", *phi))
        seq.append(loss_channel(reg, "B", cfg.transmittance, "LB"))
        seq.append(attenuator(reg, "B", "G", "DB", 1.0 - cfg.gp_reflectance))
        return seq
    if cfg.variant == "forward_all_from_bob":
        seq.append(phase_shifter(reg, "A", *phi))
        seq.append(loss_channel(reg, "A", cfg.transmittance, "LA"))
    else:
        seq.append(phase_shifter(reg, "B", *phi))
        seq.append(loss_channel(reg, "B", cfg.transmittance, "LB"))
        seq.append(attenuator(reg, "B", "G", "DB", 1.0 - cfg.gp_reflectance))
    if cfg.variant == "single_photon_ancilla":
        seq.append(phase_shifter(reg, "R", *phi_r))
        seq.append(loss_channel(reg, "R", cfg.transmittance, "LR"))
    seq.append(hwp(reg, "R", math.pi / 4.0))  # polarization flip before the PBS
    if s < 1.0:
        seq.append(overlap_split(reg, "R", s))
    seq.append(pbs(reg, "A", "R", "E", "F"))
    # Rotate the pulse output so its |D> component sits on the H modes watched
    # by the herald detector; the |Dbar> component leaves through the unused port.
    seq.append(jones_transform(reg, "F", _analyzer_matrix("D"), name="F analyzer"))
    return seq


def prepare_final_state(cfg: ExperimentConfig, phi_h: float,
                        phi_v: float) -> tuple[_Plan, FockStateVector]:
    """Sources plus optical train for one collective phase setting.

    The same fluctuation acts on both channel passes; an optional differential
    offset between the two directions comes from ``cfg.phase_delta``.
    """
    plan = _build_plan(cfg)
    phi = (phi_h, phi_v)
    phi_r = (phi_h + cfg.phase_delta[0], phi_v + cfg.phase_delta[1])
    state = _initial_state(cfg, plan.registry, phi_r)
    for t in _transforms(cfg, plan.registry, phi, phi_r):
        state = apply_transform(state, t)
    return plan, state


def run_fixed_phase(cfg: ExperimentConfig, phi_h: float,
                    phi_v: float) -> ProtocolOutcome:
    """Run the protocol for one collective phase setting."""
    plan, state = prepare_final_state(cfg, phi_h, phi_v)
    return _measure(cfg, plan, state)


def analyzer_setting_probability(plan: _Plan, state: FockStateVector,
                                 setting_e: str, setting_g: str) -> float:
    """Coincidence click probability for one arbitrary analyzer pair."""
    reg = state.registry
    st = apply_transform(state, jones_transform(reg, plan.side_e,
                                                _analyzer_matrix(setting_e)))
    st = apply_transform(st, jones_transform(reg, plan.side_g,
                                             _analyzer_matrix(setting_g)))
    det_e = plan.detectors["E"]
    det_g = plan.detectors["G"]
    e_idx = reg.indices(plan.side_e, pol=H)
    g_idx = reg.indices(plan.side_g, pol=H)
    herald = None
    if plan.herald is not None:
        herald = (plan.detectors["F"], reg.indices(plan.herald, pol=H))
    total = 0.0
    for occ, amp in st.terms.items():
        w = abs(amp) ** 2
        w *= det_e.click_probability(sum(occ[k] for k in e_idx))
        if w == 0.0:
            continue
        w *= det_g.click_probability(sum(occ[k] for k in g_idx))
        if herald is not None:
            det_f, f_idx = herald
            w *= det_f.click_probability(sum(occ[k] for k in f_idx))
        total += w
    return total


def _click_terms(occupations: Iterable[tuple[tuple[int, ...], float]],
                 groups: Mapping[str, tuple[DetectorModel, Sequence[int]]],
                 pair_side: Sequence[int],
                 ) -> tuple[float, dict[tuple[int, int, str], float]]:
    """Coincidence probability of all groups clicking plus the component split.

    Components are keyed by (pair count, ancilla photon count, click origin of
    the pair-side detector: photon vs dark).
    """
    det_g, g_idx = groups["G"]
    others = [(det, idx) for name, (det, idx) in groups.items() if name != "G"]
    total = 0.0
    comps: dict[tuple[int, int, str], float] = {}
    for occ, w in occupations:
        for det, idx in others:
            w *= det.click_probability(sum(occ[i] for i in idx))
        if w == 0.0:
            continue
        ng = sum(occ[i] for i in g_idx)
        photon_part = 1.0 - (1.0 - det_g.efficiency) ** ng
        dark_part = det_g.dark * (1.0 - det_g.efficiency) ** ng
        pairs = sum(occ[i] for i in pair_side)
        ancilla = sum(occ) - 2 * pairs
        if photon_part:
            key = (pairs, ancilla, "photon")
            comps[key] = comps.get(key, 0.0) + w * photon_part
        if dark_part:
            key = (pairs, ancilla, "dark")
            comps[key] = comps.get(key, 0.0) + w * dark_part
        total += w * (photon_part + dark_part)
    return total, comps


def _setting_probs(state: FockStateVector, plan: _Plan, settings: tuple[str, str],
                   herald_pol: str = H) -> dict[tuple[str, str], float]:
    """Click probabilities for the four analyzer pairs of one basis.

    The state must already be rotated so that the first setting of each side
    lies on the H modes.  Photons behind the orthogonal analyzer port are
    discarded, not detected.
    """
    reg = state.registry
    det_e = plan.detectors["E"]
    det_g = plan.detectors["G"]
    e_pol = {p: reg.indices(plan.side_e, pol=p) for p in (H, V)}
    g_pol = {p: reg.indices(plan.side_g, pol=p) for p in (H, V)}
    herald = None
    if plan.herald is not None:
        herald = (plan.detectors["F"],
                  reg.indices(plan.herald, pol=herald_pol))
    out = {}
    first, second = settings
    for i, set_e in enumerate((first, second)):
        for j, set_g in enumerate((first, second)):
            p = 0.0
            e_idx = e_pol[H if i == 0 else V]
            g_idx = g_pol[H if j == 0 else V]
            for occ, amp in state.terms.items():
                w = abs(amp) ** 2
                w *= det_e.click_probability(sum(occ[k] for k in e_idx))
                if w == 0.0:
                    continue
                w *= det_g.click_probability(sum(occ[k] for k in g_idx))
                if herald is not None:
                    det_f, f_idx = herald
                    w *= det_f.click_probability(sum(occ[k] for k in f_idx))
                p += w
            out[(set_e, set_g)] = p
    return out


def _measure(cfg: ExperimentConfig, plan: _Plan,
             state: FockStateVector) -> ProtocolOutcome:
    reg = plan.registry
    det_e = plan.detectors["E"]
    det_g = plan.detectors["G"]
    herald_idx = None
    det_f = None
    if plan.herald is not None:
        det_f = plan.detectors["F"]
        herald_idx = reg.indices(plan.herald, pol=H)

    groups: dict[str, tuple[DetectorModel, Sequence[int]]] = {
        "E": (det_e, reg.indices(plan.side_e)),
        "G": (det_g, reg.indices(plan.side_g)),
    }
    if herald_idx is not None:
        groups["F"] = (det_f, herald_idx)
    occupations = [(occ, abs(amp) ** 2) for occ, amp in state.terms.items()]
    triple, comps = _click_terms(occupations, groups, plan.pair_side_indices)

    zz = _setting_probs(state, plan, Z_SETTINGS)
    x_rot = apply_transform(state, jones_transform(reg, plan.side_e,
                                                   _analyzer_matrix("D")))
    x_rot = apply_transform(x_rot, jones_transform(reg, plan.side_g,
                                                   _analyzer_matrix("D")))
    xx = _setting_probs(x_rot, plan, X_SETTINGS)

    dm_raw = effective_qubit_dm(state, plan.side_e, plan.side_g, det_e, det_g,
                                herald_idx, det_f)

    if cfg.include_feedforward_branch and plan.herald is not None:
        # Second herald outcome (|Dbar>): a sign flip on the retained photon
        # restores the target state, i.e. the X outcomes swap labels.
        dbar_idx = reg.indices(plan.herald, pol=V)
        groups["F"] = (det_f, dbar_idx)
        triple2, comps2 = _click_terms(occupations, groups,
                                       plan.pair_side_indices)
        triple += triple2
        for key, val in comps2.items():
            comps[key] = comps.get(key, 0.0) + val
        plan2 = _Plan(reg, plan.side_e, plan.side_g, plan.herald,
                      plan.pair_side_indices, plan.detectors)
        zz2 = _setting_probs(state, plan2, Z_SETTINGS, herald_pol=V)
        xx2 = _setting_probs(x_rot, plan2, X_SETTINGS, herald_pol=V)
        for key, val in zz2.items():
            zz[key] += val
        for (se, sg), val in xx2.items():
            flip = {"D": "Dbar", "Dbar": "D"}
            xx[(flip[se], sg)] += val
        dm2 = effective_qubit_dm(state, plan.side_e, plan.side_g, det_e, det_g,
                                 dbar_idx, det_f)
        sz = np.kron(np.diag([1.0, -1.0]), np.eye(2))
        dm_raw = PolarizationDensityMatrix(dm_raw.matrix
                                           + sz @ dm2.matrix @ sz)

    weight = dm_raw.trace
    dm = dm_raw.normalized() if weight > 1e-300 else None
    return ProtocolOutcome(zz, xx, dm, weight, triple, comps,
                           state.truncated_weight)


def run_phase_averaged(cfg: ExperimentConfig) -> ProtocolOutcome:
    """Uniform mixture of fixed-phase runs over the configured phase set."""
    n = len(cfg.phase_shifts)
    zz: dict[tuple[str, str], float] = {}
    xx: dict[tuple[str, str], float] = {}
    triple = 0.0
    comps: dict[tuple[int, int, str], float] = {}
    dm_accum = np.zeros((4, 4), dtype=complex)
    trunc = 0.0
    for phi_h, phi_v in cfg.phase_shifts:
        out = run_fixed_phase(cfg, phi_h, phi_v)
        for key, val in out.zz_probs.items():
            zz[key] = zz.get(key, 0.0) + val / n
        for key, val in out.xx_probs.items():
            xx[key] = xx.get(key, 0.0) + val / n
        triple += out.triple_probability / n
        for key, val in out.components.items():
            comps[key] = comps.get(key, 0.0) + val / n
        if out.dm is not None:
            dm_accum += out.dm.matrix * (out.dm_weight / n)
        trunc = max(trunc, out.truncated_weight)
    weight = float(np.real(np.trace(dm_accum)))
    dm = (PolarizationDensityMatrix(dm_accum).normalized()
          if weight > 1e-300 else None)
    return ProtocolOutcome(zz, xx, dm, weight, triple, comps, trunc)


def visibilities(outcome: ProtocolOutcome) -> tuple[float, float]:
    """Correlations <Z Z> and <X X> from the per-basis coincidence rates."""
    def corr(probs: Mapping[tuple[str, str], float],
             names: tuple[str, str]) -> float:
        a, b = names
        total = sum(probs.values())
        if total <= 0.0:
            raise ValidationError("no coincidences; visibility undefined")
        return (probs[(a, a)] + probs[(b, b)] - probs[(a, b)]
                - probs[(b, a)]) / total

    return corr(outcome.zz_probs, Z_SETTINGS), corr(outcome.xx_probs, X_SETTINGS)


def dm_visibilities(dm: PolarizationDensityMatrix) -> tuple[float, float]:
    """The same correlations read directly from a two-qubit state."""
    rho = dm.normalized().matrix
    vz = float(np.real(rho[0, 0] + rho[3, 3] - rho[1, 1] - rho[2, 2]))
    xx = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))
    vx = float(np.real(np.trace(rho @ xx)))
    return vz, vx


def f_low(v_z: float, v_x: float) -> float:
    """Fidelity lower bound (V_Z + V_X) / 2."""
    return 0.5 * (v_z + v_x)


def chsh_violated(fidelity_bound: float) -> bool:
    return fidelity_bound > CHSH_FIDELITY_BOUND


def sharing_rate(cfg: ExperimentConfig) -> tuple[float, float]:
    """Phase-averaged coincidence probability per pulse and rate per second."""
    out = run_phase_averaged(cfg)
    return out.triple_probability, out.triple_probability * REP_RATE_HZ


@dataclass
class ScalingReport:
    parameter: str
    component: str
    grid: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    stderr: float


def _loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    n = len(lx)
    design = np.vstack([lx, np.ones(n)]).T
    coef, res, _, _ = np.linalg.lstsq(design, ly, rcond=None)
    slope = float(coef[0])
    if n > 2:
        resid = ly - design @ coef
        var = float(resid @ resid) / (n - 2)
        sx = float(((lx - lx.mean()) ** 2).sum())
        stderr = math.sqrt(var / sx) if sx > 0 else math.inf
    else:
        stderr = 0.0
    return slope, stderr


def component_scaling(cfg: ExperimentConfig, parameter: str,
                      grid: Sequence[float], component: str) -> ScalingReport:
    """Fitted log-log exponent of one coincidence component vs one parameter.

    component is one of desired, ancilla_multiphoton, multi_pair, dark, total.
    """
    values = []
    for val in grid:
        out = run_phase_averaged(replace(cfg, **{parameter: val}))
        values.append({
            "desired": out.desired_probability,
            "ancilla_multiphoton": out.ancilla_multiphoton_probability,
            "multi_pair": out.multi_pair_probability,
            "dark": out.dark_probability,
            "total": out.triple_probability,
        }[component])
    if min(values) <= 0.0:
        raise ValidationError("component vanished on the grid; cannot fit slope")
    slope, err = _loglog_slope(grid, values)
    return ScalingReport(parameter, component, tuple(grid), tuple(values),
                         slope, err)


def forward_variant_scaling(cfg: ExperimentConfig,
                            mu_grid: Sequence[float] = (0.005, 0.01, 0.02, 0.04),
                            t_grid: Sequence[float] = (0.003, 0.01, 0.03),
                            ) -> dict[str, ScalingReport]:
    """Exponent fits for the all-pulses-from-the-sender comparison."""
    fwd = replace(cfg, variant="forward_all_from_bob")
    ctr = replace(cfg, variant="counter_propagating")
    return {
        "forward_unwanted_vs_mu": component_scaling(
            fwd, "mu", mu_grid, "ancilla_multiphoton"),
        "forward_unwanted_vs_t": component_scaling(
            fwd, "transmittance", t_grid, "ancilla_multiphoton"),
        "forward_desired_vs_mu": component_scaling(
            fwd, "mu", mu_grid, "desired"),
        "counter_unwanted_vs_t": component_scaling(
            ctr, "transmittance", t_grid, "ancilla_multiphoton"),
        "counter_desired_vs_mu": component_scaling(
            ctr, "mu", mu_grid, "desired"),
    }


def distribute_qubit(cfg: ExperimentConfig,
                     amplitudes: tuple[complex, complex]) -> tuple[float, ProtocolOutcome]:
    """Distribute alpha|H> + beta|V> encoded as alpha|HH> + beta|VV>.

    Returns the phase-averaged fidelity of the shared state to the target
    encoding together with the full outcome record.
    """
    a, b = complex(amplitudes[0]), complex(amplitudes[1])
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if norm <= 0.0:
        raise ValidationError("qubit amplitudes must not both vanish")
    a, b = a / norm, b / norm
    run_cfg = replace(cfg, source="exact_pair", input_qubit=(a, b))
    out = run_phase_averaged(run_cfg)
    if out.dm is None:
        raise ValidationError("no conditional state; success probability is zero")
    target = np.array([a, 0.0, 0.0, b], dtype=complex)
    fid = float(np.real(target.conj() @ out.dm.matrix @ target))
    return fid, out
