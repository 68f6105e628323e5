"""Calibration, parameter sweeps, slope fits, delay scans and event sampling.

All outputs are deterministic: identical configuration (and seed, for
sampling) produces byte-identical CSV/JSON files.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .fock import UndefinedFidelityError, ValidationError, fidelity_to_phi_plus
from .protocol import (
    REP_RATE_HZ,
    ExperimentConfig,
    analyzer_setting_probability,
    chsh_violated,
    f_low,
    prepare_final_state,
    run_phase_averaged,
    visibilities,
)
from .sources import pattern_distribution


class CalibrationError(ValidationError):
    """The calibration target cannot be reached by any overlap value."""


@dataclass(frozen=True)
class SweepSpec:
    """Transmittance sweep at constant delivered ancilla intensity."""

    transmittances: tuple[float, ...] = (0.1, 0.03, 0.01, 0.005, 0.003)
    anchor_t: float = 0.1
    target_v_x: float = 0.82
    auto_calibrate: bool = True

    def __post_init__(self):
        if not self.transmittances:
            raise ValidationError("sweep needs at least one transmittance")
        for t in self.transmittances:
            if not 0.0 < t <= 1.0:
                raise ValidationError("sweep transmittances must lie in (0, 1]")


@dataclass(frozen=True)
class CalibrationResult:
    s0: float
    v_x_achieved: float
    anchor_t: float
    target_v_x: float
    iterations: int

    @property
    def implied_mode_matching(self) -> float:
        """Intensity-overlap reading of the calibrated amplitude."""
        return self.s0 ** 2


def calibrate_overlap(cfg: ExperimentConfig, anchor_t: float = 0.1,
                      target_v_x: float = 0.82, tol: float = 1e-4,
                      max_iter: int = 80) -> CalibrationResult:
    """Bisect the zero-delay overlap amplitude until V_X matches the target."""

    def v_x_at(s0: float) -> float:
        out = run_phase_averaged(replace(cfg, transmittance=anchor_t,
                                         overlap_s0=s0, delay_um=0.0))
        return visibilities(out)[1]

    top = v_x_at(1.0)
    if target_v_x > top + tol:
        raise CalibrationError(
            f"target V_X={target_v_x} unreachable; maximum attainable {top:.6f}")
    if abs(top - target_v_x) <= tol:
        return CalibrationResult(1.0, top, anchor_t, target_v_x, 1)
    lo, hi = 0.0, 1.0
    val = top
    mid = 1.0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        val = v_x_at(mid)
        if abs(val - target_v_x) < tol:
            return CalibrationResult(mid, val, anchor_t, target_v_x, it)
        if val < target_v_x:
            lo = mid
        else:
            hi = mid
    return CalibrationResult(mid, val, anchor_t, target_v_x, max_iter)


@dataclass(frozen=True)
class SweepRow:
    transmittance: float
    v_z: float
    v_x: float
    f_low: float
    rate_per_pulse: float
    rate_per_second: float
    chsh_flag: bool


@dataclass
class ResultsTable:
    rows: list[SweepRow]
    metadata: dict

    CSV_HEADER = ("transmittance,v_z,v_x,f_low,rate_per_pulse,"
                  "rate_per_second,chsh_flag")

    def to_csv_text(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(",".join([
                _fmt(r.transmittance), _fmt(r.v_z), _fmt(r.v_x), _fmt(r.f_low),
                _fmt(r.rate_per_pulse), _fmt(r.rate_per_second),
                "true" if r.chsh_flag else "false",
            ]))
        return "\n".join(lines) + "\n"

    def write(self, csv_path: str | Path, json_path: str | Path) -> None:
        Path(csv_path).write_text(self.to_csv_text())
        payload = {"metadata": self.metadata,
                   "rows": [asdict(r) for r in self.rows]}
        write_json(json_path, payload)


def _fmt(x: float) -> str:
    """Scientific notation with 12 significant digits."""
    return f"{x:.11e}"


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def sweep_transmittance(cfg: ExperimentConfig,
                        spec: SweepSpec = SweepSpec()) -> ResultsTable:
    """One row per transmittance, evaluated with a single calibrated overlap.

    Rows are ordered by descending transmittance and satisfy
    f_low = (v_z + v_x)/2 exactly.
    """
    calibration = None
    if spec.auto_calibrate:
        calibration = calibrate_overlap(cfg, spec.anchor_t, spec.target_v_x)
        cfg = replace(cfg, overlap_s0=calibration.s0)
    rows = []
    max_truncated = 0.0
    for t in sorted(set(spec.transmittances), reverse=True):
        out = run_phase_averaged(replace(cfg, transmittance=t))
        v_z, v_x = visibilities(out)
        bound = f_low(v_z, v_x)
        rows.append(SweepRow(t, v_z, v_x, bound, out.triple_probability,
                             out.triple_probability * REP_RATE_HZ,
                             chsh_violated(bound)))
        max_truncated = max(max_truncated, out.truncated_weight)
    metadata = {
        "config": _config_dict(cfg),
        "version": __version__,
        "sweep": {"anchor_t": spec.anchor_t, "target_v_x": spec.target_v_x,
                  "auto_calibrate": spec.auto_calibrate},
        "calibration": (None if calibration is None else {
            "s0": calibration.s0,
            "v_x_achieved": calibration.v_x_achieved,
            "iterations": calibration.iterations,
            "implied_mode_matching": calibration.implied_mode_matching,
        }),
        "diagnostics": {"max_truncated_weight": max_truncated},
    }
    return ResultsTable(rows, metadata)


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["phase_shifts"] = [list(p) for p in cfg.phase_shifts]
    d["phase_delta"] = list(cfg.phase_delta)
    if cfg.input_qubit is not None:
        d["input_qubit"] = [str(cfg.input_qubit[0]), str(cfg.input_qubit[1])]
    return d


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of log(rate) against log(T)."""
    if len(points) < 3:
        raise ValidationError("slope fit needs at least three points")
    xs, ys = zip(*points)
    if min(xs) <= 0.0 or min(ys) <= 0.0:
        raise ValidationError("slope fit requires positive coordinates")
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    design = np.vstack([lx, np.ones(len(lx))]).T
    coef, _, _, _ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    dof = len(lx) - 2
    sx = float(((lx - lx.mean()) ** 2).sum())
    stderr = (math.sqrt(float(resid @ resid) / dof / sx)
              if dof > 0 and sx > 0 else 0.0)
    return SlopeFit(float(coef[0]), stderr)


# --- delay scan ---------------------------------------------------------------

@dataclass(frozen=True)
class DelayScanRow:
    delay_um: float
    p_rd: float
    p_ld: float
    visibility: float


def _delay_point(cfg: ExperimentConfig, delay_um: float) -> tuple[float, float]:
    """Coincidences in the circular/diagonal bases at one optical delay.

    The retained photon is heralded into a circular polarization by analyzing
    its partner in the orthogonal circular basis; the run uses a fixed channel
    phase since single-run interference is only visible without averaging.
    """
    c = replace(cfg, delay_um=delay_um)
    plan, state = prepare_final_state(c, 0.0, 0.0)
    p_rd = analyzer_setting_probability(plan, state, "R", "L")
    p_ld = analyzer_setting_probability(plan, state, "L", "L")
    return p_rd, p_ld


def delay_scan(cfg: ExperimentConfig,
               delays_um: Sequence[float]) -> list[DelayScanRow]:
    rows = []
    for dx in delays_um:
        p_rd, p_ld = _delay_point(cfg, dx)
        total = p_rd + p_ld
        vis = abs(p_rd - p_ld) / total if total > 0 else 0.0
        rows.append(DelayScanRow(float(dx), p_rd, p_ld, vis))
    return rows


def delay_scan_csv(rows: Sequence[DelayScanRow]) -> str:
    lines = ["delay_um,p_rd,p_ld,visibility"]
    for r in rows:
        lines.append(",".join([_fmt(r.delay_um), _fmt(r.p_rd), _fmt(r.p_ld),
                               _fmt(r.visibility)]))
    return "\n".join(lines) + "\n"


def measure_dip_fwhm(cfg: ExperimentConfig) -> float:
    """Full width at half maximum of the interference contrast vs delay."""

    def contrast(dx: float) -> float:
        p_rd, p_ld = _delay_point(cfg, dx)
        return abs(p_rd - p_ld)

    c0 = contrast(0.0)
    if c0 <= 0.0:
        raise ValidationError("no interference contrast at zero delay")
    half = 0.5 * c0
    lo, hi = 0.0, cfg.overlap_sigma_um
    while contrast(hi) > half:
        hi *= 2.0
        if hi > 1e6:
            raise ValidationError("contrast does not decay; check overlap model")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if contrast(mid) > half:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9 * cfg.overlap_sigma_um:
            break
    return lo + hi  # 2 * half-width


def calibrate_delay_width(cfg: ExperimentConfig,
                          target_fwhm_um: float = 180.0) -> float:
    """Overlap width reproducing a requested coincidence-dip FWHM.

    The contrast depends on delay only through s(dx), so the measured FWHM is
    proportional to sigma and one reference measurement fixes the scale.
    """
    ref = measure_dip_fwhm(cfg)
    return cfg.overlap_sigma_um * target_fwhm_um / ref


# --- tomography ---------------------------------------------------------------

@dataclass(frozen=True)
class TomographyResult:
    matrix: np.ndarray
    fidelity: float
    phase_noise: bool


def tomography_experiment(cfg: ExperimentConfig,
                          phase_noise: bool) -> TomographyResult:
    """Exact conditional pair state without the ancilla pulse.

    The retained photon is analyzed directly while its partner crosses the
    channel; coincidences of the two detectors condition the state.
    """
    phases = cfg.phase_shifts if phase_noise else ((0.0, 0.0),)
    run_cfg = replace(cfg, variant="direct_no_dfs", phase_shifts=tuple(phases))
    out = run_phase_averaged(run_cfg)
    if out.dm is None:
        raise UndefinedFidelityError("no coincidences; state undefined")
    return TomographyResult(out.dm.matrix, fidelity_to_phi_plus(out.dm),
                            phase_noise)


# --- synthetic event sampling ---------------------------------------------------

@dataclass
class EventSample:
    phase_index: np.ndarray
    e_click: np.ndarray
    f_click: np.ndarray
    g_click: np.ndarray
    exact_pattern_probabilities: dict[tuple[int, tuple[bool, ...]], float]

    def __len__(self) -> int:
        return len(self.phase_index)

    def triple_rate(self) -> float:
        hits = self.e_click & self.f_click & self.g_click
        return float(hits.sum()) / len(self) if len(self) else 0.0

    def to_csv_text(self) -> str:
        lines = ["pulse,phase_index,e_click,f_click,g_click"]
        for i in range(len(self)):
            lines.append(f"{i},{self.phase_index[i]},{int(self.e_click[i])},"
                         f"{int(self.f_click[i])},{int(self.g_click[i])}")
        return "\n".join(lines) + "\n"


def sample_events(cfg: ExperimentConfig, n_pulses: int, seed: int) -> EventSample:
    """Draw i.i.d. per-pulse click records from the exact outcome distribution.

    Each pulse draws a phase uniformly from the configured set and then a
    click pattern for the three detectors from that phase's exact joint
    distribution.  Fixed seed gives an identical stream.
    """
    if n_pulses < 0:
        raise ValidationError("number of pulses must be >= 0")
    n_phases = len(cfg.phase_shifts)
    flat_keys: list[tuple[int, tuple[bool, ...]]] = []
    flat_probs: list[float] = []
    exact: dict[tuple[int, tuple[bool, ...]], float] = {}
    for k, (phi_h, phi_v) in enumerate(cfg.phase_shifts):
        plan, state = prepare_final_state(cfg, phi_h, phi_v)
        reg = state.registry
        assignments = {
            "E": (plan.detectors["E"], reg.indices(plan.side_e)),
            "G": (plan.detectors["G"], reg.indices(plan.side_g)),
        }
        if plan.herald is not None:
            assignments["F"] = (plan.detectors["F"],
                                reg.indices(plan.herald, pol="H"))
        dist = pattern_distribution(state, assignments)
        norm = sum(dist.values())  # < 1 only by the recorded truncation weight
        for bits, p in sorted(dist.items()):
            key = (k, _canonical_bits(bits, "F" in assignments))
            prob = p / (norm * n_phases)
            exact[key] = exact.get(key, 0.0) + prob
    for key in sorted(exact):
        flat_keys.append(key)
        flat_probs.append(exact[key])
    rng = np.random.default_rng(seed)
    probs = np.asarray(flat_probs)
    probs = probs / probs.sum()
    draws = rng.choice(len(flat_keys), size=n_pulses, p=probs)
    phase_of = np.array([k for k, _ in flat_keys], dtype=np.int64)
    e_of = np.array([bits[0] for _, bits in flat_keys], dtype=bool)
    f_of = np.array([bits[1] for _, bits in flat_keys], dtype=bool)
    g_of = np.array([bits[2] for _, bits in flat_keys], dtype=bool)
    return EventSample(phase_of[draws], e_of[draws], f_of[draws], g_of[draws],
                       exact)


def _canonical_bits(bits: tuple[bool, ...], has_herald: bool) -> tuple[bool, bool, bool]:
    if has_herald:
        e, g, f = bits
        return (e, f, g)
    e, g = bits
    return (e, False, g)
