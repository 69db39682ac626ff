"""Hardware calibration: pulse energy vs coupling, loss budgets, noise, pulse timing."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .elements import CircuitSpec, CouplerParams

# rad per arbitrary energy unit; a unit pulse gives a full swap
DEFAULT_KAPPA = math.pi / 2

# a serialized full swap (9 significant digits) reads back slightly above pi/2
THETA_SLACK = 1e-8

# overall losses, detector included, quoted for each experiment
EXPERIMENT_LOSS_DB = {
    "swap": -5.2,
    "hadamard": -7.2,
    "permutation": -7.2,
    "walk": -13.0,
}


@dataclass(frozen=True)
class HardwareConfig:
    rep_rate_hz: float = 80e6
    signal_wavelength_nm: float = 715.0
    control_wavelength_nm: float = 790.0
    bin_separation_ps: float = 4.3
    crystal_length_mm: float = 10.0
    poutine_loss_db: float = -1.0
    system_loss_db: Optional[float] = None

    def __post_init__(self):
        if self.bin_separation_ps <= 0:
            raise ValueError("bin separation must be positive")
        if self.rep_rate_hz <= 0:
            raise ValueError("repetition rate must be positive")
        if self.poutine_loss_db > 0 or (self.system_loss_db is not None and self.system_loss_db > 0):
            raise ValueError("losses are given in dB <= 0")

    @property
    def rep_period_ps(self) -> float:
        return 1e12 / self.rep_rate_hz

    def frame_fits(self, n_bins: int) -> bool:
        return n_bins * self.bin_separation_ps < self.rep_period_ps


@dataclass(frozen=True)
class NoiseModel:
    """Declared stochastic model. The magnitudes are modelling knobs, not
    measured hardware values; reports always carry them."""

    theta_rel_jitter: float = 0.01
    phase_drift_rate: float = 0.0  # rad / hour
    dark_rate: float = 0.0  # counts / s per detector
    crystal_phase_sigma: float = 0.0  # rad, static per crystal
    seed: int = 0

    def __post_init__(self):
        for f in ("theta_rel_jitter", "phase_drift_rate", "dark_rate", "crystal_phase_sigma"):
            v = getattr(self, f)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{f} must be finite and non-negative, got {v}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def noiseless(cls, seed: int = 0) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0, seed)

    @property
    def is_noiseless(self) -> bool:
        return (self.theta_rel_jitter == 0 and self.phase_drift_rate == 0
                and self.crystal_phase_sigma == 0 and self.dark_rate == 0)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def theta_from_energy(energy: float, kappa: float = DEFAULT_KAPPA) -> float:
    """Linear Kerr response, clamped at a full swap."""
    if energy < 0:
        raise ValueError(f"pulse energy must be >= 0, got {energy}")
    if kappa <= 0:
        raise ValueError(f"calibration must be > 0, got {kappa}")
    return min(kappa * energy, math.pi / 2)


def energy_from_theta(theta: float, kappa: float = DEFAULT_KAPPA) -> float:
    if kappa <= 0:
        raise ValueError(f"calibration must be > 0, got {kappa}")
    if not 0 <= theta <= math.pi / 2:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    return theta / kappa


def db_to_transmittance(loss_db: float) -> float:
    if loss_db > 0:
        raise ValueError(f"loss must be <= 0 dB, got {loss_db}")
    return 10.0 ** (loss_db / 10.0)


def transmittance_to_db(eta: float) -> float:
    if not 0 < eta <= 1:
        raise ValueError(f"transmittance must lie in (0, 1], got {eta}")
    return 10.0 * math.log10(eta)


def compose_losses_db(stages: Iterable[float]) -> float:
    """Total loss of stages in series (dB add)."""
    return float(sum(stages))


@dataclass(frozen=True)
class LossBudget:
    n_poutines: int
    poutine_db: float
    detector_db: float

    @property
    def total_db(self) -> float:
        return self.n_poutines * self.poutine_db + self.detector_db

    @property
    def transmittance(self) -> float:
        return db_to_transmittance(self.n_poutines * self.poutine_db) * db_to_transmittance(
            self.detector_db
        )


def loss_budget(n_poutines: int, system_loss_db: float, poutine_loss_db: float = -1.0) -> LossBudget:
    """Split an overall loss into uniform per-POUTINE loss and one detector factor."""
    detector = system_loss_db - n_poutines * poutine_loss_db
    if detector > 1e-12:
        raise ValueError(
            f"{n_poutines} POUTINEs at {poutine_loss_db} dB already exceed {system_loss_db} dB"
        )
    return LossBudget(n_poutines, poutine_loss_db, min(detector, 0.0))


def perturb_circuit(spec: CircuitSpec, noise: NoiseModel, t_hours: float = 0.0,
                    rng: Optional[np.random.Generator] = None) -> CircuitSpec:
    """Apply control-pulse jitter and crystal phase errors to every coupler.

    theta is scaled by ``1 + eps`` with ``eps ~ N(0, theta_rel_jitter)`` drawn
    from ``rng``; phi picks up ``phase_drift_rate * t`` plus a static offset
    per crystal (layer) that depends only on ``noise.seed``.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    n = len(spec.couplers)
    if noise.theta_rel_jitter > 0:
        eps = rng.normal(0.0, noise.theta_rel_jitter, size=n)
    else:
        eps = np.zeros(n)
    if noise.crystal_phase_sigma > 0:
        static = np.random.default_rng([noise.seed, 1]).normal(
            0.0, noise.crystal_phase_sigma, size=spec.n_layers
        )
    else:
        static = np.zeros(spec.n_layers)
    drift = noise.phase_drift_rate * t_hours
    couplers = [
        CouplerParams(c.theta * (1.0 + float(e)), c.phi + drift + float(static[c.layer]),
                      c.layer, c.slot)
        for c, e in zip(spec.couplers, eps)
    ]
    return dataclasses.replace(spec, couplers=tuple(couplers))


@dataclass(frozen=True)
class Pulse:
    layer: int
    slot: int
    time_ps: float
    energy: float
    phase: float


@dataclass(frozen=True)
class PulseSchedule:
    pulses: tuple

    def __len__(self):
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["layer", "slot", "time_ps", "energy_au", "phase_rad"])
        for p in self.pulses:
            w.writerow([p.layer, p.slot, f"{p.time_ps:.6f}", f"{p.energy:.9g}", f"{p.phase:.9g}"])
        return buf.getvalue()


def pulse_bin(spec: CircuitSpec, c: CouplerParams) -> int:
    """Register bin the control pulse for coupler ``c`` has to overlap."""
    a, _ = spec.coupled_modes(c)
    return (a + spec.parity_offset + c.layer) // 2


def control_schedule(spec: CircuitSpec, hw: HardwareConfig = HardwareConfig(),
                     kappa: float = DEFAULT_KAPPA) -> PulseSchedule:
    """One control pulse per coupler with theta > 0, timed to its bin in the frame."""
    pulses = []
    for c in sorted(spec.couplers, key=lambda c: (c.layer, c.slot)):
        if not 0 <= c.theta <= math.pi / 2 + THETA_SLACK:
            raise ValueError(
                f"coupler layer={c.layer} slot={c.slot}: theta {c.theta} outside [0, pi/2]"
            )
        if c.theta == 0:
            continue
        theta = min(c.theta, math.pi / 2)
        t = pulse_bin(spec, c) * hw.bin_separation_ps
        pulses.append(Pulse(c.layer, c.slot, t, energy_from_theta(theta, kappa), c.phi))
    return PulseSchedule(tuple(pulses))
