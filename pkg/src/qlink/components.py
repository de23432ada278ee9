"""Device models: photonic lantern, few-mode fiber span, source and detector."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .modes import TransferElement


def db_to_power(db: float) -> float:
    """Power transmission for a loss of ``db`` decibels."""
    return 10.0 ** (-db / 10.0)


def power_to_db(t: float) -> float:
    return -10.0 * np.log10(t)


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the sub-task identified by ``keys``.

    Children are addressed by position, so results do not depend on the order
    in which sub-tasks run.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))


@dataclass(frozen=True)
class LanternModel:
    """Mode-selective photonic lantern.

    ``extinction_db[k]`` is the power leaking into output k from the other
    inputs, in dB relative to the light leaving that output.  ``crosstalk_phase``
    fixes the phase of the leaked amplitude; ``None`` draws it per trial.
    """

    dim: int = 2
    insertion_loss_db: float = 0.0
    extinction_db: tuple[float, ...] = (-np.inf, -np.inf)
    crosstalk_phase: float | None = None

    def __post_init__(self):
        ext = tuple(float(e) for e in self.extinction_db)
        if len(ext) == 1:
            ext = ext * self.dim
        object.__setattr__(self, "extinction_db", ext)
        if self.dim < 2:
            raise ValueError("lantern needs at least 2 modes")
        if len(ext) != self.dim:
            raise ValueError(f"expected {self.dim} extinction values, got {len(ext)}")
        if self.insertion_loss_db < 0:
            raise ValueError("insertion_loss_db must be >= 0")
        if any(e > 0 for e in ext):
            raise ValueError("extinction_db values must be <= 0")

    @property
    def transmission(self) -> float:
        return db_to_power(self.insertion_loss_db)

    @property
    def crosstalk(self) -> np.ndarray:
        """Leaked power fraction per output."""
        return 10.0 ** (np.asarray(self.extinction_db) / 10.0)

    @property
    def is_ideal(self) -> bool:
        return self.insertion_loss_db == 0 and not np.any(self.crosstalk > 0)


def _lantern_base(model: LanternModel) -> np.ndarray:
    """Lantern matrix at zero crosstalk phase.

    Output k keeps amplitude sqrt(t*(1-eps_k)) and receives sqrt(t*eps_k) spread
    evenly over the other inputs, with a sign flip below the diagonal so the
    equal-extinction 2-mode lantern is unitary up to its insertion loss.
    """
    d = model.dim
    t = model.transmission
    eps = model.crosstalk
    off = np.sqrt(t * eps / (d - 1))[:, None] * (1.0 - np.eye(d))
    base = np.diag(np.sqrt(t * (1.0 - eps))) + np.triu(off, 1) - np.tril(off, -1)
    # unequal extinctions can push the largest singular value above 1
    smax = np.linalg.norm(base, 2)
    if smax > 1.0:
        base = base / smax
    return base.astype(complex)


def lantern_matrices(model: LanternModel, thetas: np.ndarray) -> np.ndarray:
    """Stack of lantern matrices, one per crosstalk phase, shape (n, d, d).

    Entry (j, k) carries the phase exp(i*(k-j)*theta); the stack is a diagonal
    phase similarity of one base matrix, so every member has the same
    singular values.
    """
    base = _lantern_base(model)
    thetas = np.asarray(thetas, dtype=float).reshape(-1, 1, 1)
    idx = np.arange(model.dim)
    return base * np.exp(1j * thetas * (idx[None, :] - idx[:, None]))


def lantern_transfer(model: LanternModel, trial_rng_seed: int | None = None) -> TransferElement:
    """Transfer matrix of one lantern pass for a single trial."""
    if model.crosstalk_phase is not None:
        theta = model.crosstalk_phase
    else:
        theta = np.random.default_rng(trial_rng_seed).uniform(0, 2 * np.pi)
    m = lantern_matrices(model, np.array([theta]))[0]
    return TransferElement(m, "lantern")


@dataclass(frozen=True)
class FiberSpan:
    """Few-mode fiber span; every mode shares one core, one loss and one phase."""

    length_km: float = 0.0
    loss_coeff_db_per_km: float = 0.22
    excess_loss_db: float = 0.0
    common_phase_drift: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.length_km < 0 or self.loss_coeff_db_per_km < 0 or self.excess_loss_db < 0:
            raise ValueError("fiber length and losses must be >= 0")

    @property
    def total_loss_db(self) -> float:
        return self.length_km * self.loss_coeff_db_per_km + self.excess_loss_db

    @property
    def transmission(self) -> float:
        return db_to_power(self.total_loss_db)

    def phase(self, time_s: float) -> float:
        return 0.0 if self.common_phase_drift is None else float(self.common_phase_drift(time_s))


def fiber_transfer(span: FiberSpan, time_s: float = 0.0, dim: int = 2) -> TransferElement:
    amp = 10.0 ** (-span.total_loss_db / 20.0)
    return TransferElement(amp * np.exp(1j * span.phase(time_s)) * np.eye(dim), "FMF")


@dataclass(frozen=True)
class SourceModel:
    """Weak coherent source; mean photon number per gate at Alice's output."""

    mean_photon_number: float = 0.4

    def __post_init__(self):
        if self.mean_photon_number < 0:
            raise ValueError("mean photon number must be >= 0")


@dataclass(frozen=True)
class DetectorModel:
    """Gated InGaAs-style single-photon detector."""

    efficiency: float = 0.10
    dark_count_prob: float = 2.4e-6
    gate_width_ns: float = 2.5
    trigger_rate_hz: float = 1e6

    def __post_init__(self):
        for name in ("efficiency", "dark_count_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.gate_width_ns <= 0 or self.trigger_rate_hz <= 0:
            raise ValueError("gate width and trigger rate must be positive")


def click_probability(mu_at_detector, det: DetectorModel):
    """Threshold-detector click probability per gate, darks included."""
    mu = np.asarray(mu_at_detector, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mean photon number must be >= 0")
    p = 1.0 - (1.0 - det.dark_count_prob) * np.exp(-mu * det.efficiency)
    return float(p) if p.ndim == 0 else p


def signal_click_probability(mu_at_detector, det: DetectorModel):
    """Click probability from photons alone (no darks)."""
    return -np.expm1(-np.asarray(mu_at_detector, dtype=float) * det.efficiency)


def sample_clicks(
    per_detector_mu: Sequence[float], det: DetectorModel, n_gates: int, seed: int
) -> np.ndarray:
    """Click counts over ``n_gates`` independent gates, one count per detector."""
    if n_gates < 1:
        raise ValueError("n_gates must be >= 1")
    p = np.atleast_1d(click_probability(np.asarray(per_detector_mu, float), det))
    counts = np.empty(p.size, dtype=np.int64)
    for k, pk in enumerate(p):
        counts[k] = substream(seed, k).binomial(n_gates, pk)
    return counts
