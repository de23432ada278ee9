"""BB84 and qudit phase encoding over the three link architectures.

Alice's splitter and phase modulators are folded into the prepared
:class:`~qlink.modes.ModeState`; everything from the channel onwards is
simulated here.  Bob's analyzer is a phase bank followed by the inverse
balanced splitter, so output port 0 (detector D1) projects onto the state
whose phases equal ``bob_phases`` and the remaining ports onto its
Fourier-conjugate partners.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .components import (
    DetectorModel,
    FiberSpan,
    LanternModel,
    SourceModel,
    click_probability,
    lantern_matrices,
    signal_click_probability,
    substream,
)
from .modes import ModeState, balanced_splitter

SCHEMES = ("long_mzi", "time_bin", "fmf_lantern")

BB84_LABELS = ("LP_plus", "LP_minus", "OAM_plus", "OAM_minus")
BB84_PHASE = {
    "LP_plus": 0.0,
    "LP_minus": np.pi,
    "OAM_plus": np.pi / 2,
    "OAM_minus": 3 * np.pi / 2,
}
BB84_BASIS = {"LP_plus": "MUB1", "LP_minus": "MUB1", "OAM_plus": "MUB2", "OAM_minus": "MUB2"}
# Bob's phase on mode 1 per basis; D1 then sees the "+" state of that basis
BASIS_PHASE = {"MUB1": 0.0, "MUB2": np.pi / 2}
# (basis, detector index) each BB84 state is assigned to
BB84_PROJECTOR = {
    "LP_plus": ("MUB1", 0),
    "LP_minus": ("MUB1", 1),
    "OAM_plus": ("MUB2", 0),
    "OAM_minus": ("MUB2", 1),
}

# crosstalk phases used when averaging analytically over random lantern phase
_THETA_GRID = 64


def prepare_bb84(label: str) -> ModeState:
    """(|LP11a> + exp(i*phi_A)|LP11b>)/sqrt(2) for one of the four BB84 states."""
    try:
        phi = BB84_PHASE[label]
    except KeyError:
        raise ValueError(f"unknown BB84 state {label!r}; expected one of {BB84_LABELS}") from None
    return ModeState(np.array([1.0, np.exp(1j * phi)]) / np.sqrt(2))


def prepare_qudit(d: int, phases: Sequence[float]) -> ModeState:
    if d < 2:
        raise ValueError("d must be >= 2")
    phases = np.asarray(phases, dtype=float)
    if phases.size != d:
        raise ValueError(f"need {d} phases, got {phases.size}")
    return ModeState(np.exp(1j * phases) / np.sqrt(d))


def bob_phases_for(basis: str) -> np.ndarray:
    return np.array([0.0, BASIS_PHASE[basis]])


@dataclass(frozen=True)
class ArchitectureConfig:
    """One complete link: scheme, devices and residual mode overlap.

    ``lanterns`` is the (multiplexer, demultiplexer) pair and is only used by
    the ``fmf_lantern`` scheme.  ``detectors`` holds one model per output
    port; a single model is broadcast to all ports.
    """

    scheme: str = "fmf_lantern"
    dim: int = 2
    source: SourceModel = field(default_factory=SourceModel)
    lanterns: tuple[LanternModel, LanternModel] = (LanternModel(), LanternModel())
    fiber: FiberSpan = field(default_factory=FiberSpan)
    detectors: tuple[DetectorModel, ...] = (DetectorModel(),)
    visibility: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        dets = self.detectors
        if isinstance(dets, DetectorModel):
            dets = (dets,)
        dets = tuple(dets)
        if len(dets) == 1:
            dets = dets * self.dim
        if len(dets) != self.dim:
            raise ValueError(f"need 1 or {self.dim} detector models, got {len(dets)}")
        object.__setattr__(self, "detectors", dets)
        if self.scheme == "fmf_lantern":
            for lan in self.lanterns:
                if lan.dim != self.dim:
                    raise ValueError("lantern dimension does not match link dimension")

    def replace(self, **changes) -> "ArchitectureConfig":
        return dataclasses.replace(self, **changes)

    @property
    def n_bins(self) -> int:
        return 2 * self.dim - 1 if self.scheme == "time_bin" else 1

    @property
    def random_crosstalk(self) -> bool:
        return self.scheme == "fmf_lantern" and any(
            lan.crosstalk_phase is None and np.any(lan.crosstalk > 0) for lan in self.lanterns
        )


@dataclass(frozen=True)
class Detection:
    """Mean photon number reaching each detector in each arrival bin.

    ``relative_power`` is the same quantity per launched photon.  ``sift_mask``
    marks the bins kept by temporal post-selection.
    """

    mean_photons: np.ndarray
    relative_power: np.ndarray
    sift_mask: np.ndarray

    @property
    def sifted_power(self) -> np.ndarray:
        return self.relative_power[:, self.sift_mask].sum(axis=1)

    @property
    def sifted_mean_photons(self) -> np.ndarray:
        return self.mean_photons[:, self.sift_mask].sum(axis=1)


def _analyzer(d: int, bob_phases) -> np.ndarray:
    bob = np.exp(-1j * np.asarray(bob_phases, dtype=float))
    if bob.size != d:
        raise ValueError(f"need {d} Bob phases, got {bob.size}")
    return balanced_splitter(d).H.matrix * bob[None, :]


def _mix(powers: np.ndarray, visibility: float) -> np.ndarray:
    # powers: (..., d, bins); background keeps each bin's total
    d = powers.shape[-2]
    flat = powers.sum(axis=-2, keepdims=True) / d
    return visibility * powers + (1.0 - visibility) * flat


def _time_bin_powers(cfg: ArchitectureConfig, amps: np.ndarray, bob_phases) -> np.ndarray:
    """Bin-resolved detector powers behind Bob's d-arm unbalanced interferometer.

    Arm s delays by s bin slots and carries phase -bob_phases[d-1-s], so the
    central bin d-1 collects one path per time bin and interferes.
    """
    d = cfg.dim
    split = balanced_splitter(d).matrix
    recomb = split.conj().T
    bob = np.asarray(bob_phases, dtype=float)
    arm = split[:, 0] * np.exp(-1j * bob[::-1])
    out = np.zeros((d, 2 * d - 1), dtype=complex)
    for s in range(d):
        for n in range(d):
            out[:, n + s] += recomb[:, s] * arm[s] * amps[n]
    return np.abs(out) ** 2


def _powers(cfg: ArchitectureConfig, prepared: ModeState, bob_phases, thetas, time_s: float):
    """Relative detector powers, shape (len(thetas), d, n_bins)."""
    d = cfg.dim
    if prepared.dim != d:
        raise ValueError(f"state has {prepared.dim} modes but the link carries {d}")
    amps = prepared.amplitudes
    fiber_amp = np.sqrt(cfg.fiber.transmission)
    drift = cfg.fiber.phase(time_s)
    if cfg.scheme == "time_bin":
        # early/late bins share one fiber, so the common phase drops out
        p = _time_bin_powers(cfg, fiber_amp * amps, bob_phases)
        return _mix(p, cfg.visibility)[None]
    analyzer = _analyzer(d, bob_phases)
    if cfg.scheme == "long_mzi":
        # separate fibers per path: the drift acts on path 1 relative to path 0
        path = np.ones(d, dtype=complex)
        path[1:] = np.exp(1j * drift)
        out = analyzer @ (fiber_amp * path * amps)
        p = (np.abs(out) ** 2)[:, None]
        return _mix(p, cfg.visibility)[None]
    mux, demux = cfg.lanterns
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    m_mux = lantern_matrices(mux, thetas)
    m_demux = lantern_matrices(demux, thetas)
    chain = analyzer[None] @ m_demux @ m_mux
    out = fiber_amp * np.exp(1j * drift) * (chain @ amps)
    p = (np.abs(out) ** 2)[..., None]
    return _mix(p, cfg.visibility)


def _crosstalk_thetas(cfg: ArchitectureConfig, trial_seed: int | None, n: int | None = None):
    """Phases to evaluate: a fixed phase, one random draw, or an averaging grid."""
    if cfg.scheme != "fmf_lantern":
        return np.zeros(1)
    fixed = [lan.crosstalk_phase for lan in cfg.lanterns if lan.crosstalk_phase is not None]
    if not cfg.random_crosstalk:
        return np.array([fixed[0] if fixed else 0.0])
    if trial_seed is not None:
        return substream(trial_seed).uniform(0, 2 * np.pi, size=1)
    n = n or 4 * cfg.dim
    return 2 * np.pi * np.arange(n) / n


def detection_probabilities(
    cfg: ArchitectureConfig,
    prepared: ModeState,
    bob_phases: Sequence[float],
    trial_seed: int | None = None,
    time_s: float = 0.0,
) -> Detection:
    """Per-detector, per-bin mean photon numbers for one prepared state.

    With random lantern crosstalk and no ``trial_seed`` the result is the
    expectation over the crosstalk phase (exact: the grid integrates the
    trigonometric polynomial).
    """
    thetas = _crosstalk_thetas(cfg, trial_seed)
    rel = _powers(cfg, prepared, bob_phases, thetas, time_s).mean(axis=0)
    mask = np.zeros(cfg.n_bins, dtype=bool)
    mask[cfg.n_bins // 2] = True
    return Detection(cfg.source.mean_photon_number * rel, rel, mask)


def expected_click_probabilities(
    cfg: ArchitectureConfig,
    prepared: ModeState,
    bob_phases: Sequence[float],
    time_s: float = 0.0,
    mu_scale: float = 1.0,
) -> np.ndarray:
    """Sifted click probability per detector, averaged over crosstalk phase."""
    thetas = _crosstalk_thetas(cfg, None, _THETA_GRID)
    rel = _powers(cfg, prepared, bob_phases, thetas, time_s)[..., cfg.n_bins // 2]
    mu = cfg.source.mean_photon_number * mu_scale * rel
    p = np.stack([click_probability(mu[:, k], det) for k, det in enumerate(cfg.detectors)], axis=1)
    return p.mean(axis=0)


def intrinsic_sift_transmission(scheme: str, d: int) -> float:
    """Fraction of detections surviving temporal post-selection."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    return 1.0 / d if scheme == "time_bin" else 1.0


# -- probability matrix --------------------------------------------------------

@dataclass
class ProbabilityMatrix:
    """Estimated P(projected onto i | sent j); rows j, columns i, BB84 order."""

    estimate: np.ndarray
    sigma: np.ndarray
    analytic: np.ndarray
    counts: np.ndarray  # (sent, basis, detector)
    gates_per_cell: int
    warning: bool = False

    labels: tuple[str, ...] = BB84_LABELS

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.estimate)

    @property
    def mean_diagonal(self) -> float:
        return float(self.diagonal.mean())

    @property
    def sd_diagonal(self) -> float:
        return float(self.diagonal.std(ddof=1))

    def cross_basis_cells(self) -> np.ndarray:
        return np.array(
            [self.estimate[j, i] for j, sj in enumerate(self.labels) for i, si in enumerate(self.labels)
             if BB84_BASIS[sj] != BB84_BASIS[si]]
        )

    def to_csv(self) -> str:
        lines = ["sent,projected,probability,sigma,analytic"]
        for j, sj in enumerate(self.labels):
            for i, si in enumerate(self.labels):
                lines.append(
                    f"{sj},{si},{self.estimate[j, i]:.6f},{self.sigma[j, i]:.6f},{self.analytic[j, i]:.6f}"
                )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "estimate": self.estimate.round(6).tolist(),
            "sigma": self.sigma.round(6).tolist(),
            "analytic": self.analytic.round(6).tolist(),
            "gates_per_cell": self.gates_per_cell,
            "mean_diagonal": round(self.mean_diagonal, 6),
            "sd_diagonal": round(self.sd_diagonal, 6),
            "warning": self.warning,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def analytic_probability_matrix(cfg: ArchitectureConfig) -> np.ndarray:
    """Expected-click version of the BB84 matrix, normalized within each basis."""
    if cfg.dim != 2:
        raise ValueError("the BB84 matrix needs a two-mode link")
    out = np.zeros((4, 4))
    for j, sent in enumerate(BB84_LABELS):
        state = prepare_bb84(sent)
        for basis in ("MUB1", "MUB2"):
            p = expected_click_probabilities(cfg, state, bob_phases_for(basis))
            total = p.sum()
            for i, proj in enumerate(BB84_LABELS):
                b, k = BB84_PROJECTOR[proj]
                if b == basis:
                    out[j, i] = p[k] / total if total > 0 else 0.5
    return out


def _power_harmonics(cfg, state, bob_phases, time_s):
    """Fourier coefficients of the sifted detector powers in the crosstalk phase.

    Lantern entries carry exp(i*m*theta) with |m| <= d-1, so after two
    lanterns each power is a trigonometric polynomial of degree <= 4(d-1),
    recovered exactly from 8(d-1)+1 samples.
    """
    deg = 4 * (cfg.dim - 1)
    n = 2 * deg + 1
    thetas = 2 * np.pi * np.arange(n) / n
    p = _powers(cfg, state, bob_phases, thetas, time_s)[..., cfg.n_bins // 2]
    coeff = np.fft.fft(p, axis=0) / n
    return np.concatenate([coeff[: deg + 1], coeff[n - deg:]]), np.r_[0:deg + 1, -deg:0]


def _eval_harmonics(harmonics, thetas):
    coeff, orders = harmonics
    return np.real(np.exp(1j * np.outer(thetas, orders)) @ coeff)


def simulate_cell_clicks(cfg, state, bob_phases, n_gates, rng, time_s=0.0, chunk=1_000_000):
    """Sifted-bin click counts per detector over ``n_gates`` gates.

    Random lantern crosstalk gets a fresh phase every gate.
    """
    counts = np.zeros(cfg.dim, dtype=np.int64)
    dets = cfg.detectors
    if not cfg.random_crosstalk:
        rel = _powers(cfg, state, bob_phases, _crosstalk_thetas(cfg, None), time_s)[0, :, cfg.n_bins // 2]
        mu = cfg.source.mean_photon_number * rel
        for k, det in enumerate(dets):
            counts[k] = rng.binomial(n_gates, click_probability(mu[k], det))
        return counts
    harmonics = _power_harmonics(cfg, state, bob_phases, time_s)
    remaining = n_gates
    while remaining:
        n = min(chunk, remaining)
        thetas = rng.uniform(0, 2 * np.pi, size=n)
        rel = _eval_harmonics(harmonics, thetas)
        mu = cfg.source.mean_photon_number * rel
        u = rng.random((n, cfg.dim))
        for k, det in enumerate(dets):
            counts[k] += int(np.count_nonzero(u[:, k] < click_probability(mu[:, k], det)))
        remaining -= n
    return counts


def probability_matrix(cfg: ArchitectureConfig, n_gates_per_cell: int, seed: int) -> ProbabilityMatrix:
    """Monte Carlo BB84 probability matrix with Poissonian error bars.

    Each (sent state, basis) cell draws from its own sub-stream, so the result
    does not depend on evaluation order.  Probabilities are normalized per
    sent state within the measured basis.
    """
    if cfg.dim != 2:
        raise ValueError("the BB84 matrix needs a two-mode link")
    if n_gates_per_cell < 1:
        raise ValueError("n_gates_per_cell must be >= 1")
    est = np.zeros((4, 4))
    sig = np.zeros((4, 4))
    counts = np.zeros((4, 2, 2), dtype=np.int64)
    min_expected = np.inf
    for j, sent in enumerate(BB84_LABELS):
        state = prepare_bb84(sent)
        for b, basis in enumerate(("MUB1", "MUB2")):
            phases = bob_phases_for(basis)
            expected = expected_click_probabilities(cfg, state, phases).sum() * n_gates_per_cell
            min_expected = min(min_expected, expected)
            c = simulate_cell_clicks(cfg, state, phases, n_gates_per_cell, substream(seed, j, b))
            counts[j, b] = c
            total = c.sum()
            for i, proj in enumerate(BB84_LABELS):
                pb, k = BB84_PROJECTOR[proj]
                if pb != basis:
                    continue
                if total == 0:
                    est[j, i], sig[j, i] = np.nan, np.nan
                    continue
                est[j, i] = c[k] / total
                sig[j, i] = np.sqrt(c[0] * c[1] / total**3) if total else np.nan
    return ProbabilityMatrix(
        est, sig, analytic_probability_matrix(cfg), counts, n_gates_per_cell,
        warning=bool(min_expected < 100),
    )


# -- QBER ---------------------------------------------------------------------

@dataclass(frozen=True)
class QberReport:
    added_loss_db: float
    click_probabilities: np.ndarray  # per detector, darks included, averaged over states
    sifting_factor: float
    qber: float
    optical_error: float
    dark_share_points: float
    signal_per_gate: float
    dark_per_gate: float

    CSV_HEADER = (
        "added_loss_db,qber,optical_error,dark_share_points,signal_per_gate,"
        "dark_per_gate,sifting_factor"
    )

    def csv_row(self) -> str:
        return (
            f"{self.added_loss_db:.6f},{self.qber:.8f},{self.optical_error:.8f},"
            f"{self.dark_share_points:.8f},{self.signal_per_gate:.8e},"
            f"{self.dark_per_gate:.8e},{self.sifting_factor:.6f}"
        )

    def to_dict(self) -> dict:
        return {
            "added_loss_db": self.added_loss_db,
            "qber": self.qber,
            "optical_error": self.optical_error,
            "dark_share_points": self.dark_share_points,
            "signal_per_gate": self.signal_per_gate,
            "dark_per_gate": self.dark_per_gate,
            "sifting_factor": self.sifting_factor,
            "click_probabilities": [float(p) for p in self.click_probabilities],
        }


def _signal_states(cfg: ArchitectureConfig):
    """(state, matched Bob phases) pairs the QBER averages over."""
    d = cfg.dim
    if d == 2:
        for label in BB84_LABELS:
            basis, k = BB84_PROJECTOR[label]
            yield prepare_bb84(label), bob_phases_for(basis), k
        return
    n = np.arange(d)
    for offset in (0.0, np.pi / d):
        bob = offset * n
        for k in range(d):
            # port k of the analyzer projects onto phases bob + 2*pi*n*k/d
            yield prepare_qudit(d, bob + 2 * np.pi * n * k / d), bob, k


def qber_from_link(cfg: ArchitectureConfig, added_loss_db: float = 0.0) -> QberReport:
    """Sifted QBER after ``added_loss_db`` of extra attenuation.

    QBER = (e*S + (d-1)/d * D) / (S + D), with S the sifted signal click
    probability per gate, D the summed dark-click probability of the sifted
    detectors and e the optical error: the share of detected photons that
    reach a wrong port, which does not depend on the attenuation.
    """
    if added_loss_db < 0:
        raise ValueError("added loss must be >= 0")
    d = cfg.dim
    scale = 10.0 ** (-added_loss_db / 10.0)
    thetas = _crosstalk_thetas(cfg, None)
    signal = []
    photons = []
    wrong_photons = []
    clicks = []
    for state, bob, k in _signal_states(cfg):
        rel = _powers(cfg, state, bob, thetas, 0.0).mean(axis=0)[:, cfg.n_bins // 2]
        mu = cfg.source.mean_photon_number * scale * rel
        s = np.array([signal_click_probability(mu[i], det) for i, det in enumerate(cfg.detectors)])
        clicks.append([click_probability(mu[i], det) for i, det in enumerate(cfg.detectors)])
        signal.append(s.sum())
        eta_mu = np.array([det.efficiency for det in cfg.detectors]) * rel
        photons.append(eta_mu.sum())
        wrong_photons.append(eta_mu.sum() - eta_mu[k])
    S = float(np.mean(signal))
    D = float(sum(det.dark_count_prob for det in cfg.detectors))
    wrong = (d - 1) / d
    # optical error in the linear regime: a property of the optics, not of the loss
    total = float(np.sum(photons))
    e_opt = float(np.sum(wrong_photons)) / total if total > 0 else 0.0
    E = e_opt * S
    if S + D > 0:
        qber = (E + wrong * D) / (S + D)
        dark_share = 100.0 * wrong * D / (S + D)
    else:
        qber, dark_share = e_opt, 0.0
    return QberReport(
        added_loss_db=float(added_loss_db),
        click_probabilities=np.mean(clicks, axis=0),
        sifting_factor=intrinsic_sift_transmission(cfg.scheme, d),
        qber=float(qber),
        optical_error=float(e_opt),
        dark_share_points=float(dark_share),
        signal_per_gate=S,
        dark_per_gate=D,
    )


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return float(-q * np.log2(q) - (1 - q) * np.log2(1 - q))


def key_fraction(qber: float) -> float:
    """Asymptotic BB84 secret fraction max(0, 1 - 2*h2(qber))."""
    if not 0.0 <= qber <= 0.5:
        raise ValueError("qber must lie in [0, 0.5]")
    return max(0.0, 1.0 - 2.0 * binary_entropy(qber))


def detection_gain_vs_timebin(d: int, lantern_loss_db: float, accounting: str = "bob_lantern") -> float:
    """Fractional detection gain of the lantern link over time-bin post-selection.

    Time-bin loses 10*log10(d) dB to sifting; the lantern link loses one lantern
    at Bob (``bob_lantern``) or both lanterns (``both_lanterns``).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if lantern_loss_db < 0:
        raise ValueError("lantern loss must be >= 0")
    n = {"bob_lantern": 1, "both_lanterns": 2}.get(accounting)
    if n is None:
        raise ValueError(f"unknown accounting {accounting!r}")
    return 10.0 ** ((10.0 * np.log10(d) - n * lantern_loss_db) / 10.0) - 1.0


def fit_visibility(cfg: ArchitectureConfig, target_diagonal: float) -> float:
    """Visibility at which the analytic mean matched-basis probability hits a target."""
    from scipy.optimize import brentq

    def gap(v):
        return float(np.diag(analytic_probability_matrix(cfg.replace(visibility=v))).mean()) - target_diagonal

    lo, hi = gap(0.0), gap(1.0)
    if lo > 0 or hi < 0:
        raise ValueError(
            f"target diagonal {target_diagonal} outside the reachable range"
            f" [{lo + target_diagonal:.4f}, {hi + target_diagonal:.4f}]"
        )
    return float(brentq(gap, 0.0, 1.0, xtol=1e-12))
