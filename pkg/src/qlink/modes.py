"""Linear-optical mode calculus.

States are complex amplitude vectors over ``d`` path or fiber modes; optical
components are (possibly lossy) amplitude transfer matrices.  Loss is carried
in the squared norm of the state, so lossy and lossless elements compose the
same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ALGEBRAIC_TOL = 1e-12
SPECTRAL_TOL = 1e-9


@dataclass(frozen=True)
class ModeState:
    """Amplitudes of one optical pulse over ``dim`` modes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 2:
            raise ValueError(f"a mode state needs at least 2 modes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if norm > 1.0 + SPECTRAL_TOL:
            raise ValueError(f"state norm {norm:.6g} exceeds 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm_tracked(self) -> float:
        """Squared norm; below 1 when loss has accumulated."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "ModeState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __len__(self):
        return self.dim


def basis_state(dim: int, index: int) -> ModeState:
    amps = np.zeros(dim, dtype=complex)
    amps[index] = 1.0
    return ModeState(amps)


@dataclass(frozen=True)
class TransferElement:
    """A passive linear-optical component as a rows x cols amplitude matrix."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise ValueError("transfer matrix must be two-dimensional")
        smax = np.linalg.norm(m, 2)
        if smax > 1.0 + SPECTRAL_TOL:
            raise ValueError(
                f"element {self.label!r} has gain: largest singular value {smax:.12g}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def is_unitary(self, tol: float = SPECTRAL_TOL) -> bool:
        return self.rows == self.cols and bool(
            np.allclose(self.singular_values, 1.0, atol=tol, rtol=0)
        )

    @property
    def H(self) -> "TransferElement":
        """Conjugate transpose (the time-reversed element)."""
        return TransferElement(self.matrix.conj().T, f"{self.label}^H")


def apply(element: TransferElement, state: ModeState) -> ModeState:
    if element.cols != state.dim:
        raise ValueError(
            f"shape mismatch: {element.label or 'element'} takes {element.cols} modes,"
            f" state has {state.dim}"
        )
    return ModeState(element.matrix @ state.amplitudes)


def compose(elements: Sequence[TransferElement]) -> TransferElement:
    """Collapse elements listed in propagation order into one element.

    ``compose([a, b])`` is ``b`` acting after ``a``, i.e. the matrix ``b @ a``.
    """
    if not elements:
        raise ValueError("nothing to compose")
    total = elements[0].matrix
    for prev, el in zip(elements, elements[1:]):
        if el.cols != prev.rows:
            raise ValueError(
                f"shape mismatch: {el.label or 'element'} ({el.rows}x{el.cols})"
                f" cannot follow {prev.label or 'element'} ({prev.rows}x{prev.cols})"
            )
        total = el.matrix @ total
    return TransferElement(total, " > ".join(e.label for e in elements if e.label))


def identity(dim: int) -> TransferElement:
    return TransferElement(np.eye(dim, dtype=complex), f"I{dim}")


def phase_bank(phases: Sequence[float]) -> TransferElement:
    """One phase modulator per path: diag(exp(i*phi_n))."""
    phases = np.asarray(phases, dtype=float)
    return TransferElement(np.diag(np.exp(1j * phases)), "phases")


def phase_shifter(dim: int, mode: int, phi: float) -> TransferElement:
    phases = np.zeros(dim)
    phases[mode] = phi
    return TransferElement(np.diag(np.exp(1j * phases)), f"phase[{mode}]")


def attenuator(transmissions: Sequence[float] | float, dim: int | None = None) -> TransferElement:
    """Diagonal amplitude attenuation; a scalar applies to all ``dim`` modes."""
    t = np.atleast_1d(np.asarray(transmissions, dtype=float))
    if t.size == 1 and dim is not None:
        t = np.full(dim, t[0])
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("amplitude transmissions must lie in [0, 1]")
    return TransferElement(np.diag(t.astype(complex)), "att")


def coupler_50_50() -> TransferElement:
    """Symmetric 50:50 fiber coupler, i on the cross port."""
    return TransferElement(np.array([[1, 1j], [1j, 1]]) / np.sqrt(2), "FC")


def multiport_dft(d: int) -> TransferElement:
    """Balanced d x d multiport with entries exp(2*pi*i*j*k/d)/sqrt(d)."""
    if d < 2:
        raise ValueError(f"multiport needs d >= 2, got {d}")
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return TransferElement(np.exp(2j * np.pi * j * k / d) / np.sqrt(d), f"MBS{d}")


def balanced_splitter(d: int) -> TransferElement:
    """The d-port DFT splitter; for d=2 built from the symmetric coupler.

    A coupler sandwiched between -pi/2 trims on port 1 equals the 2x2 DFT
    (Hadamard) matrix, so both dimensions share one analyzer convention.
    """
    if d == 2:
        trim = phase_bank([0.0, -np.pi / 2])
        el = compose([trim, coupler_50_50(), trim])
        return TransferElement(el.matrix, "FC(trimmed)")
    return multiport_dft(d)


# -- transverse intensity rendering -------------------------------------------

@dataclass(frozen=True)
class IntensityGrid:
    """Max-normalized transverse intensity on an N x N grid."""

    resolution: int
    extent: float
    values: np.ndarray = field(repr=False)

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.resolution, self.extent)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        lines = [f"# resolution={self.resolution} extent={self.extent!r}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.values]
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "IntensityGrid":
        text = Path(path).read_text().splitlines()
        header = text[0].lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        values = np.array([[float(v) for v in line.split()] for line in text[1:] if line.strip()])
        return cls(int(meta["resolution"]), float(meta["extent"]), values)


def grid_axis(resolution: int, extent: float) -> np.ndarray:
    # integer construction keeps the axis exactly antisymmetric
    return extent * (2 * np.arange(resolution) - (resolution - 1)) / (resolution - 1)


def lp11_fields(x, y, waist: float = 1.0):
    """First-order Hermite-Gaussian stand-ins for the LP11a and LP11b fields."""
    envelope = np.exp(-(x**2 + y**2) / waist**2)
    return x * envelope, y * envelope


def field_intensity(state: ModeState, x, y, waist: float = 1.0) -> np.ndarray:
    """Unnormalized |a0*F_a + a1*F_b|^2 at arbitrary points."""
    if state.dim != 2:
        raise ValueError("intensity rendering is defined over the two LP11 modes only")
    fa, fb = lp11_fields(np.asarray(x, float), np.asarray(y, float), waist)
    a0, a1 = state.amplitudes
    return np.abs(a0 * fa + a1 * fb) ** 2


def render_intensity(state: ModeState, resolution: int = 128, extent: float = 2.5) -> IntensityGrid:
    """Render the transverse intensity of an LP11 superposition.

    Rows index y and columns index x, both on ``grid_axis(resolution, extent)``
    in units of the mode waist.
    """
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    if state.norm_tracked <= 0.0:
        raise ValueError("cannot render a zero-norm state")
    ax = grid_axis(resolution, extent)
    x, y = np.meshgrid(ax, ax, indexing="xy")
    values = field_intensity(state, x, y)
    peak = values.max()
    return IntensityGrid(resolution, float(extent), values / peak)
