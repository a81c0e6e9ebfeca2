"""Linear-optics layer: wave plates, polarizers, the frequency shifter and
the beam-splitter output states.

The two-photon state space is 8-dimensional: port-3 polarization (H, V) x
port-4 polarization (H, V) x frequency branch. Branch 0 means the port-3
photon carries the +delta shift, branch 1 means the port-4 photon does.
The two detection time orderings (Stokes first at port 3 or at port 4) are
kept as separate states, never superposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qalgebra import as_ket, is_normalized, is_unitary, NORM_TOL

ORDERINGS = ("stokes_at_3", "stokes_at_4")

_SQ2 = np.sqrt(2.0)


@dataclass(frozen=True)
class PolarizerState:
    """Normalized transmission ket of a polarization analyzer, (H, V) basis."""

    ket: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.array(self.ket, dtype=complex).reshape(-1)
        if k.size != 2:
            raise ValueError("analyzer ket must be 2-dimensional")
        if not is_normalized(k):
            raise ValueError("analyzer ket is not normalized")
        k.setflags(write=False)
        object.__setattr__(self, "ket", k)

    @classmethod
    def linear(cls, angle: float) -> "PolarizerState":
        """Linear polarizer at ``angle`` radians from horizontal."""
        return cls(np.array([np.cos(angle), np.sin(angle)], dtype=complex))

    @classmethod
    def from_name(cls, name: str) -> "PolarizerState":
        try:
            return cls(NAMED_ANALYZERS[name.upper()])
        except KeyError:
            raise ValueError(f"unknown analyzer name {name!r}, expected one of "
                             f"{sorted(NAMED_ANALYZERS)}") from None

    def name(self) -> str | None:
        """Canonical single-letter name, or None if not one of H,V,D,A,R,L."""
        for label, ket in NAMED_ANALYZERS.items():
            if abs(abs(np.vdot(ket, self.ket)) - 1.0) <= 1e-9:
                return label
        return None

    def overlap(self, ket) -> complex:
        """<self|ket>."""
        return complex(np.vdot(self.ket, as_ket(ket)))


NAMED_ANALYZERS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([1.0, 1.0], dtype=complex) / _SQ2,
    "A": np.array([1.0, -1.0], dtype=complex) / _SQ2,
    "R": np.array([1.0, -1.0j], dtype=complex) / _SQ2,
    "L": np.array([1.0, 1.0j], dtype=complex) / _SQ2,
}


@dataclass(frozen=True)
class JonesOperator:
    """2x2 polarization transform in the (H, V) basis."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("Jones matrix must be 2x2")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __matmul__(self, other: "JonesOperator") -> "JonesOperator":
        return JonesOperator(self.mat @ other.mat)

    def apply(self, ket) -> np.ndarray:
        return self.mat @ as_ket(ket)

    def phase_normalized(self) -> np.ndarray:
        """Matrix with global phase fixed: first element above tolerance made
        real positive. Used when printing operators, not for computation."""
        m = self.mat.copy()
        for z in m.ravel():
            if abs(z) > NORM_TOL:
                return m * (z.conjugate() / abs(z))
        return m


def identity() -> JonesOperator:
    return JonesOperator(np.eye(2, dtype=complex))


def hwp(theta: float) -> JonesOperator:
    """Half-wave plate with fast axis at ``theta`` radians.

    [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
    """
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return JonesOperator(np.array([[c, s], [s, -c]], dtype=complex))


def qwp(theta: float) -> JonesOperator:
    """Quarter-wave plate with fast axis at ``theta`` radians.

    exp(-i pi/4) [[cos^2 t + i sin^2 t, (1-i) sin t cos t],
                  [(1-i) sin t cos t,   sin^2 t + i cos^2 t]]
    """
    c, s = np.cos(theta), np.sin(theta)
    m = np.array(
        [[c * c + 1j * s * s, (1 - 1j) * s * c],
         [(1 - 1j) * s * c, s * s + 1j * c * c]],
        dtype=complex,
    )
    return JonesOperator(np.exp(-1j * np.pi / 4) * m)


@dataclass(frozen=True)
class SourceParams:
    """Source-side settings: AOM shift and collection polarizations.

    delta is the angular frequency shift in rad/ns applied to path 1;
    p1 and p2 are the collection polarizations of paths 1 and 2.
    """

    delta: float
    p1: PolarizerState
    p2: PolarizerState

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


@dataclass(frozen=True)
class TwoPhotonState:
    """Amplitudes over (pol3, pol4, branch) for one time-ordering sector."""

    amplitudes: np.ndarray = field(repr=False)
    ordering: str = "stokes_at_3"

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 8:
            raise ValueError("need 8 amplitudes (2 x 2 x 2)")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    def amplitude(self, pol3: int, pol4: int, branch: int) -> complex:
        return complex(self.amplitudes[4 * pol3 + 2 * pol4 + branch])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "TwoPhotonState") -> complex:
        if self.ordering != other.ordering:
            raise ValueError("states live in different time-ordering sectors")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def polarization_density(self):
        from .qalgebra import partial_trace_frequency

        return partial_trace_frequency(self)


def build_hyperentangled(params: SourceParams,
                         ordering: str = "stokes_at_3") -> TwoPhotonState:
    """Post-BS cross-port state for the given time-ordering sector.

    For delta > 0 this is
        (|p1>_3 |p2>_4 |branch 0> - |p2>_3 |p1>_4 |branch 1>) / sqrt(2),
    the polarization-frequency coupled state. For delta = 0 the two branch
    labels describe the same physical frequencies, so the amplitudes combine
    coherently on branch 0; the result is the antisymmetrized polarization
    state, renormalized. Parallel p1, p2 with delta = 0 leave no state to
    post-select and raise ValueError.
    """
    k1, k2 = params.p1.ket, params.p2.ket
    amps = np.zeros((2, 2, 2), dtype=complex)
    if params.delta > 0:
        amps[:, :, 0] = np.outer(k1, k2) / _SQ2
        amps[:, :, 1] = -np.outer(k2, k1) / _SQ2
    else:
        amps[:, :, 0] = (np.outer(k1, k2) - np.outer(k2, k1)) / _SQ2
        nrm = np.linalg.norm(amps)
        if nrm < 1e-9:
            raise ValueError(
                "degenerate source: p1 parallel to p2 with delta = 0 leaves "
                "no cross-port two-photon amplitude")
        amps /= nrm
    return TwoPhotonState(amps.reshape(-1), ordering=ordering)


def apply_local(state: TwoPhotonState, j3: JonesOperator,
                j4: JonesOperator) -> TwoPhotonState:
    """Apply Jones operators to the port-3 and port-4 polarization indices."""
    for j in (j3, j4):
        if not is_unitary(j.mat):
            raise ValueError("apply_local requires unitary Jones operators")
    a = state.amplitudes.reshape(2, 2, 2)
    out = np.einsum("ip,jq,pqb->ijb", j3.mat, j4.mat, a)
    return TwoPhotonState(out.reshape(-1), ordering=state.ordering)


# the eight coupled states of one sector: (name, pol3, pol4 of the branch-0
# term; the branch-1 term has the two polarizations swapped on Psi states
# and repeated-on-the-other-letter on Phi states)
_CATALOG_TERMS = {
    "Psi1": ((0, 1), (1, 0)),  # H,V then V,H
    "Psi2": ((1, 0), (0, 1)),
    "Phi1": ((0, 0), (1, 1)),  # H,H then V,V
    "Phi2": ((1, 1), (0, 0)),
}


def catalog_states(ordering: str = "stokes_at_3") -> dict[str, TwoPhotonState]:
    """The 8 orthonormal hyperentangled states of one time-ordering sector.

    Keys are Psi1+, Psi1-, Psi2+, Psi2-, Phi1+, Phi1-, Phi2+, Phi2-. Each
    state has two amplitudes of modulus 1/sqrt(2): the first term on branch
    0, the second on branch 1 with the written sign.
    """
    out: dict[str, TwoPhotonState] = {}
    for family, ((i0, j0), (i1, j1)) in _CATALOG_TERMS.items():
        for sign_label, sign in (("+", 1.0), ("-", -1.0)):
            amps = np.zeros((2, 2, 2), dtype=complex)
            amps[i0, j0, 0] = 1.0 / _SQ2
            amps[i1, j1, 1] = sign / _SQ2
            out[family + sign_label] = TwoPhotonState(amps.reshape(-1),
                                                      ordering=ordering)
    return out


def project_analyzers(state: TwoPhotonState, p3: PolarizerState,
                      p4: PolarizerState) -> tuple[np.ndarray, float]:
    """Project both photons onto analyzer kets, keeping the frequency qubit.

    Returns (freq_amplitudes, success_prob). The amplitudes are not
    renormalized: their squared norm is the projection probability, so
    downstream correlation functions inherit the analyzer losses.
    """
    a = state.amplitudes.reshape(2, 2, 2)
    bra3 = p3.ket.conj()
    bra4 = p4.ket.conj()
    freq = np.einsum("i,j,ijb->b", bra3, bra4, a)
    return freq, float(np.vdot(freq, freq).real)
