"""Small dense complex linear algebra and quantum-state primitives.

Kets are 1-D complex ndarrays, operators are 2-D complex ndarrays. The
two-photon polarization basis is ordered (HH, HV, VH, VV) everywhere; the
frequency branch index is 0 when the port-3 photon carries the AOM shift
and 1 when the port-4 photon does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
HERM_TOL = 1e-10
EIG_TOL = 1e-9

# basis order for two-photon polarization states
POL_BASIS = ("HH", "HV", "VH", "VV")


def as_ket(v) -> np.ndarray:
    """Coerce to a 1-D complex ndarray."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    if a.size == 0:
        raise ValueError("empty ket")
    return a


def is_normalized(v, tol: float = NORM_TOL) -> bool:
    a = as_ket(v)
    return abs(np.vdot(a, a).real - 1.0) <= tol


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two kets, with ``a``'s index as the major index."""
    a = as_ket(a)
    b = as_ket(b)
    if not (np.all(np.isfinite(a.view(float))) and np.all(np.isfinite(b.view(float)))):
        raise ValueError("non-finite amplitudes")
    return np.kron(a, b)


def dagger(m) -> np.ndarray:
    return np.asarray(m, dtype=complex).conj().T


def is_hermitian(m, tol: float = NORM_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) <= tol


def is_unitary(m, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol


def eigh(m, tol: float = NORM_TOL):
    """Eigendecomposition of a Hermitian matrix with a deterministic output.

    Eigenvalues are returned in descending order. Each eigenvector's global
    phase is fixed so its first component above ``tol`` in modulus is real
    and positive.

    Returns (eigenvalues, eigenvectors) with eigenvectors as columns.
    Raises ValueError on non-Hermitian input.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol=max(tol, NORM_TOL)):
        raise ValueError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.flatnonzero(np.abs(col) > tol)
        if idx.size:
            phase = col[idx[0]] / abs(col[idx[0]])
            vecs[:, k] = col / phase
    return vals, vecs


@dataclass(frozen=True)
class PolDensityMatrix:
    """4x4 two-photon polarization density matrix in the (HH, HV, VH, VV) basis.

    Hermitian within 1e-10, unit trace within 1e-10, eigenvalues >= -1e-9.
    """

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > HERM_TOL:
            raise ValueError(f"trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min() < -EIG_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @classmethod
    def from_pure(cls, psi) -> "PolDensityMatrix":
        psi = as_ket(psi)
        if psi.size != 4 or not is_normalized(psi):
            raise ValueError("need a normalized 4-dim ket")
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls) -> "PolDensityMatrix":
        return cls(np.eye(4) / 4.0)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)

    def eigenvalues(self) -> np.ndarray:
        return eigh(self.mat)[0]

    def to_json_dict(self) -> dict:
        """Row-major list of [re, im] pairs plus the basis labels."""
        return {
            "basis": list(POL_BASIS),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.mat],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PolDensityMatrix":
        m = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        return cls(m)


def fidelity_pure(rho: PolDensityMatrix, psi) -> float:
    """Fidelity of a state against a pure target, F = sqrt(<psi|rho|psi>).

    The square-root convention is used throughout this package.
    """
    psi = as_ket(psi)
    if psi.size != 4:
        raise ValueError("target ket must be 4-dimensional")
    if not is_normalized(psi):
        raise ValueError("target ket is not normalized")
    overlap = np.vdot(psi, rho.mat @ psi).real
    return float(np.sqrt(np.clip(overlap, 0.0, 1.0)))


def fidelity(rho: PolDensityMatrix, sigma: PolDensityMatrix) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)) between mixed states."""
    vals, vecs = eigh(rho.mat)
    sq = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    inner = sq @ sigma.mat @ sq
    ev = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(np.clip(np.sqrt(ev).sum(), 0.0, 1.0))


def trace_distance(rho: PolDensityMatrix, sigma: PolDensityMatrix) -> float:
    ev = np.linalg.eigvalsh(rho.mat - sigma.mat)
    return float(0.5 * np.abs(ev).sum())


def partial_trace_frequency(state) -> PolDensityMatrix:
    """Trace out the frequency-branch index of a two-photon state.

    Accepts a TwoPhotonState or a raw amplitude vector of length 8 laid out
    as (pol3, pol4, branch) in C order. The input must be normalized.
    """
    amps = as_ket(getattr(state, "amplitudes", state))
    if amps.size != 8:
        raise ValueError("expected 8 amplitudes (pol3 x pol4 x branch)")
    a = amps.reshape(4, 2)
    rho = a @ a.conj().T
    if abs(np.trace(rho).real - 1.0) > HERM_TOL:
        raise ValueError("state is not normalized")
    # trace of the output equals the squared norm of the input by construction
    return PolDensityMatrix(rho)


def singlet() -> np.ndarray:
    """(|HV> - |VH>)/sqrt(2)."""
    return np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)
