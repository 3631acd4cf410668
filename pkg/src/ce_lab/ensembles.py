"""Single-qubit unitary ensembles, the qubit SIC-POVM and its ancilla dilation."""
from __future__ import annotations

import enum
import functools
import hashlib
from collections import deque
from dataclasses import dataclass

import numpy as np

from .states import symmetric_projectors

OPERATOR_TOL = 1e-12
DESIGN_TOL = 1e-10

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class EnsembleKind(str, enum.Enum):
    HAAR = "haar"
    CLIFFORD = "clifford"


def is_unitary(u: np.ndarray, tol: float = OPERATOR_TOL) -> bool:
    u = np.asarray(u)
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0)


def same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """|tr(A^dag B)| = d for unitaries equal up to a global phase."""
    return abs(abs(np.trace(a.conj().T @ b)) - a.shape[0]) < tol


def sample_haar_u2(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random U(2) element(s) from the QR decomposition of a Ginibre matrix.

    The diagonal of R is phase-fixed so the distribution is exactly Haar.
    Returns shape (2, 2) or (size, 2, 2).
    """
    shape = (2, 2) if size is None else (size, 2, 2)
    z = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def _phase_normalize(u: np.ndarray) -> np.ndarray:
    flat = u.ravel()
    first = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
    return u * (abs(first) / first)


@functools.lru_cache(maxsize=None)
def _clifford_table_cached() -> tuple[np.ndarray, ...]:
    # breadth-first closure of <H, S> from the identity
    table = [np.eye(2, dtype=complex)]
    queue = deque(table)
    while queue:
        u = queue.popleft()
        for g in (HADAMARD, PHASE_S):
            v = _phase_normalize(g @ u)
            if not any(same_up_to_phase(v, w) for w in table):
                table.append(v)
                queue.append(v)
    for u in table:
        u.setflags(write=False)
    return tuple(table)


def clifford_table() -> list[np.ndarray]:
    """The 24 single-qubit Cliffords (mod phase) in a fixed BFS order over <H, S>.

    Index 0 is the identity. Each matrix is phase-normalized so that its first
    nonzero entry is real and positive.
    """
    return list(_clifford_table_cached())


@functools.lru_cache(maxsize=None)
def clifford_array() -> np.ndarray:
    arr = np.stack(_clifford_table_cached())
    arr.setflags(write=False)
    return arr


@functools.lru_cache(maxsize=None)
def clifford_table_hash() -> str:
    """sha256 over the table rounded to 12 decimals; pins the index semantics."""
    text = ";".join(
        ",".join(f"{z.real:.12f}{z.imag:+.12f}j" for z in u.ravel()) for u in clifford_table()
    )
    text = text.replace("-0.000000000000", "0.000000000000")
    return hashlib.sha256(text.encode()).hexdigest()


@functools.lru_cache(maxsize=None)
def clifford_measurement_class() -> np.ndarray:
    """For each Clifford C, which signed Pauli C^dag Z C is.

    Classes 0..5 are +X, -X, +Y, -Y, +Z, -Z. The computational-basis
    statistics after applying C depend on C only through this class.
    """
    paulis = [PAULI_X, -PAULI_X, PAULI_Y, -PAULI_Y, PAULI_Z, -PAULI_Z]
    out = np.empty(24, dtype=np.int64)
    for k, c in enumerate(clifford_table()):
        m = c.conj().T @ PAULI_Z @ c
        out[k] = next(i for i, p in enumerate(paulis) if np.allclose(m, p, atol=1e-9))
    out.setflags(write=False)
    return out


# -- twirls and designs ------------------------------------------------------

def twirl(unitaries: np.ndarray, z: int) -> np.ndarray:
    """Average of U^{(x)2} |z><z|^{(x)2} U^{dag (x)2} over the given unitaries."""
    u = np.asarray(unitaries).reshape(-1, 2, 2)
    vecs = u[:, :, z]
    vv = np.einsum("ni,nj->nij", vecs, vecs).reshape(-1, 4)
    return np.einsum("ni,nj->ij", vv, vv.conj()) / len(u)


def twirl_check(ensemble: EnsembleKind | str, z: int = 0, num_samples: int | None = None,
                rng: np.random.Generator | None = None) -> float:
    """Max-entry distance between the ensemble twirl of |z><z|^{(x)2} and Pi_+/3.

    Clifford with ``num_samples=None`` sums the whole group exactly; otherwise
    ``num_samples`` unitaries are drawn.
    """
    ensemble = EnsembleKind(ensemble)
    if z not in (0, 1):
        raise ValueError("z must be 0 or 1")
    if ensemble is EnsembleKind.CLIFFORD and num_samples is None:
        us = clifford_array()
    else:
        if num_samples is None or num_samples < 1:
            raise ValueError("Haar twirl needs num_samples >= 1")
        rng = rng if rng is not None else np.random.default_rng()
        if ensemble is EnsembleKind.HAAR:
            us = sample_haar_u2(rng, num_samples)
        else:
            us = clifford_array()[rng.integers(24, size=num_samples)]
    pi_plus, _ = symmetric_projectors()
    return float(np.max(np.abs(twirl(us, z) - pi_plus / 3)))


def design_check(states, tol: float = DESIGN_TOL) -> tuple[bool, float]:
    """Is ``[(weight, vector), ...]`` a single-qubit projective 2-design?

    Returns (verdict, max-entry distance of sum_i p_i (|phi_i><phi_i|)^{(x)2} from Pi_+/3).
    """
    weights = np.array([w for w, _ in states], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("design weights must be non-negative and sum to 1")
    acc = np.zeros((4, 4), dtype=complex)
    for w, v in states:
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        vv = np.kron(v, v)
        acc += w * np.outer(vv, vv.conj())
    pi_plus, _ = symmetric_projectors()
    dist = float(np.max(np.abs(acc - pi_plus / 3)))
    return dist < tol, dist


def pauli_eigenstates() -> list[np.ndarray]:
    s = 1 / np.sqrt(2)
    return [
        np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex),
        np.array([s, s], dtype=complex), np.array([s, -s], dtype=complex),
        np.array([s, 1j * s], dtype=complex), np.array([s, -1j * s], dtype=complex),
    ]


# -- SIC-POVM ------------------------------------------------------------------

@dataclass(frozen=True)
class SICConstants:
    states: np.ndarray       # (4, 2) rows |phi_i>
    povm: np.ndarray         # (4, 2) rows |phi~_i> = |phi_i>/sqrt(2)
    perp: np.ndarray         # (4, 2) rows |phi~_i^perp>
    dilation: np.ndarray     # U_SIC, 4x4, columns |u_i>
    basis: np.ndarray        # (4, 4) rows |u_i>, built from povm and perp


def _sic_states() -> np.ndarray:
    w = np.exp(2j * np.pi / 3)
    a, b = 1 / np.sqrt(3), np.sqrt(2 / 3)
    return np.array([[1, 0], [a, b], [a, b * w], [a, b * w**2]], dtype=complex)


def _sic_perp() -> np.ndarray:
    w = np.exp(2j * np.pi / 3)
    a, c = 1 / np.sqrt(3), -1 / np.sqrt(6)
    return np.array([[0, 1 / np.sqrt(2)], [a, c], [a * w.conjugate(), c], [a * w.conjugate() ** 2, c]],
                    dtype=complex)


def _u_sic_matrix() -> np.ndarray:
    w = np.exp(2j * np.pi / 3)
    r2, r3, r6 = np.sqrt(2), np.sqrt(3), np.sqrt(6)
    return np.array([
        [1 / r2, 1 / r6, 1 / r6, 1 / r6],
        [0, 1 / r3, w / r3, w**2 / r3],
        [0, 1 / r3, w.conjugate() / r3, (w**2).conjugate() / r3],
        [1 / r2, -1 / r6, -1 / r6, -1 / r6],
    ], dtype=complex)


def dilation_basis(povm: np.ndarray, perp: np.ndarray) -> np.ndarray:
    """Rows |u_i> = |0>_anc |phi~_i> + |1>_anc |phi~_i^perp>.

    The ancilla is the more significant factor (index ``2*anc + sys``); this is
    the ordering in which the closed-form U_SIC has the |u_i> as its columns.
    """
    return np.concatenate([povm, perp], axis=1)


def sic_constants() -> SICConstants:
    states = _sic_states()
    povm = states / np.sqrt(2)
    perp = _sic_perp()
    return SICConstants(states=states, povm=povm, perp=perp,
                        dilation=_u_sic_matrix(), basis=dilation_basis(povm, perp))


def sic_invariants(c: SICConstants) -> dict[str, float]:
    """Residuals of every defining identity of the SIC constants (all should be ~0)."""
    pi_plus, _ = symmetric_projectors()
    completeness = sum(np.outer(v, v.conj()) for v in c.povm) - np.eye(2)
    design = sum(np.outer(np.kron(v, v), np.kron(v, v).conj()) for v in c.states) / 4 - pi_plus / 3
    gram = np.abs(c.states.conj() @ c.states.T) ** 2
    off = gram[~np.eye(4, dtype=bool)]
    return {
        "povm_completeness": float(np.max(np.abs(completeness))),
        "two_design": float(np.max(np.abs(design))),
        "pairwise_overlap": float(np.max(np.abs(off - 1 / 3))),
        "unit_norm": float(np.max(np.abs(np.linalg.norm(c.states, axis=1) - 1))),
        "perp_orthogonal": float(np.max(np.abs(np.sum(c.povm.conj() * c.perp, axis=1)))),
        "perp_norm_sq": float(np.max(np.abs(np.linalg.norm(c.perp, axis=1) ** 2 - 0.5))),
        "dilation_unitary": float(np.max(np.abs(c.dilation.conj().T @ c.dilation - np.eye(4)))),
        "dilation_columns": float(np.max(np.abs(c.dilation - c.basis.T))),
        "basis_orthonormal": float(np.max(np.abs(c.basis.conj() @ c.basis.T - np.eye(4)))),
    }
