"""Exact pure-state algebra: reduced purities and concentratable entanglement.

Qubit 1 is the most significant bit of an amplitude index and subsets use
1-based labels, so ``(1, 3)`` on three qubits means the first and last qubit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10
TWO_COPY_MAX_QUBITS = 7


@dataclass(frozen=True, eq=False)
class PureState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if self.n < 1 or amps.shape != (2**self.n,):
            raise ValueError(f"expected {2**self.n} amplitudes for n={self.n}, got shape {amps.shape}")
        if abs(np.vdot(amps, amps).real - 1.0) > NORM_TOL:
            raise ValueError("amplitudes are not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit (axis ``i-1`` is qubit ``i``)."""
        return self.amplitudes.reshape((2,) * self.n)

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.amplitudes, other.amplitudes)

    def __hash__(self):
        return hash((self.n, self.amplitudes.tobytes()))


def make_state(amplitudes) -> PureState:
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    dim = amps.size
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"amplitude count must be a power of two >= 2, got {dim}")
    norm = np.linalg.norm(amps)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("unnormalizable amplitude vector")
    return PureState(dim.bit_length() - 1, amps / norm)


def ghz_state(n: int) -> PureState:
    if n < 2:
        raise ValueError("GHZ state needs n >= 2")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return PureState(n, amps)


def w_state(n: int) -> PureState:
    if n < 1:
        raise ValueError("W state needs n >= 1")
    amps = np.zeros(2**n, dtype=complex)
    # hamming-weight-one strings: qubit i set <=> bit (n - i) of the index
    amps[[1 << k for k in range(n)]] = 1 / np.sqrt(n)
    return PureState(n, amps)


def product_state(n: int) -> PureState:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1
    return PureState(n, amps)


def random_state(n: int, rng: np.random.Generator) -> PureState:
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return make_state(amps)


def validate_subset(labels, n: int) -> tuple[int, ...]:
    """Return ``labels`` as a strictly increasing tuple, checking it is a valid non-empty S."""
    labels = tuple(int(x) for x in labels)
    if not labels:
        raise ValueError("subset must be non-empty")
    if any(b <= a for a, b in zip(labels, labels[1:])):
        raise ValueError(f"subset labels must be strictly increasing: {labels}")
    if labels[0] < 1 or labels[-1] > n:
        raise ValueError(f"subset labels must lie in 1..{n}: {labels}")
    return labels


def _check_labels(alpha, n: int) -> tuple[int, ...]:
    alpha = tuple(sorted(set(int(x) for x in alpha)))
    if alpha and (alpha[0] < 1 or alpha[-1] > n):
        raise ValueError(f"qubit label out of range 1..{n}: {alpha}")
    return alpha


def reduced_purity(state: PureState, alpha) -> float:
    """tr(rho_alpha^2) for the marginal on the qubits in ``alpha``.

    Uses the Gram matrix of the amplitude matrix split as (alpha, rest);
    the density matrix is never formed.
    """
    alpha = _check_labels(alpha, state.n)
    k = len(alpha)
    if k == 0 or k == state.n:
        return 1.0
    rest = [q for q in range(1, state.n + 1) if q not in alpha]
    m = state.tensor().transpose([q - 1 for q in alpha] + [q - 1 for q in rest])
    m = m.reshape(2**k, 2 ** (state.n - k))
    gram = m @ m.conj().T if k <= state.n - k else m.conj().T @ m
    return float(np.sum(np.abs(gram) ** 2))


def subset_purities(state: PureState, labels) -> dict[tuple[int, ...], float]:
    """Map every alpha in the power set of ``labels`` to its purity (empty set -> 1)."""
    labels = validate_subset(labels, state.n)
    out = {}
    for k in range(len(labels) + 1):
        for alpha in itertools.combinations(labels, k):
            out[alpha] = reduced_purity(state, alpha)
    return out


def exact_ce(state: PureState, labels) -> float:
    """Concentratable entanglement via the power-set purity sum."""
    purities = subset_purities(state, labels)
    return 1.0 - sum(purities.values()) / 2 ** len(validate_subset(labels, state.n))


# -- two-copy operators ------------------------------------------------------

def swap_operator() -> np.ndarray:
    """SWAP on two qubits, basis index ``2*a + b`` for |a>|b>."""
    f = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            f[2 * b + a, 2 * a + b] = 1.0
    return f


def symmetric_projectors() -> tuple[np.ndarray, np.ndarray]:
    f = swap_operator()
    eye = np.eye(4)
    return (eye + f) / 2, (eye - f) / 2


def _apply_local_swap(vec: np.ndarray, n: int, q: int) -> np.ndarray:
    # two-copy layout: axes 0..n-1 are copy one, n..2n-1 copy two
    return np.swapaxes(vec, q - 1, n + q - 1)


def exact_ce_via_projectors(state: PureState, labels) -> float:
    """CE as 1 - <psi psi| prod_{i in S} Pi_+^i |psi psi>.

    Works on the explicit two-copy vector (4^n amplitudes), applying each
    local symmetric projector (1 + F_i)/2 in turn.
    """
    labels = validate_subset(labels, state.n)
    n = state.n
    if n > TWO_COPY_MAX_QUBITS:
        raise ValueError(f"two-copy oracle limit: n={n} exceeds {TWO_COPY_MAX_QUBITS}")
    two_copy = np.multiply.outer(state.tensor(), state.tensor())
    vec = two_copy
    for q in labels:
        vec = 0.5 * (vec + _apply_local_swap(vec, n, q))
    return float(1.0 - np.vdot(two_copy, vec).real)


def two_copy_projector_matrix(n: int, labels) -> np.ndarray:
    """Dense 4^n x 4^n operator prod_{i in S} Pi_+^i in the (copy1, copy2) layout.

    Only meant for small-n cross checks.
    """
    labels = validate_subset(labels, n)
    if n > 4:
        raise ValueError("dense two-copy projector limited to n <= 4")
    dim = 4**n
    eye = np.eye(dim).reshape((2,) * (2 * n) + (dim,))
    op = eye
    for q in labels:
        op = 0.5 * (op + np.swapaxes(op, q - 1, n + q - 1))
    return op.reshape(dim, dim)


def ce_to_concurrence(ce: float) -> float:
    if ce < 0:
        raise ValueError("CE must be non-negative")
    if ce > 1:
        raise ValueError("CE must not exceed 1")
    return 2.0 * np.sqrt(ce)


def mixed_lower_bound(purity_full: float, subset_purity_sum: float, n: int) -> float:
    """Observable lower bound on the mixed-state CE of [n].

    ``subset_purity_sum`` runs over the whole power set of [n], including the
    empty set (purity 1) and [n] itself.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2.0**n
    if not (1 / d - NORM_TOL <= purity_full <= 1 + NORM_TOL):
        raise ValueError(f"purity must lie in [1/2^n, 1], got {purity_full}")
    # each of the 2^n terms lies in [2^-|alpha|, 1]; sum(2^-k binom(n,k)) = 1.5^n
    if not (1.5**n - NORM_TOL <= subset_purity_sum <= d + NORM_TOL):
        raise ValueError(f"purity sum must lie in [1.5^n, 2^n], got {subset_purity_sum}")
    return 1 / d + (1 - 1 / d) * purity_full - subset_purity_sum / d
