"""Simulated local randomized measurements (LRMs) and local SIC-POVM measurements.

Every simulation computes exact Born distributions first and then draws
categorically from them. Randomness is split into fixed-size chunks, each with
its own ``SeedSequence(seed, spawn_key=(chunk,))`` substream, so a record only
depends on (seed, parameters) and never on how chunks are scheduled.
"""
from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ensembles import (EnsembleKind, clifford_array, clifford_measurement_class, is_unitary,
                        SICConstants, sample_haar_u2, sic_constants)
from .states import PureState, validate_subset

LRM_CHUNK = 1 << 14        # unitaries per substream
SIC_CHUNK = 1 << 16        # shots per substream
SIC_MAX_QUBITS = 13        # 4^13 doubles ~ 0.5 GB
DILATED_MAX_QUBITS = 24    # n + s for the state+ancilla vector
CLASS_TABLE_MAX_S = 6      # 6^s x 2^s cached Clifford distributions


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    subset: tuple[int, ...]
    factors: np.ndarray  # (s, 2, 2)

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=complex).reshape(-1, 2, 2)
        if len(f) != len(self.subset):
            raise ValueError(f"need {len(self.subset)} single-qubit factors, got {len(f)}")
        if not all(is_unitary(u) for u in f):
            raise ValueError("local factors must be unitary")
        object.__setattr__(self, "factors", f)


@dataclass(eq=False)
class LRMRecord:
    """Outcomes Z[l, k] of K shots after each of L local unitaries.

    ``outcomes`` holds integer-encoded bitstrings over the subset, the first
    subset label being the most significant bit. ``settings`` is an (L, s)
    array of Clifford table indices, or (L, s, 2, 2) explicit Haar matrices.
    """
    n: int
    subset: tuple[int, ...]
    ensemble: EnsembleKind
    settings: np.ndarray
    outcomes: np.ndarray
    seed: int | None = None
    creator: str = "ce-lab"

    def __post_init__(self):
        self.ensemble = EnsembleKind(self.ensemble)
        self.subset = validate_subset(self.subset, self.n)
        self.outcomes = np.asarray(self.outcomes, dtype=np.int64)
        if self.outcomes.ndim != 2 or len(self.outcomes) < 1:
            raise ValueError("outcomes must be an L x K array with L >= 1")
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.outcomes.min() < 0 or self.outcomes.max() >= 2**self.s:
            raise ValueError(f"outcomes must be {self.s}-bit strings")
        if self.ensemble is EnsembleKind.CLIFFORD:
            self.settings = np.asarray(self.settings, dtype=np.int64)
            if self.settings.shape != (self.L, self.s):
                raise ValueError(f"Clifford settings must have shape {(self.L, self.s)}")
            if self.settings.min() < 0 or self.settings.max() >= 24:
                raise ValueError("Clifford indices must lie in 0..23")
        else:
            self.settings = np.asarray(self.settings, dtype=complex)
            if self.settings.shape != (self.L, self.s, 2, 2):
                raise ValueError(f"Haar settings must have shape {(self.L, self.s, 2, 2)}")

    @property
    def L(self) -> int:
        return self.outcomes.shape[0]

    @property
    def K(self) -> int:
        return self.outcomes.shape[1]

    @property
    def s(self) -> int:
        return len(self.subset)

    def unitaries(self) -> np.ndarray:
        if self.ensemble is EnsembleKind.CLIFFORD:
            return clifford_array()[self.settings]
        return self.settings

    def __eq__(self, other):
        if not isinstance(other, LRMRecord):
            return NotImplemented
        return (self.n == other.n and self.subset == other.subset and self.ensemble == other.ensemble
                and self.seed == other.seed and self.creator == other.creator
                and np.array_equal(self.settings, other.settings)
                and np.array_equal(self.outcomes, other.outcomes))


@dataclass(eq=False)
class SICRecord:
    """M SIC outcome strings over {1..4}^s, stored base-4 as integers (digit = symbol - 1)."""
    n: int
    subset: tuple[int, ...]
    outcomes: np.ndarray
    seed: int | None = None
    creator: str = "ce-lab"

    def __post_init__(self):
        self.subset = validate_subset(self.subset, self.n)
        self.outcomes = np.asarray(self.outcomes, dtype=np.int64).ravel()
        if self.M < 2:
            raise ValueError("a SIC record needs at least 2 outcomes")
        if self.outcomes.min() < 0 or self.outcomes.max() >= 4**self.s:
            raise ValueError("SIC symbols must lie in 1..4")

    @property
    def M(self) -> int:
        return self.outcomes.size

    @property
    def s(self) -> int:
        return len(self.subset)

    def __eq__(self, other):
        if not isinstance(other, SICRecord):
            return NotImplemented
        return (self.n == other.n and self.subset == other.subset and self.seed == other.seed
                and self.creator == other.creator and np.array_equal(self.outcomes, other.outcomes))


def bitstring(z: int, s: int) -> str:
    return format(int(z), f"0{s}b")


def sic_string(q: int, s: int) -> str:
    digits = np.base_repr(int(q), 4).rjust(s, "0")
    return "".join(str(int(d) + 1) for d in digits)


def parse_sic_string(text: str) -> int:
    return int("".join(str(int(c) - 1) for c in text), 4)


# -- exact distributions -----------------------------------------------------

def _batch_size(n: int) -> int:
    return max(1, (1 << 21) >> n)


def lrm_distributions(state: PureState, labels, unitaries: np.ndarray) -> np.ndarray:
    """Born distributions over s-bit strings for a batch of local unitaries (b, s, 2, 2)."""
    labels = validate_subset(labels, state.n)
    us = np.asarray(unitaries, dtype=complex)
    if us.ndim != 4 or us.shape[1:] != (len(labels), 2, 2):
        raise ValueError(f"expected unitaries of shape (b, {len(labels)}, 2, 2), got {us.shape}")
    psi = state.tensor()
    traced = tuple(q for q in range(1, state.n + 1) if q not in labels)
    out = np.empty((len(us), 2 ** len(labels)))
    step = _batch_size(state.n)
    for start in range(0, len(us), step):
        batch = us[start:start + step]
        t = np.broadcast_to(psi, (len(batch),) + psi.shape)
        for j, q in enumerate(labels):
            t = np.moveaxis(t, q, 1)
            t = np.einsum("bij,bj...->bi...", batch[:, j], t)
            t = np.moveaxis(t, 1, q)
        probs = np.abs(t) ** 2
        if traced:
            probs = probs.sum(axis=traced)
        out[start:start + step] = probs.reshape(len(batch), -1)
    return out


def lrm_distribution(state: PureState, u: LocalUnitary) -> np.ndarray:
    """P(z) = tr(U rho U^dag |z><z|) over the qubits of ``u.subset``."""
    labels = validate_subset(u.subset, state.n)
    return lrm_distributions(state, labels, u.factors[None])[0]


@functools.lru_cache(maxsize=32)
def _class_table(state: PureState, labels: tuple[int, ...]) -> np.ndarray:
    # one representative Clifford per signed-Pauli class, enumerated base 6
    cls = clifford_measurement_class()
    reps = np.array([int(np.flatnonzero(cls == c)[0]) for c in range(6)])
    s = len(labels)
    grid = np.array(np.unravel_index(np.arange(6**s), (6,) * s)).T
    table = lrm_distributions(state, labels, clifford_array()[reps[grid]])
    table.setflags(write=False)
    return table


def clifford_class_keys(settings: np.ndarray) -> np.ndarray:
    """Base-6 key of the signed-Pauli class tuple of each (L, s) Clifford setting row."""
    cls = clifford_measurement_class()[settings]
    weights = 6 ** np.arange(settings.shape[1] - 1, -1, -1)
    return cls @ weights


def sic_distribution(state: PureState, labels, max_qubits: int = SIC_MAX_QUBITS,
                     constants: SICConstants | None = None) -> np.ndarray:
    """P(q) = tr(rho |Phi~_q><Phi~_q|) for all q in {1..4}^s (index base 4, first label most significant)."""
    labels = validate_subset(labels, state.n)
    if len(labels) > max_qubits:
        raise ValueError(f"SIC distribution cap exceeded: s={len(labels)} > {max_qubits}")
    analysis = (constants or sic_constants()).povm.conj()  # row q is <phi~_q|
    t = state.tensor()
    for q in labels:
        t = np.moveaxis(np.tensordot(analysis, t, axes=([1], [q - 1])), 0, q - 1)
    probs = np.abs(t) ** 2
    traced = tuple(q - 1 for q in range(1, state.n + 1) if q not in labels)
    if traced:
        probs = probs.sum(axis=traced)
    return probs.ravel()


def sic_distribution_dilated(state: PureState, labels, max_qubits: int = DILATED_MAX_QUBITS,
                             constants: SICConstants | None = None) -> np.ndarray:
    """SIC outcome distribution realized as a projective measurement on state + ancillas.

    Each probed qubit gets an ancilla in |0>; U_SIC^dag acts on the (ancilla,
    qubit) pair and both are read out in the computational basis, outcome
    ``2*anc + sys`` meaning symbol ``2*anc + sys + 1``.
    """
    labels = validate_subset(labels, state.n)
    n, s = state.n, len(labels)
    if n + s > max_qubits:
        raise ValueError(f"dilated SIC cap exceeded: n+s={n + s} > {max_qubits}")
    udag = (constants or sic_constants()).dilation.conj().T.reshape(2, 2, 2, 2)  # (anc', sys', anc, sys)
    t = state.tensor()
    for _ in range(s):
        t = np.multiply.outer(t, np.array([1.0, 0.0]))
    for j, q in enumerate(labels):
        anc = n + j
        t = np.moveaxis(t, (anc, q - 1), (0, 1))
        t = np.tensordot(udag, t, axes=([2, 3], [0, 1]))
        t = np.moveaxis(t, (0, 1), (anc, q - 1))
    probs = np.abs(t) ** 2
    traced = tuple(q - 1 for q in range(1, n + 1) if q not in labels)
    if traced:
        probs = probs.sum(axis=traced)
    # remaining axes: system qubits of S (in order), then their ancillas
    order = [ax for j in range(s) for ax in (s + j, j)]
    return probs.transpose(order).ravel()


# -- sampling ------------------------------------------------------------------

def _substream(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _cumulative(dists: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cum = np.cumsum(dists, axis=-1)
    cum /= cum[..., -1:]
    last = dists.shape[-1] - 1 - np.argmax(dists[..., ::-1] > 0, axis=-1)
    return cum, last


def _draw_rows(cum: np.ndarray, last: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws: u[i, k] against the cumulative table row rows[i]."""
    d = cum.shape[1]
    offsets = np.arange(len(cum), dtype=float)[:, None]
    flat = (cum + offsets).ravel()
    pos = np.searchsorted(flat, u + rows[:, None], side="right")
    z = pos - rows[:, None] * d
    over = z >= d
    if over.any():
        z[over] = np.broadcast_to(last[rows][:, None], z.shape)[over]
    return z


def _new_seed() -> int:
    return int(np.random.SeedSequence().entropy % (1 << 63))


def _lrm_chunk(state, labels, ensemble, K, seed, chunk, size, class_table):
    rng = _substream(seed, chunk)
    s = len(labels)
    if ensemble is EnsembleKind.CLIFFORD:
        settings = rng.integers(24, size=(size, s))
        keys = clifford_class_keys(settings)
        if class_table is not None:
            cum, last = class_table
            rows = keys
        else:
            uniq, first, rows = np.unique(keys, return_index=True, return_inverse=True)
            cum, last = _cumulative(lrm_distributions(state, labels, clifford_array()[settings[first]]))
    else:
        settings = sample_haar_u2(rng, size * s).reshape(size, s, 2, 2)
        cum, last = _cumulative(lrm_distributions(state, labels, settings))
        rows = np.arange(size)
    u = rng.random((size, K))
    return settings, _draw_rows(cum, last, rows.ravel(), u)


def simulate_lrm(state: PureState, labels, L: int, K: int, ensemble: EnsembleKind | str = "clifford",
                 seed: int | None = None, workers: int = 1) -> LRMRecord:
    """L random local settings from ``ensemble``, K computational-basis shots each."""
    labels = validate_subset(labels, state.n)
    ensemble = EnsembleKind(ensemble)
    if L < 1:
        raise ValueError("L must be >= 1")
    if K < 2:
        raise ValueError("K must be >= 2")
    seed = _new_seed() if seed is None else int(seed)
    class_table = None
    if ensemble is EnsembleKind.CLIFFORD and len(labels) <= CLASS_TABLE_MAX_S:
        class_table = _cumulative(_class_table(state, labels))
    chunks = [(c, min(LRM_CHUNK, L - c * LRM_CHUNK)) for c in range(-(-L // LRM_CHUNK))]

    def run(job):
        c, size = job
        return _lrm_chunk(state, labels, ensemble, K, seed, c, size, class_table)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(job) for job in chunks]
    settings = np.concatenate([p[0] for p in parts])
    outcomes = np.concatenate([p[1] for p in parts])
    return LRMRecord(state.n, labels, ensemble, settings, outcomes, seed=seed)


def sample_categorical(dist: np.ndarray, M: int, seed: int, workers: int = 1) -> np.ndarray:
    """M i.i.d. draws from ``dist`` using the chunked substream contract."""
    cum, last = _cumulative(np.asarray(dist, dtype=float)[None])
    chunks = [(c, min(SIC_CHUNK, M - c * SIC_CHUNK)) for c in range(-(-M // SIC_CHUNK))]

    def run(job):
        c, size = job
        u = _substream(seed, c).random(size)
        return _draw_rows(cum, last, np.zeros(size, dtype=np.int64), u[:, None])[:, 0]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return np.concatenate(list(pool.map(run, chunks)))
    return np.concatenate([run(job) for job in chunks])


def simulate_sic(state: PureState, labels, M: int, seed: int | None = None, workers: int = 1) -> SICRecord:
    """M shots of the local SIC-POVM on the qubits in ``labels`` (one measurement setting)."""
    labels = validate_subset(labels, state.n)
    if M < 2:
        raise ValueError("M must be >= 2")
    seed = _new_seed() if seed is None else int(seed)
    outcomes = sample_categorical(sic_distribution(state, labels), M, seed, workers)
    return SICRecord(state.n, labels, outcomes, seed=seed)


def simulate_sic_dilated(state: PureState, labels, M: int, seed: int | None = None,
                         workers: int = 1) -> SICRecord:
    """Same as :func:`simulate_sic`, sampled through the ancilla-dilated projective measurement."""
    labels = validate_subset(labels, state.n)
    if M < 2:
        raise ValueError("M must be >= 2")
    seed = _new_seed() if seed is None else int(seed)
    outcomes = sample_categorical(sic_distribution_dilated(state, labels), M, seed, workers)
    return SICRecord(state.n, labels, outcomes, seed=seed)
