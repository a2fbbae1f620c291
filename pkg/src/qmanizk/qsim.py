"""Dense statevector and density-matrix simulation of small qubit registers.

Qubit 0 is the least significant bit of a basis index, so the amplitude of
``|b_{n-1} ... b_1 b_0>`` sits at index ``sum_j b_j 2**j``. Internally a
state is reshaped to a tensor of shape ``(2,) * n`` whose axis ``k``
addresses qubit ``n - 1 - k``.

Single-qubit measurement in a Pauli basis ``W`` is described by the unitary
``V(W)`` taking the computational basis to the eigenbasis of ``W``; outcome
``m`` corresponds to eigenvalue ``(-1)**m``. The Bell basis on an ordered pair
``(a, b)`` is ``|phi_{x,z}> = (X^x Z^z (x) I)(|00> + |11>)/sqrt(2)`` with the
Pauli frame acting on ``a``.
"""

from __future__ import annotations

import functools
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 24
NORM_TOL = 1e-9
PSD_TOL = 1e-8
MAX_BELL_TABLE = 1 << 20

_S = 1 / np.sqrt(2)

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_Y = 1j * PAULI_X @ PAULI_Z
HADAMARD = _S * np.array([[1, 1], [1, -1]], dtype=complex)
T_GATE = np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex)

PAULIS = {"I": IDENTITY, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
BASES = ("X", "Y", "Z")

_BASIS_CHANGE = {
    "Z": IDENTITY,
    "X": HADAMARD,
    "Y": _S * np.array([[1, 1], [1j, -1j]], dtype=complex),
}
_BASIS_CHANGE_INV = {b: v.conj().T.copy() for b, v in _BASIS_CHANGE.items()}
_COLLAPSE = {
    "Z": IDENTITY,
    "X": HADAMARD,
    "Y": _BASIS_CHANGE["Y"] @ PAULI_X,
}


class QubitLimitError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


def basis_change(basis: str) -> np.ndarray:
    """``V(W)``: columns are the ``+1`` and ``-1`` eigenvectors of ``W``."""
    return _BASIS_CHANGE[_check_basis(basis)].copy()


def collapse_unitary(basis: str) -> np.ndarray:
    """``U(W)``: the half of ``|00> + |11>`` left behind when the other half is
    measured in basis ``W`` with outcome ``m`` is ``U(W)|m>``."""
    return _COLLAPSE[_check_basis(basis)].copy()


def _check_basis(basis: str) -> str:
    if basis not in _BASIS_CHANGE:
        raise ValueError(f"unknown Pauli basis {basis!r}")
    return basis


def _bell_vectors() -> np.ndarray:
    phi = np.array([1, 0, 0, 1], dtype=complex) * _S
    rows = np.empty((4, 4), dtype=complex)
    for x in (0, 1):
        for z in (0, 1):
            frame = np.linalg.matrix_power(PAULI_X, x) @ np.linalg.matrix_power(PAULI_Z, z)
            rows[2 * x + z] = np.kron(frame, IDENTITY) @ phi
    return rows


# Row 2x+z holds |phi_{x,z}> in the basis |a b> (index 2a+b).
BELL_VECTORS = _bell_vectors()


def _qubit_count(size: int) -> int:
    n = size.bit_length() - 1
    if size != 1 << n:
        raise InvalidStateError(f"dimension {size} is not a power of two")
    if n > MAX_QUBITS:
        raise QubitLimitError(f"{n} qubits exceeds the simulator cap of {MAX_QUBITS}")
    return n


class QuantumState:
    """A normalized pure state on ``num_qubits`` qubits.

    Measurements mutate the state in place; use :meth:`copy` to keep the
    pre-measurement state around.
    """

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, *, check: bool = True):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        self.num_qubits = _qubit_count(amps.size)
        if check:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1) > NORM_TOL:
                raise InvalidStateError(f"state norm {norm} differs from 1")
        self.amplitudes = amps

    @classmethod
    def basis_state(cls, bits: Sequence[int]) -> "QuantumState":
        n = len(bits)
        amps = np.zeros(1 << n, dtype=complex)
        amps[sum(int(b) << j for j, b in enumerate(bits))] = 1
        return cls(amps, check=False)

    @classmethod
    def _trusted(cls, amps: np.ndarray) -> "QuantumState":
        state = cls.__new__(cls)
        state.amplitudes = amps
        state.num_qubits = amps.size.bit_length() - 1
        return state

    def copy(self) -> "QuantumState":
        return QuantumState._trusted(self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix._trusted(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"QuantumState(num_qubits={self.num_qubits})"


class DensityMatrix:
    """A Hermitian, unit-trace, positive semidefinite operator on ``num_qubits`` qubits."""

    __slots__ = ("num_qubits", "matrix")

    def __init__(self, matrix, *, check: bool = True):
        rho = np.array(matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError("density matrix must be square")
        self.num_qubits = _qubit_count(rho.shape[0])
        if check:
            if not np.allclose(rho, rho.conj().T, atol=NORM_TOL):
                raise InvalidStateError("density matrix is not Hermitian")
            trace = np.trace(rho).real
            if abs(trace - 1) > NORM_TOL:
                raise InvalidStateError(f"density matrix trace {trace} differs from 1")
            smallest = np.linalg.eigvalsh(rho)[0]
            if smallest < -PSD_TOL:
                raise InvalidStateError(f"density matrix has eigenvalue {smallest}")
        self.matrix = rho

    @classmethod
    def _trusted(cls, rho: np.ndarray) -> "DensityMatrix":
        dm = cls.__new__(cls)
        dm.matrix = rho
        dm.num_qubits = rho.shape[0].bit_length() - 1
        return dm

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        dim = 1 << n
        return cls._trusted(np.eye(dim, dtype=complex) / dim)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix._trusted(self.matrix.copy())

    def __repr__(self) -> str:
        return f"DensityMatrix(num_qubits={self.num_qubits})"


State = QuantumState | DensityMatrix


def as_density(state: State) -> DensityMatrix:
    return state.to_density() if isinstance(state, QuantumState) else state


def tensor_product(*states: State) -> State:
    """Join registers; the first argument occupies the lowest qubit indices."""
    if not states:
        raise ValueError("need at least one state")
    total = sum(s.num_qubits for s in states)
    if total > MAX_QUBITS:
        raise QubitLimitError(f"{total} qubits exceeds the simulator cap of {MAX_QUBITS}")
    if all(isinstance(s, QuantumState) for s in states):
        out = states[-1].amplitudes
        for s in reversed(states[:-1]):
            out = np.multiply.outer(out, s.amplitudes).reshape(-1)
        return QuantumState._trusted(out)
    out = as_density(states[-1]).matrix
    for s in reversed(states[:-1]):
        out = np.kron(out, as_density(s).matrix)
    return DensityMatrix._trusted(out)


def product_state(vectors: Iterable[np.ndarray]) -> QuantumState:
    """``(x)_j vectors[j]`` with ``vectors[j]`` on qubit ``j``."""
    return QuantumState(_outer_all([np.asarray(v, dtype=complex) for v in vectors]))


def _outer_all(vectors: list[np.ndarray]) -> np.ndarray:
    if len(vectors) > MAX_QUBITS:
        raise QubitLimitError(f"{len(vectors)} qubits exceeds the simulator cap of {MAX_QUBITS}")
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.multiply.outer(v, out).reshape(-1)
    return out


def prepare_pauli_product(bases: Sequence[str], bits: Sequence[int]) -> QuantumState:
    """``(x)_j U(W_j)|m_j>``."""
    if len(bases) != len(bits):
        raise ValueError("bases and bits differ in length")
    # columns of a unitary are unit vectors, so the product needs no norm check
    return QuantumState._trusted(_pauli_product(tuple(bases), tuple(int(m) for m in bits)).copy())


@functools.lru_cache(maxsize=4096)
def _pauli_product(bases: tuple[str, ...], bits: tuple[int, ...]) -> np.ndarray:
    return _outer_all([_COLLAPSE[_check_basis(w)][:, m] for w, m in zip(bases, bits)])


def make_bell_pairs(n: int) -> QuantumState:
    """``n`` copies of ``(|00> + |11>)/sqrt(2)`` on pairs ``(j, n + j)``."""
    if 2 * n > MAX_QUBITS:
        raise QubitLimitError(f"{2 * n} qubits exceeds the simulator cap of {MAX_QUBITS}")
    amps = np.zeros(1 << (2 * n), dtype=complex)
    low = np.arange(1 << n)
    amps[low | (low << n)] = 2.0 ** (-n / 2)
    return QuantumState._trusted(amps)


def apply_gate(state: State, gate: np.ndarray, qubits: Sequence[int]) -> State:
    """Apply a ``2**k x 2**k`` unitary to ``qubits``; ``qubits[0]`` is the most
    significant factor of the gate's own index, as in ``np.kron(G_a, G_b)``."""
    qubits = list(qubits)
    n = state.num_qubits
    _check_qubits(qubits, n)
    k = len(qubits)
    g = np.asarray(gate, dtype=complex).reshape((2,) * (2 * k))
    axes = [n - 1 - q for q in qubits]
    if isinstance(state, QuantumState):
        t = state.amplitudes.reshape((2,) * n)
        out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), axes))
        out = np.moveaxis(out, list(range(k)), axes)
        return QuantumState._trusted(out.reshape(-1))
    t = state.matrix.reshape((2,) * (2 * n))
    out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    col_axes = [n + a for a in axes]
    out = np.tensordot(out, g.conj(), axes=(col_axes, list(range(k, 2 * k))))
    out = np.moveaxis(out, list(range(2 * n - k, 2 * n)), col_axes)
    return DensityMatrix._trusted(out.reshape(1 << n, 1 << n))


def _check_qubits(qubits: Sequence[int], n: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"repeated qubit in {list(qubits)}")
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} outside register of {n}")


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    if probs.size <= 64:
        values = probs.tolist()
        u = rng.random() * sum(values)
        acc = 0.0
        for k, p in enumerate(values):
            acc += p
            if u < acc:
                return k
        return len(values) - 1
    cumulative = np.cumsum(probs)
    k = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(k, probs.size - 1)


def _apply_1q(amps: np.ndarray, gate: np.ndarray, q: int, n: int) -> np.ndarray:
    return (gate @ amps.reshape(1 << (n - 1 - q), 2, 1 << q)).reshape(-1)


@functools.lru_cache(maxsize=256)
def _cnot_permutation(n: int, pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    idx = np.arange(1 << n)
    out = idx.copy()
    for a, b in pairs:
        out ^= ((idx >> a) & 1) << b
    return out


def _bell_rotate_pure(amps: np.ndarray, pairs, n: int, inverse: bool = False) -> np.ndarray:
    """``H_a CNOT_{a->b}`` on every pair: ``|phi_{x,z}>`` goes to ``z`` on ``a`` and
    ``x`` on ``b`` (up to a sign)."""
    perm = _cnot_permutation(n, tuple(pairs))
    if not inverse:
        amps = amps[perm]
    for a, _ in pairs:
        amps = _apply_1q(amps, HADAMARD, a, n)
    if inverse:
        amps = amps[perm]
    return amps


def _bell_readout(pairs) -> tuple[int, ...]:
    """Qubits read after :func:`_bell_rotate_pure`, ordered ``x_0, z_0, x_1, z_1, ...``."""
    return tuple(q for a, b in pairs for q in (b, a))


@functools.lru_cache(maxsize=256)
def _outcome_codes(n: int, qubits: tuple[int, ...]) -> np.ndarray:
    """For each basis index, the bits of ``qubits`` packed with ``qubits[0]`` most significant."""
    idx = np.arange(1 << n)
    k = len(qubits)
    code = np.zeros(1 << n, dtype=np.intp)
    for i, q in enumerate(qubits):
        code |= ((idx >> q) & 1) << (k - 1 - i)
    return code


def _measure_rotated(
    amps: np.ndarray, qubits: tuple[int, ...], n: int, rng: np.random.Generator, project: bool = True
):
    """Sample the computational-basis outcome of ``qubits`` and, if asked, project onto it."""
    code = _outcome_codes(n, qubits)
    weights = np.bincount(code, weights=amps.real**2 + amps.imag**2, minlength=1 << len(qubits))
    k = _sample(weights, rng)
    kept = np.where(code == k, amps, 0) / np.sqrt(weights[k]) if project else None
    bits = [(k >> (len(qubits) - 1 - i)) & 1 for i in range(len(qubits))]
    return bits, kept


def measure_paulis(
    state: QuantumState,
    qubits: Sequence[int],
    bases: Sequence[str],
    rng: np.random.Generator,
    *,
    collapse: bool = True,
) -> list[int]:
    """Measure ``qubits[i]`` in basis ``bases[i]``; same law and post-measurement
    state as measuring them one after another. The state collapses in place
    unless ``collapse`` is false, in which case it is left untouched."""
    n = state.num_qubits
    qubits = tuple(int(q) for q in qubits)
    _check_qubits(qubits, n)
    if len(bases) != len(qubits):
        raise ValueError("one basis per measured qubit")
    amps = state.amplitudes
    for q, b in zip(qubits, bases):
        if _check_basis(b) != "Z":
            amps = _apply_1q(amps, _BASIS_CHANGE_INV[b], q, n)
    bits, amps = _measure_rotated(amps, qubits, n, rng, project=collapse)
    if not collapse:
        return bits
    for q, b in zip(qubits, bases):
        if b != "Z":
            amps = _apply_1q(amps, _BASIS_CHANGE[b], q, n)
    state.amplitudes = amps
    return bits


def measure_pauli(state: QuantumState, qubit: int, basis: str, rng: np.random.Generator) -> int:
    """Measure ``qubit`` in basis ``basis``; the state collapses in place."""
    return measure_paulis(state, [qubit], [basis], rng)[0]


def measure_bell_pairs(
    state: QuantumState, pairs: Sequence[tuple[int, int]], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Bell-measure each ordered pair; returns bit arrays ``(x, z)``. Same law and
    post-measurement state as measuring the pairs one after another."""
    x, z = sample_bell_outcomes(state, pairs, rng)
    state.amplitudes = project_bell_pairs(state, pairs, x, z).amplitudes
    return x, z


def project_bell_pairs(state: QuantumState, pairs: Sequence[tuple[int, int]], x, z) -> QuantumState:
    """Normalized state after Bell outcome ``(x[i], z[i])`` on ``pairs[i]``; ``state`` is not modified."""
    n = state.num_qubits
    pairs = [(int(a), int(b)) for a, b in pairs]
    _check_qubits([q for pair in pairs for q in pair], n)
    k = 0
    for xi, zi in zip(x, z):
        k = (k << 2) | (int(xi) << 1) | int(zi)
    amps = _bell_rotate_pure(state.amplitudes, pairs, n)
    kept = np.where(_outcome_codes(n, _bell_readout(pairs)) == k, amps, 0)
    weight = float(np.vdot(kept, kept).real)
    if weight == 0:
        raise ValueError("Bell outcome has probability zero")
    return QuantumState._trusted(_bell_rotate_pure(kept / np.sqrt(weight), pairs, n, inverse=True))


def measure_bell(state: QuantumState, a: int, b: int, rng: np.random.Generator) -> tuple[int, int]:
    """Measure the ordered pair ``(a, b)`` in the Bell basis, returning ``(x, z)``."""
    x, z = measure_bell_pairs(state, [(a, b)], rng)
    return int(x[0]), int(z[0])


@functools.lru_cache(maxsize=256)
def _frame_tables(n: int, xmask: int, zmask: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    sign = 1 - 2 * (np.bitwise_count(idx & zmask) & 1).astype(np.int8)
    return idx ^ xmask, sign


def _frame_arrays(n: int, x, z, qubits) -> tuple[np.ndarray, np.ndarray]:
    qubits = range(n) if qubits is None else list(qubits)
    xmask = zmask = 0
    for j, q in enumerate(qubits):
        if x[j]:
            xmask |= 1 << q
        if z[j]:
            zmask |= 1 << q
    return _frame_tables(n, xmask, zmask)


def apply_pauli_frame(state: State, x, z, qubits: Sequence[int] | None = None) -> State:
    """Apply ``X^x Z^z`` (``Z`` first) with ``x[j], z[j]`` acting on ``qubits[j]``
    (default: qubit ``j``). Density matrices are conjugated."""
    n = state.num_qubits
    if qubits is not None:
        _check_qubits(list(qubits), n)
    perm, sign = _frame_arrays(n, x, z, qubits)
    if isinstance(state, QuantumState):
        return QuantumState._trusted((sign * state.amplitudes)[perm])
    rho = sign[:, None] * state.matrix * sign[None, :]
    return DensityMatrix._trusted(rho[np.ix_(perm, perm)])


def partial_trace(state: State, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on ``keep``; kept qubits retain their relative order."""
    keep = sorted(set(int(q) for q in keep))
    n = state.num_qubits
    _check_qubits(keep, n)
    keep_axes = [n - 1 - q for q in reversed(keep)]
    traced = [ax for ax in range(n) if ax not in keep_axes]
    dim = 1 << len(keep)
    if isinstance(state, QuantumState):
        m = np.transpose(state.amplitudes.reshape((2,) * n), keep_axes + traced).reshape(dim, -1)
        return DensityMatrix._trusted(m @ m.conj().T)
    t = state.matrix.reshape((2,) * (2 * n))
    rows = list(range(n))
    cols = [n + ax for ax in range(n)]
    for ax in traced:
        cols[ax] = ax
    out = keep_axes + [n + ax for ax in keep_axes]
    reduced = np.einsum(t, rows + cols, out)
    return DensityMatrix._trusted(reduced.reshape(dim, dim))


def trace_distance(a: State, b: State) -> float:
    diff = as_density(a).matrix - as_density(b).matrix
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def fidelity(a: State, b: State) -> float:
    """Uhlmann fidelity ``(Tr|sqrt(a) sqrt(b)|)**2``; reduces to ``|<a|b>|**2`` for pure states."""
    if isinstance(a, QuantumState) and isinstance(b, QuantumState):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    if isinstance(a, QuantumState):
        a, b = b, a
    if isinstance(b, QuantumState):
        v = b.amplitudes
        return float(np.vdot(v, a.matrix @ v).real)
    sa = _psd_sqrt(a.matrix)
    inner = _psd_sqrt(sa @ b.matrix @ sa)
    return float(np.trace(inner).real ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


DENSE_ROTATION_DIM = 64


@functools.lru_cache(maxsize=256)
def _bell_pure_tables(n: int, pairs: tuple[tuple[int, int], ...]):
    """Dense Bell rotation (small registers only) and outcome codes repeated for
    the interleaved real/imaginary view of the amplitudes."""
    rotation = None
    if 1 << n <= DENSE_ROTATION_DIM:
        rotation = np.stack([_bell_rotate_pure(col, pairs, n) for col in np.eye(1 << n, dtype=complex)], axis=1)
    return rotation, np.repeat(_outcome_codes(n, _bell_readout(pairs)), 2)


def bell_outcome_probabilities(joint: State, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Joint Bell-measurement law as an array of shape ``(2, 2) * len(pairs)``
    indexed ``[x_0, z_0, x_1, z_1, ...]``."""
    pairs = [(int(a), int(b)) for a, b in pairs]
    n = joint.num_qubits
    flat = tuple(q for pair in pairs for q in pair)
    _check_qubits(flat, n)
    readout = _bell_readout(pairs)
    if 4 ** len(pairs) > MAX_BELL_TABLE:
        raise QubitLimitError(f"Bell table for {len(pairs)} pairs exceeds {MAX_BELL_TABLE} entries")
    if isinstance(joint, QuantumState):
        rotation, codes = _bell_pure_tables(n, tuple(pairs))
        if rotation is not None:
            amps = rotation @ joint.amplitudes
        else:
            amps = np.ascontiguousarray(_bell_rotate_pure(joint.amplitudes, pairs, n))
        parts = amps.view(np.float64)
        diag = parts * parts  # real and imaginary parts share an outcome code
    else:
        rho = joint
        for a, b in pairs:
            rho = apply_gate(rho, BELL_VECTORS.conj(), [a, b])
        diag = np.clip(np.real(np.diagonal(rho.matrix)), 0, None)
        codes = _outcome_codes(n, flat)
    probs = np.bincount(codes, weights=diag, minlength=1 << len(flat))
    return probs.reshape((2,) * len(flat))


def bell_outcome_distribution(joint: State, pairs: Sequence[tuple[int, int]]) -> dict:
    """Map ``(x_bits, z_bits) -> probability`` for Bell measurement of every pair."""
    probs = bell_outcome_probabilities(joint, pairs)
    k = len(pairs)
    table = {}
    for index, p in np.ndenumerate(probs):
        table[(tuple(index[0::2]), tuple(index[1::2]))] = float(p)
    assert len(table) == 4**k
    return table


def sample_bell_outcomes(
    joint: State, pairs: Sequence[tuple[int, int]], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Bell-measure every pair of ``joint`` and return the outcome bits ``(x, z)``.

    Drawing from the joint law is equivalent to measuring the pairs one after
    another; the post-measurement state is discarded.
    """
    probs = bell_outcome_probabilities(joint, pairs).reshape(-1)
    k = _sample(probs, rng)
    top = 2 * len(pairs) - 1
    x = np.array([(k >> (top - 2 * i)) & 1 for i in range(len(pairs))], dtype=np.uint8)
    z = np.array([(k >> (top - 2 * i - 1)) & 1 for i in range(len(pairs))], dtype=np.uint8)
    return x, z
